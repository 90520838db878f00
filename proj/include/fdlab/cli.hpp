#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace fdlab::cli {

/// Exit codes: 0 success, 1 validation or domain error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

std::string sha256_hex(std::string_view bytes);

}  // namespace fdlab::cli
