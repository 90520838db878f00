#pragma once

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fdlab/error.hpp"
#include "fdlab/raster.hpp"
#include "fdlab/rng.hpp"

namespace fdlab::testing {

inline Raster random_raster(Rng& rng, int h, int w, int c, double lo = 0.0, double hi = 1.0) {
  Raster r(h, w, c);
  for (double& v : r.values()) v = rng.uniform(lo, hi);
  return r;
}

// Owning copy, safe to iterate when the raster is a temporary.
inline std::vector<double> values_of(const Raster& r) { return {r.values().begin(), r.values().end()}; }

inline Raster random_mask(Rng& rng, int h, int w, double keep = 0.5) {
  Raster m(h, w, 1);
  for (double& v : m.values()) v = rng.uniform() < keep ? 1.0 : 0.0;
  return m;
}

// Runs `f` and reports the error kind it threw, if any.
inline std::optional<ErrorKind> error_kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

#define CHECK_ERROR_KIND(expr, expected) \
  CHECK(::fdlab::testing::error_kind_of([&] { (void)(expr); }) == std::optional<::fdlab::ErrorKind>(expected))

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

// Fresh scratch directory below the system temp dir, removed on scope exit.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("fdlab_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fdlab::testing
