#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "fdlab/losses.hpp"

namespace fdlab {

/// Shortest decimal text that parses back to the same double ('.' separator).
std::string format_double(double v);
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

/// Flat `key=value` text config. '#' starts a comment; blank lines are ignored;
/// keys are unique. Serialization is sorted by key so output is reproducible.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  static KeyValueConfig load(const std::filesystem::path& path);

  std::string serialize() const;

  bool has(std::string_view key) const { return entries_.find(std::string(key)) != entries_.end(); }
  std::optional<std::string> get(std::string_view key) const;
  std::string get_string(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  long long get_int(std::string_view key, long long fallback) const;

  void set(std::string_view key, std::string_view value);
  void set(std::string_view key, double value) { set(key, format_double(value)); }
  void set_int(std::string_view key, long long value) { set(key, std::to_string(value)); }
  void merge(const KeyValueConfig& other);

  /// Throws a spec error naming the first key not in `known`.
  void require_known(std::span<const std::string_view> known) const;

  const std::map<std::string, std::string>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, std::string> entries_;
};

PaddingMode parse_padding(std::string_view text);
std::string_view to_string(PaddingMode padding);

LossConfig loss_config_from(const KeyValueConfig& cfg);
MaskConfig mask_config_from(const KeyValueConfig& cfg);
DepthActivation activation_from(const KeyValueConfig& cfg);

void store(KeyValueConfig& cfg, const LossConfig& loss);
void store(KeyValueConfig& cfg, const MaskConfig& mask);
void store(KeyValueConfig& cfg, const DepthActivation& act);

/// Keys understood by the loss/mask/activation readers.
std::span<const std::string_view> loss_config_keys();

}  // namespace fdlab
