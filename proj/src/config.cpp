#include "fdlab/config.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "fdlab/image_io.hpp"

namespace fdlab {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

constexpr std::array<std::string_view, 8> kLossKeys = {
    "alpha", "ssim_c1", "ssim_c2", "ssim_window", "padding", "delta", "min_depth", "max_depth",
};

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw Error(ErrorKind::Data, "cannot format number");
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::Spec, std::string(what) + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

long long parse_int(std::string_view text, std::string_view what) {
  text = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::Spec, std::string(what) + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::Spec, "config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorKind::Spec, "config line " + std::to_string(line_no) + ": empty key");
    if (!cfg.entries_.emplace(key, value).second) {
      throw Error(ErrorKind::Spec, "config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) { return parse(read_file_bytes(path)); }

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& [key, value] : entries_) out += key + "=" + value + "\n";
  return out;
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  const auto it = entries_.find(std::string(key));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(std::string_view key, std::string_view fallback) const {
  return get(key).value_or(std::string(fallback));
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  const auto v = get(key);
  return v ? parse_double(*v, key) : fallback;
}

long long KeyValueConfig::get_int(std::string_view key, long long fallback) const {
  const auto v = get(key);
  return v ? parse_int(*v, key) : fallback;
}

void KeyValueConfig::set(std::string_view key, std::string_view value) {
  entries_[std::string(key)] = std::string(value);
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
  for (const auto& [key, value] : other.entries_) entries_[key] = value;
}

void KeyValueConfig::require_known(std::span<const std::string_view> known) const {
  for (const auto& [key, value] : entries_) {
    bool found = false;
    for (std::string_view k : known) found = found || k == key;
    if (!found) throw Error(ErrorKind::Spec, "unknown config key '" + key + "'");
  }
}

PaddingMode parse_padding(std::string_view text) {
  if (text == "border") return PaddingMode::Border;
  if (text == "zeros") return PaddingMode::Zeros;
  throw Error(ErrorKind::Spec, "padding must be 'border' or 'zeros', got '" + std::string(text) + "'");
}

std::string_view to_string(PaddingMode padding) { return padding == PaddingMode::Border ? "border" : "zeros"; }

LossConfig loss_config_from(const KeyValueConfig& cfg) {
  LossConfig loss;
  loss.alpha = cfg.get_double("alpha", loss.alpha);
  loss.ssim_c1 = cfg.get_double("ssim_c1", loss.ssim_c1);
  loss.ssim_c2 = cfg.get_double("ssim_c2", loss.ssim_c2);
  loss.ssim_window = static_cast<int>(cfg.get_int("ssim_window", loss.ssim_window));
  loss.padding = parse_padding(cfg.get_string("padding", "border"));
  loss.validate();
  return loss;
}

MaskConfig mask_config_from(const KeyValueConfig& cfg) {
  MaskConfig mask;
  mask.delta = cfg.get_double("delta", mask.delta);
  mask.validate();
  return mask;
}

DepthActivation activation_from(const KeyValueConfig& cfg) {
  return DepthActivation(cfg.get_double("min_depth", 0.1), cfg.get_double("max_depth", 80.0));
}

void store(KeyValueConfig& cfg, const LossConfig& loss) {
  cfg.set("alpha", loss.alpha);
  cfg.set("ssim_c1", loss.ssim_c1);
  cfg.set("ssim_c2", loss.ssim_c2);
  cfg.set_int("ssim_window", loss.ssim_window);
  cfg.set("padding", to_string(loss.padding));
}

void store(KeyValueConfig& cfg, const MaskConfig& mask) { cfg.set("delta", mask.delta); }

void store(KeyValueConfig& cfg, const DepthActivation& act) {
  cfg.set("min_depth", act.min_depth());
  cfg.set("max_depth", act.max_depth());
}

std::span<const std::string_view> loss_config_keys() { return kLossKeys; }

}  // namespace fdlab
