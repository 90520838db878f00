#include "fdlab/image_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fdlab {

namespace {

void append_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t read_u32(const unsigned char* p, bool big_endian) {
  if (big_endian) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
  }
  return (std::uint32_t{p[3]} << 24) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[1]} << 8) | p[0];
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// Minimal header tokenizer: tokens separated by whitespace, exactly one
// whitespace byte after the last token before the binary payload.
class HeaderReader {
 public:
  explicit HeaderReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view token() {
    while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
    const std::size_t begin = pos_;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
    if (begin == pos_) throw Error(ErrorKind::Format, "PFM header truncated");
    return bytes_.substr(begin, pos_ - begin);
  }

  std::size_t payload_offset() const {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) throw Error(ErrorKind::Format, "PFM header truncated");
    return pos_ + 1;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

int parse_dim(std::string_view tok) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 1) {
    throw Error(ErrorKind::Format, "invalid PFM dimension '" + std::string(tok) + "'");
  }
  return v;
}

double parse_scale(std::string_view tok) {
  // std::from_chars for double is not available in every libstdc++ we target.
  std::istringstream in{std::string(tok)};
  double v = 0.0;
  if (!(in >> v) || !in.eof() || v == 0.0 || !std::isfinite(v)) {
    throw Error(ErrorKind::Format, "invalid PFM scale '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace

std::string encode_pfm(const Raster& raster) {
  if (raster.empty()) throw Error(ErrorKind::Dimension, "cannot encode an empty raster");
  std::string out = raster.channels() == 1 ? "Pf\n" : "PF\n";
  out += std::to_string(raster.width()) + " " + std::to_string(raster.height()) + "\n-1.0\n";
  out.reserve(out.size() + raster.size() * 4);
  for (int row = raster.height() - 1; row >= 0; --row) {
    for (int col = 0; col < raster.width(); ++col) {
      for (int ch = 0; ch < raster.channels(); ++ch) {
        append_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(raster(row, col, ch))));
      }
    }
  }
  return out;
}

Raster decode_pfm(std::string_view bytes) {
  HeaderReader header(bytes);
  const std::string_view magic = header.token();
  int channels = 0;
  if (magic == "Pf") {
    channels = 1;
  } else if (magic == "PF") {
    channels = 3;
  } else {
    throw Error(ErrorKind::Format, "not a PFM file (magic '" + std::string(magic.substr(0, 8)) + "')");
  }
  const int width = parse_dim(header.token());
  const int height = parse_dim(header.token());
  const double scale = parse_scale(header.token());
  const bool big_endian = scale > 0.0;
  const std::size_t offset = header.payload_offset();

  Raster out(height, width, channels);
  const std::size_t needed = out.size() * 4;
  if (bytes.size() - offset < needed) {
    throw Error(ErrorKind::Format, "PFM payload truncated: expected " + std::to_string(needed) + " bytes, found " +
                                       std::to_string(bytes.size() - offset));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
  const double abs_scale = std::fabs(scale);
  for (int row = height - 1; row >= 0; --row) {
    for (int col = 0; col < width; ++col) {
      for (int ch = 0; ch < channels; ++ch, p += 4) {
        const float f = std::bit_cast<float>(read_u32(p, big_endian));
        const double v = abs_scale == 1.0 ? static_cast<double>(f) : abs_scale * f;
        if (!std::isfinite(v)) {
          throw Error(ErrorKind::Data, "non-finite sample at row " + std::to_string(row) + ", col " +
                                           std::to_string(col));
        }
        out(row, col, ch) = v;
      }
    }
  }
  return out;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot create '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

void write_pfm(const std::filesystem::path& path, const Raster& raster) {
  write_file_bytes(path, encode_pfm(raster));
}

Raster read_pfm(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  try {
    return decode_pfm(bytes);
  } catch (const Error& e) {
    const std::string what = e.what();
    throw Error(e.kind(), what.substr(what.find(": ") + 2) + " in '" + path.string() + "'");
  }
}

std::string encode_pgm(const Raster& raster) {
  const Raster gray = channel_mean(raster);
  std::string out = "P5\n" + std::to_string(gray.width()) + " " + std::to_string(gray.height()) + "\n255\n";
  for (double v : gray.values()) {
    const double clamped = std::fmin(std::fmax(v, 0.0), 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::floor(clamped * 255.0 + 0.5))));
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Raster& raster) {
  write_file_bytes(path, encode_pgm(raster));
}

}  // namespace fdlab
