#include <cstring>

#include "fdlab/image_io.hpp"
#include "fdlab/scene.hpp"
#include "support.hpp"

using namespace fdlab;
using fdlab::testing::random_raster;
using fdlab::testing::ScratchDir;

namespace {

Raster float_exact(Rng& rng, int h, int w, int c, double lo, double hi) {
  Raster r = random_raster(rng, h, w, c, lo, hi);
  for (double& v : r.values()) v = static_cast<float>(v);
  return r;
}

float le_float_at(const std::string& bytes, std::size_t offset) {
  std::uint32_t u = 0;
  for (int i = 3; i >= 0; --i) u = (u << 8) | static_cast<unsigned char>(bytes[offset + i]);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace

TEST_CASE("pfm header and bottom-to-top scanlines") {
  Raster r(2, 3, 1);
  for (int row = 0; row < 2; ++row) {
    for (int col = 0; col < 3; ++col) r(row, col) = 10.0 * row + col;
  }
  const std::string bytes = encode_pfm(r);
  const std::string header = "Pf\n3 2\n-1.0\n";
  REQUIRE(bytes.substr(0, header.size()) == header);
  REQUIRE(bytes.size() == header.size() + 6 * 4);
  // first stored scanline is the bottom row (row 1)
  CHECK(le_float_at(bytes, header.size()) == 10.0f);
  CHECK(le_float_at(bytes, header.size() + 8) == 12.0f);
  CHECK(le_float_at(bytes, header.size() + 12) == 0.0f);

  CHECK(encode_pfm(Raster(1, 1, 3)).substr(0, 3) == "PF\n");
}

TEST_CASE("pfm round trip is bitwise for float-representable data") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Raster r = float_exact(rng, rng.uniform_int(1, 7), rng.uniform_int(1, 7), trial % 2 ? 3 : 1, -50.0, 50.0);
    CHECK(decode_pfm(encode_pfm(r)) == r);
  }
}

TEST_CASE("prior flow file round trip") {
  ScratchDir dir("flow_roundtrip");
  Rng rng(4);
  const FlowField flow(float_exact(rng, 5, 8, 1, -20.0, -0.1));
  write_pfm(dir.path() / "flow.pfm", flow.raster());
  CHECK(load_prior_flow(dir.path() / "flow.pfm").raster() == flow.raster());
}

TEST_CASE("pfm decoding errors") {
  Rng rng(5);
  const std::string good = encode_pfm(float_exact(rng, 3, 4, 1, 0.0, 1.0));
  CHECK_ERROR_KIND(decode_pfm(good.substr(0, good.size() - 1)), ErrorKind::Format);
  CHECK_ERROR_KIND(decode_pfm(good.substr(0, 5)), ErrorKind::Format);
  CHECK_ERROR_KIND(decode_pfm("P6\n3 4\n-1.0\n"), ErrorKind::Format);
  CHECK_ERROR_KIND(decode_pfm("Pf\n0 4\n-1.0\n"), ErrorKind::Format);
  CHECK_ERROR_KIND(decode_pfm("Pf\n1 1\nabc\n0000"), ErrorKind::Format);
  CHECK_ERROR_KIND(decode_pfm(""), ErrorKind::Format);

  std::string with_nan = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(with_nan.data() + with_nan.size() - 4, &nan, 4);
  CHECK_ERROR_KIND(decode_pfm(with_nan), ErrorKind::Data);

  ScratchDir dir("flow_errors");
  write_file_bytes(dir.path() / "nan.pfm", with_nan);
  CHECK_ERROR_KIND(load_prior_flow(dir.path() / "nan.pfm"), ErrorKind::Data);
  write_file_bytes(dir.path() / "short.pfm", good.substr(0, good.size() - 3));
  CHECK_ERROR_KIND(load_prior_flow(dir.path() / "short.pfm"), ErrorKind::Format);
  write_pfm(dir.path() / "color.pfm", Raster(2, 2, 3, -1.0));
  CHECK_ERROR_KIND(load_prior_flow(dir.path() / "color.pfm"), ErrorKind::Format);
  CHECK_ERROR_KIND(read_pfm(dir.path() / "missing.pfm"), ErrorKind::Io);
}

TEST_CASE("big-endian pfm with positive scale") {
  std::string bytes = "Pf\n2 1\n2.0\n";
  for (float f : {1.5f, -3.0f}) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    for (int i = 3; i >= 0; --i) bytes.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
  }
  const Raster r = decode_pfm(bytes);
  CHECK(r(0, 0) == 3.0);
  CHECK(r(0, 1) == -6.0);
}

TEST_CASE("pgm maps [0,1] to bytes with round-half-up") {
  Raster r(1, 5, 1);
  r[0] = 0.0;
  r[1] = 1.0;
  r[2] = 127.5 / 255.0;
  r[3] = 1.7;
  r[4] = -0.2;
  const std::string bytes = encode_pgm(r);
  const std::string header = "P5\n5 1\n255\n";
  REQUIRE(bytes.substr(0, header.size()) == header);
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
  CHECK(px[0] == 0);
  CHECK(px[1] == 255);
  CHECK(px[2] == 128);
  CHECK(px[3] == 255);
  CHECK(px[4] == 0);
}
