#include "fdlab/raster.hpp"

#include <cmath>
#include <string>

namespace fdlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::EmptyMask: return "empty-mask";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::DegenerateFlow: return "degenerate-flow";
    case ErrorKind::Format: return "format";
    case ErrorKind::Data: return "data";
    case ErrorKind::Spec: return "spec";
    case ErrorKind::Index: return "index";
    case ErrorKind::Length: return "length";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::EmptyEval: return "empty-eval";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {

std::string shape_string(const Raster& r) {
  return "(" + std::to_string(r.height()) + "," + std::to_string(r.width()) + "," +
         std::to_string(r.channels()) + ")";
}

}  // namespace

Raster::Raster(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || (channels != 1 && channels != 3)) {
    throw Error(ErrorKind::Dimension, "invalid raster dimensions " + std::to_string(height) + "x" +
                                          std::to_string(width) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

bool Raster::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Raster raster_new(int height, int width, int channels, double fill) {
  return Raster(height, width, channels, fill);
}

void require_same_shape(const Raster& a, const Raster& b, const char* context) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::Shape, std::string(context) + ": " + shape_string(a) + " vs " + shape_string(b));
  }
}

void require_same_extent(const Raster& a, const Raster& b, const char* context) {
  if (!a.same_extent(b)) {
    throw Error(ErrorKind::Shape, std::string(context) + ": " + shape_string(a) + " vs " + shape_string(b));
  }
}

void require_single_channel(const Raster& r, const char* context) {
  if (r.channels() != 1) {
    throw Error(ErrorKind::Shape, std::string(context) + ": expected 1 channel, got " + shape_string(r));
  }
}

Raster channel_mean(const Raster& r) {
  Raster out(r.height(), r.width(), 1);
  const int nc = r.channels();
  for (std::size_t p = 0; p < out.size(); ++p) {
    double acc = 0.0;
    for (int ch = 0; ch < nc; ++ch) acc += r[p * nc + ch];
    out[p] = acc / nc;
  }
  return out;
}

bool is_binary_mask(const Raster& mask) {
  for (double v : mask.values()) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

double reduce_masked_mean(const Raster& values, const Raster& mask) {
  require_same_shape(values, mask, "reduce_masked_mean");
  require_single_channel(values, "reduce_masked_mean");
  if (!is_binary_mask(mask)) throw Error(ErrorKind::Domain, "reduce_masked_mean: mask values must be 0 or 1");
  double sum = 0.0;
  std::size_t reserved = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i] == 0.0) continue;
    sum += values[i];
    ++reserved;
  }
  if (reserved == 0) throw Error(ErrorKind::EmptyMask, "mask removed every pixel");
  return sum / static_cast<double>(reserved);
}

Raster ones_like_extent(const Raster& r) { return Raster(r.height(), r.width(), 1, 1.0); }

DepthMap::DepthMap(Raster values) : values_(std::move(values)) {
  require_single_channel(values_, "DepthMap");
  for (double v : values_.values()) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw Error(ErrorKind::Domain, "depth values must be finite and positive, got " + std::to_string(v));
    }
  }
}

DepthMap DepthMap::uniform(int height, int width, double depth) {
  return DepthMap(Raster(height, width, 1, depth));
}

FlowField::FlowField(Raster values) : values_(std::move(values)) {
  require_single_channel(values_, "FlowField");
  if (!values_.all_finite()) throw Error(ErrorKind::Data, "flow values must be finite");
}

}  // namespace fdlab
