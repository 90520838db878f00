#include "fdlab/warping.hpp"

#include <cmath>
#include <string>

namespace fdlab {

double flow_from_depth_value(double depth, const CameraRig& rig) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw Error(ErrorKind::Domain, "flow_from_depth: depth must be positive, got " + std::to_string(depth));
  }
  return -rig.focal_baseline() / depth;
}

double depth_from_flow_value(double flow, const CameraRig& rig) {
  const double magnitude = std::fabs(flow);
  if (!(magnitude > kFlowEpsilon)) {
    throw Error(ErrorKind::DegenerateFlow, "flow magnitude " + std::to_string(magnitude) + " implies infinite depth");
  }
  return rig.focal_baseline() / magnitude;
}

FlowField flow_from_depth(const DepthMap& depth, const CameraRig& rig) {
  Raster flow(depth.height(), depth.width(), 1);
  for (std::size_t i = 0; i < flow.size(); ++i) flow[i] = flow_from_depth_value(depth.raster()[i], rig);
  return FlowField(std::move(flow));
}

DepthMap depth_from_flow(const FlowField& flow, const CameraRig& rig) {
  Raster depth(flow.height(), flow.width(), 1);
  for (std::size_t i = 0; i < depth.size(); ++i) depth[i] = depth_from_flow_value(flow.raster()[i], rig);
  return DepthMap(std::move(depth));
}

ScanlineSample sample_scanline(const Raster& source, int row, double x, int channel, PaddingMode padding) {
  const int width = source.width();
  const double last = static_cast<double>(width - 1);
  ScanlineSample s;
  s.in_bounds = x >= 0.0 && x <= last;
  if (!s.in_bounds) {
    if (padding == PaddingMode::Zeros) return s;
    s.value = source(row, x < 0.0 ? 0 : width - 1, channel);
    return s;
  }
  if (width == 1) {
    s.value = source(row, 0, channel);
    return s;
  }
  int left = static_cast<int>(std::floor(x));
  if (left >= width - 1) left = width - 2;
  const double t = x - left;
  const double v0 = source(row, left, channel);
  const double v1 = source(row, left + 1, channel);
  s.slope = v1 - v0;
  s.value = v0 + t * s.slope;
  return s;
}

bool warp_pixel(const Raster& source, int row, int col, double depth, const CameraRig& rig, PaddingMode padding,
                std::span<double> values, std::span<double> slopes_depth) {
  const double fb = rig.focal_baseline();
  const double x = col - fb / depth;
  const double dx_ddepth = fb / (depth * depth);
  bool inside = false;
  for (int ch = 0; ch < source.channels(); ++ch) {
    const ScanlineSample s = sample_scanline(source, row, x, ch, padding);
    values[ch] = s.value;
    if (!slopes_depth.empty()) slopes_depth[ch] = s.slope * dx_ddepth;
    inside = s.in_bounds;
  }
  return inside;
}

WarpResult inverse_warp(const Raster& source, const DepthMap& depth, const CameraRig& rig, PaddingMode padding) {
  require_same_extent(source, depth.raster(), "inverse_warp");
  WarpResult out{Raster(source.height(), source.width(), source.channels()),
                 Raster(source.height(), source.width(), 1)};
  const int nc = source.channels();
  for (int r = 0; r < source.height(); ++r) {
    for (int c = 0; c < source.width(); ++c) {
      std::span<double> px(&out.image(r, c, 0), static_cast<std::size_t>(nc));
      out.in_bounds(r, c) = warp_pixel(source, r, c, depth(r, c), rig, padding, px) ? 1.0 : 0.0;
    }
  }
  return out;
}

Raster warp_gradient_depth(const Raster& source, const DepthMap& depth, const CameraRig& rig, PaddingMode padding) {
  require_same_extent(source, depth.raster(), "warp_gradient_depth");
  Raster grad(source.height(), source.width(), source.channels());
  const int nc = source.channels();
  double scratch[3];
  for (int r = 0; r < source.height(); ++r) {
    for (int c = 0; c < source.width(); ++c) {
      std::span<double> g(&grad(r, c, 0), static_cast<std::size_t>(nc));
      warp_pixel(source, r, c, depth(r, c), rig, padding, std::span<double>(scratch, static_cast<std::size_t>(nc)),
                 g);
    }
  }
  return grad;
}

}  // namespace fdlab
