#pragma once

#include <span>

#include "fdlab/camera.hpp"
#include "fdlab/raster.hpp"

namespace fdlab {

enum class PaddingMode { Border, Zeros };

/// Flow magnitudes at or below this are treated as infinite depth.
inline constexpr double kFlowEpsilon = 1e-6;

struct WarpResult {
  Raster image;
  Raster in_bounds;  // 1 where the sample coordinate lay inside [0, W-1]
};

/// Signed flow -f_x*b/D per pixel (target left, source right).
FlowField flow_from_depth(const DepthMap& depth, const CameraRig& rig);

/// Pseudo depth f_x*b/|flow|; throws DegenerateFlow where |flow| <= kFlowEpsilon.
DepthMap depth_from_flow(const FlowField& flow, const CameraRig& rig);

double depth_from_flow_value(double flow, const CameraRig& rig);
double flow_from_depth_value(double depth, const CameraRig& rig);

/// Interpolated source value along one scanline, and its derivative with
/// respect to the continuous sample column. At exact grid columns the
/// derivative is taken from the cell starting at floor(x) (the left cell at
/// the last column).
struct ScanlineSample {
  double value = 0.0;
  double slope = 0.0;
  bool in_bounds = false;
};
ScanlineSample sample_scanline(const Raster& source, int row, double x, int channel, PaddingMode padding);

/// f_w: reconstruct the target view by sampling `source` at (r, c + flow(r,c)),
/// flow derived from `depth`. Rectified geometry keeps the row fixed, so the
/// bilinear kernel reduces to linear interpolation along the scanline.
WarpResult inverse_warp(const Raster& source, const DepthMap& depth, const CameraRig& rig,
                        PaddingMode padding = PaddingMode::Border);

/// d(warped image)/d(depth) per pixel and channel: slope * f_x*b / D^2.
Raster warp_gradient_depth(const Raster& source, const DepthMap& depth, const CameraRig& rig,
                           PaddingMode padding = PaddingMode::Border);

/// Warp a single pixel at an arbitrary depth; writes one value per channel.
/// Used by the landscape sweep and by finite-difference checks.
bool warp_pixel(const Raster& source, int row, int col, double depth, const CameraRig& rig, PaddingMode padding,
                std::span<double> values, std::span<double> slopes_depth = {});

}  // namespace fdlab
