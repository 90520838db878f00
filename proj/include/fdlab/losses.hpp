#pragma once

#include <span>
#include <vector>

#include "fdlab/camera.hpp"
#include "fdlab/raster.hpp"
#include "fdlab/warping.hpp"

namespace fdlab {

struct LossConfig {
  double alpha = 0.85;
  double ssim_c1 = 0.01 * 0.01;
  double ssim_c2 = 0.03 * 0.03;
  int ssim_window = 3;
  PaddingMode padding = PaddingMode::Border;

  void validate() const;
};

struct MaskConfig {
  double delta = 80.0;  // metres; pixels implying a deeper point are dropped

  void validate() const;
};

/// Maps a network-style output sigma in [0,1] to depth in [min, max] through
/// D = 1 / (a*sigma + b), a = 1/min - 1/max, b = 1/max.
class DepthActivation {
 public:
  DepthActivation(double min_depth = 0.1, double max_depth = 80.0);

  double min_depth() const noexcept { return min_depth_; }
  double max_depth() const noexcept { return max_depth_; }
  double a_coef() const noexcept { return a_; }
  double b_coef() const noexcept { return b_; }

  double depth(double sigma) const;
  double sigma(double depth) const;
  /// dD/dsigma = -a * D^2
  double depth_derivative(double depth) const noexcept { return -a_ * depth * depth; }

 private:
  double min_depth_;
  double max_depth_;
  double a_;
  double b_;
};

// Kinks of |x| use subgradient 0 inside these bands.
inline constexpr double kDepthKinkBand = 1e-9;
inline constexpr double kIntensityKinkBand = 1e-12;

double dead_zone_sign(double x, double band) noexcept;

Raster ssim(const Raster& a, const Raster& b, const LossConfig& cfg);
double ssim_at(const Raster& a, const Raster& b, const LossConfig& cfg, int row, int col);

/// (alpha/2)(1 - SSIM) + (1 - alpha) * channel-mean |target - candidate|
Raster photometric_error(const Raster& target, const Raster& candidate, const LossConfig& cfg);
double photometric_error_at(const Raster& target, const Raster& candidate, const LossConfig& cfg, int row, int col);

/// Gradient of sum_p weights[p] * pe_p with respect to every candidate value.
/// The SSIM window couples each candidate pixel to its neighbours' errors.
Raster photometric_error_backward(const Raster& target, const Raster& candidate, const LossConfig& cfg,
                                  const Raster& weights);

Raster photometric_loss(const Raster& target, const Raster& source, const DepthMap& depth, const CameraRig& rig,
                        const LossConfig& cfg);

/// 1 where the warped reconstruction beats the unwarped source, strictly.
Raster auto_mask(const Raster& target, const Raster& source, const DepthMap& depth, const CameraRig& rig,
                 const LossConfig& cfg);

/// ln(|D - D_pseudo| + 1)
Raster depth_regression_loss(const DepthMap& depth, const DepthMap& pseudo);
double depth_regression_value(double depth, double pseudo) noexcept;
double depth_regression_derivative(double depth, double pseudo) noexcept;

/// channel-mean |f_w(source, depth) - f_w(source, pseudo)|
Raster flow_guided_photometric_loss(const Raster& source, const DepthMap& depth, const DepthMap& pseudo,
                                    const CameraRig& rig, PaddingMode padding = PaddingMode::Border);

/// L_dr + L_fp with the pseudo label taken from `prior_flow`. Pixels where
/// `eval_mask` is 0 are skipped (output 0), so degenerate prior flow there is
/// never converted to depth.
Raster flow_distillation_loss(const Raster& source, const DepthMap& depth, const FlowField& prior_flow,
                              const CameraRig& rig, PaddingMode padding = PaddingMode::Border,
                              const Raster* eval_mask = nullptr);

/// 1 where |flow| > f_x*b/delta, i.e. where the prior flow implies a depth
/// inside the estimation range.
Raster prior_flow_mask(const FlowField& prior_flow, const CameraRig& rig, const MaskConfig& cfg);

DepthMap sigma_to_depth(const Raster& sigma, const DepthActivation& act);

/// Masked mean (sum M*L / T).
double final_loss(const Raster& per_pixel_loss, const Raster& mask);
/// Masked mean per scale, then the plain average across scales.
double final_loss(std::span<const Raster> per_scale_loss, const Raster& mask);

/// Bilinear resize with half-pixel centres and edge clamping.
Raster resample_bilinear(const Raster& input, int height, int width);

/// Depth predictions at several resolutions, each brought to full resolution
/// so one mask serves every scale.
class ScaleSet {
 public:
  ScaleSet(const std::vector<DepthMap>& pyramid, int height, int width);

  std::size_t size() const noexcept { return scales_.size(); }
  const DepthMap& operator[](std::size_t i) const noexcept { return scales_[i]; }
  const std::vector<DepthMap>& scales() const noexcept { return scales_; }

 private:
  std::vector<DepthMap> scales_;
};

}  // namespace fdlab
