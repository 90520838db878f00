#include "fdlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fdlab {

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorKind::Spec, "alpha must lie in [0,1]");
  if (!(ssim_c1 > 0.0) || !(ssim_c2 > 0.0)) throw Error(ErrorKind::Spec, "SSIM constants must be positive");
  if (ssim_window < 1 || ssim_window % 2 == 0) throw Error(ErrorKind::Spec, "ssim_window must be a positive odd size");
}

void MaskConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(ErrorKind::Spec, "delta must be positive");
}

DepthActivation::DepthActivation(double min_depth, double max_depth) : min_depth_(min_depth), max_depth_(max_depth) {
  if (!(min_depth > 0.0 && min_depth < max_depth) || !std::isfinite(max_depth)) {
    throw Error(ErrorKind::Spec, "depth activation needs 0 < min_depth < max_depth");
  }
  a_ = 1.0 / min_depth - 1.0 / max_depth;
  b_ = 1.0 / max_depth;
}

double DepthActivation::depth(double sigma) const {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw Error(ErrorKind::Domain, "sigma must lie in [0,1], got " + std::to_string(sigma));
  }
  return std::clamp(1.0 / (a_ * sigma + b_), min_depth_, max_depth_);
}

double DepthActivation::sigma(double depth) const {
  return std::clamp((1.0 / depth - b_) / a_, 0.0, 1.0);
}

double dead_zone_sign(double x, double band) noexcept {
  if (x > band) return 1.0;
  if (x < -band) return -1.0;
  return 0.0;
}

namespace {

struct WindowStats {
  double mu_a, mu_b, e_aa, e_bb, e_ab;
};

WindowStats window_stats(const Raster& a, const Raster& b, int half, int row, int col, int ch) {
  const int h = a.height();
  const int w = a.width();
  WindowStats s{0, 0, 0, 0, 0};
  for (int dr = -half; dr <= half; ++dr) {
    const int rr = std::clamp(row + dr, 0, h - 1);
    for (int dc = -half; dc <= half; ++dc) {
      const int cc = std::clamp(col + dc, 0, w - 1);
      const double va = a(rr, cc, ch);
      const double vb = b(rr, cc, ch);
      s.mu_a += va;
      s.mu_b += vb;
      s.e_aa += va * va;
      s.e_bb += vb * vb;
      s.e_ab += va * vb;
    }
  }
  const double n = static_cast<double>((2 * half + 1) * (2 * half + 1));
  s.mu_a /= n;
  s.mu_b /= n;
  s.e_aa /= n;
  s.e_bb /= n;
  s.e_ab /= n;
  return s;
}

struct SsimTerms {
  double value;    // clamped to [-1, 1]
  bool clamped;
  double a1, a2, b1, b2;
  double mu_a, mu_b;
};

SsimTerms ssim_terms(const WindowStats& s, const LossConfig& cfg) {
  const double var_a = s.e_aa - s.mu_a * s.mu_a;
  const double var_b = s.e_bb - s.mu_b * s.mu_b;
  const double cov = s.e_ab - s.mu_a * s.mu_b;
  SsimTerms t{};
  t.mu_a = s.mu_a;
  t.mu_b = s.mu_b;
  t.a1 = 2.0 * s.mu_a * s.mu_b + cfg.ssim_c1;
  t.a2 = 2.0 * cov + cfg.ssim_c2;
  t.b1 = s.mu_a * s.mu_a + s.mu_b * s.mu_b + cfg.ssim_c1;
  t.b2 = var_a + var_b + cfg.ssim_c2;
  const double raw = (t.a1 * t.a2) / (t.b1 * t.b2);
  t.value = std::clamp(raw, -1.0, 1.0);
  t.clamped = raw != t.value;
  return t;
}

void check_pair(const Raster& a, const Raster& b, const char* context) {
  require_same_shape(a, b, context);
}

}  // namespace

double ssim_at(const Raster& a, const Raster& b, const LossConfig& cfg, int row, int col) {
  const int half = cfg.ssim_window / 2;
  double acc = 0.0;
  for (int ch = 0; ch < a.channels(); ++ch) acc += ssim_terms(window_stats(a, b, half, row, col, ch), cfg).value;
  return acc / a.channels();
}

Raster ssim(const Raster& a, const Raster& b, const LossConfig& cfg) {
  check_pair(a, b, "ssim");
  Raster out(a.height(), a.width(), 1);
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) out(r, c) = ssim_at(a, b, cfg, r, c);
  }
  return out;
}

double photometric_error_at(const Raster& target, const Raster& candidate, const LossConfig& cfg, int row,
                            int col) {
  const int nc = target.channels();
  double l1 = 0.0;
  for (int ch = 0; ch < nc; ++ch) l1 += std::fabs(target(row, col, ch) - candidate(row, col, ch));
  l1 /= nc;
  const double s = ssim_at(target, candidate, cfg, row, col);
  return 0.5 * cfg.alpha * (1.0 - s) + (1.0 - cfg.alpha) * l1;
}

Raster photometric_error(const Raster& target, const Raster& candidate, const LossConfig& cfg) {
  check_pair(target, candidate, "photometric_error");
  Raster out(target.height(), target.width(), 1);
  for (int r = 0; r < target.height(); ++r) {
    for (int c = 0; c < target.width(); ++c) out(r, c) = photometric_error_at(target, candidate, cfg, r, c);
  }
  return out;
}

Raster photometric_error_backward(const Raster& target, const Raster& candidate, const LossConfig& cfg,
                                  const Raster& weights) {
  check_pair(target, candidate, "photometric_error_backward");
  require_same_extent(target, weights, "photometric_error_backward");
  require_single_channel(weights, "photometric_error_backward");
  const int h = target.height();
  const int w = target.width();
  const int nc = target.channels();
  const int half = cfg.ssim_window / 2;
  const double n = static_cast<double>(cfg.ssim_window * cfg.ssim_window);
  const double d_pe_d_ssim = -0.5 * cfg.alpha / nc;
  const double d_pe_d_l1 = (1.0 - cfg.alpha) / nc;

  Raster grad(h, w, nc);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double weight = weights(r, c);
      if (weight == 0.0) continue;
      for (int ch = 0; ch < nc; ++ch) {
        grad(r, c, ch) +=
            weight * d_pe_d_l1 * dead_zone_sign(candidate(r, c, ch) - target(r, c, ch), kIntensityKinkBand);

        const SsimTerms t = ssim_terms(window_stats(target, candidate, half, r, c, ch), cfg);
        if (t.clamped) continue;
        const double den = t.b1 * t.b2;
        const double d_mu_b = (2.0 * t.mu_a * t.a2 - 2.0 * t.mu_a * t.a1 -
                               t.value * (2.0 * t.mu_b * t.b2 - 2.0 * t.mu_b * t.b1)) / den;
        const double d_e_ab = 2.0 * t.a1 / den;
        const double d_e_bb = -t.value * t.b1 / den;
        const double scale = weight * d_pe_d_ssim / n;
        const double g_mu = scale * d_mu_b;
        const double g_ab = scale * d_e_ab;
        const double g_bb = scale * d_e_bb;
        for (int dr = -half; dr <= half; ++dr) {
          const int rr = std::clamp(r + dr, 0, h - 1);
          for (int dc = -half; dc <= half; ++dc) {
            const int cc = std::clamp(c + dc, 0, w - 1);
            grad(rr, cc, ch) += g_mu + g_ab * target(rr, cc, ch) + g_bb * 2.0 * candidate(rr, cc, ch);
          }
        }
      }
    }
  }
  return grad;
}

Raster photometric_loss(const Raster& target, const Raster& source, const DepthMap& depth, const CameraRig& rig,
                        const LossConfig& cfg) {
  require_same_shape(target, source, "photometric_loss");
  return photometric_error(target, inverse_warp(source, depth, rig, cfg.padding).image, cfg);
}

Raster auto_mask(const Raster& target, const Raster& source, const DepthMap& depth, const CameraRig& rig,
                 const LossConfig& cfg) {
  const Raster warped_error = photometric_loss(target, source, depth, rig, cfg);
  const Raster identity_error = photometric_error(target, source, cfg);
  return raster_map2(warped_error, identity_error, [](double warped, double raw) { return warped < raw ? 1.0 : 0.0; });
}

double depth_regression_value(double depth, double pseudo) noexcept { return std::log(std::fabs(depth - pseudo) + 1.0); }

double depth_regression_derivative(double depth, double pseudo) noexcept {
  const double diff = depth - pseudo;
  return dead_zone_sign(diff, kDepthKinkBand) / (std::fabs(diff) + 1.0);
}

Raster depth_regression_loss(const DepthMap& depth, const DepthMap& pseudo) {
  return raster_map2(depth.raster(), pseudo.raster(), depth_regression_value);
}

Raster flow_guided_photometric_loss(const Raster& source, const DepthMap& depth, const DepthMap& pseudo,
                                    const CameraRig& rig, PaddingMode padding) {
  require_same_extent(depth.raster(), pseudo.raster(), "flow_guided_photometric_loss");
  const Raster warped = inverse_warp(source, depth, rig, padding).image;
  const Raster guided = inverse_warp(source, pseudo, rig, padding).image;
  return channel_mean(raster_map2(warped, guided, [](double x, double y) { return std::fabs(x - y); }));
}

Raster flow_distillation_loss(const Raster& source, const DepthMap& depth, const FlowField& prior_flow,
                              const CameraRig& rig, PaddingMode padding, const Raster* eval_mask) {
  require_same_extent(source, depth.raster(), "flow_distillation_loss");
  require_same_extent(source, prior_flow.raster(), "flow_distillation_loss");
  if (eval_mask != nullptr) require_same_shape(*eval_mask, prior_flow.raster(), "flow_distillation_loss");
  const int nc = source.channels();
  Raster out(source.height(), source.width(), 1);
  double warped[3];
  double guided[3];
  for (int r = 0; r < source.height(); ++r) {
    for (int c = 0; c < source.width(); ++c) {
      if (eval_mask != nullptr && (*eval_mask)(r, c) == 0.0) continue;
      const double pseudo = depth_from_flow_value(prior_flow(r, c), rig);
      const double d = depth(r, c);
      warp_pixel(source, r, c, d, rig, padding, std::span<double>(warped, nc));
      warp_pixel(source, r, c, pseudo, rig, padding, std::span<double>(guided, nc));
      double fp = 0.0;
      for (int ch = 0; ch < nc; ++ch) fp += std::fabs(warped[ch] - guided[ch]);
      out(r, c) = depth_regression_value(d, pseudo) + fp / nc;
    }
  }
  return out;
}

Raster prior_flow_mask(const FlowField& prior_flow, const CameraRig& rig, const MaskConfig& cfg) {
  cfg.validate();
  // |f| > fb/delta, compared as pseudo depth so the cut agrees bitwise with depth_from_flow.
  // Zero flow gives fb/0 = inf, which fails the test.
  const double fb = rig.focal_baseline();
  const double delta = cfg.delta;
  return raster_map(prior_flow.raster(), [fb, delta](double f) { return fb / std::fabs(f) < delta ? 1.0 : 0.0; });
}

DepthMap sigma_to_depth(const Raster& sigma, const DepthActivation& act) {
  require_single_channel(sigma, "sigma_to_depth");
  return DepthMap(raster_map(sigma, [&act](double s) { return act.depth(s); }));
}

double final_loss(const Raster& per_pixel_loss, const Raster& mask) { return reduce_masked_mean(per_pixel_loss, mask); }

double final_loss(std::span<const Raster> per_scale_loss, const Raster& mask) {
  if (per_scale_loss.empty()) throw Error(ErrorKind::Length, "final_loss needs at least one scale");
  double acc = 0.0;
  for (const Raster& scale : per_scale_loss) acc += reduce_masked_mean(scale, mask);
  return acc / static_cast<double>(per_scale_loss.size());
}

Raster resample_bilinear(const Raster& input, int height, int width) {
  Raster out(height, width, input.channels());
  const double sy = static_cast<double>(input.height()) / height;
  const double sx = static_cast<double>(input.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, static_cast<double>(input.height() - 1));
    const int y0 = static_cast<int>(std::floor(y));
    const int y1 = std::min(y0 + 1, input.height() - 1);
    const double ty = y - y0;
    for (int c = 0; c < width; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, static_cast<double>(input.width() - 1));
      const int x0 = static_cast<int>(std::floor(x));
      const int x1 = std::min(x0 + 1, input.width() - 1);
      const double tx = x - x0;
      for (int ch = 0; ch < input.channels(); ++ch) {
        const double top = input(y0, x0, ch) + tx * (input(y0, x1, ch) - input(y0, x0, ch));
        const double bottom = input(y1, x0, ch) + tx * (input(y1, x1, ch) - input(y1, x0, ch));
        out(r, c, ch) = top + ty * (bottom - top);
      }
    }
  }
  return out;
}

ScaleSet::ScaleSet(const std::vector<DepthMap>& pyramid, int height, int width) {
  if (pyramid.empty()) throw Error(ErrorKind::Length, "ScaleSet needs at least one depth map");
  scales_.reserve(pyramid.size());
  for (const DepthMap& level : pyramid) scales_.emplace_back(resample_bilinear(level.raster(), height, width));
}

}  // namespace fdlab
