#include "fdlab/optim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fdlab/rng.hpp"

namespace fdlab {

namespace {

constexpr std::array<std::pair<LossKind, std::string_view>, 9> kLossNames = {{
    {LossKind::Lp, "Lp"},
    {LossKind::LpMp, "Lp+Mp"},
    {LossKind::LpMf, "Lp+Mf"},
    {LossKind::Lfd, "Lfd"},
    {LossKind::LfdMp, "Lfd+Mp"},
    {LossKind::LfdMf, "Lfd+Mf"},
    {LossKind::Ldr, "Ldr"},
    {LossKind::Lfp, "Lfp"},
    {LossKind::LdrLfp, "Ldr+Lfp"},
}};

constexpr double kDivergenceLimit = 1e6;
constexpr double kGridBand = 1e-3;
constexpr double kRegressionBand = 1e-6;
constexpr double kIntensityBand = 1e-9;

bool has_regression(LossKind k) { return k != LossKind::Lfp && !uses_photometric(k); }
bool has_guided_photometric(LossKind k) { return k != LossKind::Ldr && !uses_photometric(k); }

double sum_mask(const Raster& mask) {
  double t = 0.0;
  for (double m : mask.values()) t += m;
  return t;
}

// Does [lo, hi] come within `band` of an integer?
bool near_grid_line(double lo, double hi, double band) {
  return std::floor(hi + band) >= std::ceil(lo - band);
}

// Sign of v at both ends of an interval, and |v| clear of the band at both.
bool same_strict_sign(double a, double b, double band) {
  return (a > band && b > band) || (a < -band && b < -band);
}

}  // namespace

void AdamConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorKind::Spec, "Adam lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorKind::Spec, "Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw Error(ErrorKind::Spec, "Adam eps must be positive");
  if (steps < 0 || decay_step < 0) throw Error(ErrorKind::Spec, "steps and decay_step must be non-negative");
}

DepthField::DepthField(Raster sigma) : sigma_(std::move(sigma)) {
  require_single_channel(sigma_, "DepthField");
  for (double s : sigma_.values()) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorKind::Domain, "sigma must lie in [0,1]");
  }
}

DepthField DepthField::constant(int height, int width, double sigma) {
  return DepthField(Raster(height, width, 1, sigma));
}

DepthField DepthField::from_depth(const DepthMap& depth, const DepthActivation& act) {
  return DepthField(raster_map(depth.raster(), [&act](double d) { return act.sigma(d); }));
}

LossKind parse_loss_kind(std::string_view text) {
  for (const auto& [kind, name] : kLossNames) {
    if (name == text) return kind;
  }
  throw Error(ErrorKind::Spec, "unknown loss '" + std::string(text) + "'");
}

std::string_view to_string(LossKind kind) {
  for (const auto& [k, name] : kLossNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::vector<LossKind> parse_loss_list(std::string_view text) {
  std::vector<LossKind> kinds;
  while (true) {
    const auto comma = text.find(',');
    kinds.push_back(parse_loss_kind(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return kinds;
}

bool uses_prior_flow_mask(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::LpMf:
    case LossKind::LfdMf:
    case LossKind::Ldr:
    case LossKind::Lfp:
    case LossKind::LdrLfp: return true;
    default: return false;
  }
}

bool uses_auto_mask(LossKind kind) noexcept { return kind == LossKind::LpMp || kind == LossKind::LfdMp; }

bool uses_photometric(LossKind kind) noexcept {
  return kind == LossKind::Lp || kind == LossKind::LpMp || kind == LossKind::LpMf;
}

Objective::Objective(RenderedScene scene, LossKind kind, LossConfig loss, MaskConfig mask, DepthActivation act)
    : scene_(std::move(scene)),
      kind_(kind),
      loss_(loss),
      act_(act),
      pseudo_(DepthMap::uniform(scene_.target.height(), scene_.target.width(), 1.0)) {
  loss_.validate();
  mask.validate();
  require_same_shape(scene_.target, scene_.source, "Objective");
  require_same_extent(scene_.target, scene_.prior_flow.raster(), "Objective");
  const int h = scene_.target.height();
  const int w = scene_.target.width();
  const int nc = scene_.target.channels();

  flow_mask_ = prior_flow_mask(scene_.prior_flow, scene_.rig, mask);
  if (uses_auto_mask(kind_)) unwarped_error_ = photometric_error(scene_.target, scene_.source, loss_);

  if (!uses_photometric(kind_)) {
    // Pseudo labels exist only where the loss may read them; with M_f that
    // keeps near-zero flow out of the depth conversion.
    pseudo_valid_ = uses_prior_flow_mask(kind_) ? flow_mask_ : Raster(h, w, 1, 1.0);
    Raster pseudo(h, w, 1, 1.0);
    pseudo_warp_ = Raster(h, w, nc);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (pseudo_valid_(r, c) == 0.0) continue;
        pseudo(r, c) = depth_from_flow_value(scene_.prior_flow(r, c), scene_.rig);
        warp_pixel(scene_.source, r, c, pseudo(r, c), scene_.rig, loss_.padding,
                   std::span<double>(&pseudo_warp_(r, c, 0), static_cast<std::size_t>(nc)));
      }
    }
    pseudo_ = DepthMap(std::move(pseudo));
  }
}

Raster Objective::mask_for(const DepthMap& depth) const {
  if (uses_prior_flow_mask(kind_)) return flow_mask_;
  if (uses_auto_mask(kind_)) {
    const Raster warped = photometric_loss(scene_.target, scene_.source, depth, scene_.rig, loss_);
    return raster_map2(warped, unwarped_error_, [](double a, double b) { return a < b ? 1.0 : 0.0; });
  }
  return Raster(depth.height(), depth.width(), 1, 1.0);
}

Evaluation Objective::evaluate(const DepthField& field, bool with_grad) const {
  return evaluate_with_mask(field, mask_for(field.depth(act_)), with_grad);
}

Evaluation Objective::evaluate_with_mask(const DepthField& field, const Raster& mask, bool with_grad) const {
  require_same_shape(field.sigma(), mask, "Objective::evaluate");
  const DepthMap depth = field.depth(act_);
  const int h = depth.height();
  const int w = depth.width();
  const int nc = scene_.target.channels();
  Evaluation e;
  e.mask = mask;
  Raster grad_depth;
  const double t = sum_mask(mask);

  if (uses_photometric(kind_)) {
    const Raster warped = inverse_warp(scene_.source, depth, scene_.rig, loss_.padding).image;
    e.per_pixel = photometric_error(scene_.target, warped, loss_);
    e.total = final_loss(e.per_pixel, mask);
    if (with_grad) {
      const Raster weights = raster_map(mask, [t](double m) { return m / t; });
      const Raster g_img = photometric_error_backward(scene_.target, warped, loss_, weights);
      const Raster slopes = warp_gradient_depth(scene_.source, depth, scene_.rig, loss_.padding);
      grad_depth = Raster(h, w, 1);
      for (std::size_t p = 0; p < grad_depth.size(); ++p) {
        double acc = 0.0;
        for (int ch = 0; ch < nc; ++ch) acc += g_img[p * nc + ch] * slopes[p * nc + ch];
        grad_depth[p] = acc;
      }
    }
  } else {
    e.per_pixel = Raster(h, w, 1);
    if (with_grad) grad_depth = Raster(h, w, 1);
    std::array<double, 3> values{};
    std::array<double, 3> slopes{};
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (mask(r, c) == 0.0) continue;
        if (pseudo_valid_(r, c) == 0.0) {
          throw Error(ErrorKind::DegenerateFlow, "mask selects a pixel without a pseudo label");
        }
        const double d = depth(r, c);
        const double label = pseudo_(r, c);
        double loss = 0.0;
        double g = 0.0;
        if (has_regression(kind_)) {
          loss += depth_regression_value(d, label);
          g += depth_regression_derivative(d, label);
        }
        if (has_guided_photometric(kind_)) {
          warp_pixel(scene_.source, r, c, d, scene_.rig, loss_.padding, std::span<double>(values.data(), nc),
                     std::span<double>(slopes.data(), nc));
          double fp = 0.0;
          double gfp = 0.0;
          for (int ch = 0; ch < nc; ++ch) {
            const double diff = values[ch] - pseudo_warp_(r, c, ch);
            fp += std::fabs(diff);
            gfp += dead_zone_sign(diff, kIntensityKinkBand) * slopes[ch];
          }
          loss += fp / nc;
          g += gfp / nc;
        }
        e.per_pixel(r, c) = loss;
        if (with_grad) grad_depth(r, c) = g / t;
      }
    }
    e.total = final_loss(e.per_pixel, mask);
  }

  if (with_grad) {
    e.grad_sigma = Raster(h, w, 1);
    for (std::size_t p = 0; p < e.grad_sigma.size(); ++p) {
      e.grad_sigma[p] = grad_depth[p] * act_.depth_derivative(depth.raster()[p]);
    }
  }
  return e;
}

OptimizeResult optimize_depth(const Objective& objective, const DepthField& init, const AdamConfig& adam) {
  adam.validate();
  require_same_extent(init.sigma(), objective.scene().target, "optimize_depth");
  DepthField field = init;
  Raster& sigma = field.sigma();
  std::vector<double> m(sigma.size(), 0.0);
  std::vector<double> v(sigma.size(), 0.0);
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(adam.steps) + 1);

  for (int step = 0; step <= adam.steps; ++step) {
    const Evaluation e = objective.evaluate(field, step < adam.steps);
    if (!std::isfinite(e.total) || e.total > kDivergenceLimit) {
      throw Error(ErrorKind::Divergence, "loss diverged at step " + std::to_string(step));
    }
    trace.push_back(e.total);
    if (step == adam.steps) break;

    const double lr = (adam.decay_step > 0 && step >= adam.decay_step) ? adam.lr * 0.1 : adam.lr;
    const double bias1 = 1.0 - std::pow(adam.beta1, step + 1);
    const double bias2 = 1.0 - std::pow(adam.beta2, step + 1);
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      if (e.mask[i] == 0.0) continue;
      const double g = e.grad_sigma[i];
      m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * g;
      v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * g * g;
      const double update = lr * (m[i] / bias1) / (std::sqrt(v[i] / bias2) + adam.eps);
      sigma[i] = std::clamp(sigma[i] - update, 0.0, 1.0);
    }
  }
  return OptimizeResult{std::move(field), std::move(trace)};
}

GradCheckResult grad_check(const Objective& objective, const DepthField& field, int trials, double h_rel,
                           std::uint64_t seed, double corruption) {
  if (trials < 1) throw Error(ErrorKind::Spec, "grad_check needs at least one trial");
  if (!(h_rel > 0.0)) throw Error(ErrorKind::Spec, "grad_check needs h_rel > 0");
  const Evaluation base = objective.evaluate(field, true);
  const Raster& mask = base.mask;
  const double t = sum_mask(mask);
  const RenderedScene& scene = objective.scene();
  const DepthActivation& act = objective.activation();
  const LossKind kind = objective.kind();
  const double fb = scene.rig.focal_baseline();
  const int nc = scene.target.channels();
  const PaddingMode padding = objective.loss_config().padding;

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] != 0.0) candidates.push_back(i);
  }

  Rng rng(seed);
  GradCheckResult result;
  const long long max_attempts = 200LL * trials;
  for (long long attempt = 0; attempt < max_attempts && result.sites < trials; ++attempt) {
    const std::size_t p = candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(candidates.size()) - 1))];
    const int row = static_cast<int>(p / mask.width());
    const int col = static_cast<int>(p % mask.width());
    const double s = field.sigma()[p];
    const double h = h_rel * s;
    if (!(h > 0.0) || s - h < 0.0 || s + h > 1.0) continue;

    const double d_lo = act.depth(s + h);
    const double d_hi = act.depth(s - h);
    const double x_a = col - fb / d_lo;
    const double x_b = col - fb / d_hi;
    if (near_grid_line(std::min(x_a, x_b), std::max(x_a, x_b), kGridBand)) continue;

    std::array<double, 3> w_lo{};
    std::array<double, 3> w_hi{};
    warp_pixel(scene.source, row, col, d_lo, scene.rig, padding, std::span<double>(w_lo.data(), nc));
    warp_pixel(scene.source, row, col, d_hi, scene.rig, padding, std::span<double>(w_hi.data(), nc));
    bool eligible = true;
    if (uses_photometric(kind)) {
      for (int ch = 0; ch < nc && eligible; ++ch) {
        const double t_val = scene.target(row, col, ch);
        eligible = same_strict_sign(w_lo[ch] - t_val, w_hi[ch] - t_val, kIntensityBand);
      }
    } else {
      const double label = objective.pseudo_depth()(row, col);
      if (has_regression(kind)) eligible = same_strict_sign(d_lo - label, d_hi - label, kRegressionBand);
      if (eligible && has_guided_photometric(kind)) {
        std::array<double, 3> guided{};
        warp_pixel(scene.source, row, col, label, scene.rig, padding, std::span<double>(guided.data(), nc));
        for (int ch = 0; ch < nc && eligible; ++ch) {
          eligible = same_strict_sign(w_lo[ch] - guided[ch], w_hi[ch] - guided[ch], kIntensityBand);
        }
      }
    }
    if (!eligible) continue;

    DepthField plus = field;
    DepthField minus = field;
    plus.sigma()[p] = s + h;
    minus.sigma()[p] = s - h;
    const Raster l_plus = objective.evaluate_with_mask(plus, mask, false).per_pixel;
    const Raster l_minus = objective.evaluate_with_mask(minus, mask, false).per_pixel;
    // Pixel-wise differences first: unaffected pixels cancel exactly.
    double diff = 0.0;
    for (std::size_t q = 0; q < mask.size(); ++q) {
      if (mask[q] != 0.0) diff += l_plus[q] - l_minus[q];
    }
    const double fd = diff / (t * 2.0 * h);
    const double analytic = base.grad_sigma[p] + corruption;
    const double scale = std::max(std::fabs(analytic), std::fabs(fd));
    const double rel = scale == 0.0 ? 0.0 : std::fabs(analytic - fd) / scale;
    result.max_rel_error = std::max(result.max_rel_error, rel);
    ++result.sites;
  }
  return result;
}

}  // namespace fdlab
