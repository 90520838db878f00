#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fdlab/losses.hpp"
#include "fdlab/scene.hpp"

namespace fdlab {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int steps = 300;
  int decay_step = 200;  // lr *= 0.1 from this step on; 0 disables

  void validate() const;
};

/// Per-pixel sigma in [0, 1]; depth comes from the activation.
class DepthField {
 public:
  explicit DepthField(Raster sigma);
  static DepthField constant(int height, int width, double sigma);
  static DepthField from_depth(const DepthMap& depth, const DepthActivation& act);

  const Raster& sigma() const noexcept { return sigma_; }
  Raster& sigma() noexcept { return sigma_; }
  DepthMap depth(const DepthActivation& act) const { return sigma_to_depth(sigma_, act); }

 private:
  Raster sigma_;
};

enum class LossKind { Lp, LpMp, LpMf, Lfd, LfdMp, LfdMf, Ldr, Lfp, LdrLfp };

LossKind parse_loss_kind(std::string_view text);
std::string_view to_string(LossKind kind);
std::vector<LossKind> parse_loss_list(std::string_view text);

bool uses_prior_flow_mask(LossKind kind) noexcept;
bool uses_auto_mask(LossKind kind) noexcept;
bool uses_photometric(LossKind kind) noexcept;

struct Evaluation {
  double total = 0.0;
  Raster per_pixel;   // loss before masking
  Raster mask;        // mask actually applied
  Raster grad_sigma;  // d total / d sigma, empty unless requested
};

/// One masked loss over a fixed scene. Everything that does not depend on the
/// current depth (pseudo labels, their warps, M_f, the unwarped photometric
/// error used by M_p) is computed once here.
class Objective {
 public:
  Objective(RenderedScene scene, LossKind kind, LossConfig loss = {}, MaskConfig mask = {},
            DepthActivation act = {});

  LossKind kind() const noexcept { return kind_; }
  const RenderedScene& scene() const noexcept { return scene_; }
  const LossConfig& loss_config() const noexcept { return loss_; }
  const DepthActivation& activation() const noexcept { return act_; }
  const DepthMap& pseudo_depth() const noexcept { return pseudo_; }

  Evaluation evaluate(const DepthField& field, bool with_grad) const;
  /// Same loss with the mask held fixed (stop-gradient view used by checks).
  Evaluation evaluate_with_mask(const DepthField& field, const Raster& mask, bool with_grad) const;

  Raster mask_for(const DepthMap& depth) const;

 private:
  RenderedScene scene_;
  LossKind kind_;
  LossConfig loss_;
  DepthActivation act_;
  Raster flow_mask_;
  Raster pseudo_valid_;  // 1 where a pseudo label exists
  DepthMap pseudo_;
  Raster pseudo_warp_;
  Raster unwarped_error_;
};

struct OptimizeResult {
  DepthField field;
  std::vector<double> trace;  // steps + 1 totals, the last after the final update
};

/// Projected Adam on sigma. Only pixels inside the current mask are updated;
/// the rest keep their sigma and moments untouched.
OptimizeResult optimize_depth(const Objective& objective, const DepthField& init, const AdamConfig& adam);

struct GradCheckResult {
  double max_rel_error = 0.0;
  int sites = 0;
};

/// Compares analytic d total/d sigma with central differences (step h_rel*sigma)
/// at `trials` random pixels, skipping sites within reach of a bilinear grid
/// line, the L_dr kink or an L1 kink. `corruption` is added to every analytic
/// value to show the checker notices a wrong gradient.
GradCheckResult grad_check(const Objective& objective, const DepthField& field, int trials, double h_rel,
                           std::uint64_t seed, double corruption = 0.0);

}  // namespace fdlab
