#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fdlab/optim.hpp"
#include "fdlab/scene.hpp"

namespace fdlab {

struct EvalReport {
  double abs_rel = 0.0;
  double sq_rel = 0.0;
  double rmse = 0.0;
  double rmse_log = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  std::size_t pixels = 0;
};

/// Standard depth metrics over pixels where `valid` is 1.
EvalReport evaluate_depth(const DepthMap& depth, const DepthMap& ground_truth, const Raster& valid);
/// Same, restricted to the scene's evaluation mask (in frame, unoccluded, <= cap).
EvalReport evaluate(const DepthMap& depth, const RenderedScene& scene, double cap = 80.0);
EvalReport evaluate(const DepthField& field, const RenderedScene& scene, const DepthActivation& act,
                    double cap = 80.0);

std::string eval_csv(const EvalReport& report);
std::string trace_csv(const std::vector<double>& trace);

struct AblationRow {
  LossKind kind;
  EvalReport report;
  double final_loss = 0.0;
};
std::string ablation_csv(const std::vector<AblationRow>& rows);

}  // namespace fdlab
