#include "fdlab/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fdlab/config.hpp"

namespace fdlab {

EvalReport evaluate_depth(const DepthMap& depth, const DepthMap& ground_truth, const Raster& valid) {
  require_same_shape(depth.raster(), ground_truth.raster(), "evaluate");
  require_same_shape(depth.raster(), valid, "evaluate");
  EvalReport rep;
  double sq = 0.0;
  double sq_log = 0.0;
  std::size_t d1 = 0, d2 = 0, d3 = 0;
  for (std::size_t i = 0; i < valid.size(); ++i) {
    if (valid[i] == 0.0) continue;
    const double d = depth.raster()[i];
    const double gt = ground_truth.raster()[i];
    const double err = d - gt;
    rep.abs_rel += std::fabs(err) / gt;
    rep.sq_rel += err * err / gt;
    sq += err * err;
    const double log_err = std::log(d) - std::log(gt);
    sq_log += log_err * log_err;
    const double ratio = std::max(d / gt, gt / d);
    if (ratio < 1.25) ++d1;
    if (ratio < 1.25 * 1.25) ++d2;
    if (ratio < 1.25 * 1.25 * 1.25) ++d3;
    ++rep.pixels;
  }
  if (rep.pixels == 0) throw Error(ErrorKind::EmptyEval, "no pixel passes the evaluation mask");
  const auto n = static_cast<double>(rep.pixels);
  rep.abs_rel /= n;
  rep.sq_rel /= n;
  rep.rmse = std::sqrt(sq / n);
  rep.rmse_log = std::sqrt(sq_log / n);
  rep.delta1 = static_cast<double>(d1) / n;
  rep.delta2 = static_cast<double>(d2) / n;
  rep.delta3 = static_cast<double>(d3) / n;
  return rep;
}

EvalReport evaluate(const DepthMap& depth, const RenderedScene& scene, double cap) {
  return evaluate_depth(depth, scene.depth_gt, evaluation_mask(scene, cap));
}

EvalReport evaluate(const DepthField& field, const RenderedScene& scene, const DepthActivation& act, double cap) {
  return evaluate(field.depth(act), scene, cap);
}

std::string eval_csv(const EvalReport& r) {
  std::string out = "metric,value\n";
  const std::pair<const char*, double> rows[] = {
      {"abs_rel", r.abs_rel}, {"sq_rel", r.sq_rel}, {"rmse", r.rmse},     {"rmse_log", r.rmse_log},
      {"delta1", r.delta1},   {"delta2", r.delta2}, {"delta3", r.delta3},
  };
  for (const auto& [name, value] : rows) out += std::string(name) + ',' + format_double(value) + '\n';
  return out;
}

std::string trace_csv(const std::vector<double>& trace) {
  std::string out = "step,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i) + ',' + format_double(trace[i]) + '\n';
  return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "loss,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,final_loss\n";
  for (const AblationRow& row : rows) {
    const EvalReport& r = row.report;
    out += std::string(to_string(row.kind));
    for (double v : {r.abs_rel, r.sq_rel, r.rmse, r.rmse_log, r.delta1, r.delta2, r.delta3, row.final_loss}) {
      out += ',' + format_double(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace fdlab
