#include "fdlab/landscape.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fdlab/config.hpp"
#include "fdlab/warping.hpp"

namespace fdlab {

std::vector<double> DepthRange::grid() const {
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorKind::Spec, "sweep step must be positive");
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw Error(ErrorKind::Spec, "sweep range needs 0 < lo <= hi");
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::vector<double> depths(count);
  for (std::size_t i = 0; i < count; ++i) depths[i] = lo + static_cast<double>(i) * step;
  return depths;
}

DepthRange parse_depth_range(std::string_view text) {
  const auto first = text.find(':');
  const auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
  if (second == std::string_view::npos || text.find(':', second + 1) != std::string_view::npos) {
    throw Error(ErrorKind::Spec, "range must look like lo:hi:step");
  }
  DepthRange range{parse_double(text.substr(0, first), "range lo"),
                   parse_double(text.substr(first + 1, second - first - 1), "range hi"),
                   parse_double(text.substr(second + 1), "range step")};
  range.grid();
  return range;
}

LandscapeCurve sweep_landscape(const RenderedScene& scene, int row, int col, const DepthRange& range,
                               const LossConfig& cfg) {
  cfg.validate();
  if (!scene.target.contains(row, col)) {
    throw Error(ErrorKind::Index, "pixel (" + std::to_string(row) + "," + std::to_string(col) + ") outside the image");
  }
  const std::vector<double> depths = range.grid();
  const int nc = scene.target.channels();
  const double pseudo = depth_from_flow_value(scene.prior_flow(row, col), scene.rig);
  std::array<double, 3> guided{};
  warp_pixel(scene.source, row, col, pseudo, scene.rig, cfg.padding, std::span<double>(guided.data(), nc));

  Raster warped = inverse_warp(scene.source, scene.depth_gt, scene.rig, cfg.padding).image;
  LandscapeCurve curve;
  curve.depths = depths;
  for (double d : depths) {
    std::span<double> px(&warped(row, col, 0), static_cast<std::size_t>(nc));
    warp_pixel(scene.source, row, col, d, scene.rig, cfg.padding, px);
    const double l_p = photometric_error_at(scene.target, warped, cfg, row, col);
    double fp = 0.0;
    for (int ch = 0; ch < nc; ++ch) fp += std::fabs(px[ch] - guided[ch]);
    fp /= nc;
    const double dr = depth_regression_value(d, pseudo);
    curve.l_p.push_back(l_p);
    curve.l_dr.push_back(dr);
    curve.l_fp.push_back(fp);
    curve.l_fd.push_back(dr + fp);
  }
  return curve;
}

int count_local_minima(std::span<const double> curve) {
  if (curve.size() < 3) throw Error(ErrorKind::Length, "count_local_minima needs at least 3 samples");
  int count = 0;
  std::size_t i = 1;
  while (i + 1 < curve.size()) {
    std::size_t j = i;
    while (j + 1 < curve.size() && curve[j + 1] == curve[i]) ++j;
    if (j + 1 < curve.size() && curve[i - 1] > curve[i] && curve[j + 1] > curve[j]) ++count;
    i = j + 1;
  }
  return count;
}

std::size_t argmin_index(std::span<const double> curve) {
  if (curve.empty()) throw Error(ErrorKind::Length, "argmin of an empty curve");
  return static_cast<std::size_t>(std::min_element(curve.begin(), curve.end()) - curve.begin());
}

std::string landscape_csv(const LandscapeCurve& curve) {
  std::string out = "depth,L_p,L_dr,L_fp,L_fd\n";
  for (std::size_t i = 0; i < curve.depths.size(); ++i) {
    out += format_double(curve.depths[i]) + ',' + format_double(curve.l_p[i]) + ',' + format_double(curve.l_dr[i]) +
           ',' + format_double(curve.l_fp[i]) + ',' + format_double(curve.l_fd[i]) + '\n';
  }
  return out;
}

}  // namespace fdlab
