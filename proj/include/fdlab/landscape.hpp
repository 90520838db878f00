#pragma once

#include <span>
#include <string>
#include <vector>

#include "fdlab/losses.hpp"
#include "fdlab/scene.hpp"

namespace fdlab {

struct DepthRange {
  double lo = 1.0;
  double hi = 80.0;
  double step = 0.05;

  /// lo, lo+step, ... up to hi (inclusive within rounding).
  std::vector<double> grid() const;
};

DepthRange parse_depth_range(std::string_view text);  // "lo:hi:step"

/// Single-pixel loss curves with every other pixel held at ground truth.
struct LandscapeCurve {
  std::vector<double> depths;
  std::vector<double> l_p;
  std::vector<double> l_dr;
  std::vector<double> l_fp;
  std::vector<double> l_fd;
};

LandscapeCurve sweep_landscape(const RenderedScene& scene, int row, int col, const DepthRange& range,
                               const LossConfig& cfg = {});

/// Strict interior minima; a run of equal values counts once when both
/// neighbours of the run are strictly larger.
int count_local_minima(std::span<const double> curve);

std::size_t argmin_index(std::span<const double> curve);

std::string landscape_csv(const LandscapeCurve& curve);

}  // namespace fdlab
