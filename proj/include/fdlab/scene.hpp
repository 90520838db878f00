#pragma once

#include <cstdint>
#include <filesystem>
#include <variant>
#include <vector>

#include "fdlab/camera.hpp"
#include "fdlab/config.hpp"
#include "fdlab/raster.hpp"

namespace fdlab {

struct ConstantPlane {
  double depth = 5.0;
};

/// Ground-plane-like slant: depth(row) = base_depth + gradient * row.
struct SlantedPlane {
  double base_depth = 5.0;
  double gradient = 0.05;
};

/// Fronto-parallel rectangle covering target rows [row0, row1) and columns
/// [col0, col1).
struct DepthBox {
  int row0 = 0;
  int col0 = 0;
  int row1 = 0;
  int col1 = 0;
  double depth = 1.0;
};

/// Boxes in front of a fronto-parallel background wall.
struct LayeredBoxes {
  double background_depth = 20.0;
  std::vector<DepthBox> boxes;
};

using DepthModel = std::variant<ConstantPlane, SlantedPlane, LayeredBoxes>;

struct SmoothRamp {};

struct BandlimitedNoise {
  std::uint64_t seed = 1;
  double max_freq = 0.1;  // cycles per pixel
};

/// Vertical sinusoidal stripes, value = mean_c + amplitude * sin(2*pi*(u + phase) / period).
struct PeriodicStripes {
  double period = 8.0;
  double phase = 0.0;
  double amplitude = 0.3;
};

using TextureModel = std::variant<SmoothRamp, BandlimitedNoise, PeriodicStripes>;

struct SceneSpec {
  int height = 64;
  int width = 192;
  CameraRig rig{100.0, 0.5};
  DepthModel depth_model = ConstantPlane{};
  TextureModel texture_model = SmoothRamp{};
  double illumination_gain = 1.0;  // source view only
  double illumination_bias = 0.0;  // source view only
  double flow_noise_sigma = 0.0;   // px

  void validate() const;
};

struct RenderedScene {
  Raster target;
  Raster source;
  DepthMap depth_gt;
  FlowField prior_flow;
  Raster occlusion;  // 1 where the target point is hidden in the source view
  CameraRig rig;
};

RenderedScene render(const SceneSpec& spec, std::uint64_t rng_seed);

/// Textured scene whose designated pixel shows several photometric minima
/// along the depth sweep, while exact prior flow pins a single one.
struct StressScene {
  SceneSpec spec;
  int row = 0;
  int col = 0;
};
StressScene stress_scene();

/// Depth of the surface seen by the target view at (row, col).
double target_surface_depth(const SceneSpec& spec, int row, int col);
/// Depth of the surface seen by the source view at continuous column x.
double source_surface_depth(const SceneSpec& spec, int row, double x);
/// Texture value of the surface visible in the target view.
double texture_value(const SceneSpec& spec, int layer, int row, double u, int channel);

/// Upper bound on |bilinear(source) - target| for a correctly warped,
/// unoccluded pixel whose interpolation taps see the same surface:
/// gain * max|d^2 T / du^2| / 8 plus rounding slack.
double interpolation_bound(const SceneSpec& spec);

/// Pixels usable for depth evaluation: sample inside the frame at the true
/// depth, not occluded, and ground truth no deeper than `cap`.
Raster evaluation_mask(const RenderedScene& scene, double cap = 80.0);

/// Reads a 1-channel PFM as prior flow (e.g. the output of a stereo network).
FlowField load_prior_flow(const std::filesystem::path& path);

SceneSpec scene_spec_from(const KeyValueConfig& cfg);
KeyValueConfig scene_config(const SceneSpec& spec);
std::span<const std::string_view> scene_config_keys();

/// File names written by export_scene, in a fixed order.
std::span<const std::string_view> scene_file_names();
/// `extra` entries are appended to scene.cfg (e.g. the designated stress pixel).
void export_scene(const RenderedScene& scene, const SceneSpec& spec, std::uint64_t seed,
                  const std::filesystem::path& dir, const KeyValueConfig& extra = {});
struct LoadedScene {
  RenderedScene scene;
  SceneSpec spec;
  std::uint64_t seed = 0;
};
LoadedScene import_scene(const std::filesystem::path& dir);

}  // namespace fdlab
