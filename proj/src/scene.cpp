#include "fdlab/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "fdlab/image_io.hpp"
#include "fdlab/rng.hpp"
#include "fdlab/warping.hpp"

namespace fdlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Each layer sees the texture shifted by this many px so layer edges are visible.
constexpr double kLayerTextureOffset = 23.7;
constexpr int kNoiseComponents = 8;
constexpr double kNoiseAmplitude = 0.4;
constexpr std::array<double, 3> kStripeMeans = {0.5, 0.45, 0.55};

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct Wave {
  double fx, fy, phase, amplitude;
};

class Texture {
 public:
  explicit Texture(const SceneSpec& spec) : spec_(spec) {
    if (const auto* noise = std::get_if<BandlimitedNoise>(&spec.texture_model)) {
      Rng rng(noise->seed);
      for (auto& waves : noise_) {
        double total = 0.0;
        for (Wave& w : waves) {
          w.fx = rng.uniform(-noise->max_freq, noise->max_freq);
          w.fy = rng.uniform(-noise->max_freq, noise->max_freq);
          w.phase = rng.uniform(0.0, kTwoPi);
          w.amplitude = rng.uniform(0.5, 1.0);
          total += w.amplitude;
        }
        for (Wave& w : waves) w.amplitude *= kNoiseAmplitude / total;
      }
    }
  }

  double value(int layer, int row, double u, int channel) const {
    u += kLayerTextureOffset * layer;
    return std::visit(
        Overloaded{
            [&](const SmoothRamp&) {
              const double span = 2.0 * spec_.width;
              const double t = std::clamp((u + 0.5 * spec_.width) / span, 0.0, 1.0);
              const double v = std::clamp(static_cast<double>(row) / std::max(spec_.height - 1, 1), 0.0, 1.0);
              switch (channel) {
                case 0: return 0.1 + 0.8 * t;
                case 1: return 0.85 - 0.7 * t;
                default: return 0.3 + 0.2 * t + 0.2 * v;
              }
            },
            [&](const BandlimitedNoise&) {
              double acc = 0.5;
              for (const Wave& w : noise_[channel]) {
                acc += w.amplitude * std::sin(kTwoPi * (w.fx * u + w.fy * row) + w.phase);
              }
              return acc;
            },
            [&](const PeriodicStripes& s) {
              return kStripeMeans[channel] + s.amplitude * std::sin(kTwoPi * (u + s.phase) / s.period);
            },
        },
        spec_.texture_model);
  }

  // max over channels of max_u |d^2 T / du^2|
  double max_second_derivative() const {
    return std::visit(Overloaded{
                          [](const SmoothRamp&) { return 0.0; },
                          [&](const BandlimitedNoise&) {
                            double worst = 0.0;
                            for (const auto& waves : noise_) {
                              double acc = 0.0;
                              for (const Wave& w : waves) acc += w.amplitude * (kTwoPi * w.fx) * (kTwoPi * w.fx);
                              worst = std::max(worst, acc);
                            }
                            return worst;
                          },
                          [](const PeriodicStripes& s) {
                            const double omega = kTwoPi / s.period;
                            return s.amplitude * omega * omega;
                          },
                      },
                      spec_.texture_model);
  }

 private:
  const SceneSpec& spec_;
  std::array<std::array<Wave, kNoiseComponents>, 3> noise_{};
};

// Layer 0 is the plane / background wall; layer k >= 1 is box k-1.
double layer_depth(const SceneSpec& spec, int layer, int row) {
  return std::visit(Overloaded{
                        [](const ConstantPlane& p) { return p.depth; },
                        [row](const SlantedPlane& p) { return p.base_depth + p.gradient * row; },
                        [layer](const LayeredBoxes& b) {
                          return layer == 0 ? b.background_depth : b.boxes[layer - 1].depth;
                        },
                    },
                    spec.depth_model);
}

int layer_count(const SceneSpec& spec) {
  if (const auto* boxes = std::get_if<LayeredBoxes>(&spec.depth_model)) return 1 + static_cast<int>(boxes->boxes.size());
  return 1;
}

double disparity(const SceneSpec& spec, int layer, int row) {
  return spec.rig.focal_baseline() / layer_depth(spec, layer, row);
}

bool layer_covers_target(const SceneSpec& spec, int layer, int row, double col) {
  if (layer == 0) return true;
  const DepthBox& box = std::get<LayeredBoxes>(spec.depth_model).boxes[layer - 1];
  return row >= box.row0 && row < box.row1 && col >= box.col0 && col < box.col1;
}

bool layer_covers_source(const SceneSpec& spec, int layer, int row, double x) {
  return layer_covers_target(spec, layer, row, x + disparity(spec, layer, row));
}

int visible_target_layer(const SceneSpec& spec, int row, int col) {
  int best = 0;
  for (int k = 1; k < layer_count(spec); ++k) {
    if (layer_covers_target(spec, k, row, col) && disparity(spec, k, row) > disparity(spec, best, row)) best = k;
  }
  return best;
}

int visible_source_layer(const SceneSpec& spec, int row, double x) {
  int best = 0;
  for (int k = 1; k < layer_count(spec); ++k) {
    if (layer_covers_source(spec, k, row, x) && disparity(spec, k, row) > disparity(spec, best, row)) best = k;
  }
  return best;
}

void check_depth(double d, const char* what) {
  if (!(d >= 0.1 && d <= 200.0)) {
    throw Error(ErrorKind::Spec, std::string(what) + " must lie in [0.1, 200] m, got " + format_double(d));
  }
}

std::string depth_model_name(const DepthModel& m) {
  return std::visit(Overloaded{
                        [](const ConstantPlane&) { return std::string("constant"); },
                        [](const SlantedPlane&) { return std::string("slanted"); },
                        [](const LayeredBoxes&) { return std::string("boxes"); },
                    },
                    m);
}

std::vector<DepthBox> parse_boxes(std::string_view text) {
  std::vector<DepthBox> boxes;
  while (!text.empty()) {
    const auto semi = text.find(';');
    std::string_view item = text.substr(0, semi);
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
    if (item.find_first_not_of(" \t") == std::string_view::npos) continue;
    std::array<std::string_view, 5> fields;
    std::size_t n = 0;
    while (n < fields.size()) {
      const auto comma = item.find(',');
      fields[n++] = item.substr(0, comma);
      if (comma == std::string_view::npos) break;
      item = item.substr(comma + 1);
    }
    if (n != 5 || item.find(',') != std::string_view::npos) {
      throw Error(ErrorKind::Spec, "boxes: expected row0,col0,row1,col1,depth per entry");
    }
    boxes.push_back(DepthBox{static_cast<int>(parse_int(fields[0], "box row0")),
                             static_cast<int>(parse_int(fields[1], "box col0")),
                             static_cast<int>(parse_int(fields[2], "box row1")),
                             static_cast<int>(parse_int(fields[3], "box col1")), parse_double(fields[4], "box depth")});
  }
  return boxes;
}

std::string format_boxes(const std::vector<DepthBox>& boxes) {
  std::string out;
  for (const DepthBox& b : boxes) {
    if (!out.empty()) out += ';';
    out += std::to_string(b.row0) + "," + std::to_string(b.col0) + "," + std::to_string(b.row1) + "," +
           std::to_string(b.col1) + "," + format_double(b.depth);
  }
  return out;
}

constexpr std::array<std::string_view, 22> kSceneKeys = {
    "height",     "width",      "focal_x",    "baseline",  "depth_model",    "depth",
    "base_depth", "depth_gradient", "background_depth", "boxes", "texture", "texture_seed",
    "max_freq",   "period",     "phase",      "amplitude", "gain",           "bias",
    "flow_noise_sigma", "seed", "stress_row", "stress_col",
};

constexpr std::array<std::string_view, 8> kSceneFiles = {
    "target.pfm", "source.pfm", "depth_gt.pfm", "prior_flow.pfm", "occlusion.pfm",
    "target.pgm", "source.pgm", "scene.cfg",
};

}  // namespace

void SceneSpec::validate() const {
  if (height < 1 || width < 2) throw Error(ErrorKind::Spec, "scene needs height >= 1 and width >= 2");
  std::visit(Overloaded{
                 [](const ConstantPlane& p) { check_depth(p.depth, "plane depth"); },
                 [this](const SlantedPlane& p) {
                   check_depth(p.base_depth, "slanted plane depth");
                   check_depth(p.base_depth + p.gradient * (height - 1), "slanted plane depth");
                 },
                 [this](const LayeredBoxes& b) {
                   check_depth(b.background_depth, "background depth");
                   for (const DepthBox& box : b.boxes) {
                     check_depth(box.depth, "box depth");
                     if (!(box.depth < b.background_depth)) {
                       throw Error(ErrorKind::Spec, "boxes must lie in front of the background");
                     }
                     if (box.row0 < 0 || box.col0 < 0 || box.row0 >= box.row1 || box.col0 >= box.col1 ||
                         box.row1 > height || box.col1 > width) {
                       throw Error(ErrorKind::Spec, "box rectangle outside the frame or empty");
                     }
                   }
                 },
             },
             depth_model);
  std::visit(Overloaded{
                 [](const SmoothRamp&) {},
                 [](const BandlimitedNoise& n) {
                   if (!(n.max_freq > 0.0 && n.max_freq <= 0.5)) {
                     throw Error(ErrorKind::Spec, "max_freq must lie in (0, 0.5] cycles/px");
                   }
                 },
                 [](const PeriodicStripes& s) {
                   if (!(s.period >= 2.0) || !std::isfinite(s.period)) throw Error(ErrorKind::Spec, "period must be >= 2 px");
                   if (!(s.amplitude >= 0.0 && s.amplitude <= 0.4) || !std::isfinite(s.phase)) {
                     throw Error(ErrorKind::Spec, "stripe amplitude must lie in [0, 0.4]");
                   }
                 },
             },
             texture_model);
  if (!(illumination_gain >= 0.5 && illumination_gain <= 1.5)) {
    throw Error(ErrorKind::Spec, "illumination gain must lie in [0.5, 1.5]");
  }
  if (!std::isfinite(illumination_bias) || std::fabs(illumination_bias) > 1.0) {
    throw Error(ErrorKind::Spec, "illumination bias must lie in [-1, 1]");
  }
  if (!(flow_noise_sigma >= 0.0) || !std::isfinite(flow_noise_sigma)) {
    throw Error(ErrorKind::Spec, "flow noise sigma must be non-negative");
  }
}

double target_surface_depth(const SceneSpec& spec, int row, int col) {
  return layer_depth(spec, visible_target_layer(spec, row, col), row);
}

double source_surface_depth(const SceneSpec& spec, int row, double x) {
  return layer_depth(spec, visible_source_layer(spec, row, x), row);
}

double texture_value(const SceneSpec& spec, int layer, int row, double u, int channel) {
  return Texture(spec).value(layer, row, u, channel);
}

double interpolation_bound(const SceneSpec& spec) {
  return spec.illumination_gain * Texture(spec).max_second_derivative() / 8.0 + 1e-12;
}

RenderedScene render(const SceneSpec& spec, std::uint64_t rng_seed) {
  spec.validate();
  const Texture texture(spec);
  const int h = spec.height;
  const int w = spec.width;
  Raster target(h, w, 3);
  Raster source(h, w, 3);
  Raster depth(h, w, 1);
  Raster occlusion(h, w, 1);

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int layer = visible_target_layer(spec, r, c);
      depth(r, c) = layer_depth(spec, layer, r);
      for (int ch = 0; ch < 3; ++ch) target(r, c, ch) = texture.value(layer, r, c, ch);

      const double x = c - disparity(spec, layer, r);
      for (int k = 1; k < layer_count(spec); ++k) {
        if (disparity(spec, k, r) > disparity(spec, layer, r) && layer_covers_source(spec, k, r, x)) {
          occlusion(r, c) = 1.0;
          break;
        }
      }

      const int seen = visible_source_layer(spec, r, c);
      const double u = c + disparity(spec, seen, r);
      for (int ch = 0; ch < 3; ++ch) {
        const double lit = spec.illumination_gain * texture.value(seen, r, u, ch) + spec.illumination_bias;
        source(r, c, ch) = std::clamp(lit, 0.0, 1.0);
      }
    }
  }

  DepthMap depth_gt(std::move(depth));
  Raster flow = flow_from_depth(depth_gt, spec.rig).raster();
  if (spec.flow_noise_sigma > 0.0) {
    Rng rng(rng_seed);
    for (double& f : flow.values()) {
      // Truncated Gaussian: redraw until the perturbed flow keeps its sign.
      for (int attempt = 0; attempt < 1000; ++attempt) {
        const double candidate = f + rng.normal(0.0, spec.flow_noise_sigma);
        if (candidate < -kFlowEpsilon) {
          f = candidate;
          break;
        }
      }
    }
  }
  return RenderedScene{std::move(target), std::move(source), std::move(depth_gt), FlowField(std::move(flow)),
                       std::move(occlusion), spec.rig};
}

StressScene stress_scene() {
  StressScene s;
  s.spec.height = 64;
  s.spec.width = 192;
  s.spec.rig = CameraRig(100.0, 0.12);
  s.spec.depth_model = LayeredBoxes{150.0, {DepthBox{8, 56, 56, 184, 3.0}}};
  s.spec.texture_model = PeriodicStripes{5.0, 0.3, 0.02};
  s.spec.illumination_gain = 1.1;
  s.spec.illumination_bias = 0.0;
  s.spec.flow_noise_sigma = 0.0;
  s.row = 32;
  s.col = 120;
  return s;
}

Raster evaluation_mask(const RenderedScene& scene, double cap) {
  const Raster& depth = scene.depth_gt.raster();
  Raster valid(depth.height(), depth.width(), 1);
  const double last = depth.width() - 1;
  for (int r = 0; r < depth.height(); ++r) {
    for (int c = 0; c < depth.width(); ++c) {
      const double x = c - scene.rig.focal_baseline() / depth(r, c);
      const bool inside = x >= 0.0 && x <= last;
      valid(r, c) = inside && scene.occlusion(r, c) == 0.0 && depth(r, c) <= cap ? 1.0 : 0.0;
    }
  }
  return valid;
}

FlowField load_prior_flow(const std::filesystem::path& path) {
  Raster raster = read_pfm(path);
  if (raster.channels() != 1) throw Error(ErrorKind::Format, "prior flow must be a 1-channel PFM ('Pf')");
  return FlowField(std::move(raster));
}

SceneSpec scene_spec_from(const KeyValueConfig& cfg) {
  cfg.require_known(scene_config_keys());
  SceneSpec spec;
  spec.height = static_cast<int>(cfg.get_int("height", spec.height));
  spec.width = static_cast<int>(cfg.get_int("width", spec.width));
  spec.rig = CameraRig(cfg.get_double("focal_x", spec.rig.focal_x()), cfg.get_double("baseline", spec.rig.baseline()));

  const std::string model = cfg.get_string("depth_model", "constant");
  if (model == "constant") {
    spec.depth_model = ConstantPlane{cfg.get_double("depth", ConstantPlane{}.depth)};
  } else if (model == "slanted") {
    spec.depth_model = SlantedPlane{cfg.get_double("base_depth", SlantedPlane{}.base_depth),
                                    cfg.get_double("depth_gradient", SlantedPlane{}.gradient)};
  } else if (model == "boxes") {
    spec.depth_model = LayeredBoxes{cfg.get_double("background_depth", LayeredBoxes{}.background_depth),
                                    parse_boxes(cfg.get_string("boxes", ""))};
  } else {
    throw Error(ErrorKind::Spec, "depth_model must be constant, slanted or boxes");
  }

  const std::string texture = cfg.get_string("texture", "ramp");
  if (texture == "ramp") {
    spec.texture_model = SmoothRamp{};
  } else if (texture == "noise") {
    spec.texture_model = BandlimitedNoise{static_cast<std::uint64_t>(cfg.get_int("texture_seed", 1)),
                                          cfg.get_double("max_freq", BandlimitedNoise{}.max_freq)};
  } else if (texture == "stripes") {
    const PeriodicStripes d;
    spec.texture_model = PeriodicStripes{cfg.get_double("period", d.period), cfg.get_double("phase", d.phase),
                                         cfg.get_double("amplitude", d.amplitude)};
  } else {
    throw Error(ErrorKind::Spec, "texture must be ramp, noise or stripes");
  }
  spec.illumination_gain = cfg.get_double("gain", 1.0);
  spec.illumination_bias = cfg.get_double("bias", 0.0);
  spec.flow_noise_sigma = cfg.get_double("flow_noise_sigma", 0.0);
  spec.validate();
  return spec;
}

KeyValueConfig scene_config(const SceneSpec& spec) {
  KeyValueConfig cfg;
  cfg.set_int("height", spec.height);
  cfg.set_int("width", spec.width);
  cfg.set("focal_x", spec.rig.focal_x());
  cfg.set("baseline", spec.rig.baseline());
  cfg.set("depth_model", depth_model_name(spec.depth_model));
  std::visit(Overloaded{
                 [&](const ConstantPlane& p) { cfg.set("depth", p.depth); },
                 [&](const SlantedPlane& p) {
                   cfg.set("base_depth", p.base_depth);
                   cfg.set("depth_gradient", p.gradient);
                 },
                 [&](const LayeredBoxes& b) {
                   cfg.set("background_depth", b.background_depth);
                   cfg.set("boxes", format_boxes(b.boxes));
                 },
             },
             spec.depth_model);
  std::visit(Overloaded{
                 [&](const SmoothRamp&) { cfg.set("texture", "ramp"); },
                 [&](const BandlimitedNoise& n) {
                   cfg.set("texture", "noise");
                   cfg.set_int("texture_seed", static_cast<long long>(n.seed));
                   cfg.set("max_freq", n.max_freq);
                 },
                 [&](const PeriodicStripes& s) {
                   cfg.set("texture", "stripes");
                   cfg.set("period", s.period);
                   cfg.set("phase", s.phase);
                   cfg.set("amplitude", s.amplitude);
                 },
             },
             spec.texture_model);
  cfg.set("gain", spec.illumination_gain);
  cfg.set("bias", spec.illumination_bias);
  cfg.set("flow_noise_sigma", spec.flow_noise_sigma);
  return cfg;
}

std::span<const std::string_view> scene_config_keys() { return kSceneKeys; }
std::span<const std::string_view> scene_file_names() { return kSceneFiles; }

void export_scene(const RenderedScene& scene, const SceneSpec& spec, std::uint64_t seed,
                  const std::filesystem::path& dir, const KeyValueConfig& extra) {
  std::filesystem::create_directories(dir);
  KeyValueConfig cfg = scene_config(spec);
  cfg.merge(extra);
  cfg.set_int("seed", static_cast<long long>(seed));
  write_pfm(dir / "target.pfm", scene.target);
  write_pfm(dir / "source.pfm", scene.source);
  write_pfm(dir / "depth_gt.pfm", scene.depth_gt.raster());
  write_pfm(dir / "prior_flow.pfm", scene.prior_flow.raster());
  write_pfm(dir / "occlusion.pfm", scene.occlusion);
  write_pgm(dir / "target.pgm", scene.target);
  write_pgm(dir / "source.pgm", scene.source);
  write_file_bytes(dir / "scene.cfg", cfg.serialize());
}

LoadedScene import_scene(const std::filesystem::path& dir) {
  KeyValueConfig cfg = KeyValueConfig::load(dir / "scene.cfg");
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const SceneSpec spec = scene_spec_from(cfg);
  Raster target = read_pfm(dir / "target.pfm");
  Raster source = read_pfm(dir / "source.pfm");
  DepthMap depth(read_pfm(dir / "depth_gt.pfm"));
  FlowField flow = load_prior_flow(dir / "prior_flow.pfm");
  Raster occlusion = read_pfm(dir / "occlusion.pfm");
  require_same_shape(target, source, "import_scene");
  require_same_extent(target, depth.raster(), "import_scene");
  require_same_extent(target, flow.raster(), "import_scene");
  require_same_shape(depth.raster(), occlusion, "import_scene");
  if (target.channels() != 3) throw Error(ErrorKind::Format, "scene images must have 3 channels");
  if (target.height() != spec.height || target.width() != spec.width) {
    throw Error(ErrorKind::Format, "scene.cfg dimensions do not match the stored rasters");
  }
  return LoadedScene{RenderedScene{std::move(target), std::move(source), std::move(depth), std::move(flow),
                                   std::move(occlusion), spec.rig},
                     spec, seed};
}

}  // namespace fdlab
