#include "fdlab/cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <array>
#include <filesystem>
#include <optional>

#include "fdlab/config.hpp"
#include "fdlab/image_io.hpp"
#include "fdlab/landscape.hpp"
#include "fdlab/metrics.hpp"
#include "fdlab/optim.hpp"
#include "fdlab/rng.hpp"
#include "fdlab/scene.hpp"

namespace fdlab::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, 7> kRunKeys = {"lr", "beta1", "beta2", "eps", "steps", "decay_step",
                                                      "init_depth"};
constexpr double kDefaultInitDepth = 10.0;
constexpr std::string_view kDefaultAblation = "Lp,Lp+Mp,Lp+Mf,Lfd,Lfd+Mp,Lfd+Mf";

struct Artifact {
  fs::path path;
  std::string bytes;
};

// Everything a run settled on, gathered before the first byte hits disk.
struct RunSettings {
  LossConfig loss;
  MaskConfig mask;
  DepthActivation act;
  AdamConfig adam;
  double init_depth = kDefaultInitDepth;
  KeyValueConfig effective;
};

RunSettings read_settings(const std::string& config_path) {
  KeyValueConfig cfg;
  if (!config_path.empty()) cfg = KeyValueConfig::load(config_path);
  std::vector<std::string_view> known(loss_config_keys().begin(), loss_config_keys().end());
  known.insert(known.end(), kRunKeys.begin(), kRunKeys.end());
  cfg.require_known(known);

  RunSettings s{loss_config_from(cfg), mask_config_from(cfg), activation_from(cfg), {}, kDefaultInitDepth, {}};
  s.adam.lr = cfg.get_double("lr", s.adam.lr);
  s.adam.beta1 = cfg.get_double("beta1", s.adam.beta1);
  s.adam.beta2 = cfg.get_double("beta2", s.adam.beta2);
  s.adam.eps = cfg.get_double("eps", s.adam.eps);
  s.adam.steps = static_cast<int>(cfg.get_int("steps", s.adam.steps));
  s.adam.decay_step = static_cast<int>(cfg.get_int("decay_step", s.adam.decay_step));
  s.adam.validate();
  s.init_depth = cfg.get_double("init_depth", s.init_depth);
  if (!(s.init_depth >= s.act.min_depth() && s.init_depth <= s.act.max_depth())) {
    throw Error(ErrorKind::Spec, "init_depth must lie inside [min_depth, max_depth]");
  }

  store(s.effective, s.loss);
  store(s.effective, s.mask);
  store(s.effective, s.act);
  s.effective.set("lr", s.adam.lr);
  s.effective.set("beta1", s.adam.beta1);
  s.effective.set("beta2", s.adam.beta2);
  s.effective.set("eps", s.adam.eps);
  s.effective.set_int("steps", s.adam.steps);
  s.effective.set_int("decay_step", s.adam.decay_step);
  s.effective.set("init_depth", s.init_depth);
  return s;
}

std::string manifest_text(std::string_view command, std::uint64_t seed, const KeyValueConfig& cfg,
                          const std::vector<Artifact>& artifacts) {
  std::string out = "command=" + std::string(command) + "\nseed=" + std::to_string(seed) + "\n";
  for (const auto& [key, value] : cfg.entries()) out += "config." + key + "=" + value + "\n";
  for (const Artifact& a : artifacts) {
    out += "sha256 " + a.path.filename().string() + " " + sha256_hex(a.bytes) + "\n";
  }
  return out;
}

void commit(const std::vector<Artifact>& artifacts, const fs::path& manifest, const std::string& manifest_bytes) {
  for (const Artifact& a : artifacts) {
    if (a.path.has_parent_path()) fs::create_directories(a.path.parent_path());
    write_file_bytes(a.path, a.bytes);
  }
  write_file_bytes(manifest, manifest_bytes);
}

fs::path file_manifest(const fs::path& file) { return fs::path(file.string() + ".manifest"); }

std::pair<int, int> parse_pixel(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw Error(ErrorKind::Spec, "pixel must look like row,col");
  return {static_cast<int>(parse_int(std::string_view(text).substr(0, comma), "pixel row")),
          static_cast<int>(parse_int(std::string_view(text).substr(comma + 1), "pixel col"))};
}

DepthField constant_init(const RenderedScene& scene, const RunSettings& s) {
  return DepthField::constant(scene.target.height(), scene.target.width(), s.act.sigma(s.init_depth));
}

AblationRow run_one(const RenderedScene& scene, LossKind kind, const RunSettings& s, std::vector<double>* trace,
                    DepthField* final_field) {
  const Objective objective(scene, kind, s.loss, s.mask, s.act);
  OptimizeResult result = optimize_depth(objective, constant_init(scene, s), s.adam);
  AblationRow row{kind, evaluate(result.field, scene, s.act), result.trace.back()};
  if (trace != nullptr) *trace = std::move(result.trace);
  if (final_field != nullptr) *final_field = std::move(result.field);
  return row;
}

void gen_scene(const std::string& config, bool stress, std::uint64_t seed, const fs::path& out_dir) {
  SceneSpec spec;
  KeyValueConfig extra;
  if (stress) {
    const StressScene s = stress_scene();
    spec = s.spec;
    extra.set_int("stress_row", s.row);
    extra.set_int("stress_col", s.col);
  }
  if (!config.empty()) {
    KeyValueConfig cfg = scene_config(spec);
    cfg.merge(KeyValueConfig::load(config));
    spec = scene_spec_from(cfg);
  }
  const RenderedScene scene = render(spec, seed);
  export_scene(scene, spec, seed, out_dir, extra);

  std::vector<Artifact> artifacts;
  for (std::string_view name : scene_file_names()) {
    artifacts.push_back({out_dir / name, read_file_bytes(out_dir / name)});
  }
  KeyValueConfig cfg = scene_config(spec);
  cfg.merge(extra);
  write_file_bytes(out_dir / "manifest.txt", manifest_text("gen-scene", seed, cfg, artifacts));
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flow distillation depth lab: synthetic stereo scenes, loss landscapes and per-pixel depth fits"};
  app.name("fdlab");
  app.require_subcommand(1, 1);

  std::string config;
  std::string scene_dir;
  std::string out_path;
  std::uint64_t seed = 0;

  bool stress = false;
  auto* gen = app.add_subcommand("gen-scene", "render a synthetic stereo scene into a directory");
  gen->add_option("--config", config, "scene key=value file")->check(CLI::ExistingFile);
  gen->add_flag("--stress", stress, "start from the built-in periodic stress scene");
  gen->add_option("--seed", seed, "flow-noise seed");
  gen->add_option("--out", out_path, "output directory")->required();

  std::string pixel;
  std::string range_text = "1:80:0.05";
  auto* land = app.add_subcommand("landscape", "sweep single-pixel loss curves over depth");
  land->add_option("--scene", scene_dir, "scene directory")->required()->check(CLI::ExistingDirectory);
  land->add_option("--pixel", pixel, "row,col (defaults to the stress pixel)");
  land->add_option("--range", range_text, "lo:hi:step in metres");
  land->add_option("--config", config, "loss config")->check(CLI::ExistingFile);
  land->add_option("--out", out_path, "CSV file")->required();

  std::string loss_name = "Lfd+Mf";
  auto* opt = app.add_subcommand("optimize", "fit a per-pixel depth field with Adam");
  opt->add_option("--scene", scene_dir, "scene directory")->required()->check(CLI::ExistingDirectory);
  opt->add_option("--loss", loss_name, "Lp, Lp+Mp, Lp+Mf, Lfd, Lfd+Mp, Lfd+Mf, Ldr, Lfp or Ldr+Lfp");
  opt->add_option("--config", config, "loss and optimizer config")->check(CLI::ExistingFile);
  opt->add_option("--out", out_path, "output directory")->required();

  std::string losses{kDefaultAblation};
  auto* abl = app.add_subcommand("ablate", "run several losses from the same init and compare metrics");
  abl->add_option("--scene", scene_dir, "scene directory")->required()->check(CLI::ExistingDirectory);
  abl->add_option("--losses", losses, "comma-separated loss list");
  abl->add_option("--config", config, "loss and optimizer config")->check(CLI::ExistingFile);
  abl->add_option("--out", out_path, "CSV file")->required();

  std::string check_losses = "Lp,Ldr,Lfp,Lfd";
  int trials = 1000;
  double h_rel = 1e-5;
  auto* gc = app.add_subcommand("grad-check", "compare analytic gradients with central differences");
  gc->add_option("--scene", scene_dir, "scene directory")->required()->check(CLI::ExistingDirectory);
  gc->add_option("--losses", check_losses, "comma-separated loss list");
  gc->add_option("--trials", trials, "sites per loss")->check(CLI::PositiveNumber);
  gc->add_option("--h-rel", h_rel, "relative step on sigma")->check(CLI::PositiveNumber);
  gc->add_option("--seed", seed, "site sampling seed");
  gc->add_option("--config", config, "loss config")->check(CLI::ExistingFile);
  gc->add_option("--out", out_path, "CSV file")->required();

  std::string depth_path;
  std::string padding_text = "border";
  auto* warp = app.add_subcommand("warp", "inverse-warp the source view with a depth map");
  warp->add_option("--scene", scene_dir, "scene directory")->required()->check(CLI::ExistingDirectory);
  warp->add_option("--depth", depth_path, "depth PFM (defaults to ground truth)")->check(CLI::ExistingFile);
  warp->add_option("--padding", padding_text, "border or zeros");
  warp->add_option("--out", out_path, "output directory")->required();

  double cap = 80.0;
  auto* ev = app.add_subcommand("eval", "depth metrics against the scene ground truth");
  ev->add_option("--scene", scene_dir, "scene directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--depth", depth_path, "depth PFM")->required()->check(CLI::ExistingFile);
  ev->add_option("--cap", cap, "maximum evaluated depth in metres");
  ev->add_option("--out", out_path, "CSV file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    const fs::path out_file(out_path);
    if (*gen) {
      gen_scene(config, stress, seed, out_file);
    } else if (*land) {
      const RunSettings s = read_settings(config);
      const LoadedScene loaded = import_scene(scene_dir);
      const KeyValueConfig scene_cfg = KeyValueConfig::load(fs::path(scene_dir) / "scene.cfg");
      std::pair<int, int> px;
      if (!pixel.empty()) {
        px = parse_pixel(pixel);
      } else if (scene_cfg.has("stress_row") && scene_cfg.has("stress_col")) {
        px = {static_cast<int>(scene_cfg.get_int("stress_row", 0)),
              static_cast<int>(scene_cfg.get_int("stress_col", 0))};
      } else {
        throw Error(ErrorKind::Spec, "--pixel is required for scenes without a designated pixel");
      }
      const DepthRange range = parse_depth_range(range_text);
      const LandscapeCurve curve = sweep_landscape(loaded.scene, px.first, px.second, range, s.loss);
      KeyValueConfig cfg = s.effective;
      cfg.set("pixel", std::to_string(px.first) + "," + std::to_string(px.second));
      cfg.set("range", range_text);
      const std::vector<Artifact> artifacts{{out_file, landscape_csv(curve)}};
      commit(artifacts, file_manifest(out_file), manifest_text("landscape", loaded.seed, cfg, artifacts));
      out << "L_p minima " << count_local_minima(curve.l_p) << ", L_fd minima " << count_local_minima(curve.l_fd)
          << "\n";
    } else if (*opt) {
      const RunSettings s = read_settings(config);
      const LossKind kind = parse_loss_kind(loss_name);
      const LoadedScene loaded = import_scene(scene_dir);
      std::vector<double> trace;
      DepthField field = DepthField::constant(1, 1, 0.0);
      const AblationRow row = run_one(loaded.scene, kind, s, &trace, &field);
      KeyValueConfig cfg = s.effective;
      cfg.set("loss", to_string(kind));
      const std::vector<Artifact> artifacts{{out_file / "trace.csv", trace_csv(trace)},
                                            {out_file / "eval.csv", eval_csv(row.report)},
                                            {out_file / "depth.pfm", encode_pfm(field.depth(s.act).raster())}};
      commit(artifacts, out_file / "manifest.txt", manifest_text("optimize", loaded.seed, cfg, artifacts));
      out << to_string(kind) << " abs_rel " << format_double(row.report.abs_rel) << "\n";
    } else if (*abl) {
      const RunSettings s = read_settings(config);
      const std::vector<LossKind> kinds = parse_loss_list(losses);
      const LoadedScene loaded = import_scene(scene_dir);
      std::vector<AblationRow> rows;
      for (LossKind kind : kinds) rows.push_back(run_one(loaded.scene, kind, s, nullptr, nullptr));
      KeyValueConfig cfg = s.effective;
      cfg.set("losses", losses);
      const std::vector<Artifact> artifacts{{out_file, ablation_csv(rows)}};
      commit(artifacts, file_manifest(out_file), manifest_text("ablate", loaded.seed, cfg, artifacts));
      for (const AblationRow& row : rows) out << to_string(row.kind) << " abs_rel " << format_double(row.report.abs_rel) << "\n";
    } else if (*gc) {
      const RunSettings s = read_settings(config);
      const std::vector<LossKind> kinds = parse_loss_list(check_losses);
      const LoadedScene loaded = import_scene(scene_dir);
      // Check around a jittered ground truth so every term has a slope.
      Rng rng(seed);
      Raster depth = loaded.scene.depth_gt.raster();
      for (double& d : depth.values()) {
        d = std::clamp(d * rng.uniform(0.7, 1.3), s.act.min_depth(), s.act.max_depth());
      }
      const DepthField field = DepthField::from_depth(DepthMap(std::move(depth)), s.act);
      std::string csv = "loss,sites,max_rel_error\n";
      for (LossKind kind : kinds) {
        const Objective objective(loaded.scene, kind, s.loss, s.mask, s.act);
        const GradCheckResult r = grad_check(objective, field, trials, h_rel, seed);
        csv += std::string(to_string(kind)) + ',' + std::to_string(r.sites) + ',' + format_double(r.max_rel_error) + '\n';
        out << to_string(kind) << " sites " << r.sites << " max_rel_error " << format_double(r.max_rel_error) << "\n";
      }
      KeyValueConfig cfg = s.effective;
      cfg.set("losses", check_losses);
      cfg.set_int("trials", trials);
      cfg.set("h_rel", h_rel);
      const std::vector<Artifact> artifacts{{out_file, csv}};
      commit(artifacts, file_manifest(out_file), manifest_text("grad-check", seed, cfg, artifacts));
    } else if (*warp) {
      const PaddingMode padding = parse_padding(padding_text);
      const LoadedScene loaded = import_scene(scene_dir);
      const DepthMap depth = depth_path.empty() ? loaded.scene.depth_gt : DepthMap(read_pfm(depth_path));
      const WarpResult warped = inverse_warp(loaded.scene.source, depth, loaded.scene.rig, padding);
      KeyValueConfig cfg;
      cfg.set("padding", to_string(padding));
      cfg.set("depth", depth_path.empty() ? std::string("depth_gt.pfm") : depth_path);
      const std::vector<Artifact> artifacts{{out_file / "warped.pfm", encode_pfm(warped.image)},
                                            {out_file / "warped.pgm", encode_pgm(warped.image)},
                                            {out_file / "in_bounds.pfm", encode_pfm(warped.in_bounds)}};
      commit(artifacts, out_file / "manifest.txt", manifest_text("warp", loaded.seed, cfg, artifacts));
    } else if (*ev) {
      const LoadedScene loaded = import_scene(scene_dir);
      const DepthMap depth(read_pfm(depth_path));
      const EvalReport report = evaluate(depth, loaded.scene, cap);
      KeyValueConfig cfg;
      cfg.set("cap", cap);
      cfg.set("depth", depth_path);
      const std::vector<Artifact> artifacts{{out_file, eval_csv(report)}};
      commit(artifacts, file_manifest(out_file), manifest_text("eval", loaded.seed, cfg, artifacts));
      out << "abs_rel " << format_double(report.abs_rel) << "\n";
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace fdlab::cli
