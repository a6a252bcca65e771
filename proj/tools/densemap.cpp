// densemap command-line driver: run, match, eval, synth.
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 internal error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "densemap/config.hpp"
#include "densemap/error.hpp"
#include "densemap/evaluation.hpp"
#include "densemap/image_io.hpp"
#include "densemap/log.hpp"
#include "densemap/matcher.hpp"
#include "densemap/pipeline.hpp"
#include "densemap/ply.hpp"
#include "densemap/synth.hpp"

namespace dm = densemap;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct RunArgs {
  std::string left, right, traj, config, out;
  bool drop_when_busy = false;
  bool depth_gated = false;
  int threads = 0;
};

struct MatchArgs {
  std::string left, right, out, config;
  int threads = 0;
};

struct EvalArgs {
  std::string map, reference, out;
  std::string disparity, truth;
  double cutoff = 5.0;
};

struct SynthArgs {
  std::string scene = "plane";
  std::string path = "static";
  std::string out;
  int frames = 1;
  std::uint64_t seed = 1;
  double depth = 180.0;
  double disparity = 0.0;
  double tilt = 0.0;
  double radius = 50.0;
  std::vector<double> step{0.0, 0.0, 0.0};
  double arc_step = 0.0;
  double pivot = 0.0;
  double focal = 450.0;
  double baseline = 5.0;
  int width = 640;
  int height = 480;
  int octaves = 5;
  double contrast = 0.4;
  double wavelength = 0.0;
};

int cmd_run(const RunArgs& a) {
  dm::SessionConfig cfg = dm::load_session_config(a.config);
  cfg.left_glob = a.left;
  cfg.right_glob = a.right;
  cfg.trajectory = a.traj;
  cfg.output_dir = a.out;
  if (a.drop_when_busy) cfg.drop_when_busy = true;
  if (a.depth_gated) cfg.culling.depth_gated = true;
  if (a.threads > 0) cfg.matcher.num_threads = a.threads;
  const auto result = dm::run_session(cfg);
  const auto& t = result.timing;
  std::printf("frames %zu, keyframes %zu processed (%zu dropped, %zu skipped), %zu points, %.2f Hz\n",
              t.frames_processed, t.keyframes_processed(), t.keyframes_dropped, t.keyframes_skipped,
              result.map.size(), t.hz());
  std::printf("wrote %s\n", (fs::path(a.out) / "map.ply").c_str());
  return kOk;
}

int cmd_match(const MatchArgs& a) {
  dm::MatcherConfig cfg = a.config.empty() ? dm::MatcherConfig{} : dm::load_matcher_config(a.config);
  if (a.threads > 0) cfg.num_threads = a.threads;
  dm::RectifiedStereoPair pair{dm::read_gray(a.left), dm::read_gray(a.right), std::nullopt};
  if (!pair.left.same_shape(pair.right))
    throw dm::DataError("left and right images differ in size");
  const auto field = dm::match(pair, cfg);
  dm::write_disparity(a.out, field);
  std::printf("%d x %d, %zu valid pixels (%.1f%%), wrote %s\n", field.width(), field.height(), field.valid_count(),
              100.0 * static_cast<double>(field.valid_count()) / (field.width() * field.height()), a.out.c_str());
  return kOk;
}

dm::Reference load_reference(const std::string& spec) {
  for (const char* prefix : {"plane:", "sphere:", "cylinder:"})
    if (spec.rfind(prefix, 0) == 0) return dm::parse_surface(spec);
  const fs::path path(spec);
  if (!fs::exists(path)) throw dm::IoError("reference not found: " + spec);
  if (path.extension() == ".ply") {
    std::vector<dm::Vec3> cloud;
    for (const auto& p : dm::read_ply(path)) cloud.push_back(p.position);
    if (cloud.empty()) throw dm::DataError("reference cloud is empty: " + spec);
    return dm::make_cloud_reference(std::move(cloud));
  }
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') return dm::parse_surface(line);
  throw dm::DataError("no surface description in " + spec);
}

int cmd_eval(const EvalArgs& a) {
  nlohmann::ordered_json report;
  if (!a.map.empty()) {
    if (a.reference.empty()) throw dm::InvalidArgument("eval: --map needs --reference");
    const auto map = dm::read_ply(a.map);
    if (map.empty()) throw dm::DataError("map is empty: " + a.map);
    const auto r = dm::map_to_surface_error(map, load_reference(a.reference), a.cutoff);
    report["mean_mm"] = r.mean_mm;
    report["median_mm"] = r.median_mm;
    report["inlier_count"] = r.inlier_count;
    report["outlier_count"] = r.outlier_count;
    report["invalid_count"] = r.invalid_count;
    report["cutoff_mm"] = r.cutoff_mm;
    report["error_set"] = r.error_set;
    std::printf("map: %zu points, mean %.4f mm, median %.4f mm, %zu outliers, %zu invalid\n", map.size(), r.mean_mm,
                r.median_mm, r.outlier_count, r.invalid_count);
  }
  if (!a.disparity.empty()) {
    if (a.truth.empty()) throw dm::InvalidArgument("eval: --disparity needs --truth");
    const auto est = dm::read_disparity(a.disparity);
    dm::DisparityField truth;
    // Ground truth may come without sidecars; then every pixel is valid.
    const fs::path truth_path(a.truth);
    if (fs::exists(truth_path.parent_path() / (truth_path.stem().string() + "_mask.pgm"))) {
      truth = dm::read_disparity(truth_path);
    } else {
      truth.disparity = dm::read_pfm(truth_path);
      truth.confidence = dm::Image<double>(truth.disparity.width(), truth.disparity.height(), 1.0);
      truth.valid_mask = dm::Image<std::uint8_t>(truth.disparity.width(), truth.disparity.height(), 1);
    }
    const auto s = dm::disparity_epe(est, truth);
    report["disparity"] = {{"mean_px", s.mean},
                           {"median_px", s.median},
                           {"fraction_within_half_px", s.fraction_within_half_px},
                           {"compared", s.compared}};
    std::printf("disparity: %zu pixels, EPE mean %.4f px, median %.4f px, %.1f%% within 0.5 px\n", s.compared, s.mean,
                s.median, 100.0 * s.fraction_within_half_px);
  }
  if (a.map.empty() && a.disparity.empty()) throw dm::InvalidArgument("eval: give --map and/or --disparity");
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    out << report.dump(2) << '\n';
    if (!out) throw dm::IoError("cannot write " + a.out);
  }
  return kOk;
}

int cmd_synth(const SynthArgs& a) {
  dm::SceneSpec spec;
  spec.rig = dm::StereoRig::make(a.focal, a.baseline, a.width, a.height);
  spec.geometry = dm::parse_geometry(a.scene);
  spec.depth_mm = a.disparity > 0.0 ? a.focal * a.baseline / a.disparity : a.depth;
  spec.tilt_deg = a.tilt;
  spec.radius_mm = a.radius;
  spec.texture.seed = a.seed;
  spec.texture.octaves = a.octaves;
  spec.texture.contrast = a.contrast;
  spec.texture.finest_wavelength = a.wavelength;
  spec.path.kind = dm::parse_path(a.path);
  spec.path.frames = a.frames;
  if (a.step.size() != 3) throw dm::InvalidArgument("synth: --step takes x,y,z");
  spec.path.step_mm = dm::Vec3(a.step[0], a.step[1], a.step[2]);
  spec.path.arc_step_deg = a.arc_step;
  spec.path.arc_pivot_depth_mm = a.pivot > 0.0 ? a.pivot : spec.depth_mm;
  dm::write_sequence(spec, a.out);
  std::printf("wrote %d frame(s) of '%s' to %s\n", a.frames, dm::geometry_name(spec.geometry).c_str(), a.out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense stereo mapping: probabilistic inverse-search matching and keyframe mosaicking"};
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Map a rectified stereo sequence with a known trajectory");
  run_cmd->add_option("--left", run.left, "Glob for left images (PGM/PPM)")->required();
  run_cmd->add_option("--right", run.right, "Glob for right images")->required();
  run_cmd->add_option("--traj", run.traj, "TUM trajectory (camera-to-world, mm)")->required();
  run_cmd->add_option("--config", run.config, "key=value session config")->required();
  run_cmd->add_option("--out", run.out, "Output directory")->required();
  run_cmd->add_flag("--drop-when-busy", run.drop_when_busy, "Drop keyframes while the mapping worker is busy");
  run_cmd->add_flag("--depth-gated-culling", run.depth_gated, "Only cull points agreeing with the new depth");
  run_cmd->add_option("--threads", run.threads, "Matcher threads (overrides config)")->check(CLI::NonNegativeNumber);

  MatchArgs m;
  auto* match_cmd = app.add_subcommand("match", "Disparity for a single rectified pair");
  match_cmd->add_option("--left", m.left)->required();
  match_cmd->add_option("--right", m.right)->required();
  match_cmd->add_option("--out", m.out, "Disparity PFM; _conf.pfm and _mask.pgm written alongside")->required();
  match_cmd->add_option("--config", m.config, "key=value matcher config");
  match_cmd->add_option("--threads", m.threads)->check(CLI::NonNegativeNumber);

  EvalArgs e;
  auto* eval_cmd = app.add_subcommand("eval", "Map-to-surface error and/or disparity endpoint error");
  eval_cmd->add_option("--map", e.map, "Map PLY");
  eval_cmd->add_option("--reference", e.reference,
                       "Reference: PLY cloud, analytic spec (plane:nx,ny,nz,c | sphere:cx,cy,cz,r | "
                       "cylinder:px,py,pz,ax,ay,az,r) or a file holding one");
  eval_cmd->add_option("--cutoff", e.cutoff, "Outlier cutoff in mm")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--disparity", e.disparity, "Estimated disparity PFM");
  eval_cmd->add_option("--truth", e.truth, "Ground-truth disparity PFM");
  eval_cmd->add_option("--out", e.out, "JSON report");

  SynthArgs s;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic stereo sequence with ground truth");
  synth_cmd->add_option("--scene", s.scene, "plane | slanted | sphere | tube");
  synth_cmd->add_option("--frames", s.frames)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", s.seed);
  synth_cmd->add_option("--out", s.out)->required();
  synth_cmd->add_option("--depth", s.depth, "Surface depth on the principal ray, mm");
  synth_cmd->add_option("--disparity", s.disparity, "Set depth from a target disparity, px");
  synth_cmd->add_option("--tilt", s.tilt, "Slanted plane yaw, degrees");
  synth_cmd->add_option("--radius", s.radius, "Sphere or tube radius, mm");
  synth_cmd->add_option("--path", s.path, "static | dolly | arc");
  synth_cmd->add_option("--step", s.step, "Dolly step per frame x,y,z in mm")->delimiter(',')->expected(3);
  synth_cmd->add_option("--arc-step", s.arc_step, "Arc yaw per frame, degrees");
  synth_cmd->add_option("--pivot", s.pivot, "Arc pivot depth, mm (default: scene depth)");
  synth_cmd->add_option("--focal", s.focal, "Focal length, px");
  synth_cmd->add_option("--baseline", s.baseline, "Baseline, mm");
  synth_cmd->add_option("--width", s.width)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", s.height)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--octaves", s.octaves);
  synth_cmd->add_option("--contrast", s.contrast);
  synth_cmd->add_option("--wavelength", s.wavelength, "Finest texture wavelength, mm (default ~3 px)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kUsage;
  }
  dm::set_log_level(quiet ? dm::LogLevel::kWarn : verbose ? dm::LogLevel::kDebug : dm::LogLevel::kInfo);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*match_cmd) return cmd_match(m);
    if (*eval_cmd) return cmd_eval(e);
    if (*synth_cmd) return cmd_synth(s);
  } catch (const dm::InvalidArgument& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kUsage;
  } catch (const dm::DataError& err) {
    std::fprintf(stderr, "data error: %s\n", err.what());
    return kData;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "internal error: %s\n", err.what());
    return kInternal;
  }
  return kInternal;
}
