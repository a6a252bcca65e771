#include "densemap/pipeline.hpp"

#include <glob.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <thread>

#include <spdlog/spdlog.h>

#include "densemap/evaluation.hpp"
#include "densemap/image_io.hpp"
#include "densemap/ply.hpp"
#include "densemap/trajectory.hpp"

namespace densemap {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct MappingJob {
  int kf_index = 0;
  StereoFrame frame;
};

std::optional<double> stem_timestamp(const std::filesystem::path& p) {
  const auto stem = p.stem().string();
  try {
    std::size_t used = 0;
    const double v = std::stod(stem, &used);
    if (used == stem.size()) return v;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

}  // namespace

void KeyframePolicy::validate() const {
  if (!(translation_threshold_mm > 0.0) || !(rotation_threshold_deg > 0.0) || max_frame_gap < 1)
    throw InvalidArgument("KeyframePolicy: thresholds must be positive");
}

bool select_keyframe(const Pose& prev_kf_pose, const Pose& current_pose, int frames_since_kf,
                     const KeyframePolicy& policy) {
  if (frames_since_kf >= policy.max_frame_gap) return true;
  if (prev_kf_pose.distance_to(current_pose) > policy.translation_threshold_mm) return true;
  return prev_kf_pose.angle_to(current_pose) * 180.0 / std::numbers::pi > policy.rotation_threshold_deg;
}

void SessionConfig::validate() const {
  rig.validate();
  matcher.validate();
  policy.validate();
  if (worker_queue_capacity < 1) throw InvalidArgument("SessionConfig: worker_queue_capacity must be >= 1");
  if (subsample_stride < 1) throw InvalidArgument("SessionConfig: subsample_stride must be >= 1");
  if (!(disparity_floor >= 0.0)) throw InvalidArgument("SessionConfig: disparity_floor must be >= 0");
}

void apply_session_config(const KeyValueConfig& kv, SessionConfig& cfg) {
  apply_rig_config(kv, cfg.rig);
  apply_matcher_config(kv, cfg.matcher);
  if (auto v = kv.get_double("translation_threshold")) cfg.policy.translation_threshold_mm = *v;
  if (auto v = kv.get_double("rotation_threshold")) cfg.policy.rotation_threshold_deg = *v;
  if (auto v = kv.get_int("max_frame_gap")) cfg.policy.max_frame_gap = *v;
  if (auto v = kv.get_int("worker_queue_capacity")) cfg.worker_queue_capacity = *v;
  if (auto v = kv.get_int("subsample_stride")) cfg.subsample_stride = *v;
  if (auto v = kv.get_double("disparity_floor")) cfg.disparity_floor = *v;
  if (auto v = kv.get_bool("depth_gated_culling")) cfg.culling.depth_gated = *v;
  if (auto v = kv.get_double("culling_depth_tolerance")) cfg.culling.depth_tolerance_mm = *v;
  if (auto v = kv.get_bool("drop_when_busy")) cfg.drop_when_busy = *v;
  if (auto v = kv.get_bool("export_chunks")) cfg.export_chunks = *v;
  if (const auto unknown = kv.unused_keys(); !unknown.empty())
    throw InvalidArgument("config: unknown key '" + unknown.front() + "'");
  cfg.validate();
}

SessionConfig load_session_config(const std::filesystem::path& path) {
  SessionConfig cfg;
  apply_session_config(KeyValueConfig::load(path), cfg);
  return cfg;
}

std::vector<std::filesystem::path> expand_glob(const std::string& pattern) {
  glob_t g{};
  const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
  std::vector<std::filesystem::path> out;
  if (rc == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  globfree(&g);
  if (rc != 0 && rc != GLOB_NOMATCH) throw IoError("glob failed for '" + pattern + "'");
  std::sort(out.begin(), out.end());
  return out;
}

SequenceSource::SequenceSource(const std::string& left_glob, const std::string& right_glob,
                               const std::filesystem::path& trajectory, const StereoRig& rig)
    : left_(expand_glob(left_glob)), right_(expand_glob(right_glob)) {
  if (left_.empty()) throw DataError("no images match '" + left_glob + "'");
  if (right_.size() != left_.size())
    throw DataError("left/right image counts differ: " + std::to_string(left_.size()) + " vs " +
                    std::to_string(right_.size()));
  for (const auto* list : {&left_, &right_})
    for (const auto& p : *list) {
      const auto info = probe_image(p);
      if (info.width != rig.width || info.height != rig.height)
        throw DataError(p.string() + ": expected " + std::to_string(rig.width) + "x" + std::to_string(rig.height) +
                        ", found " + std::to_string(info.width) + "x" + std::to_string(info.height));
    }

  const auto traj = read_tum(trajectory);
  if (traj.size() == left_.size()) {
    poses_ = traj;
    return;
  }
  // Counts differ: associate by timestamp encoded in the file names.
  for (const auto& p : left_) {
    const auto stamp = stem_timestamp(p);
    if (!stamp || traj.empty())
      throw DataError("trajectory has " + std::to_string(traj.size()) + " poses for " + std::to_string(left_.size()) +
                      " images and image names carry no timestamps");
    const auto best = std::min_element(traj.begin(), traj.end(), [&](const StampedPose& a, const StampedPose& b) {
      return std::abs(a.timestamp - *stamp) < std::abs(b.timestamp - *stamp);
    });
    if (std::abs(best->timestamp - *stamp) > 0.010)
      throw DataError("no pose within 10 ms of image " + p.filename().string());
    poses_.push_back({*stamp, best->pose});
  }
}

StereoFrame SequenceSource::load(std::size_t index) const {
  StereoFrame f;
  f.index = static_cast<int>(index);
  f.timestamp = poses_[index].timestamp;
  f.pose = poses_[index].pose;
  f.pair.left = read_gray(left_[index]);
  f.pair.right = read_gray(right_[index]);
  f.pair.left_color = read_color(left_[index]);
  return f;
}

StereoFrame SyntheticSource::load(std::size_t index) const {
  auto rendered = render_pair(spec_, static_cast<int>(index));
  StereoFrame f;
  f.index = static_cast<int>(index);
  f.timestamp = rendered.timestamp;
  f.pose = rendered.pose;
  f.pair = std::move(rendered.pair);
  return f;
}

SessionResult run_session(const SessionConfig& cfg, const FrameSource& source) {
  cfg.validate();
  if (!cfg.output_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw IoError("cannot create " + cfg.output_dir.string() + ": " + ec.message());
  }

  SessionResult result;
  BoundedQueue<std::unique_ptr<MappingJob>> queue(static_cast<std::size_t>(cfg.worker_queue_capacity));
  std::exception_ptr worker_error;
  const auto start = Clock::now();

  std::jthread worker([&] {
    try {
      while (auto next = queue.pop()) {
        const auto& job = *next;
        KeyframeTiming t;
        t.kf_index = job->kf_index;
        auto t0 = Clock::now();
        const auto disparity = match(job->frame.pair, cfg.matcher);
        t.match_ms = ms_since(t0);
        if (disparity.valid_count() == 0) {
          spdlog::warn("keyframe {} (frame {}): no valid disparity, skipped", job->kf_index, job->frame.index);
          ++result.timing.keyframes_skipped;
          continue;
        }

        t0 = Clock::now();
        KeyframeRecord kf;
        kf.index = job->kf_index;
        kf.pose = job->frame.pose;
        kf.depth = depth_from_disparity(cfg.rig, disparity, cfg.disparity_floor);
        kf.color = job->frame.pair.left_color ? *job->frame.pair.left_color : to_color(job->frame.pair.left);
        auto points = lift_keyframe(kf, cfg.rig, cfg.subsample_stride);
        t.lift_ms = ms_since(t0);

        t0 = Clock::now();
        const auto stats = result.map.update(kf, std::move(points), cfg.rig, cfg.culling);
        t.mosaic_ms = ms_since(t0);
        t.culled = stats.culled;
        t.added = stats.added;

        if (cfg.export_chunks && !cfg.output_dir.empty()) {
          t0 = Clock::now();
          export_ply(result.map, cfg.output_dir / ("map_kf_" + std::to_string(job->kf_index) + ".ply"));
          t.export_ms = ms_since(t0);
        }
        result.timing.keyframes.push_back(t);
      }
    } catch (...) {
      worker_error = std::current_exception();
      queue.close();
    }
  });

  Pose last_kf_pose;
  int frames_since_kf = 0;
  int next_kf_index = 1;
  std::size_t frames = 0;
  try {
    for (std::size_t i = 0; i < source.size(); ++i) {
      auto frame = source.load(i);
      ++frames;
      ++frames_since_kf;
      const bool is_kf = i == 0 || select_keyframe(last_kf_pose, frame.pose, frames_since_kf, cfg.policy);
      if (!is_kf) continue;
      last_kf_pose = frame.pose;
      frames_since_kf = 0;
      ++result.timing.keyframes_selected;
      auto job = std::make_unique<MappingJob>(MappingJob{next_kf_index++, std::move(frame)});
      if (cfg.drop_when_busy) {
        if (!queue.try_push(job)) ++result.timing.keyframes_dropped;
      } else if (!queue.push(std::move(job))) {
        break;  // worker failed and closed the queue
      }
    }
  } catch (...) {
    queue.close();
    worker.join();
    throw;
  }
  queue.close();
  worker.join();
  if (worker_error) std::rethrow_exception(worker_error);

  result.timing.frames_processed = frames;
  result.timing.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();

  if (!cfg.output_dir.empty()) {
    export_ply(result.map, cfg.output_dir / "map.ply");
    report_timing(result.timing, cfg.output_dir);
  }
  spdlog::info("session: {} frames, {} keyframes mapped, {} points, {:.2f} Hz", frames,
               result.timing.keyframes_processed(), result.map.size(), result.timing.hz());
  return result;
}

SessionResult run_session(const SessionConfig& cfg) {
  cfg.validate();
  const SequenceSource source(cfg.left_glob, cfg.right_glob, cfg.trajectory, cfg.rig);
  return run_session(cfg, source);
}

namespace {

struct StageStats {
  double mean[4] = {0, 0, 0, 0};
  double median[4] = {0, 0, 0, 0};
};

StageStats stage_stats(const TimingReport& report) {
  StageStats s;
  if (report.keyframes.empty()) return s;
  std::vector<double> col(report.keyframes.size());
  for (int stage = 0; stage < 4; ++stage) {
    for (std::size_t k = 0; k < report.keyframes.size(); ++k) {
      const auto& t = report.keyframes[k];
      const double v[4] = {t.match_ms, t.lift_ms, t.mosaic_ms, t.export_ms};
      col[k] = v[stage];
    }
    s.mean[stage] = std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(col.size());
    s.median[stage] = median_of(col);
  }
  return s;
}

}  // namespace

void write_timing_csv(const TimingReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "kf_index,match_ms,lift_ms,mosaic_ms,export_ms\n";
  for (const auto& t : report.keyframes)
    out << t.kf_index << ',' << t.match_ms << ',' << t.lift_ms << ',' << t.mosaic_ms << ',' << t.export_ms << '\n';
  const auto s = stage_stats(report);
  out << "mean," << s.mean[0] << ',' << s.mean[1] << ',' << s.mean[2] << ',' << s.mean[3] << '\n';
  out << "median," << s.median[0] << ',' << s.median[1] << ',' << s.median[2] << ',' << s.median[3] << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void write_timing_summary(const TimingReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const auto s = stage_stats(report);
  out << std::fixed << std::setprecision(3);
  out << "frames_processed    " << report.frames_processed << '\n';
  out << "keyframes_selected  " << report.keyframes_selected << '\n';
  out << "keyframes_processed " << report.keyframes_processed() << '\n';
  out << "keyframes_dropped   " << report.keyframes_dropped << '\n';
  out << "keyframes_skipped   " << report.keyframes_skipped << '\n';
  out << "elapsed_s           " << report.elapsed_s << '\n';
  out << "hz                  " << report.hz() << '\n';
  const char* names[4] = {"match", "lift", "mosaic", "export"};
  for (int i = 0; i < 4; ++i)
    out << names[i] << "_ms mean " << s.mean[i] << " median " << s.median[i] << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void report_timing(const TimingReport& report, const std::filesystem::path& dir) {
  write_timing_csv(report, dir / "timing.csv");
  write_timing_summary(report, dir / "timing.txt");
}

}  // namespace densemap
