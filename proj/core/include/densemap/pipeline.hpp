#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "densemap/config.hpp"
#include "densemap/geometry.hpp"
#include "densemap/matcher.hpp"
#include "densemap/mosaic.hpp"
#include "densemap/synth.hpp"

namespace densemap {

struct KeyframePolicy {
  double translation_threshold_mm = 3.0;
  double rotation_threshold_deg = 5.0;
  int max_frame_gap = 30;

  void validate() const;
};

/// True on enough translation or rotation since the last keyframe, or once
/// `frames_since_kf` reaches the policy's maximum gap.
bool select_keyframe(const Pose& prev_kf_pose, const Pose& current_pose, int frames_since_kf,
                     const KeyframePolicy& policy);

struct SessionConfig {
  StereoRig rig;
  MatcherConfig matcher;
  KeyframePolicy policy;
  CullingOptions culling;
  std::string left_glob;
  std::string right_glob;
  std::filesystem::path trajectory;
  std::filesystem::path output_dir;  ///< Empty: nothing is written.
  int worker_queue_capacity = 2;
  int subsample_stride = 2;
  double disparity_floor = kDefaultDisparityFloor;
  bool drop_when_busy = false;
  bool export_chunks = false;  ///< Also write map_kf_<index>.ply after each keyframe.

  void validate() const;
};

/// Reads rig, matcher, policy and session keys from a key=value file.
/// Unknown keys are rejected.
SessionConfig load_session_config(const std::filesystem::path& path);
void apply_session_config(const KeyValueConfig& kv, SessionConfig& cfg);

struct StereoFrame {
  int index = 0;
  double timestamp = 0.0;
  Pose pose;
  RectifiedStereoPair pair;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual StereoFrame load(std::size_t index) const = 0;
};

/// Image files matched by two globs (sorted by name) plus a TUM trajectory.
/// Poses pair with images by index when counts agree, otherwise by
/// nearest timestamp parsed from the image file stems (within 10 ms).
/// Every inconsistency is reported as DataError from the constructor.
class SequenceSource : public FrameSource {
 public:
  SequenceSource(const std::string& left_glob, const std::string& right_glob,
                 const std::filesystem::path& trajectory, const StereoRig& rig);

  std::size_t size() const override { return left_.size(); }
  StereoFrame load(std::size_t index) const override;

 private:
  std::vector<std::filesystem::path> left_;
  std::vector<std::filesystem::path> right_;
  std::vector<StampedPose> poses_;
};

/// Renders frames on demand from a synthetic scene.
class SyntheticSource : public FrameSource {
 public:
  explicit SyntheticSource(SceneSpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  std::size_t size() const override { return static_cast<std::size_t>(spec_.path.frames); }
  StereoFrame load(std::size_t index) const override;

 private:
  SceneSpec spec_;
};

std::vector<std::filesystem::path> expand_glob(const std::string& pattern);

struct KeyframeTiming {
  int kf_index = 0;
  double match_ms = 0.0;
  double lift_ms = 0.0;
  double mosaic_ms = 0.0;
  double export_ms = 0.0;
  std::size_t culled = 0;
  std::size_t added = 0;
};

struct TimingReport {
  std::vector<KeyframeTiming> keyframes;
  std::size_t frames_processed = 0;
  std::size_t keyframes_selected = 0;
  std::size_t keyframes_dropped = 0;
  std::size_t keyframes_skipped = 0;
  double elapsed_s = 0.0;

  std::size_t keyframes_processed() const { return keyframes.size(); }
  double hz() const { return elapsed_s > 0.0 ? static_cast<double>(frames_processed) / elapsed_s : 0.0; }
};

struct SessionResult {
  GlobalMap map;
  TimingReport timing;
};

/// Streams frames, selects keyframes and maps them on a separate worker
/// connected by a bounded FIFO. With an output directory, writes map.ply,
/// timing.txt and timing.csv once the worker has drained.
SessionResult run_session(const SessionConfig& cfg, const FrameSource& source);
SessionResult run_session(const SessionConfig& cfg);

/// CSV columns kf_index,match_ms,lift_ms,mosaic_ms,export_ms followed by
/// `mean` and `median` rows.
void write_timing_csv(const TimingReport& report, const std::filesystem::path& path);
void write_timing_summary(const TimingReport& report, const std::filesystem::path& path);
/// timing.csv and timing.txt inside `dir`.
void report_timing(const TimingReport& report, const std::filesystem::path& dir);

/// Bounded FIFO with blocking push and pop. close() wakes every waiter;
/// pop() then drains remaining items before returning nullopt.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw InvalidArgument("BoundedQueue: capacity must be at least 1");
  }

  /// Blocks while full. Returns false if the queue was closed.
  bool push(T item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  bool try_push(T& item) {
    std::lock_guard lock(mutex_);
    if (closed_ || items_.size() >= capacity_) return false;
    items_.push_back(std::move(item));
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  mutable std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
};

}  // namespace densemap
