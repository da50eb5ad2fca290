#pragma once

#include <cstddef>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "livo/geometry.hpp"
#include "livo/image.hpp"

namespace livo {

struct LidarPoint {
  Vec3 position{Vec3::Zero()};  // LiDAR frame at `stamp`
  Timestamp stamp;
  double intensity{0.0};
};

struct RawSweep {
  std::vector<LidarPoint> points;
  Timestamp begin;
  Timestamp end;
};

/// An image arrival. `frame` may be null when only the stamp matters.
struct ImageEvent {
  Timestamp stamp;
  std::shared_ptr<const ImageFrame> frame;
};

using SensorEvent = std::variant<LidarPoint, ImuSample, ImageEvent>;

Timestamp event_stamp(const SensorEvent& e);

/// Merges per-sensor streams into one timestamp-ordered event list. Ties are
/// broken IMU, then LiDAR, then image, so boundary IMU samples precede the
/// image that closes a sweep.
std::vector<SensorEvent> merge_streams(std::span<const RawSweep> sweeps, std::span<const ImuSample> imu,
                                       std::span<const ImageEvent> images);

struct ReconstructedSweep {
  std::vector<LidarPoint> points;
  Timestamp begin;
  Timestamp end;
  bool aligned_to_image{false};
};

/// A re-cut sweep with the IMU samples covering (previous end, end] and, when
/// aligned, the image whose stamp equals `sweep.end`. When the IMU stream
/// straddles `end` the last sample is interpolated exactly at `end`.
struct SyncedPacket {
  ReconstructedSweep sweep;
  std::optional<ImageEvent> image;
  std::vector<ImuSample> imu;
};

struct StreamConfig {
  double lidar_sweep_hz{10.0};
  double camera_hz{15.0};
  double min_fraction{0.5};
};

/// A: camera faster than twice the sweep rate (images are thinned first).
/// B: camera between the sweep rate and twice it.
/// C: camera no faster than the sweep rate.
enum class SyncMode { kA, kB, kC };

std::string_view to_string(SyncMode m);

SyncMode classify_mode(const StreamConfig& cfg);

/// Greedy earliest-first thinning to at most twice the sweep rate.
std::vector<Timestamp> downsample_images(std::span<const Timestamp> stamps, const StreamConfig& cfg);

/// Streaming sweep re-cutter. Consumes one merged, timestamp-ordered event
/// stream and emits packets whose ends coincide with image stamps whenever
/// the frequency case allows it.
class SweepReconstructor {
 public:
  explicit SweepReconstructor(StreamConfig cfg, std::size_t max_pending = 1024);

  std::vector<SyncedPacket> push(const SensorEvent& event);
  std::vector<SyncedPacket> push(const LidarPoint& p) { return push(SensorEvent{p}); }
  std::vector<SyncedPacket> push(const ImuSample& s) { return push(SensorEvent{s}); }
  std::vector<SyncedPacket> push(const ImageEvent& i) { return push(SensorEvent{i}); }

  /// Emits every withheld boundary and the open partial sweep. Usually at
  /// most one packet; more if boundaries were waiting on the IMU.
  std::vector<SyncedPacket> flush();

  SyncMode mode() const { return mode_; }
  std::size_t dropped_images() const { return dropped_images_; }
  std::size_t buffered_points() const { return points_.size(); }

 private:
  struct Boundary {
    Timestamp stamp;
    std::optional<ImageEvent> image;
  };

  void apply_period_rule(Timestamp now);
  void on_image(const ImageEvent& img);
  void try_emit(std::vector<SyncedPacket>& out, bool force);
  bool imu_covers(Timestamp t) const;
  void emit(const Boundary& b, std::vector<SyncedPacket>& out);

  StreamConfig cfg_;
  SyncMode mode_;
  double period_;
  double window_;
  double spacing_;
  std::size_t max_pending_;

  bool started_{false};
  Timestamp cut_;
  Timestamp last_emitted_end_;
  std::optional<Timestamp> last_event_;
  std::optional<Timestamp> last_kept_image_;
  std::deque<LidarPoint> points_;
  std::deque<ImuSample> imu_;
  std::optional<ImuSample> imu_anchor_;
  std::deque<Boundary> pending_;
  std::size_t dropped_images_{0};
};

}  // namespace livo
