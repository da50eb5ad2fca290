#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "livo/config.hpp"
#include "livo/io.hpp"
#include "livo/lio.hpp"
#include "livo/vision.hpp"

namespace livo {

struct StageTiming {
  Timestamp stamp;
  bool has_image{false};
  double lidar_ms{0.0};
  double vision_ms{0.0};
  double total_ms{0.0};
};

struct CameraHistoryRow {
  Timestamp stamp;
  CameraParams params;
};

/// Per-packet record of which stages ran, in order.
enum class PipelineStage { kLio, kVision };

struct PacketLog {
  Timestamp sweep_begin;
  Timestamp sweep_end;
  std::optional<Timestamp> image_stamp;
  std::optional<Timestamp> vision_nav_stamp;  // state stamp handed to vision
  std::vector<PipelineStage> stages;
  RegistrationStatus registration{RegistrationStatus::kBootstrap};
};

struct PipelineStats {
  SyncMode mode{SyncMode::kA};
  std::size_t packets{0};
  std::size_t image_packets{0};
  std::size_t lidar_only_packets{0};
  std::size_t vision_runs{0};
  std::size_t degenerate_packets{0};
  std::size_t dropped_images{0};
};

struct PipelineResult {
  TrajectoryRecord trajectory;
  std::vector<CameraHistoryRow> camera_history;
  std::vector<StageTiming> timing;
  std::vector<PacketLog> packets;
  std::vector<VisionReport> vision_reports;
  PipelineStats stats;
  std::shared_ptr<const VoxelMap> map;
};

/// Sweep reconstruction -> LIO -> vision, one packet at a time.
class Pipeline {
 public:
  explicit Pipeline(const PipelineConfig& cfg, NavState initial = {});

  /// Feeds one time-ordered event; packets completed by it are processed.
  void push(const SensorEvent& event);
  /// Closes the stream and processes the remaining packets.
  PipelineResult finish();

  const LidarInertialOdometry& lio() const { return lio_; }
  const VisionModule& vision() const { return vision_; }

 private:
  void process(const SyncedPacket& packet);

  PipelineConfig cfg_;
  SweepReconstructor reconstructor_;
  LidarInertialOdometry lio_;
  VisionModule vision_;
  PipelineResult result_;
  std::size_t consecutive_degenerate_{0};
};

/// Runs the pipeline over a recorded or simulated log. Image frames must
/// outlive the call.
PipelineResult run_pipeline(const PipelineConfig& cfg, const sim::Dataset& data, NavState initial = {});

/// Loads the configured input (dataset directory or simulator config) and
/// runs. Ground truth of the input, when present, is returned through `gt`.
PipelineResult run_pipeline(const PipelineConfig& cfg, TrajectoryRecord* gt = nullptr);

/// trajectory.txt, camera_params.csv, timing.csv and map.bin.
void write_outputs(const std::filesystem::path& dir, const PipelineResult& result);

struct TimingSummary {
  double lidar_ms{0.0};
  double vision_ms{0.0};  // mean over packets that ran vision
  double total_ms{0.0};   // mean over all packets
};
TimingSummary summarize_timing(const std::vector<StageTiming>& timing);

}  // namespace livo
