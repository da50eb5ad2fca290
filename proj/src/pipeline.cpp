#include "livo/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "livo/error.hpp"

namespace fs = std::filesystem;

namespace livo {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

StreamConfig effective_stream(const PipelineConfig& cfg) {
  StreamConfig s = cfg.stream;
  // without images the sweeps fall back to the LiDAR's own period
  if (!cfg.use_camera) s.camera_hz = s.lidar_sweep_hz;
  return s;
}

template <typename E>
[[noreturn]] void rethrow_as(const E&, const std::string& msg) {
  throw E(msg);
}

// Re-throws a toolkit error with the packet index prepended, keeping its kind.
[[noreturn]] void rethrow_with_packet(std::size_t index) {
  const std::string where = "packet " + std::to_string(index) + ": ";
  try {
    throw;
  } catch (const BehindCameraError& e) {
    rethrow_as(e, where + e.what());
  } catch (const DomainError& e) {
    rethrow_as(e, where + e.what());
  } catch (const OrderingError& e) {
    rethrow_as(e, where + e.what());
  } catch (const ImuGapError& e) {
    rethrow_as(e, where + e.what());
  } catch (const BufferOverflowError& e) {
    rethrow_as(e, where + e.what());
  } catch (const DegenerateGeometryError& e) {
    rethrow_as(e, where + e.what());
  }
}

}  // namespace

Pipeline::Pipeline(const PipelineConfig& cfg, NavState initial)
    : cfg_(cfg),
      reconstructor_(effective_stream(cfg), cfg.max_pending_boundaries),
      lio_(cfg.lio, initial),
      vision_(cfg.camera_initial, cfg.camera_covariance, cfg.vision) {
  result_.stats.mode = reconstructor_.mode();
}

void Pipeline::push(const SensorEvent& event) {
  if (!cfg_.use_camera && std::holds_alternative<ImageEvent>(event)) return;
  for (const SyncedPacket& p : reconstructor_.push(event)) process(p);
}

PipelineResult Pipeline::finish() {
  for (const SyncedPacket& p : reconstructor_.flush()) process(p);
  result_.stats.dropped_images = reconstructor_.dropped_images();
  result_.map = std::make_shared<const VoxelMap>(lio_.map());
  return std::move(result_);
}

void Pipeline::process(const SyncedPacket& packet) {
  const std::size_t index = result_.stats.packets;
  const auto t0 = Clock::now();
  PacketLog log;
  log.sweep_begin = packet.sweep.begin;
  log.sweep_end = packet.sweep.end;
  StageTiming timing;
  timing.stamp = packet.sweep.end;

  try {
    const LioStep step = lio_.process(packet);
    log.stages.push_back(PipelineStage::kLio);
    log.registration = step.registration.status;
    timing.lidar_ms = ms_since(t0);

    if (step.registration.status == RegistrationStatus::kDegenerate) {
      ++result_.stats.degenerate_packets;
      if (++consecutive_degenerate_ > cfg_.max_degenerate_packets) {
        throw DegenerateGeometryError("registration degenerate for " + std::to_string(consecutive_degenerate_) +
                                      " consecutive packets (" + std::to_string(step.registration.correspondences) +
                                      " correspondences in the last)");
      }
    } else {
      consecutive_degenerate_ = 0;
    }

    if (packet.image) {
      ++result_.stats.image_packets;
      log.image_stamp = packet.image->stamp;
      if (packet.image->frame && !packet.image->frame->empty()) {
        const auto tv = Clock::now();
        const NavState& nav = lio_.state();
        log.vision_nav_stamp = nav.stamp;
        VisionReport report = vision_.process(*packet.image->frame, nav.stamp, nav.pose, lio_.map());
        log.stages.push_back(PipelineStage::kVision);
        timing.vision_ms = ms_since(tv);
        timing.has_image = true;
        ++result_.stats.vision_runs;
        result_.vision_reports.push_back(std::move(report));
        result_.camera_history.push_back({packet.image->stamp, vision_.params()});
      }
    } else {
      ++result_.stats.lidar_only_packets;
    }
  } catch (const Error&) {
    rethrow_with_packet(index);
  }

  timing.total_ms = ms_since(t0);
  const NavState& s = lio_.state();
  if (!result_.trajectory.empty() && !(s.stamp > result_.trajectory.back().stamp)) {
    throw OrderingError("packet " + std::to_string(index) + ": state stamp did not advance");
  }
  result_.trajectory.push_back({s.stamp, s.pose});
  result_.timing.push_back(timing);
  result_.packets.push_back(std::move(log));
  ++result_.stats.packets;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const sim::Dataset& data, NavState initial) {
  Pipeline pipeline(cfg, initial);

  // three-way merge by stamp; ties go IMU, then point, then image
  std::size_t imu_i = 0;
  std::size_t img_i = 0;
  std::size_t sweep_i = 0;
  std::size_t point_i = 0;
  auto next_point = [&]() -> const LidarPoint* {
    while (sweep_i < data.sweeps.size() && point_i >= data.sweeps[sweep_i].points.size()) {
      ++sweep_i;
      point_i = 0;
    }
    return sweep_i < data.sweeps.size() ? &data.sweeps[sweep_i].points[point_i] : nullptr;
  };
  const bool images = cfg.use_camera;
  while (true) {
    const LidarPoint* p = next_point();
    const ImuSample* s = imu_i < data.imu.size() ? &data.imu[imu_i] : nullptr;
    const ImageFrame* f = images && img_i < data.images.size() ? &data.images[img_i] : nullptr;
    if (!p && !s && !f) break;
    const double tp = p ? p->stamp.sec : 1e300;
    const double ts = s ? s->stamp.sec : 1e300;
    const double tf = f ? f->stamp.sec : 1e300;
    if (s && ts <= tp && ts <= tf) {
      pipeline.push(SensorEvent{*s});
      ++imu_i;
    } else if (p && tp <= tf) {
      pipeline.push(SensorEvent{*p});
      ++point_i;
    } else {
      // non-owning handle; the dataset outlives the run
      pipeline.push(SensorEvent{ImageEvent{f->stamp, std::shared_ptr<const ImageFrame>(std::shared_ptr<void>(), f)}});
      ++img_i;
    }
  }
  return pipeline.finish();
}

PipelineResult run_pipeline(const PipelineConfig& cfg, TrajectoryRecord* gt) {
  sim::Dataset data;
  if (!cfg.simulator_config.empty()) {
    data = sim::simulate(load_scene_config(cfg.simulator_config));
  } else if (!cfg.dataset_dir.empty()) {
    data = read_dataset(cfg.dataset_dir);
  } else {
    throw ParseError("configuration names neither input.dataset nor input.simulator");
  }
  if (gt) *gt = data.ground_truth;
  return run_pipeline(cfg, data);
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_outputs(const fs::path& dir, const PipelineResult& result) {
  fs::create_directories(dir);
  write_trajectory(dir / "trajectory.txt", result.trajectory);
  {
    std::ofstream out = open_out(dir / "camera_params.csv");
    out << "stamp,time_offset,tx,ty,tz,qx,qy,qz,qw,fx,fy,cx,cy\n";
    char buf[512];
    for (const CameraHistoryRow& row : result.camera_history) {
      const CameraParams& p = row.params;
      const Eigen::Quaterniond& q = p.extrinsic.rotation.quaternion();
      std::snprintf(buf, sizeof(buf), "%.9f,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    row.stamp.sec, p.time_offset, p.extrinsic.translation.x(), p.extrinsic.translation.y(),
                    p.extrinsic.translation.z(), q.x(), q.y(), q.z(), q.w(), p.intrinsics.fx, p.intrinsics.fy,
                    p.intrinsics.cx, p.intrinsics.cy);
      out << buf;
    }
  }
  {
    std::ofstream out = open_out(dir / "timing.csv");
    out << "packet,stamp,has_image,lidar_ms,vision_ms,total_ms\n";
    char buf[256];
    for (std::size_t i = 0; i < result.timing.size(); ++i) {
      const StageTiming& t = result.timing[i];
      std::snprintf(buf, sizeof(buf), "%zu,%.9f,%d,%.3f,%.3f,%.3f\n", i, t.stamp.sec, t.has_image ? 1 : 0,
                    t.lidar_ms, t.vision_ms, t.total_ms);
      out << buf;
    }
  }
  if (result.map) write_map(dir / "map.bin", *result.map);
}

TimingSummary summarize_timing(const std::vector<StageTiming>& timing) {
  TimingSummary s;
  std::size_t vision_count = 0;
  for (const StageTiming& t : timing) {
    s.lidar_ms += t.lidar_ms;
    s.total_ms += t.total_ms;
    if (t.has_image) {
      s.vision_ms += t.vision_ms;
      ++vision_count;
    }
  }
  if (!timing.empty()) {
    s.lidar_ms /= static_cast<double>(timing.size());
    s.total_ms /= static_cast<double>(timing.size());
  }
  if (vision_count > 0) s.vision_ms /= static_cast<double>(vision_count);
  return s;
}

}  // namespace livo
