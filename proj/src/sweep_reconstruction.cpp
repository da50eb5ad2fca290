#include "livo/sweep_reconstruction.hpp"

#include <algorithm>
#include <cstdio>
#include <string>

#include "livo/error.hpp"

namespace livo {

namespace {

std::string format_stamp(Timestamp t) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", t.sec);
  return buf;
}

}  // namespace

Timestamp event_stamp(const SensorEvent& e) {
  return std::visit([](const auto& v) { return v.stamp; }, e);
}

std::vector<SensorEvent> merge_streams(std::span<const RawSweep> sweeps, std::span<const ImuSample> imu,
                                       std::span<const ImageEvent> images) {
  std::size_t total = imu.size() + images.size();
  for (const RawSweep& s : sweeps) total += s.points.size();
  std::vector<SensorEvent> events;
  events.reserve(total);
  for (const ImuSample& s : imu) events.emplace_back(s);
  for (const RawSweep& s : sweeps) {
    for (const LidarPoint& p : s.points) events.emplace_back(p);
  }
  for (const ImageEvent& i : images) events.emplace_back(i);
  std::stable_sort(events.begin(), events.end(), [](const SensorEvent& a, const SensorEvent& b) {
    const Timestamp ta = event_stamp(a);
    const Timestamp tb = event_stamp(b);
    if (ta != tb) return ta < tb;
    // variant order is point, imu, image; ties want imu first
    auto rank = [](const SensorEvent& e) {
      switch (e.index()) {
        case 1: return 0;
        case 0: return 1;
        default: return 2;
      }
    };
    return rank(a) < rank(b);
  });
  return events;
}

std::string_view to_string(SyncMode m) {
  switch (m) {
    case SyncMode::kA: return "A";
    case SyncMode::kB: return "B";
    case SyncMode::kC: return "C";
  }
  return "?";
}

SyncMode classify_mode(const StreamConfig& cfg) {
  if (cfg.camera_hz > 2.0 * cfg.lidar_sweep_hz) return SyncMode::kA;
  if (cfg.camera_hz > cfg.lidar_sweep_hz) return SyncMode::kB;
  return SyncMode::kC;
}

std::vector<Timestamp> downsample_images(std::span<const Timestamp> stamps, const StreamConfig& cfg) {
  const double spacing = 1.0 / (2.0 * cfg.lidar_sweep_hz);
  std::vector<Timestamp> kept;
  for (Timestamp t : stamps) {
    if (kept.empty() || t.sec >= kept.back().sec + spacing - kTimeEpsilon) kept.push_back(t);
  }
  return kept;
}

SweepReconstructor::SweepReconstructor(StreamConfig cfg, std::size_t max_pending)
    : cfg_(cfg),
      mode_(classify_mode(cfg)),
      period_(1.0 / cfg.lidar_sweep_hz),
      window_(cfg.min_fraction / cfg.lidar_sweep_hz),
      spacing_(1.0 / (2.0 * cfg.lidar_sweep_hz)),
      max_pending_(max_pending) {
  if (!(cfg.lidar_sweep_hz > 0.0) || !(cfg.camera_hz > 0.0)) {
    throw DomainError("stream config: frequencies must be positive");
  }
  if (!(cfg.min_fraction > 0.0 && cfg.min_fraction < 1.0)) {
    throw DomainError("stream config: min_fraction must lie in (0, 1)");
  }
}

std::vector<SyncedPacket> SweepReconstructor::push(const SensorEvent& event) {
  const Timestamp t = event_stamp(event);
  if (last_event_ && t < *last_event_ - kTimeEpsilon) {
    throw OrderingError("event at " + format_stamp(t) + " arrived after event at " +
                        format_stamp(*last_event_));
  }
  if (!last_event_ || t > *last_event_) last_event_ = t;

  if (mode_ == SyncMode::kC && started_) apply_period_rule(t);

  if (const auto* p = std::get_if<LidarPoint>(&event)) {
    if (!started_) {
      started_ = true;
      cut_ = p->stamp;
      last_emitted_end_ = p->stamp;
    }
    points_.push_back(*p);
  } else if (const auto* s = std::get_if<ImuSample>(&event)) {
    imu_.push_back(*s);
  } else {
    on_image(std::get<ImageEvent>(event));
  }

  std::vector<SyncedPacket> out;
  try_emit(out, false);
  if (pending_.size() > max_pending_) {
    throw BufferOverflowError("IMU stream stalled: " + std::to_string(pending_.size()) +
                              " sweep boundaries withheld, oldest at " + format_stamp(pending_.front().stamp));
  }
  return out;
}

// Closes the open sweep one raw period after its begin when no image arrives
// within the look-ahead window.
void SweepReconstructor::apply_period_rule(Timestamp now) {
  while (now.sec > cut_.sec + period_ + window_ + kTimeEpsilon) {
    cut_ = cut_ + period_;
    pending_.push_back({cut_, std::nullopt});
  }
}

void SweepReconstructor::on_image(const ImageEvent& img) {
  const Timestamp t = img.stamp;
  if (mode_ == SyncMode::kA) {
    if (last_kept_image_ && t.sec < last_kept_image_->sec + spacing_ - kTimeEpsilon) {
      ++dropped_images_;
      return;
    }
    last_kept_image_ = t;
  }
  if (!started_) {
    ++dropped_images_;
    return;
  }
  if (mode_ == SyncMode::kC) {
    if (t.sec - cut_.sec < window_ - kTimeEpsilon) {
      ++dropped_images_;
      return;
    }
  } else if (t.sec <= cut_.sec + kTimeEpsilon) {
    ++dropped_images_;
    return;
  }
  cut_ = t;
  pending_.push_back({t, img});
}

bool SweepReconstructor::imu_covers(Timestamp t) const {
  if (!imu_.empty()) return imu_.back().stamp.sec >= t.sec - kTimeEpsilon;
  return imu_anchor_ && imu_anchor_->stamp.sec >= t.sec - kTimeEpsilon;
}

void SweepReconstructor::try_emit(std::vector<SyncedPacket>& out, bool force) {
  while (!pending_.empty()) {
    const Boundary& b = pending_.front();
    if (!force) {
      const bool crossed = last_event_ && last_event_->sec > b.stamp.sec + kTimeEpsilon;
      if (!crossed || !imu_covers(b.stamp)) return;
    }
    const Boundary boundary = b;
    pending_.pop_front();
    emit(boundary, out);
  }
}

void SweepReconstructor::emit(const Boundary& b, std::vector<SyncedPacket>& out) {
  SyncedPacket packet;
  while (!points_.empty() && points_.front().stamp.sec <= b.stamp.sec + kTimeEpsilon) {
    packet.sweep.points.push_back(points_.front());
    points_.pop_front();
  }
  if (packet.sweep.points.empty()) {
    // Nothing to register; IMU stays buffered for the next packet.
    if (b.image) ++dropped_images_;
    return;
  }

  while (!imu_.empty() && imu_.front().stamp.sec <= b.stamp.sec + kTimeEpsilon) {
    packet.imu.push_back(imu_.front());
    imu_.pop_front();
  }
  const bool short_of_end = packet.imu.empty() || packet.imu.back().stamp.sec < b.stamp.sec - kTimeEpsilon;
  if (short_of_end && !imu_.empty()) {
    const ImuSample* before = !packet.imu.empty() ? &packet.imu.back() : (imu_anchor_ ? &*imu_anchor_ : nullptr);
    const ImuSample& after = imu_.front();
    packet.imu.push_back(before ? interpolate_imu(*before, after, b.stamp)
                                : ImuSample{b.stamp, after.gyro, after.accel});
  }
  if (!packet.imu.empty()) imu_anchor_ = packet.imu.back();

  packet.sweep.begin = last_emitted_end_;
  packet.sweep.end = b.stamp;
  packet.sweep.aligned_to_image = b.image.has_value();
  packet.image = b.image;
  last_emitted_end_ = b.stamp;
  out.push_back(std::move(packet));
}

std::vector<SyncedPacket> SweepReconstructor::flush() {
  std::vector<SyncedPacket> out;
  try_emit(out, true);
  if (!points_.empty()) {
    Timestamp end = points_.back().stamp;
    if (end <= last_emitted_end_) end = last_emitted_end_ + kTimeEpsilon * 2.0;
    emit({end, std::nullopt}, out);
    cut_ = end;
  }
  return out;
}

}  // namespace livo
