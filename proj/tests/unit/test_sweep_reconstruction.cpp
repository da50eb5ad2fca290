#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "livo/error.hpp"
#include "livo/sweep_reconstruction.hpp"
#include "test_support.hpp"

using namespace livo;

namespace {

struct Stream {
  std::vector<RawSweep> sweeps;
  std::vector<ImuSample> imu;
  std::vector<ImageEvent> images;
};

// Raw sweeps [k/f, (k+1)/f) with `per_sweep` evenly stamped points; IMU at
// `imu_hz` from 0 to slightly past the last sweep.
Stream make_stream(double lidar_hz, int sweeps, int per_sweep, double imu_hz, std::vector<double> image_stamps) {
  Stream s;
  for (int k = 0; k < sweeps; ++k) {
    RawSweep raw;
    raw.begin = Timestamp(k / lidar_hz);
    raw.end = Timestamp((k + 1) / lidar_hz);
    for (int i = 0; i < per_sweep; ++i) {
      const double t = (static_cast<double>(k) * per_sweep + i) / (per_sweep * lidar_hz);
      raw.points.push_back({Vec3(k, i, 0.0), Timestamp(t), 0.5});
    }
    s.sweeps.push_back(raw);
  }
  const int n_imu = static_cast<int>(std::ceil(sweeps / lidar_hz * imu_hz)) + 2;
  for (int i = 0; i <= n_imu; ++i) s.imu.push_back({Timestamp(i / imu_hz), Vec3(0, 0, 0.1), Vec3(0, 0, 9.81)});
  for (double t : image_stamps) s.images.push_back({Timestamp(t), nullptr});
  return s;
}

std::vector<SyncedPacket> run(const StreamConfig& cfg, const Stream& s) {
  SweepReconstructor r(cfg);
  std::vector<SyncedPacket> out;
  for (const SensorEvent& e : merge_streams(s.sweeps, s.imu, s.images)) {
    for (SyncedPacket& p : r.push(e)) out.push_back(std::move(p));
  }
  for (SyncedPacket& p : r.flush()) out.push_back(std::move(p));
  return out;
}

struct OracleBoundary {
  double stamp;
  bool aligned;
};

// Batch reference for modes A/B: boundaries at every usable image stamp.
std::vector<OracleBoundary> oracle_ab(const StreamConfig& cfg, const std::vector<double>& points,
                                      const std::vector<double>& images) {
  std::vector<double> imgs = images;
  if (classify_mode(cfg) == SyncMode::kA) {
    std::vector<double> thinned;
    const double spacing = 0.5 / cfg.lidar_sweep_hz;
    for (double t : imgs) {
      if (thinned.empty() || t >= thinned.back() + spacing - 1e-9) thinned.push_back(t);
    }
    imgs = thinned;
  }
  std::vector<OracleBoundary> b;
  double cut = points.front();
  for (double t : imgs) {
    if (t <= cut + 1e-9) continue;
    b.push_back({t, true});
    cut = t;
  }
  return b;
}

// Batch reference for mode C, given the stamp of the last event in the stream.
std::vector<OracleBoundary> oracle_c(const StreamConfig& cfg, const std::vector<double>& points,
                                     const std::vector<double>& images, double last_event) {
  const double period = 1.0 / cfg.lidar_sweep_hz;
  const double window = cfg.min_fraction * period;
  std::vector<OracleBoundary> b;
  double cut = points.front();
  std::size_t i = 0;
  while (true) {
    const double deadline = cut + period + window;
    if (i < images.size() && images[i] <= deadline + 1e-9) {
      const double t = images[i++];
      if (t < points.front()) continue;
      if (t - cut >= window - 1e-9) {
        b.push_back({t, true});
        cut = t;
      }
      continue;
    }
    if (last_event > deadline + 1e-9) {
      cut += period;
      b.push_back({cut, false});
      continue;
    }
    break;
  }
  return b;
}

struct OraclePacket {
  double end;
  bool aligned;
  std::size_t points;
};

std::vector<OraclePacket> assign(const std::vector<OracleBoundary>& bounds, const std::vector<double>& points) {
  std::vector<OraclePacket> out;
  std::size_t i = 0;
  for (const OracleBoundary& b : bounds) {
    std::size_t n = 0;
    while (i < points.size() && points[i] <= b.stamp + 1e-9) {
      ++i;
      ++n;
    }
    if (n > 0) out.push_back({b.stamp, b.aligned, n});
  }
  if (i < points.size()) out.push_back({points.back(), false, points.size() - i});
  return out;
}

std::vector<double> point_stamps(const Stream& s) {
  std::vector<double> t;
  for (const RawSweep& r : s.sweeps) {
    for (const LidarPoint& p : r.points) t.push_back(p.stamp.sec);
  }
  return t;
}

double last_event(const Stream& s) {
  double t = s.imu.back().stamp.sec;
  if (!s.sweeps.empty()) t = std::max(t, s.sweeps.back().points.back().stamp.sec);
  if (!s.images.empty()) t = std::max(t, s.images.back().stamp.sec);
  return t;
}

void expect_matches(const std::vector<SyncedPacket>& got, const std::vector<OraclePacket>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t k = 0; k < got.size(); ++k) {
    EXPECT_NEAR(got[k].sweep.end.sec, want[k].end, 1e-12) << "packet " << k;
    EXPECT_EQ(got[k].sweep.aligned_to_image, want[k].aligned) << "packet " << k;
    EXPECT_EQ(got[k].sweep.points.size(), want[k].points) << "packet " << k;
  }
}

void expect_packet_invariants(const std::vector<SyncedPacket>& packets) {
  double prev_end = -1e300;
  for (std::size_t k = 0; k < packets.size(); ++k) {
    const SyncedPacket& p = packets[k];
    EXPECT_GT(p.sweep.end.sec, prev_end) << k;
    EXPECT_EQ(p.image.has_value(), p.sweep.aligned_to_image) << k;
    if (p.image) EXPECT_LE(std::abs(p.image->stamp.sec - p.sweep.end.sec), 1e-9) << k;
    for (std::size_t i = 0; i < p.sweep.points.size(); ++i) {
      const LidarPoint& pt = p.sweep.points[i];
      EXPECT_GE(pt.stamp.sec, p.sweep.begin.sec - 1e-9);
      EXPECT_LE(pt.stamp.sec, p.sweep.end.sec + 1e-9);
      if (i > 0) EXPECT_GE(pt.stamp.sec, p.sweep.points[i - 1].stamp.sec);
    }
    prev_end = p.sweep.end.sec;
  }
}

}  // namespace

TEST(ClassifyMode, Examples) {
  EXPECT_EQ(classify_mode({10.0, 30.0, 0.5}), SyncMode::kA);
  EXPECT_EQ(classify_mode({10.0, 15.0, 0.5}), SyncMode::kB);
  EXPECT_EQ(classify_mode({10.0, 4.0, 0.5}), SyncMode::kC);
  EXPECT_EQ(classify_mode({10.0, 20.0, 0.5}), SyncMode::kB);
  EXPECT_EQ(classify_mode({10.0, 10.0, 0.5}), SyncMode::kC);
}

TEST(DownsampleImages, GreedySpacingOracle) {
  std::vector<Timestamp> stamps;
  for (int i = 0; i < 90; ++i) stamps.emplace_back(i / 30.0);
  const StreamConfig cfg{10.0, 30.0, 0.5};
  const std::vector<Timestamp> kept = downsample_images(stamps, cfg);
  // 1/30 steps against 1/20 spacing: every second stamp survives
  ASSERT_EQ(kept.size(), 45u);
  for (std::size_t k = 0; k < kept.size(); ++k) EXPECT_DOUBLE_EQ(kept[k].sec, (2.0 * k) / 30.0);
  for (std::size_t k = 1; k < kept.size(); ++k) EXPECT_GE(kept[k].sec - kept[k - 1].sec, 0.05 - 1e-9);
  // emitted rate inside any 1 s window
  for (double w = 0.0; w < 2.0; w += 0.01) {
    const auto n = std::count_if(kept.begin(), kept.end(), [&](Timestamp t) { return t.sec >= w && t.sec < w + 1.0; });
    EXPECT_LE(n, 20);
  }
}

TEST(DownsampleImages, Passthrough) {
  std::vector<Timestamp> stamps;
  for (int i = 0; i < 40; ++i) stamps.emplace_back(i * 0.05);
  EXPECT_EQ(downsample_images(stamps, {10.0, 20.0, 0.5}).size(), 40u);
  const std::vector<Timestamp> one{Timestamp(0.37)};
  const auto kept = downsample_images(one, {10.0, 30.0, 0.5});
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], Timestamp(0.37));
}

TEST(SweepReconstructor, ModeBImagesAtFifteenHertz) {
  const StreamConfig cfg{10.0, 15.0, 0.5};
  const Stream s = make_stream(10.0, 2, 100, 200.0, {1.0 / 15.0, 2.0 / 15.0});
  const auto packets = run(cfg, s);
  ASSERT_GE(packets.size(), 2u);
  EXPECT_NEAR(packets[0].sweep.end.sec, 1.0 / 15.0, 1e-12);
  EXPECT_NEAR(packets[1].sweep.end.sec, 2.0 / 15.0, 1e-12);
  EXPECT_TRUE(packets[0].sweep.aligned_to_image);
  EXPECT_TRUE(packets[1].sweep.aligned_to_image);
  expect_matches(packets, assign(oracle_ab(cfg, point_stamps(s), {1.0 / 15.0, 2.0 / 15.0}), point_stamps(s)));
  expect_packet_invariants(packets);
}

TEST(SweepReconstructor, ModeCSingleImage) {
  const StreamConfig cfg{10.0, 4.0, 0.5};
  const Stream s = make_stream(10.0, 4, 100, 200.0, {0.25});
  const auto packets = run(cfg, s);
  ASSERT_GE(packets.size(), 2u);
  EXPECT_NEAR(packets[0].sweep.end.sec, 0.1, 1e-12);
  EXPECT_FALSE(packets[0].sweep.aligned_to_image);
  EXPECT_NEAR(packets[1].sweep.end.sec, 0.25, 1e-12);
  EXPECT_TRUE(packets[1].sweep.aligned_to_image);
  expect_matches(packets, assign(oracle_c(cfg, point_stamps(s), {0.25}, last_event(s)), point_stamps(s)));
  expect_packet_invariants(packets);
}

TEST(SweepReconstructor, ModeCImageTooCloseIsSkipped) {
  const StreamConfig cfg{10.0, 4.0, 0.5};
  // 0.03 is closer than half a period to the sweep start
  const Stream s = make_stream(10.0, 4, 100, 200.0, {0.03, 0.35});
  SweepReconstructor r(cfg);
  std::vector<SyncedPacket> packets;
  for (const SensorEvent& e : merge_streams(s.sweeps, s.imu, s.images)) {
    for (SyncedPacket& p : r.push(e)) packets.push_back(std::move(p));
  }
  for (SyncedPacket& p : r.flush()) packets.push_back(std::move(p));
  expect_matches(packets, assign(oracle_c(cfg, point_stamps(s), {0.03, 0.35}, last_event(s)), point_stamps(s)));
  EXPECT_EQ(r.dropped_images(), 1u);
}

TEST(SweepReconstructor, ModeARateCap) {
  const StreamConfig cfg{10.0, 30.0, 0.5};
  std::vector<double> images;
  for (int i = 1; i < 60; ++i) images.push_back(i / 30.0);
  const Stream s = make_stream(10.0, 20, 50, 200.0, images);
  const auto packets = run(cfg, s);
  expect_matches(packets, assign(oracle_ab(cfg, point_stamps(s), images), point_stamps(s)));
  expect_packet_invariants(packets);
  for (double w = 0.0; w < 1.0; w += 0.01) {
    const auto n = std::count_if(packets.begin(), packets.end(),
                                 [&](const SyncedPacket& p) { return p.sweep.end.sec >= w && p.sweep.end.sec < w + 1.0; });
    EXPECT_LE(n, 20);
  }
}

TEST(SweepReconstructor, EmptyPointStreamEmitsNothing) {
  SweepReconstructor r({10.0, 15.0, 0.5});
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(r.push(ImuSample{Timestamp(i * 0.005), Vec3::Zero(), Vec3::Zero()}).empty());
  EXPECT_TRUE(r.push(ImageEvent{Timestamp(0.5), nullptr}).empty());
  EXPECT_TRUE(r.flush().empty());
}

TEST(SweepReconstructor, FlushBufferedPoints) {
  SweepReconstructor r({10.0, 15.0, 0.5});
  r.push(ImuSample{Timestamp(0.0), Vec3::Zero(), Vec3::Zero()});
  for (int i = 0; i < 3; ++i) EXPECT_TRUE(r.push(LidarPoint{Vec3(i, 0, 0), Timestamp(0.001 * (i + 1)), 0.1}).empty());
  r.push(ImuSample{Timestamp(0.005), Vec3::Zero(), Vec3::Zero()});
  const auto out = r.flush();
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].sweep.points.size(), 3u);
  EXPECT_FALSE(out[0].sweep.aligned_to_image);
  EXPECT_FALSE(out[0].image.has_value());
  EXPECT_TRUE(r.flush().empty());
}

TEST(SweepReconstructor, FlushAfterEmittedBoundaryIsEmpty) {
  SweepReconstructor r({10.0, 15.0, 0.5});
  r.push(ImuSample{Timestamp(0.0), Vec3::Zero(), Vec3::Zero()});
  r.push(LidarPoint{Vec3(1, 0, 0), Timestamp(0.01), 0.1});
  r.push(LidarPoint{Vec3(1, 0, 0), Timestamp(0.05), 0.1});
  r.push(ImageEvent{Timestamp(0.05), nullptr});
  const auto emitted = r.push(ImuSample{Timestamp(0.06), Vec3::Zero(), Vec3::Zero()});
  ASSERT_EQ(emitted.size(), 1u);
  EXPECT_EQ(emitted[0].sweep.points.size(), 2u);
  EXPECT_TRUE(r.flush().empty());
}

TEST(SweepReconstructor, OutOfOrderEventNamesBothStamps) {
  SweepReconstructor r({10.0, 15.0, 0.5});
  r.push(LidarPoint{Vec3::Zero(), Timestamp(0.5), 0.1});
  try {
    r.push(ImuSample{Timestamp(0.25), Vec3::Zero(), Vec3::Zero()});
    FAIL() << "expected OrderingError";
  } catch (const OrderingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("0.250000000"), std::string::npos) << msg;
    EXPECT_NE(msg.find("0.500000000"), std::string::npos) << msg;
  }
}

TEST(SweepReconstructor, WithholdsUntilImuCatchesUp) {
  SweepReconstructor r({10.0, 15.0, 0.5});
  r.push(ImuSample{Timestamp(0.0), Vec3::Zero(), Vec3::Zero()});
  r.push(LidarPoint{Vec3::Zero(), Timestamp(0.01), 0.1});
  r.push(ImageEvent{Timestamp(0.05), nullptr});
  EXPECT_TRUE(r.push(LidarPoint{Vec3::Zero(), Timestamp(0.06), 0.1}).empty());
  EXPECT_TRUE(r.push(LidarPoint{Vec3::Zero(), Timestamp(0.07), 0.1}).empty());
  const auto out = r.push(ImuSample{Timestamp(0.08), Vec3::Zero(), Vec3::Zero()});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].sweep.end.sec, 0.05, 1e-12);
  ASSERT_FALSE(out[0].imu.empty());
  EXPECT_NEAR(out[0].imu.back().stamp.sec, 0.05, 1e-12);
}

TEST(SweepReconstructor, BoundedBuffering) {
  SweepReconstructor r({10.0, 15.0, 0.5}, 4);
  r.push(LidarPoint{Vec3::Zero(), Timestamp(0.001), 0.1});
  EXPECT_THROW(
      {
        for (int i = 1; i < 20; ++i) {
          r.push(LidarPoint{Vec3::Zero(), Timestamp(i * 0.066), 0.1});
          r.push(ImageEvent{Timestamp(i * 0.066 + 0.001), nullptr});
        }
      },
      BufferOverflowError);
}

TEST(SweepReconstructor, ImuCoversEachPacketInterval) {
  const StreamConfig cfg{10.0, 15.0, 0.5};
  std::vector<double> images;
  for (int i = 1; i < 30; ++i) images.push_back(i / 15.0 + 0.0013);
  const Stream s = make_stream(10.0, 20, 80, 200.0, images);
  const auto packets = run(cfg, s);
  ASSERT_GT(packets.size(), 20u);
  for (std::size_t k = 0; k + 1 < packets.size(); ++k) {
    const SyncedPacket& p = packets[k];
    ASSERT_FALSE(p.imu.empty());
    EXPECT_NEAR(p.imu.back().stamp.sec, p.sweep.end.sec, 1e-12) << k;
    if (k > 0) EXPECT_GT(p.imu.front().stamp.sec, packets[k - 1].sweep.end.sec - 1e-9) << k;
    for (std::size_t i = 1; i < p.imu.size(); ++i) EXPECT_LE(p.imu[i].stamp.sec - p.imu[i - 1].stamp.sec, 0.005 + 1e-9);
  }
}

TEST(SweepReconstructor, ConservationAndDeterminismFuzz) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_real_distribution<double> cam(2.0, 45.0);
    std::uniform_real_distribution<double> jitter(-0.004, 0.004);
    const StreamConfig cfg{10.0, cam(rng), 0.5};
    std::vector<double> images;
    for (double t = 0.01; t < 2.0; t += 1.0 / cfg.camera_hz) images.push_back(std::max(0.0, t + jitter(rng)));
    std::sort(images.begin(), images.end());
    const Stream s = make_stream(10.0, 20, 37, 200.0, images);
    const auto a = run(cfg, s);
    const auto b = run(cfg, s);

    std::map<std::pair<double, double>, int> in;
    std::map<std::pair<double, double>, int> out;
    for (const RawSweep& r : s.sweeps) {
      for (const LidarPoint& p : r.points) ++in[{p.stamp.sec, p.position.y()}];
    }
    for (const SyncedPacket& p : a) {
      for (const LidarPoint& q : p.sweep.points) ++out[{q.stamp.sec, q.position.y()}];
    }
    ASSERT_EQ(in, out) << "trial " << trial;
    expect_packet_invariants(a);

    const auto pts = point_stamps(s);
    const auto want = classify_mode(cfg) == SyncMode::kC ? assign(oracle_c(cfg, pts, images, last_event(s)), pts)
                                                          : assign(oracle_ab(cfg, pts, images), pts);
    expect_matches(a, want);

    ASSERT_EQ(a.size(), b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_EQ(a[k].sweep.end, b[k].sweep.end);
      EXPECT_EQ(a[k].sweep.points.size(), b[k].sweep.points.size());
      EXPECT_EQ(a[k].imu.size(), b[k].imu.size());
    }
  }
}
