#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "livo/error.hpp"
#include "livo/lio.hpp"
#include "test_support.hpp"

using namespace livo;
using livo::test::rotation_distance;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::vector<ImuSample> constant_imu(double t0, double t1, double dt, const Vec3& gyro, const Vec3& accel) {
  std::vector<ImuSample> out;
  const int n = static_cast<int>(std::lround((t1 - t0) / dt));
  for (int i = 0; i <= n; ++i) out.push_back({Timestamp(t0 + i * dt), gyro, accel});
  return out;
}

// Floor z=0 and walls x=0, y=0 as a dense grid in world coordinates.
std::vector<Vec3> corner_map_points(double step = 0.12, double extent = 6.0) {
  std::vector<Vec3> pts;
  for (double a = step / 2; a < extent; a += step) {
    for (double b = step / 2; b < extent; b += step) {
      pts.emplace_back(a, b, 0.0);
      pts.emplace_back(0.0, a, b);
      pts.emplace_back(a, 0.0, b);
    }
  }
  return pts;
}

// Points well inside each face, so plane neighbourhoods never straddle an edge.
std::vector<Vec3> corner_scan_world(std::mt19937_64& rng, int per_face = 250) {
  std::uniform_real_distribution<double> u(0.7, 5.0);
  std::vector<Vec3> pts;
  for (int i = 0; i < per_face; ++i) {
    pts.emplace_back(u(rng), u(rng), 0.0);
    pts.emplace_back(0.0, u(rng), u(rng));
    pts.emplace_back(u(rng), 0.0, u(rng));
  }
  return pts;
}

// Drops points closer than `margin` to an edge of the corner.
std::vector<Vec3> interior(const std::vector<Vec3>& pts, double margin = 0.7) {
  std::vector<Vec3> out;
  for (const Vec3& p : pts) {
    bool keep = true;
    for (int i = 0; i < 3; ++i) {
      if (p(i) != 0.0 && p(i) < margin) keep = false;
    }
    if (keep) out.push_back(p);
  }
  return out;
}

VoxelMap corner_map() {
  VoxelMap map;
  map.update(corner_map_points(), Timestamp(0.0));
  return map;
}

LioConfig test_config() {
  LioConfig cfg;
  cfg.lidar_to_imu = {Rotation::from_rpy(0.0, 0.0, 0.3), Vec3(0.05, 0.0, 0.1)};
  return cfg;
}

// World points seen from `truth` expressed in the LiDAR frame.
std::vector<Vec3> to_lidar(const std::vector<Vec3>& world, const RigidTransform& truth, const LioConfig& cfg) {
  const RigidTransform lidar_from_world = compose(truth, cfg.lidar_to_imu).inverse();
  std::vector<Vec3> out;
  for (const Vec3& p : world) out.push_back(lidar_from_world.apply(p));
  return out;
}

NavState state_at(const RigidTransform& pose) {
  NavState s;
  s.stamp = Timestamp(1.0);
  s.pose = pose;
  s.covariance = Mat15::Identity() * 1e-4;
  s.covariance.topLeftCorner<6, 6>() = Eigen::Matrix<double, 6, 6>::Identity() * 1e-2;
  return s;
}

}  // namespace

TEST(Propagate, ZeroNoiseZeroRatesKeepsCovarianceAndPose) {
  LioConfig cfg;
  cfg.gravity = Vec3::Zero();
  cfg.noise = {0.0, 0.0, 0.0, 0.0};
  NavState s;
  s.covariance.setZero();
  s.covariance.topLeftCorner<6, 6>() = Eigen::Matrix<double, 6, 6>::Identity() * 3e-3;
  const NavState out = propagate(s, constant_imu(0.0, 0.5, 0.005, Vec3::Zero(), Vec3::Zero()), cfg);
  EXPECT_LT((out.covariance - s.covariance).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT(out.pose.translation.norm(), 1e-15);
  EXPECT_LT(out.pose.rotation.angle(), 1e-15);
}

TEST(Propagate, NoiseInflatesTrace) {
  LioConfig cfg;
  std::mt19937_64 rng(31);
  NavState s;
  for (int trial = 0; trial < 20; ++trial) {
    const NavState next = propagate(
        s,
        constant_imu(s.stamp.sec, s.stamp.sec + 0.1, 0.005, livo::test::random_vec(rng, 0.5),
                     Vec3(0, 0, 9.81) + livo::test::random_vec(rng, 1.0)),
        cfg);
    EXPECT_GT(next.covariance.trace(), s.covariance.trace());
    EXPECT_TRUE(covariance_is_valid(next.covariance));
    s = next;
  }
}

TEST(Propagate, ConstantVelocityAdvances) {
  LioConfig cfg;
  NavState s;
  s.velocity = Vec3(1.5, -0.5, 0.2);
  const NavState out = propagate(s, constant_imu(0.0, 0.1, 0.005, Vec3::Zero(), Vec3(0, 0, 9.81)), cfg);
  EXPECT_VEC_NEAR(out.pose.translation, s.velocity * 0.1, 1e-6);
  EXPECT_NEAR(out.stamp.sec, 0.1, 1e-12);
}

TEST(Propagate, GapIsRejected) {
  LioConfig cfg;
  NavState s;
  std::vector<ImuSample> imu = constant_imu(0.0, 0.1, 0.005, Vec3::Zero(), Vec3(0, 0, 9.81));
  imu.erase(imu.begin() + 5, imu.begin() + 8);
  EXPECT_THROW(propagate(s, imu, cfg), ImuGapError);
}

TEST(CompensateMotion, StationaryIsIdentity) {
  ReconstructedSweep sweep;
  sweep.begin = Timestamp(0.0);
  sweep.end = Timestamp(0.1);
  std::mt19937_64 rng(32);
  for (int i = 0; i < 50; ++i) sweep.points.push_back({livo::test::random_vec(rng, 10.0), Timestamp(i * 0.002), 0.5});
  NavState prev;
  const auto imu = constant_imu(0.0, 0.1, 0.005, Vec3::Zero(), Vec3(0, 0, 9.81));
  const RigidTransform ext{Rotation::from_rpy(0.1, 0.2, 0.3), Vec3(0.1, 0.2, 0.3)};
  const DeskewResult r = compensate_motion(sweep, prev, imu, ext, Vec3(0, 0, -9.81));
  ASSERT_EQ(r.points.size(), sweep.points.size());
  EXPECT_EQ(r.rejected, 0u);
  for (std::size_t i = 0; i < r.points.size(); ++i) EXPECT_VEC_NEAR(r.points[i], sweep.points[i].position, 1e-9);
}

TEST(CompensateMotion, TranslatingOneMeterPerSecond) {
  ReconstructedSweep sweep;
  sweep.begin = Timestamp(0.0);
  sweep.end = Timestamp(0.1);
  sweep.points.push_back({Vec3(3, 1, 0.5), Timestamp(0.05), 0.5});
  sweep.points.push_back({Vec3(3, 1, 0.5), Timestamp(0.1), 0.5});
  NavState prev;
  prev.velocity = Vec3(1, 0, 0);
  const auto imu = constant_imu(0.0, 0.1, 0.005, Vec3::Zero(), Vec3::Zero());
  const DeskewResult r = compensate_motion(sweep, prev, imu, RigidTransform::identity(), Vec3::Zero());
  ASSERT_EQ(r.points.size(), 2u);
  EXPECT_VEC_NEAR(r.points[0], Vec3(2.95, 1, 0.5), 1e-9);
  EXPECT_VEC_NEAR(r.points[1], Vec3(3, 1, 0.5), 0.0);
}

TEST(CompensateMotion, EmptyAndUncovered) {
  ReconstructedSweep sweep;
  sweep.begin = Timestamp(0.0);
  sweep.end = Timestamp(0.1);
  NavState prev;
  const auto imu = constant_imu(0.0, 0.1, 0.005, Vec3::Zero(), Vec3::Zero());
  EXPECT_TRUE(compensate_motion(sweep, prev, imu, {}, Vec3::Zero()).points.empty());
  sweep.points.push_back({Vec3(1, 0, 0), Timestamp(0.5), 0.5});
  sweep.points.push_back({Vec3(1, 0, 0), Timestamp(0.05), 0.5});
  const DeskewResult r = compensate_motion(sweep, prev, imu, {}, Vec3::Zero());
  EXPECT_EQ(r.rejected, 1u);
  EXPECT_EQ(r.points.size(), 1u);
}

TEST(RegisterScan, EmptyMapIsBootstrap) {
  const VoxelMap map;
  const NavState predicted = state_at({Rotation::from_rpy(0.1, 0, 0), Vec3(1, 2, 3)});
  const std::vector<Vec3> pts{Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const RegistrationResult r = register_scan(pts, map, predicted, test_config());
  EXPECT_EQ(r.status, RegistrationStatus::kBootstrap);
  EXPECT_EQ(r.state.pose.translation, predicted.pose.translation);
  EXPECT_EQ(r.state.covariance, predicted.covariance);
}

TEST(RegisterScan, ZeroResidualFixedPoint) {
  const VoxelMap map = corner_map();
  const LioConfig cfg = test_config();
  // scan exactly on stored map points
  const std::vector<Vec3> world = interior(corner_map_points(0.36, 5.0));
  const RigidTransform truth{Rotation::from_rpy(0.05, -0.03, 0.8), Vec3(2.0, 2.5, 1.2)};
  const NavState predicted = state_at(truth);
  const RegistrationResult r = register_scan(to_lidar(world, truth, cfg), map, predicted, cfg);
  EXPECT_EQ(r.status, RegistrationStatus::kConverged);
  EXPECT_GE(r.correspondences, 100u);
  EXPECT_LT(r.residual_rms, 1e-6);
  EXPECT_VEC_NEAR(r.state.pose.translation, truth.translation, 1e-6);
  EXPECT_LT(rotation_distance(r.state.pose.rotation, truth.rotation), 1e-6);
  EXPECT_TRUE(covariance_is_valid(r.state.covariance));
}

TEST(RegisterScan, RecoversPerturbedCornerPose) {
  const VoxelMap map = corner_map();
  const LioConfig cfg = test_config();
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const RigidTransform truth{Rotation::from_rpy(0.05 * trial / 10.0, -0.03, 0.6 + 0.05 * trial),
                               Vec3(2.0, 2.5, 1.2) + livo::test::random_vec(rng, 0.3)};
    Vec3 dir = livo::test::random_vec(rng);
    dir.normalize();
    Vec3 axis = livo::test::random_vec(rng);
    axis.normalize();
    const RigidTransform perturbed{truth.rotation * Rotation::about_axis(axis, 1.0 * kDeg),
                                   truth.translation + 0.05 * dir};
    const std::vector<Vec3> scan = to_lidar(corner_scan_world(rng), truth, cfg);
    const RegistrationResult r = register_scan(scan, map, state_at(perturbed), cfg);
    EXPECT_NE(r.status, RegistrationStatus::kDegenerate);
    EXPECT_LT((r.state.pose.translation - truth.translation).norm(), 1e-3) << "trial " << trial;
    EXPECT_LT(rotation_distance(r.state.pose.rotation, truth.rotation), 0.02 * kDeg) << "trial " << trial;
    EXPECT_TRUE(covariance_is_valid(r.state.covariance));
    // the update never increases uncertainty on the pose block
    const double prior_trace = state_at(perturbed).covariance.topLeftCorner<6, 6>().trace();
    const double post_trace = r.state.covariance.topLeftCorner<6, 6>().trace();
    EXPECT_LE(post_trace, prior_trace);
  }
}

TEST(RegisterScan, InvariantToRigidReExpression) {
  const LioConfig cfg = test_config();
  std::mt19937_64 rng(34);
  const std::vector<Vec3> map_world = corner_map_points();
  const RigidTransform truth{Rotation::from_rpy(0.02, -0.03, 0.7), Vec3(2.0, 2.5, 1.2)};
  const RigidTransform perturbed{truth.rotation * Rotation::from_rpy(0.01, 0.0, -0.01), truth.translation + Vec3(0.03, -0.02, 0.01)};
  const std::vector<Vec3> scan = to_lidar(corner_scan_world(rng), truth, cfg);

  VoxelMap map;
  map.update(map_world, Timestamp(0.0));
  const RegistrationResult a = register_scan(scan, map, state_at(perturbed), cfg);

  for (int trial = 0; trial < 3; ++trial) {
    const RigidTransform g = livo::test::random_transform(rng, 3.0, 20.0);
    std::vector<Vec3> moved;
    for (const Vec3& p : map_world) moved.push_back(g.apply(p));
    VoxelMap gmap;
    gmap.update(moved, Timestamp(0.0));
    const RegistrationResult b = register_scan(scan, gmap, transform_state(g, state_at(perturbed)), cfg);
    const RigidTransform expected = compose(g, a.state.pose);
    EXPECT_LT((b.state.pose.translation - expected.translation).norm(), 1e-6) << trial;
    EXPECT_LT(rotation_distance(b.state.pose.rotation, expected.rotation), 1e-6) << trial;
  }
}

TEST(RegisterScan, TooFewCorrespondencesInflatesPose) {
  const VoxelMap map = corner_map();
  const LioConfig cfg = test_config();
  const RigidTransform truth{Rotation(), Vec3(2, 2, 1)};
  const NavState predicted = state_at(truth);
  // three points only
  const std::vector<Vec3> scan = to_lidar({Vec3(2, 2, 0), Vec3(3, 3, 0), Vec3(0, 2, 1)}, truth, cfg);
  const RegistrationResult r = register_scan(scan, map, predicted, cfg);
  EXPECT_EQ(r.status, RegistrationStatus::kDegenerate);
  EXPECT_EQ(r.state.pose.translation, predicted.pose.translation);
  EXPECT_NEAR(r.state.covariance(0, 0), 10.0 * predicted.covariance(0, 0), 1e-15);
  EXPECT_NEAR(r.state.covariance(5, 5), 10.0 * predicted.covariance(5, 5), 1e-15);
  EXPECT_EQ(r.state.covariance(8, 8), predicted.covariance(8, 8));
}

TEST(Lio, PacketStateStampsAndCovarianceValidity) {
  const LioConfig cfg = test_config();
  const RigidTransform truth{Rotation(), Vec3(2.0, 2.5, 1.2)};
  NavState initial;
  initial.pose = truth;
  LidarInertialOdometry odo(cfg, initial);
  const std::vector<Vec3> world = interior(corner_map_points(0.2, 5.0));
  double begin = 0.0;
  const double ends[] = {0.0667, 0.1333, 0.2, 0.2667, 0.3333};
  for (double end : ends) {
    SyncedPacket packet;
    packet.sweep.begin = Timestamp(begin);
    packet.sweep.end = Timestamp(end);
    packet.sweep.aligned_to_image = true;
    const std::vector<Vec3> local = to_lidar(world, truth, cfg);
    for (std::size_t i = 0; i < local.size(); ++i) {
      const double t = begin + (end - begin) * (static_cast<double>(i) + 1.0) / static_cast<double>(local.size());
      packet.sweep.points.push_back({local[i], Timestamp(t), 0.5});
    }
    for (double t = std::ceil(begin / 0.005 + 1e-6) * 0.005; t < end - 1e-9; t += 0.005) {
      packet.imu.push_back({Timestamp(t), Vec3::Zero(), Vec3(0, 0, 9.81)});
    }
    packet.imu.push_back({Timestamp(end), Vec3::Zero(), Vec3(0, 0, 9.81)});
    const LioStep step = odo.process(packet);
    EXPECT_NEAR(odo.state().stamp.sec, end, 1e-9);
    EXPECT_TRUE(covariance_is_valid(odo.state().covariance));
    EXPECT_LT((odo.state().pose.translation - truth.translation).norm(), 1e-3);
    if (begin > 0.0) EXPECT_NE(step.registration.status, RegistrationStatus::kBootstrap);
    begin = end;
  }
  EXPECT_FALSE(odo.map().empty());
}
