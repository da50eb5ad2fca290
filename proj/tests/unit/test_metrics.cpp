#include <cmath>
#include <random>

#include "livo/error.hpp"
#include "livo/metrics.hpp"
#include "test_support.hpp"

using namespace livo;

namespace {

TrajectoryRecord wavy_path(int n, double dt = 0.1) {
  TrajectoryRecord t;
  for (int i = 0; i < n; ++i) {
    const double s = i * dt;
    t.push_back({Timestamp(s), {Rotation::from_rpy(0.0, 0.0, 0.3 * s), Vec3(2.0 * std::sin(0.4 * s), 1.5 * std::cos(0.3 * s), 0.2 * s)}});
  }
  return t;
}

TrajectoryRecord transformed(const TrajectoryRecord& t, const RigidTransform& g) {
  TrajectoryRecord out;
  for (const PoseKnot& k : t) out.push_back({k.stamp, g * k.pose});
  return out;
}

}  // namespace

TEST(Ate, IdentityIsZero) {
  const TrajectoryRecord t = wavy_path(100);
  const AteResult r = compute_ate(t, t);
  EXPECT_LT(r.rmse, 1e-12);
  EXPECT_EQ(r.associations, 100u);
}

TEST(Ate, RigidCopyIsZero) {
  std::mt19937_64 rng(12);
  const TrajectoryRecord ref = wavy_path(300);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform g = livo::test::random_transform(rng, 3.0, 100.0);
    const AteResult r = compute_ate(transformed(ref, g), ref);
    EXPECT_LE(r.rmse, 1e-9);
    // the returned alignment undoes g
    EXPECT_VEC_NEAR((r.alignment * g).translation, Vec3::Zero(), 1e-8);
  }
}

TEST(Ate, InvariantToGlobalTransformOfEither) {
  std::mt19937_64 rng(13);
  const TrajectoryRecord ref = wavy_path(200);
  TrajectoryRecord est = ref;
  std::normal_distribution<double> n(0.0, 0.05);
  for (PoseKnot& k : est) k.pose.translation += Vec3(n(rng), n(rng), n(rng));
  const double base = compute_ate(est, ref).rmse;
  for (int trial = 0; trial < 10; ++trial) {
    const RigidTransform g = livo::test::random_transform(rng, 3.0, 50.0);
    EXPECT_NEAR(compute_ate(transformed(est, g), ref).rmse, base, 1e-9);
    EXPECT_NEAR(compute_ate(est, transformed(ref, g)).rmse, base, 1e-9);
  }
}

TEST(Ate, SymmetricOffsetsGiveTheirMagnitude) {
  // every reference position appears twice, offset by +d and -d along a
  // fixed direction; by symmetry the best alignment is the identity
  const double d = 0.07;
  const Vec3 dir = Vec3(1.0, 2.0, -0.5).normalized();
  const TrajectoryRecord path = wavy_path(50);
  TrajectoryRecord ref;
  TrajectoryRecord est;
  int i = 0;
  for (const PoseKnot& k : path) {
    for (double sign : {1.0, -1.0}) {
      const Timestamp t(0.01 * i++);
      ref.push_back({t, k.pose});
      est.push_back({t, {k.pose.rotation, k.pose.translation + sign * d * dir}});
    }
  }
  const RigidTransform g{Rotation::from_rpy(0.3, -0.2, 1.0), Vec3(4, -2, 1)};
  EXPECT_NEAR(compute_ate(transformed(est, g), ref, 0.001).rmse, d, 1e-9);
}

TEST(Ate, MonteCarloNoiseLevel) {
  // sigma = 0.1 m is the total 3D RMS, so each axis gets 0.1 / sqrt(3)
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 0.1 / std::sqrt(3.0));
  const TrajectoryRecord ref = wavy_path(1000, 0.05);
  TrajectoryRecord est = ref;
  for (PoseKnot& k : est) k.pose.translation += Vec3(n(rng), n(rng), n(rng));
  const double rmse = compute_ate(est, ref).rmse;
  EXPECT_GE(rmse, 0.08);
  EXPECT_LE(rmse, 0.12);
}

TEST(Ate, AssociationGate) {
  const TrajectoryRecord ref = wavy_path(100, 0.1);
  TrajectoryRecord shifted = ref;
  for (PoseKnot& k : shifted) k.stamp = Timestamp(k.stamp.sec + 0.004);
  EXPECT_EQ(compute_ate(shifted, ref, 0.005).associations, 100u);
  EXPECT_THROW(compute_ate(shifted, ref, 0.001), InsufficientOverlapError);
}

TEST(Ate, TooFewAssociations) {
  const TrajectoryRecord t = wavy_path(2);
  EXPECT_THROW(compute_ate(t, t), InsufficientOverlapError);
  EXPECT_THROW(compute_ate({}, wavy_path(10)), InsufficientOverlapError);
}

TEST(EndToEnd, ClosedLoopIsZero) {
  TrajectoryRecord t;
  for (int i = 0; i <= 100; ++i) {
    const double a = 2.0 * 3.14159265358979323846 * i / 100.0;
    t.push_back({Timestamp(0.1 * i), {Rotation(), Vec3(3.0 * std::sin(a), 2.0 * (1.0 - std::cos(a)), 0.0)}});
  }
  EXPECT_NEAR(end_to_end_error(t), 0.0, 1e-12);
}

TEST(EndToEnd, StraightLine) {
  TrajectoryRecord t;
  for (int i = 0; i <= 10; ++i) t.push_back({Timestamp(i), {Rotation(), Vec3(i, 0.0, 0.0)}});
  EXPECT_DOUBLE_EQ(end_to_end_error(t), 10.0);
}

TEST(EndToEnd, NeedsTwoPoses) {
  EXPECT_THROW(end_to_end_error({}), DomainError);
  EXPECT_THROW(end_to_end_error(wavy_path(1)), DomainError);
  EXPECT_NO_THROW(end_to_end_error(wavy_path(2)));
}
