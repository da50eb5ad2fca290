#include "livo/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "livo/error.hpp"

namespace livo {

namespace {

Eigen::Quaterniond canonical(const Eigen::Quaterniond& q) {
  Eigen::Quaterniond out = q.normalized();
  if (out.w() < 0.0) out.coeffs() = -out.coeffs();
  return out;
}

}  // namespace

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Rotation::Rotation(const Eigen::Quaterniond& q) : q_(canonical(q)) {}

Rotation Rotation::from_matrix(const Mat3& m) { return Rotation(Eigen::Quaterniond(m)); }

Rotation Rotation::about_axis(const Vec3& axis, double angle) {
  return Rotation(Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized())));
}

Rotation Rotation::from_rpy(double roll, double pitch, double yaw) {
  const Eigen::Quaterniond q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
                               Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                               Eigen::AngleAxisd(roll, Vec3::UnitX());
  return Rotation(q);
}

double Rotation::angle() const {
  return 2.0 * std::atan2(q_.vec().norm(), std::abs(q_.w()));
}

Rotation so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  Eigen::Quaterniond q;
  if (theta < 1e-12) {
    q = Eigen::Quaterniond(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z());
  } else {
    const double half = 0.5 * theta;
    const Vec3 v = std::sin(half) / theta * omega;
    q = Eigen::Quaterniond(std::cos(half), v.x(), v.y(), v.z());
  }
  return Rotation(q);
}

Vec3 so3_log(const Rotation& r) {
  const Eigen::Quaterniond& q = r.quaternion();
  const Vec3 v = q.vec();
  const double s = v.norm();
  const double theta = 2.0 * std::atan2(s, q.w());
  if (theta >= std::numbers::pi - 1e-6) {
    throw DomainError("so3_log: rotation angle " + std::to_string(theta) + " too close to pi");
  }
  if (s < 1e-12) return 2.0 * v / q.w();
  return theta / s * v;
}

Rotation slerp(const Rotation& a, const Rotation& b, double s) {
  if (s == 0.0) return a;
  if (s == 1.0) return b;
  return Rotation(a.quaternion().slerp(s, b.quaternion()));
}

RigidTransform RigidTransform::inverse() const {
  const Rotation inv = rotation.inverse();
  return {inv, -(inv * translation)};
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

RigidTransform interpolate_pose(const RigidTransform& p0, Timestamp t0, const RigidTransform& p1,
                                Timestamp t1, Timestamp t) {
  if (t < t0 - kTimeEpsilon || t > t1 + kTimeEpsilon) {
    throw DomainError("interpolate_pose: t=" + std::to_string(t.sec) + " outside [" +
                      std::to_string(t0.sec) + ", " + std::to_string(t1.sec) + "]");
  }
  const double span = t1 - t0;
  if (span <= 0.0 || t <= t0) return p0;
  if (t >= t1) return p1;
  const double s = (t - t0) / span;
  return {slerp(p0.rotation, p1.rotation, s), (1.0 - s) * p0.translation + s * p1.translation};
}

ImuSample interpolate_imu(const ImuSample& a, const ImuSample& b, Timestamp t) {
  const double span = b.stamp - a.stamp;
  if (span <= 0.0) return {t, b.gyro, b.accel};
  const double s = (t - a.stamp) / span;
  return {t, (1.0 - s) * a.gyro + s * b.gyro, (1.0 - s) * a.accel + s * b.accel};
}

NavState integrate_imu(const NavState& state, std::span<const ImuSample> samples, const Vec3& gravity) {
  return integrate_imu(state, samples, gravity, nullptr);
}

NavState integrate_imu(const NavState& state, std::span<const ImuSample> samples, const Vec3& gravity,
                       std::vector<PoseKnot>* knots) {
  NavState out = state;
  if (knots) {
    knots->clear();
    knots->push_back({state.stamp, state.pose});
  }
  if (samples.empty()) return out;

  Vec3 prev_gyro = samples.front().gyro;
  Vec3 prev_accel = samples.front().accel;
  Timestamp t = state.stamp;
  Rotation rot = state.pose.rotation;
  Vec3 pos = state.pose.translation;
  Vec3 vel = state.velocity;

  for (const ImuSample& s : samples) {
    const double dt = s.stamp - t;
    if (dt > 0.0) {
      const Vec3 omega = 0.5 * (prev_gyro + s.gyro) - state.gyro_bias;
      const Rotation next_rot = rot * so3_exp(omega * dt);
      const Vec3 acc_world = 0.5 * (rot * (prev_accel - state.accel_bias) +
                                    next_rot * (s.accel - state.accel_bias)) + gravity;
      pos += vel * dt + 0.5 * acc_world * dt * dt;
      vel += acc_world * dt;
      rot = next_rot;
      t = s.stamp;
      if (knots) knots->push_back({t, RigidTransform{rot, pos}});
    }
    prev_gyro = s.gyro;
    prev_accel = s.accel;
  }

  out.stamp = t;
  out.pose = RigidTransform{rot, pos};
  out.velocity = vel;
  return out;
}

}  // namespace livo
