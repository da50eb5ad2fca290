#pragma once

#include <compare>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace livo {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Tolerance used for every timestamp comparison.
inline constexpr double kTimeEpsilon = 1e-9;

/// Seconds since the stream epoch.
struct Timestamp {
  double sec{0.0};

  constexpr Timestamp() = default;
  constexpr explicit Timestamp(double seconds) : sec(seconds) {}

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
  friend constexpr double operator-(Timestamp a, Timestamp b) { return a.sec - b.sec; }
  friend constexpr Timestamp operator+(Timestamp a, double d) { return Timestamp(a.sec + d); }
  friend constexpr Timestamp operator-(Timestamp a, double d) { return Timestamp(a.sec - d); }
};

inline bool nearly_equal(Timestamp a, Timestamp b, double eps = kTimeEpsilon) {
  return (a.sec - b.sec) <= eps && (b.sec - a.sec) <= eps;
}

Mat3 skew(const Vec3& v);

/// Unit quaternion rotation, canonicalized to w >= 0 after every operation.
class Rotation {
 public:
  Rotation() : q_(Eigen::Quaterniond::Identity()) {}
  explicit Rotation(const Eigen::Quaterniond& q);

  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& m);
  /// Rotation of `angle` radians about `axis` (axis need not be unit).
  static Rotation about_axis(const Vec3& axis, double angle);
  /// Intrinsic roll-pitch-yaw (Z-Y-X), radians.
  static Rotation from_rpy(double roll, double pitch, double yaw);

  const Eigen::Quaterniond& quaternion() const { return q_; }
  Mat3 matrix() const { return q_.toRotationMatrix(); }
  double angle() const;

  Rotation inverse() const { return Rotation(q_.conjugate()); }
  Vec3 operator*(const Vec3& v) const { return q_ * v; }
  Rotation operator*(const Rotation& other) const { return Rotation(q_ * other.q_); }

 private:
  Eigen::Quaterniond q_;
};

/// Exponential map from a rotation vector (radians).
Rotation so3_exp(const Vec3& omega);
/// Logarithm; throws DomainError when the angle is within 1e-6 of pi.
Vec3 so3_log(const Rotation& r);
Rotation slerp(const Rotation& a, const Rotation& b, double s);

struct RigidTransform {
  Rotation rotation;
  Vec3 translation{Vec3::Zero()};

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }
  RigidTransform inverse() const;
  Eigen::Matrix4d matrix() const;
};

/// compose(a, b).apply(p) == a.apply(b.apply(p)).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

/// Spherical interpolation of rotation, linear of translation. Throws
/// DomainError for t outside [t0, t1].
RigidTransform interpolate_pose(const RigidTransform& p0, Timestamp t0, const RigidTransform& p1,
                                Timestamp t1, Timestamp t);

struct ImuSample {
  Timestamp stamp;
  Vec3 gyro{Vec3::Zero()};   // rad/s, body frame
  Vec3 accel{Vec3::Zero()};  // specific force, m/s^2, body frame
};

/// Linear interpolation between two IMU samples.
ImuSample interpolate_imu(const ImuSample& a, const ImuSample& b, Timestamp t);

using Mat15 = Eigen::Matrix<double, 15, 15>;

/// Error-state block offsets inside NavState::covariance.
namespace nav_index {
inline constexpr int kRot = 0;
inline constexpr int kPos = 3;
inline constexpr int kVel = 6;
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;
}  // namespace nav_index

/// Platform state: pose is world <- IMU.
struct NavState {
  Timestamp stamp;
  RigidTransform pose;
  Vec3 velocity{Vec3::Zero()};
  Vec3 gyro_bias{Vec3::Zero()};
  Vec3 accel_bias{Vec3::Zero()};
  Mat15 covariance{Mat15::Identity() * 1e-6};
};

/// Midpoint integration of bias-corrected IMU samples. Samples must be ordered
/// with stamps in [state.stamp, target]; a sample stamped exactly at
/// state.stamp only anchors the first midpoint. Without an anchor the first
/// interval holds the first sample constant. Covariance is left untouched.
NavState integrate_imu(const NavState& state, std::span<const ImuSample> samples, const Vec3& gravity);

/// Same integration, also returning the pose at state.stamp and at every
/// sample stamp (used for per-point de-skewing).
struct PoseKnot {
  Timestamp stamp;
  RigidTransform pose;
};
NavState integrate_imu(const NavState& state, std::span<const ImuSample> samples, const Vec3& gravity,
                       std::vector<PoseKnot>* knots);

}  // namespace livo
