#pragma once

#include <algorithm>
#include <optional>

#include <Eigen/Core>

#include "livo/geometry.hpp"
#include "livo/image.hpp"

namespace livo {

/// Parameters refined by the camera filter: time offset between the IMU and
/// camera clocks, camera -> IMU extrinsic and pinhole intrinsics.
struct CameraParams {
  double time_offset{0.0};
  RigidTransform extrinsic;
  PinholeIntrinsics intrinsics;
};

inline constexpr int kCameraStateDim = 11;
using CameraVector = Eigen::Matrix<double, kCameraStateDim, 1>;
using CameraMatrix = Eigen::Matrix<double, kCameraStateDim, kCameraStateDim>;
using ProjectionJacobian = Eigen::Matrix<double, 2, kCameraStateDim>;

/// Error-state layout: [dt_off | d_theta (3) | d_t (3) | d_fx d_fy d_cx d_cy].
namespace cam_index {
inline constexpr int kTimeOffset = 0;
inline constexpr int kRot = 1;
inline constexpr int kTrans = 4;
inline constexpr int kIntrinsics = 7;
}  // namespace cam_index

/// Injects an error state: rotation on the right (R * Exp(d_theta)), all
/// other components additive.
CameraParams boxplus(const CameraParams& p, const CameraVector& dx);

/// p_c = (R_wo R_oc)^T p_w - R_oc^T t_oc - (R_wo R_oc)^T t_wo, with nav_pose
/// = (R_wo, t_wo) and extrinsic = (R_oc, t_oc).
Vec3 world_to_camera(const Vec3& p_w, const RigidTransform& nav_pose, const CameraParams& params);

Vec2 pinhole(const Vec3& p_c, const PinholeIntrinsics& k);

/// Pinhole projection plus the temporal correction
/// (time_offset / dt) * flow_delta. Throws BehindCameraError for z <= 1e-6.
Vec2 project(const Vec3& p_c, const CameraParams& params, const Vec2& flow_delta, double dt);

/// Projection of a world point together with d(pixel)/d(error state).
/// Empty when the point is behind the camera.
struct Projection {
  Vec2 pixel;
  Vec3 p_c;
  ProjectionJacobian jacobian;
};
std::optional<Projection> project_world(const Vec3& p_w, const RigidTransform& nav_pose, const CameraParams& params,
                                        const Vec2& flow_delta, double dt);

/// Reprojection residual observed - projection and its error-state Jacobian.
Vec2 pnp_residual(const Vec2& observed, const Vec3& p_w, const RigidTransform& nav_pose, const CameraParams& params,
                  const Vec2& flow_delta, double dt);
ProjectionJacobian pnp_jacobian(const Vec3& p_w, const RigidTransform& nav_pose, const CameraParams& params,
                                const Vec2& flow_delta, double dt);

/// Sampled intensity with its image-plane gradient; up to three channels.
struct IntensitySample {
  Vec3 value{Vec3::Zero()};
  Eigen::Matrix<double, 3, 2> gradient{Eigen::Matrix<double, 3, 2>::Zero()};
};

class IntensityField {
 public:
  virtual ~IntensityField() = default;
  virtual int channels() const = 0;
  virtual bool contains(const Vec2& uv) const = 0;
  virtual IntensitySample sample(const Vec2& uv) const = 0;
};

/// Bilinear image sampling; gradients by central differences one pixel
/// apart.
class ImageIntensityField final : public IntensityField {
 public:
  explicit ImageIntensityField(const ImageFrame& img, double margin = 2.0) : img_(img), margin_(margin) {}
  int channels() const override { return std::min(img_.channels, 3); }
  bool contains(const Vec2& uv) const override { return in_bounds(img_, uv, margin_); }
  IntensitySample sample(const Vec2& uv) const override;

 private:
  const ImageFrame& img_;
  double margin_;
};

using PhotometricJacobian = Eigen::Matrix<double, Eigen::Dynamic, kCameraStateDim>;

/// gamma - I(projection) over the field's channels. Empty when the point is
/// behind the camera or projects outside the field.
std::optional<Eigen::VectorXd> photometric_residual(const Vec3& color, const Vec3& p_w, const RigidTransform& nav_pose,
                                                    const CameraParams& params, const Vec2& flow_delta, double dt,
                                                    const IntensityField& field);
std::optional<PhotometricJacobian> photometric_jacobian(const Vec3& p_w, const RigidTransform& nav_pose,
                                                        const CameraParams& params, const Vec2& flow_delta, double dt,
                                                        const IntensityField& field);

}  // namespace livo
