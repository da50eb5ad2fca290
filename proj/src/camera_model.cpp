#include "livo/camera_model.hpp"

#include <string>

#include "livo/error.hpp"

namespace livo {

using namespace cam_index;

CameraParams boxplus(const CameraParams& p, const CameraVector& dx) {
  CameraParams out = p;
  out.time_offset += dx(kTimeOffset);
  out.extrinsic.rotation = p.extrinsic.rotation * so3_exp(dx.segment<3>(kRot));
  out.extrinsic.translation += dx.segment<3>(kTrans);
  out.intrinsics.fx += dx(kIntrinsics + 0);
  out.intrinsics.fy += dx(kIntrinsics + 1);
  out.intrinsics.cx += dx(kIntrinsics + 2);
  out.intrinsics.cy += dx(kIntrinsics + 3);
  return out;
}

Vec3 world_to_camera(const Vec3& p_w, const RigidTransform& nav_pose, const CameraParams& params) {
  const Mat3 r_wc = nav_pose.rotation.matrix() * params.extrinsic.rotation.matrix();
  const Mat3 r_oc = params.extrinsic.rotation.matrix();
  return r_wc.transpose() * p_w - r_oc.transpose() * params.extrinsic.translation -
         r_wc.transpose() * nav_pose.translation;
}

Vec2 pinhole(const Vec3& p_c, const PinholeIntrinsics& k) {
  return {k.fx * p_c.x() / p_c.z() + k.cx, k.fy * p_c.y() / p_c.z() + k.cy};
}

Vec2 project(const Vec3& p_c, const CameraParams& params, const Vec2& flow_delta, double dt) {
  if (p_c.z() <= 1e-6) throw BehindCameraError("project: point depth " + std::to_string(p_c.z()) + " <= 1e-6");
  Vec2 px = pinhole(p_c, params.intrinsics);
  if (params.time_offset != 0.0) {
    if (!(dt > 0.0)) throw DomainError("project: non-positive frame interval with nonzero time offset");
    px += (params.time_offset / dt) * flow_delta;
  }
  return px;
}

std::optional<Projection> project_world(const Vec3& p_w, const RigidTransform& nav_pose, const CameraParams& params,
                                        const Vec2& flow_delta, double dt) {
  const Vec3 pc = world_to_camera(p_w, nav_pose, params);
  if (pc.z() <= 1e-6) return std::nullopt;
  const PinholeIntrinsics& k = params.intrinsics;
  const double inv_z = 1.0 / pc.z();
  const double xn = pc.x() * inv_z;
  const double yn = pc.y() * inv_z;

  Projection out;
  out.p_c = pc;
  out.pixel = {k.fx * xn + k.cx, k.fy * yn + k.cy};
  const double temporal = dt > 0.0 ? 1.0 / dt : 0.0;
  out.pixel += params.time_offset * temporal * flow_delta;

  Eigen::Matrix<double, 2, 3> d_pc;
  d_pc << k.fx * inv_z, 0.0, -k.fx * xn * inv_z,
          0.0, k.fy * inv_z, -k.fy * yn * inv_z;

  ProjectionJacobian& j = out.jacobian;
  j.col(kTimeOffset) = temporal * flow_delta;
  j.block<2, 3>(0, kRot) = d_pc * skew(pc);
  j.block<2, 3>(0, kTrans) = -d_pc * params.extrinsic.rotation.matrix().transpose();
  j.block<2, 4>(0, kIntrinsics) << xn, 0.0, 1.0, 0.0,
                                   0.0, yn, 0.0, 1.0;
  return out;
}

Vec2 pnp_residual(const Vec2& observed, const Vec3& p_w, const RigidTransform& nav_pose, const CameraParams& params,
                  const Vec2& flow_delta, double dt) {
  const Vec3 pc = world_to_camera(p_w, nav_pose, params);
  return observed - project(pc, params, flow_delta, dt);
}

ProjectionJacobian pnp_jacobian(const Vec3& p_w, const RigidTransform& nav_pose, const CameraParams& params,
                                const Vec2& flow_delta, double dt) {
  const auto proj = project_world(p_w, nav_pose, params, flow_delta, dt);
  if (!proj) throw BehindCameraError("pnp_jacobian: point behind camera");
  return -proj->jacobian;
}

IntensitySample ImageIntensityField::sample(const Vec2& uv) const {
  IntensitySample s;
  for (int c = 0; c < channels(); ++c) {
    s.value(c) = sample_bilinear(img_, uv.x(), uv.y(), c);
    s.gradient(c, 0) = 0.5 * (sample_bilinear(img_, uv.x() + 1.0, uv.y(), c) -
                              sample_bilinear(img_, uv.x() - 1.0, uv.y(), c));
    s.gradient(c, 1) = 0.5 * (sample_bilinear(img_, uv.x(), uv.y() + 1.0, c) -
                              sample_bilinear(img_, uv.x(), uv.y() - 1.0, c));
  }
  return s;
}

std::optional<Eigen::VectorXd> photometric_residual(const Vec3& color, const Vec3& p_w, const RigidTransform& nav_pose,
                                                    const CameraParams& params, const Vec2& flow_delta, double dt,
                                                    const IntensityField& field) {
  const auto proj = project_world(p_w, nav_pose, params, flow_delta, dt);
  if (!proj || !field.contains(proj->pixel)) return std::nullopt;
  const int c = field.channels();
  const IntensitySample s = field.sample(proj->pixel);
  return Eigen::VectorXd(color.head(c) - s.value.head(c));
}

std::optional<PhotometricJacobian> photometric_jacobian(const Vec3& p_w, const RigidTransform& nav_pose,
                                                        const CameraParams& params, const Vec2& flow_delta, double dt,
                                                        const IntensityField& field) {
  const auto proj = project_world(p_w, nav_pose, params, flow_delta, dt);
  if (!proj || !field.contains(proj->pixel)) return std::nullopt;
  const int c = field.channels();
  const IntensitySample s = field.sample(proj->pixel);
  return PhotometricJacobian(-s.gradient.topRows(c) * proj->jacobian);
}

}  // namespace livo
