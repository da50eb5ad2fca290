#include "livo/lio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_set>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "livo/error.hpp"

namespace livo {

using Vec15 = Eigen::Matrix<double, 15, 1>;
using namespace nav_index;

namespace {

NavState boxplus(const NavState& s, const Vec15& dx) {
  NavState out = s;
  out.pose.rotation = s.pose.rotation * so3_exp(dx.segment<3>(kRot));
  out.pose.translation += dx.segment<3>(kPos);
  out.velocity += dx.segment<3>(kVel);
  out.gyro_bias += dx.segment<3>(kGyroBias);
  out.accel_bias += dx.segment<3>(kAccelBias);
  return out;
}

Mat15 symmetrized(const Mat15& p) { return 0.5 * (p + p.transpose()); }

}  // namespace

std::string_view to_string(RegistrationStatus s) {
  switch (s) {
    case RegistrationStatus::kConverged: return "converged";
    case RegistrationStatus::kMaxIterations: return "max_iterations";
    case RegistrationStatus::kBootstrap: return "bootstrap";
    case RegistrationStatus::kDegenerate: return "degenerate";
  }
  return "?";
}

bool covariance_is_valid(const Mat15& p, double tol) {
  if (!p.allFinite()) return false;
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Mat15> es(p, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tol;
}

NavState propagate(const NavState& state, std::span<const ImuSample> imu, const LioConfig& cfg) {
  const double max_gap = 2.0 * cfg.imu_period + kTimeEpsilon;
  Timestamp t = state.stamp;
  for (const ImuSample& s : imu) {
    if (s.stamp - t > max_gap) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "IMU gap of %.6f s between %.9f and %.9f (nominal period %.6f s)",
                    s.stamp - t, t.sec, s.stamp.sec, cfg.imu_period);
      throw ImuGapError(buf);
    }
    t = std::max(t, s.stamp);
  }

  NavState out = integrate_imu(state, imu, cfg.gravity);
  if (imu.empty()) return out;

  // Covariance transport mirrors the midpoint mean integration.
  Mat15 p = state.covariance;
  Rotation rot = state.pose.rotation;
  Vec3 prev_gyro = imu.front().gyro;
  Vec3 prev_accel = imu.front().accel;
  t = state.stamp;
  const double qg = cfg.noise.gyro * cfg.noise.gyro;
  const double qa = cfg.noise.accel * cfg.noise.accel;
  const double qbg = cfg.noise.gyro_bias_walk * cfg.noise.gyro_bias_walk;
  const double qba = cfg.noise.accel_bias_walk * cfg.noise.accel_bias_walk;

  for (const ImuSample& s : imu) {
    const double dt = s.stamp - t;
    if (dt > 0.0) {
      const Vec3 omega = 0.5 * (prev_gyro + s.gyro) - state.gyro_bias;
      const Vec3 acc = 0.5 * (prev_accel + s.accel) - state.accel_bias;
      const Mat3 r = rot.matrix();

      Mat15 f = Mat15::Identity();
      f.block<3, 3>(kRot, kRot) = so3_exp(-omega * dt).matrix();
      f.block<3, 3>(kRot, kGyroBias) = -Mat3::Identity() * dt;
      f.block<3, 3>(kPos, kVel) = Mat3::Identity() * dt;
      f.block<3, 3>(kVel, kRot) = -r * skew(acc) * dt;
      f.block<3, 3>(kVel, kAccelBias) = -r * dt;

      p = f * p * f.transpose();
      p.block<3, 3>(kRot, kRot).diagonal().array() += qg * dt;
      p.block<3, 3>(kVel, kVel).diagonal().array() += qa * dt;
      p.block<3, 3>(kGyroBias, kGyroBias).diagonal().array() += qbg * dt;
      p.block<3, 3>(kAccelBias, kAccelBias).diagonal().array() += qba * dt;

      rot = rot * so3_exp(omega * dt);
      t = s.stamp;
    }
    prev_gyro = s.gyro;
    prev_accel = s.accel;
  }
  out.covariance = symmetrized(p);
  return out;
}

DeskewResult compensate_motion(const ReconstructedSweep& sweep, const NavState& prev,
                               std::span<const ImuSample> imu, const RigidTransform& lidar_to_imu,
                               const Vec3& gravity) {
  DeskewResult result;
  if (sweep.points.empty()) return result;

  std::vector<PoseKnot> knots;
  integrate_imu(prev, imu, gravity, &knots);

  auto pose_at = [&](Timestamp t) {
    const auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                     [](Timestamp v, const PoseKnot& k) { return v < k.stamp; });
    if (it == knots.begin()) return knots.front().pose;
    if (it == knots.end()) return knots.back().pose;
    const PoseKnot& a = *(it - 1);
    return interpolate_pose(a.pose, a.stamp, it->pose, it->stamp, t);
  };

  const Timestamp last = knots.back().stamp;
  const Timestamp end = std::min(sweep.end, last);
  const RigidTransform world_from_lidar_end = compose(pose_at(end), lidar_to_imu);
  const RigidTransform lidar_end_from_world = world_from_lidar_end.inverse();

  result.points.reserve(sweep.points.size());
  for (const LidarPoint& p : sweep.points) {
    if (p.stamp < prev.stamp - kTimeEpsilon || p.stamp > last + kTimeEpsilon) {
      ++result.rejected;
      continue;
    }
    if (nearly_equal(p.stamp, sweep.end)) {
      result.points.push_back(p.position);
      continue;
    }
    const Vec3 world = pose_at(p.stamp).apply(lidar_to_imu.apply(p.position));
    result.points.push_back(lidar_end_from_world.apply(world));
  }
  return result;
}

std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double voxel) {
  std::unordered_set<VoxelKey, VoxelKeyHash> seen;
  seen.reserve(points.size());
  std::vector<Vec3> out;
  const double inv = 1.0 / voxel;
  for (const Vec3& p : points) {
    const VoxelKey k{static_cast<std::int32_t>(std::floor(p.x() * inv)),
                     static_cast<std::int32_t>(std::floor(p.y() * inv)),
                     static_cast<std::int32_t>(std::floor(p.z() * inv))};
    if (seen.insert(k).second) out.push_back(p);
  }
  return out;
}

namespace {

struct PlaneFit {
  Vec3 normal;
  Vec3 centroid;
};

bool fit_plane(const std::vector<const MapPoint*>& nbrs, double ratio, PlaneFit& fit) {
  Vec3 c = Vec3::Zero();
  for (const MapPoint* q : nbrs) c += q->position;
  c /= static_cast<double>(nbrs.size());
  Mat3 cov = Mat3::Zero();
  for (const MapPoint* q : nbrs) {
    const Vec3 d = q->position - c;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 ev = es.eigenvalues();  // ascending
  if (!(ev(1) > 0.0) || ev(0) / ev(1) >= ratio) return false;
  fit.normal = es.eigenvectors().col(0).normalized();
  fit.centroid = c;
  return true;
}

}  // namespace

RegistrationResult register_scan(std::span<const Vec3> points, const VoxelMap& map, const NavState& predicted,
                                 const LioConfig& cfg) {
  RegistrationResult result;
  result.state = predicted;
  if (map.empty()) {
    result.status = RegistrationStatus::kBootstrap;
    return result;
  }

  const std::vector<Vec3> sparse = voxel_downsample(points, cfg.downsample_voxel);
  std::vector<Vec3> body;
  body.reserve(sparse.size());
  for (const Vec3& p : sparse) body.push_back(cfg.lidar_to_imu.apply(p));

  const Mat15 p_prior = predicted.covariance;
  const Mat15 p_inv = p_prior.ldlt().solve(Mat15::Identity());
  const double w = 1.0 / (cfg.lidar_sigma * cfg.lidar_sigma);

  Vec15 dx = Vec15::Zero();
  NavState x = predicted;
  Mat15 info = p_inv;
  std::vector<const MapPoint*> nbrs;
  bool converged = false;
  int iter = 0;

  for (; iter < cfg.max_iterations; ++iter) {
    const Mat3 r = x.pose.rotation.matrix();
    const Vec3& t = x.pose.translation;
    Eigen::Matrix<double, 6, 6> hth = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> htr = Eigen::Matrix<double, 6, 1>::Zero();
    std::size_t count = 0;
    double sq_sum = 0.0;

    for (const Vec3& pb : body) {
      const Vec3 pw = r * pb + t;
      map.nearest_neighbors(pw, cfg.plane_neighbors, nbrs);
      if (nbrs.size() < cfg.plane_neighbors) continue;
      if ((nbrs.back()->position - pw).norm() > cfg.max_neighbor_distance) continue;
      PlaneFit plane;
      if (!fit_plane(nbrs, cfg.planarity_ratio, plane)) continue;
      const double h = plane.normal.dot(pw - plane.centroid);
      if (std::abs(h) > cfg.max_residual) continue;

      Eigen::Matrix<double, 1, 6> row;
      row.head<3>() = -plane.normal.transpose() * r * skew(pb);
      row.tail<3>() = plane.normal.transpose();
      hth.noalias() += row.transpose() * row;
      htr.noalias() += row.transpose() * (-h);
      sq_sum += h * h;
      ++count;
    }

    result.correspondences = count;
    result.residual_rms = count ? std::sqrt(sq_sum / static_cast<double>(count)) : 0.0;
    if (count < cfg.min_correspondences) {
      Eigen::Matrix<double, 15, 1> scale = Eigen::Matrix<double, 15, 1>::Ones();
      scale.head<6>().setConstant(std::sqrt(cfg.degenerate_inflation));
      result.state = predicted;
      result.state.covariance = scale.asDiagonal() * p_prior * scale.asDiagonal();
      result.status = RegistrationStatus::kDegenerate;
      result.iterations = iter + 1;
      return result;
    }

    info = p_inv;
    info.topLeftCorner<6, 6>() += w * hth;
    Vec15 rhs = -p_inv * dx;
    rhs.head<6>() += w * htr;
    const Vec15 step = info.ldlt().solve(rhs);
    dx += step;
    x = boxplus(predicted, dx);
    if (step.norm() < cfg.convergence) {
      converged = true;
      ++iter;
      break;
    }
  }

  result.state = x;
  result.state.stamp = predicted.stamp;
  result.state.covariance = symmetrized(info.ldlt().solve(Mat15::Identity()));
  result.status = converged ? RegistrationStatus::kConverged : RegistrationStatus::kMaxIterations;
  result.iterations = iter;
  return result;
}

NavState transform_state(const RigidTransform& g, const NavState& s) {
  NavState out = s;
  out.pose = compose(g, s.pose);
  out.velocity = g.rotation * s.velocity;
  Mat15 j = Mat15::Identity();
  const Mat3 r = g.rotation.matrix();
  j.block<3, 3>(kPos, kPos) = r;
  j.block<3, 3>(kVel, kVel) = r;
  out.covariance = j * s.covariance * j.transpose();
  return out;
}

LidarInertialOdometry::LidarInertialOdometry(LioConfig cfg, NavState initial)
    : cfg_(cfg), state_(initial), map_(cfg.map) {}

LioStep LidarInertialOdometry::process(const SyncedPacket& packet) {
  const ReconstructedSweep& sweep = packet.sweep;
  if (!initialized_) {
    state_.stamp = sweep.begin;
    initialized_ = true;
  }

  std::vector<ImuSample> imu;
  imu.reserve(packet.imu.size() + 2);
  if (last_imu_ && nearly_equal(last_imu_->stamp, state_.stamp)) imu.push_back(*last_imu_);
  imu.insert(imu.end(), packet.imu.begin(), packet.imu.end());
  if (imu.empty()) throw ImuGapError("packet ending at " + std::to_string(sweep.end.sec) + " has no IMU samples");
  if (imu.back().stamp < sweep.end - kTimeEpsilon) {
    // stream tail: hold the last reading up to the sweep end
    imu.push_back({sweep.end, imu.back().gyro, imu.back().accel});
  }

  LioStep step;
  step.points_in = sweep.points.size();
  step.predicted = propagate(state_, imu, cfg_);
  step.predicted.stamp = sweep.end;

  const DeskewResult deskewed = compensate_motion(sweep, state_, imu, cfg_.lidar_to_imu, cfg_.gravity);
  step.deskew_rejected = deskewed.rejected;

  std::vector<Vec3> usable;
  usable.reserve(deskewed.points.size());
  for (const Vec3& p : deskewed.points) {
    if (p.allFinite() && p.norm() >= cfg_.min_range) usable.push_back(p);
  }

  step.registration = register_scan(usable, map_, step.predicted, cfg_);
  state_ = step.registration.state;
  state_.stamp = sweep.end;

  const RigidTransform world_from_lidar = compose(state_.pose, cfg_.lidar_to_imu);
  std::vector<Vec3> world;
  world.reserve(usable.size());
  for (const Vec3& p : usable) world.push_back(world_from_lidar.apply(p));
  map_.update(world, sweep.end);

  last_imu_ = imu.back();
  return step;
}

}  // namespace livo
