#include "livo/camera_filter.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

namespace livo {

namespace {

struct Normal {
  CameraMatrix hwh{CameraMatrix::Zero()};
  CameraVector hwr{CameraVector::Zero()};
  std::size_t count{0};

  template <typename R, typename H>
  void add(const R& r, const H& h_r, double sigma, double huber) {
    const double norm = r.norm();
    const double weight = (norm <= huber ? 1.0 : huber / norm) / (sigma * sigma);
    hwh.noalias() += weight * h_r.transpose() * h_r;
    hwr.noalias() += weight * h_r.transpose() * r;
    ++count;
  }
};

bool plausible(const CameraParams& p) {
  const PinholeIntrinsics& k = p.intrinsics;
  return std::isfinite(p.time_offset) && p.extrinsic.translation.allFinite() && k.fx > 0.0 && k.fy > 0.0 &&
         std::isfinite(k.cx) && std::isfinite(k.cy);
}

// Iterated update. `linearize(params, normal)` accumulates residuals and
// residual Jacobians at `params`.
template <typename Linearize>
UpdateReport iterated_update(CameraEstimate& est, std::size_t min_measurements, const CameraFilterConfig& cfg,
                             Linearize&& linearize) {
  UpdateReport report;
  const CameraMatrix& p = est.covariance;
  const CameraMatrix p_inv = p.ldlt().solve(CameraMatrix::Identity());

  CameraVector dx = CameraVector::Zero();
  CameraParams x = est.params;
  CameraMatrix a = p_inv;
  Normal eq;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    eq = Normal{};
    linearize(x, eq);
    report.measurements = eq.count;
    if (eq.count < min_measurements) {
      report.note = "too few measurements";
      return report;
    }
    a = eq.hwh + p_inv;
    const CameraVector step = a.ldlt().solve(-eq.hwr - p_inv * dx);
    dx += step;
    x = boxplus(est.params, dx);
    report.iterations = iter + 1;
    report.last_step = step.norm();
    if (report.last_step < cfg.convergence) break;
  }

  if (cfg.max_time_offset > 0.0) {
    x.time_offset = std::clamp(x.time_offset, -cfg.max_time_offset, cfg.max_time_offset);
  }
  if (!plausible(x) || !dx.allFinite()) {
    report.note = "rejected implausible update";
    return report;
  }

  // Joseph form with K = A^-1 H^T W, so K H = A^-1 H^T W H and
  // K W^-1 K^T = A^-1 H^T W H A^-1.
  const CameraMatrix a_inv = a.ldlt().solve(CameraMatrix::Identity());
  const CameraMatrix kh = a_inv * eq.hwh;
  const CameraMatrix ikh = CameraMatrix::Identity() - kh;
  CameraMatrix updated = ikh * p * ikh.transpose() + kh * a_inv.transpose();
  updated = 0.5 * (updated + updated.transpose());

  est.params = x;
  est.covariance = updated;
  report.applied = true;
  return report;
}

}  // namespace

UpdateReport pnp_update(CameraEstimate& est, std::span<const TrackedFeature> features, const RigidTransform& nav_pose,
                        double dt, const CameraFilterConfig& cfg) {
  const std::size_t valid = static_cast<std::size_t>(
      std::count_if(features.begin(), features.end(), [](const TrackedFeature& f) { return f.valid; }));
  if (valid < cfg.min_pnp_features) {
    UpdateReport r;
    r.measurements = valid;
    r.note = "too few valid features";
    return r;
  }
  return iterated_update(est, cfg.min_pnp_features, cfg, [&](const CameraParams& x, Normal& eq) {
    for (const TrackedFeature& f : features) {
      if (!f.valid) continue;
      const Vec2 flow = f.cur_pixel - f.prev_pixel;
      const auto proj = project_world(f.position, nav_pose, x, flow, dt);
      if (!proj) continue;
      const Vec2 r = f.cur_pixel - proj->pixel;
      const ProjectionJacobian h_r = -proj->jacobian;
      eq.add(r, h_r, cfg.sigma_pnp, cfg.huber_pnp);
    }
  });
}

UpdateReport photometric_update(CameraEstimate& est, std::span<const PhotometricPoint> points,
                                const IntensityField& image, const RigidTransform& nav_pose, double dt,
                                const CameraFilterConfig& cfg) {
  const int c = image.channels();
  return iterated_update(est, 1, cfg, [&](const CameraParams& x, Normal& eq) {
    for (const PhotometricPoint& pt : points) {
      const auto proj = project_world(pt.position, nav_pose, x, pt.flow_delta, dt);
      if (!proj || !image.contains(proj->pixel)) continue;
      const IntensitySample s = image.sample(proj->pixel);
      const Eigen::VectorXd r = pt.color.head(c) - s.value.head(c);
      const PhotometricJacobian h_r = -s.gradient.topRows(c) * proj->jacobian;
      eq.add(r, h_r, cfg.sigma_photo, cfg.huber_photo);
    }
  });
}

CameraFilter::CameraFilter(CameraParams initial, CameraMatrix initial_covariance, CameraFilterConfig cfg)
    : est_{initial, initial_covariance}, cfg_(cfg) {}

void CameraFilter::predict() {
  // mean carried over, covariance unchanged
  error_.setZero();
}

UpdateReport CameraFilter::pnp_update(std::span<const TrackedFeature> features, const RigidTransform& nav_pose,
                                      double dt) {
  UpdateReport r = livo::pnp_update(est_, features, nav_pose, dt, cfg_);
  error_.setZero();
  return r;
}

UpdateReport CameraFilter::photometric_update(std::span<const PhotometricPoint> points, const IntensityField& image,
                                              const RigidTransform& nav_pose, double dt) {
  UpdateReport r = livo::photometric_update(est_, points, image, nav_pose, dt, cfg_);
  error_.setZero();
  return r;
}

}  // namespace livo
