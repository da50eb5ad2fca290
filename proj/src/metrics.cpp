#include "livo/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "livo/error.hpp"

namespace livo {

AteResult compute_ate(const TrajectoryRecord& estimate, const TrajectoryRecord& reference, double gate) {
  std::vector<Vec3> est;
  std::vector<Vec3> ref;
  for (const PoseKnot& k : estimate) {
    auto it = std::lower_bound(reference.begin(), reference.end(), k.stamp,
                               [](const PoseKnot& r, Timestamp t) { return r.stamp < t; });
    const PoseKnot* best = nullptr;
    if (it != reference.end()) best = &*it;
    if (it != reference.begin()) {
      const PoseKnot* prev = &*std::prev(it);
      if (!best || std::abs(prev->stamp - k.stamp) <= std::abs(best->stamp - k.stamp)) best = prev;
    }
    if (best && std::abs(best->stamp - k.stamp) <= gate + kTimeEpsilon) {
      est.push_back(k.pose.translation);
      ref.push_back(best->pose.translation);
    }
  }
  if (est.size() < 3) {
    throw InsufficientOverlapError("ATE: only " + std::to_string(est.size()) +
                                   " poses associate within the time gate, need 3");
  }

  Eigen::Matrix3Xd src(3, static_cast<Eigen::Index>(est.size()));
  Eigen::Matrix3Xd dst(3, static_cast<Eigen::Index>(ref.size()));
  for (std::size_t i = 0; i < est.size(); ++i) {
    src.col(static_cast<Eigen::Index>(i)) = est[i];
    dst.col(static_cast<Eigen::Index>(i)) = ref[i];
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  const Mat3 r = t.topLeftCorner<3, 3>();
  const Vec3 p = t.topRightCorner<3, 1>();

  double sum = 0.0;
  for (Eigen::Index i = 0; i < src.cols(); ++i) sum += (r * src.col(i) + p - dst.col(i)).squaredNorm();

  AteResult out;
  out.associations = est.size();
  out.rmse = std::sqrt(sum / static_cast<double>(est.size()));
  out.alignment = RigidTransform{Rotation::from_matrix(r), p};
  return out;
}

double end_to_end_error(const TrajectoryRecord& traj) {
  if (traj.size() < 2) throw DomainError("end-to-end error needs at least 2 poses");
  return (traj.back().pose.translation - traj.front().pose.translation).norm();
}

}  // namespace livo
