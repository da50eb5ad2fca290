#pragma once

#include <cstddef>

#include "livo/io.hpp"

namespace livo {

struct AteResult {
  double rmse{0.0};
  std::size_t associations{0};
  RigidTransform alignment;  // applied to the estimate
};

/// Nearest-stamp association within `gate` seconds, least-squares rigid
/// alignment (no scale) of the estimate onto the reference, then RMSE of the
/// translation residuals. Fewer than 3 associations throw
/// InsufficientOverlapError.
AteResult compute_ate(const TrajectoryRecord& estimate, const TrajectoryRecord& reference, double gate = 0.01);

/// Distance between the first and last positions; throws DomainError for
/// fewer than 2 poses.
double end_to_end_error(const TrajectoryRecord& traj);

}  // namespace livo
