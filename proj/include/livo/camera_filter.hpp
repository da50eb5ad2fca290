#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "livo/camera_model.hpp"
#include "livo/voxel_map.hpp"

namespace livo {

/// A map point with its pixel locations in the previous and current image.
struct TrackedFeature {
  MapPointRef map_point;
  Vec3 position{Vec3::Zero()};  // world frame copy of the map point
  Vec2 prev_pixel{Vec2::Zero()};
  Vec2 cur_pixel{Vec2::Zero()};
  bool valid{false};
};

/// A rendered map point used by the photometric update. `flow_delta` is the
/// pixel displacement since the previous image used by the temporal term.
struct PhotometricPoint {
  Vec3 position{Vec3::Zero()};
  Vec3 color{Vec3::Zero()};
  Vec2 flow_delta{Vec2::Zero()};
};

struct CameraFilterConfig {
  double sigma_pnp{1.5};     // pixels
  double huber_pnp{3.0};     // pixels
  double sigma_photo{8.0};   // intensity levels
  double huber_photo{30.0};  // intensity levels
  int max_iterations{5};
  double convergence{1e-8};
  std::size_t min_pnp_features{4};
  double max_time_offset{0.0};  // |time_offset| bound; 0 disables
};

struct CameraEstimate {
  CameraParams params;
  CameraMatrix covariance{CameraMatrix::Identity()};
};

struct UpdateReport {
  bool applied{false};
  int iterations{0};
  std::size_t measurements{0};
  double last_step{0.0};
  std::string note;
};

/// Iterated error-state update from reprojection residuals of tracked
/// features; covariance in Joseph form. Fewer than min_pnp_features valid
/// features leaves the estimate untouched.
UpdateReport pnp_update(CameraEstimate& est, std::span<const TrackedFeature> features, const RigidTransform& nav_pose,
                        double dt, const CameraFilterConfig& cfg);

/// Same mechanics with gamma - I(projection) residuals.
UpdateReport photometric_update(CameraEstimate& est, std::span<const PhotometricPoint> points,
                                const IntensityField& image, const RigidTransform& nav_pose, double dt,
                                const CameraFilterConfig& cfg);

/// Error-state filter over the camera parameters. The prediction keeps the
/// mean and covariance; only image updates change them.
class CameraFilter {
 public:
  CameraFilter(CameraParams initial, CameraMatrix initial_covariance, CameraFilterConfig cfg);

  void predict();
  UpdateReport pnp_update(std::span<const TrackedFeature> features, const RigidTransform& nav_pose, double dt);
  UpdateReport photometric_update(std::span<const PhotometricPoint> points, const IntensityField& image,
                                  const RigidTransform& nav_pose, double dt);

  const CameraParams& params() const { return est_.params; }
  const CameraMatrix& covariance() const { return est_.covariance; }
  const CameraVector& error_state() const { return error_; }
  const CameraFilterConfig& config() const { return cfg_; }

 private:
  CameraEstimate est_;
  CameraVector error_{CameraVector::Zero()};
  CameraFilterConfig cfg_;
};

}  // namespace livo
