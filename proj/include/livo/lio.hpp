#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "livo/geometry.hpp"
#include "livo/sweep_reconstruction.hpp"
#include "livo/voxel_map.hpp"

namespace livo {

/// Continuous-time noise densities.
struct ImuNoise {
  double gyro{1e-3};             // rad/s/sqrt(Hz)
  double accel{1e-2};            // m/s^2/sqrt(Hz)
  double gyro_bias_walk{1e-5};   // rad/s^2/sqrt(Hz)
  double accel_bias_walk{1e-4};  // m/s^3/sqrt(Hz)
};

struct LioConfig {
  Vec3 gravity{0.0, 0.0, -9.81};
  ImuNoise noise;
  double imu_period{0.005};  // nominal; gaps above twice this are rejected
  RigidTransform lidar_to_imu;
  VoxelMapConfig map;
  double downsample_voxel{0.25};
  std::size_t plane_neighbors{5};
  double planarity_ratio{0.1};
  double max_neighbor_distance{1.0};
  double max_residual{0.5};
  double lidar_sigma{0.03};
  int max_iterations{5};
  double convergence{1e-6};
  std::size_t min_correspondences{10};
  double degenerate_inflation{10.0};
  double min_range{0.5};
};

/// Mean by integrate_imu, covariance by the first-order error-state
/// transition. Throws ImuGapError when consecutive stamps (starting from
/// state.stamp) are more than twice the nominal IMU period apart.
NavState propagate(const NavState& state, std::span<const ImuSample> imu, const LioConfig& cfg);

struct DeskewResult {
  std::vector<Vec3> points;  // end-of-sweep LiDAR frame
  std::size_t rejected{0};
};

/// Re-expresses every point of the sweep in the LiDAR frame at sweep.end
/// using the pose track integrated from `prev` through `imu`.
DeskewResult compensate_motion(const ReconstructedSweep& sweep, const NavState& prev,
                               std::span<const ImuSample> imu, const RigidTransform& lidar_to_imu,
                               const Vec3& gravity);

/// First point per grid cell.
std::vector<Vec3> voxel_downsample(std::span<const Vec3> points, double voxel);

enum class RegistrationStatus { kConverged, kMaxIterations, kBootstrap, kDegenerate };
std::string_view to_string(RegistrationStatus s);

struct RegistrationResult {
  NavState state;
  RegistrationStatus status{RegistrationStatus::kBootstrap};
  std::size_t correspondences{0};
  double residual_rms{0.0};
  int iterations{0};
};

/// Iterated error-state Kalman update against point-to-plane residuals from
/// the voxel map. `points` are in the LiDAR frame at predicted.stamp. An
/// empty map returns the prediction (bootstrap); too few correspondences
/// return the prediction with the pose covariance block inflated.
RegistrationResult register_scan(std::span<const Vec3> points, const VoxelMap& map, const NavState& predicted,
                                 const LioConfig& cfg);

/// Applies a world-frame rigid transform to a state (pose, velocity and the
/// world-frame covariance blocks).
NavState transform_state(const RigidTransform& g, const NavState& s);

/// Symmetry and eigenvalue floor check.
bool covariance_is_valid(const Mat15& p, double tol = 1e-9);

struct LioStep {
  NavState predicted;
  RegistrationResult registration;
  std::size_t deskew_rejected{0};
  std::size_t points_in{0};
};

/// Per-packet driver: propagate, de-skew, register, then insert the
/// registered sweep into the map.
class LidarInertialOdometry {
 public:
  explicit LidarInertialOdometry(LioConfig cfg, NavState initial = {});

  LioStep process(const SyncedPacket& packet);

  const NavState& state() const { return state_; }
  const VoxelMap& map() const { return map_; }
  VoxelMap& map() { return map_; }
  const LioConfig& config() const { return cfg_; }
  bool initialized() const { return initialized_; }

 private:
  LioConfig cfg_;
  NavState state_;
  VoxelMap map_;
  std::optional<ImuSample> last_imu_;
  bool initialized_{false};
};

}  // namespace livo
