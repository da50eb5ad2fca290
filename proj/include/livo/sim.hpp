#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "livo/camera_filter.hpp"
#include "livo/image.hpp"
#include "livo/sweep_reconstruction.hpp"

namespace livo::sim {

enum class Texture { kUniform, kChecker, kSine };

struct Material {
  Vec3 albedo{Vec3::Constant(128.0)};
  Vec3 albedo2{Vec3::Constant(128.0)};
  Texture texture{Texture::kUniform};
  double scale{1.0};  // texture period, meters

  /// Color at 2D surface coordinates (meters).
  Vec3 color(double a, double b) const;
};

/// Rectangle centered at `center`, spanning +-half_u along axis_u and
/// +-half_v along normal x axis_u.
struct Patch {
  Vec3 center{Vec3::Zero()};
  Vec3 normal{Vec3::UnitZ()};
  Vec3 axis_u{Vec3::UnitX()};
  double half_u{1.0};
  double half_v{1.0};
  Material material;
};

struct Box {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Ones()};
  Material material;
};

struct Hit {
  double distance{0.0};
  Vec3 point{Vec3::Zero()};
  Vec3 normal{Vec3::Zero()};
  Vec3 color{Vec3::Zero()};
};

class Scene {
 public:
  /// Normalizes the normal and re-orthogonalizes axis_u; throws DomainError
  /// for degenerate input.
  void add_patch(Patch p);
  void add_box(Box b);

  bool empty() const { return patches_.empty() && boxes_.empty(); }
  const std::vector<Patch>& patches() const { return patches_; }
  const std::vector<Box>& boxes() const { return boxes_; }

  /// Nearest intersection along a unit direction within (min_range, max_range].
  std::optional<Hit> raycast(const Vec3& origin, const Vec3& dir, double min_range = 1e-6,
                             double max_range = 1e9) const;

 private:
  std::vector<Patch> patches_;
  std::vector<Box> boxes_;
};

/// Uniform cumulative cubic B-spline over SO(3) x R^3. The control poses are
/// padded by repeating the first and last pose so the motion starts and ends
/// at rest exactly at those poses; the curve spans [0, (n + 1) * control_dt]
/// for n control poses.
class Trajectory {
 public:
  Trajectory(std::vector<RigidTransform> control, double control_dt);

  double duration() const { return duration_; }
  double control_dt() const { return dt_; }
  const std::vector<RigidTransform>& control() const { return control_; }

  RigidTransform pose(double t) const;
  Rotation rotation(double t) const;
  Vec3 velocity(double t) const;      // world frame
  Vec3 acceleration(double t) const;  // world frame
  Vec3 angular_velocity(double t) const;  // body frame

 private:
  struct Local {
    std::size_t segment;
    double u;
  };
  Local locate(double t) const;

  std::vector<RigidTransform> control_;
  std::vector<RigidTransform> padded_;
  double dt_;
  double duration_;
};

struct SensorRig {
  RigidTransform lidar_to_imu;
  RigidTransform camera_to_imu;
  PinholeIntrinsics intrinsics{250.0, 250.0, 160.0, 120.0};
  Distortion distortion;
  int width{320};
  int height{240};
  double time_offset{0.0};  // image stamp s is exposed at IMU time s + time_offset
  double imu_hz{200.0};
  double lidar_hz{10.0};
  double camera_hz{15.0};
  int beams{16};
  double vertical_fov_deg{30.0};
  int azimuth_steps{360};
  double lidar_min_range{0.3};
  double lidar_max_range{60.0};

  CameraParams camera_params() const { return {time_offset, camera_to_imu, intrinsics}; }
};

/// Default rig: LiDAR 10 cm above the IMU, camera looking along the IMU x
/// axis.
SensorRig default_rig();

struct NoiseConfig {
  double gyro_density{0.0};   // rad/s/sqrt(Hz)
  double accel_density{0.0};  // m/s^2/sqrt(Hz)
  Vec3 gyro_bias{Vec3::Zero()};
  Vec3 accel_bias{Vec3::Zero()};
  double range_sigma{0.0};    // meters
  double pixel_sigma{0.0};    // intensity levels

  bool zero() const;
};

std::vector<ImuSample> sample_imu(const Trajectory& traj, const SensorRig& rig, const Vec3& gravity,
                                  const NoiseConfig& noise = {}, std::mt19937_64* rng = nullptr);

/// LiDAR pose in the world at IMU time t.
RigidTransform lidar_pose(const Trajectory& traj, const SensorRig& rig, double t);

std::vector<RawSweep> sample_lidar(const Trajectory& traj, const SensorRig& rig, const Scene& scene,
                                   const NoiseConfig& noise = {}, std::mt19937_64* rng = nullptr);

/// Renders the view exposed at IMU time `exposure`, stamped `stamp`.
ImageFrame render_view(const Scene& scene, const RigidTransform& camera_pose, const SensorRig& rig, Timestamp stamp,
                       const NoiseConfig& noise = {}, std::mt19937_64* rng = nullptr);

/// Frames at camera-clock stamps k / camera_hz whose exposure time
/// stamp + time_offset lies inside the trajectory.
std::vector<ImageFrame> sample_camera(const Trajectory& traj, const SensorRig& rig, const Scene& scene,
                                      const NoiseConfig& noise = {}, std::mt19937_64* rng = nullptr);

/// Exact projections of world points in the frames stamped prev and cur
/// (camera clock) with the true rig. Points behind either camera or outside
/// either image are excluded.
std::vector<TrackedFeature> oracle_correspondences(std::span<const Vec3> points, const Trajectory& traj,
                                                   const SensorRig& rig, double prev_stamp, double cur_stamp,
                                                   double margin = 3.0);

struct SimulationConfig {
  Scene scene;
  std::optional<Trajectory> trajectory;
  SensorRig rig{default_rig()};
  NoiseConfig noise;
  Vec3 gravity{0.0, 0.0, -9.81};
  std::uint64_t seed{1};
  bool camera{true};
};

struct Dataset {
  std::vector<ImuSample> imu;
  std::vector<RawSweep> sweeps;
  std::vector<ImageFrame> images;
  std::vector<PoseKnot> ground_truth;
};

/// Ground truth on a 1 kHz grid merged with the image stamps.
std::vector<PoseKnot> ground_truth(const Trajectory& traj, std::span<const ImageFrame> images);

Dataset simulate(const SimulationConfig& cfg);

/// Indoor room about 20 m x 14 m with textured walls, floor, ceiling and
/// pillars.
Scene room_scene();
/// Closed loop starting at the identity pose, lasting `duration` seconds.
Trajectory loop_trajectory(double duration = 30.0);

}  // namespace livo::sim
