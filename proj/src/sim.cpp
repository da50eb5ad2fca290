#include "livo/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "livo/error.hpp"

namespace livo::sim {

namespace {

constexpr double kPi = std::numbers::pi;

double deg(double d) { return d * kPi / 180.0; }

// Cumulative cubic B-spline basis (B1, B2, B3) and derivatives in u.
Vec3 cumulative_basis(double u) {
  const double u2 = u * u;
  const double u3 = u2 * u;
  return {(5.0 + 3.0 * u - 3.0 * u2 + u3) / 6.0, (1.0 + 3.0 * u + 3.0 * u2 - 2.0 * u3) / 6.0, u3 / 6.0};
}
Vec3 cumulative_basis_d1(double u) {
  return {(3.0 - 6.0 * u + 3.0 * u * u) / 6.0, (3.0 + 6.0 * u - 6.0 * u * u) / 6.0, 0.5 * u * u};
}
Vec3 cumulative_basis_d2(double u) { return {u - 1.0, 1.0 - 2.0 * u, u}; }

double gaussian(std::mt19937_64* rng, double sigma) {
  if (rng == nullptr || sigma <= 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sigma);
  return n(*rng);
}

Vec3 gaussian3(std::mt19937_64* rng, double sigma) {
  if (rng == nullptr || sigma <= 0.0) return Vec3::Zero();
  const double x = gaussian(rng, sigma);
  const double y = gaussian(rng, sigma);
  const double z = gaussian(rng, sigma);
  return {x, y, z};
}

}  // namespace

Vec3 Material::color(double a, double b) const {
  switch (texture) {
    case Texture::kUniform:
      return albedo;
    case Texture::kChecker: {
      const long i = static_cast<long>(std::floor(a / scale)) + static_cast<long>(std::floor(b / scale));
      return (i % 2 == 0) ? albedo : albedo2;
    }
    case Texture::kSine: {
      const double w = 2.0 * kPi / scale;
      const double mix = 0.25 * (2.0 + std::sin(w * a) + std::sin(w * b));
      return albedo + mix * (albedo2 - albedo);
    }
  }
  return albedo;
}

void Scene::add_patch(Patch p) {
  const double nn = p.normal.norm();
  if (!(nn > 1e-12) || !p.normal.allFinite()) throw DomainError("scene: patch normal is degenerate");
  p.normal /= nn;
  p.axis_u -= p.axis_u.dot(p.normal) * p.normal;
  const double un = p.axis_u.norm();
  if (!(un > 1e-9)) throw DomainError("scene: patch axis is parallel to its normal");
  p.axis_u /= un;
  if (!(p.half_u > 0.0 && p.half_v > 0.0)) throw DomainError("scene: patch extents must be positive");
  patches_.push_back(p);
}

void Scene::add_box(Box b) {
  if (!((b.max - b.min).minCoeff() > 0.0)) throw DomainError("scene: box must have positive size");
  boxes_.push_back(b);
}

std::optional<Hit> Scene::raycast(const Vec3& origin, const Vec3& dir, double min_range, double max_range) const {
  std::optional<Hit> best;
  double best_t = max_range;

  for (const Patch& p : patches_) {
    const double denom = p.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = p.normal.dot(p.center - origin) / denom;
    if (t <= min_range || t > best_t) continue;
    const Vec3 x = origin + t * dir;
    const Vec3 d = x - p.center;
    const Vec3 axis_v = p.normal.cross(p.axis_u);
    const double a = d.dot(p.axis_u);
    const double b = d.dot(axis_v);
    if (std::abs(a) > p.half_u || std::abs(b) > p.half_v) continue;
    best_t = t;
    best = Hit{t, x, denom < 0.0 ? p.normal : Vec3(-p.normal), p.material.color(a, b)};
  }

  for (const Box& box : boxes_) {
    double t_near = -1e300;
    double t_far = 1e300;
    int axis_near = -1;
    int axis_far = -1;
    bool miss = false;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(dir(k)) < 1e-15) {
        if (origin(k) < box.min(k) || origin(k) > box.max(k)) miss = true;
        continue;
      }
      double t0 = (box.min(k) - origin(k)) / dir(k);
      double t1 = (box.max(k) - origin(k)) / dir(k);
      if (t0 > t1) std::swap(t0, t1);
      if (t0 > t_near) {
        t_near = t0;
        axis_near = k;
      }
      if (t1 < t_far) {
        t_far = t1;
        axis_far = k;
      }
    }
    if (miss || t_near > t_far) continue;
    double t = t_near;
    int axis = axis_near;
    if (t <= min_range) {
      t = t_far;
      axis = axis_far;
    }
    if (axis < 0 || t <= min_range || t > best_t) continue;
    Vec3 x = origin + t * dir;
    // snap onto the face plane so the hit satisfies its plane equation exactly
    const bool low = std::abs(x(axis) - box.min(axis)) < std::abs(x(axis) - box.max(axis));
    x(axis) = low ? box.min(axis) : box.max(axis);
    Vec3 n = Vec3::Zero();
    n(axis) = low ? -1.0 : 1.0;
    if (n.dot(dir) > 0.0) n = -n;
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    best_t = t;
    best = Hit{t, x, n, box.material.color(x(a), x(b))};
  }
  return best;
}

Trajectory::Trajectory(std::vector<RigidTransform> control, double control_dt)
    : control_(std::move(control)), dt_(control_dt) {
  if (control_.empty()) throw DomainError("trajectory: no control poses");
  if (!(dt_ > 0.0)) throw DomainError("trajectory: control interval must be positive");
  padded_.reserve(control_.size() + 4);
  padded_.push_back(control_.front());
  padded_.push_back(control_.front());
  padded_.insert(padded_.end(), control_.begin(), control_.end());
  padded_.push_back(control_.back());
  padded_.push_back(control_.back());
  duration_ = static_cast<double>(padded_.size() - 3) * dt_;
}

Trajectory::Local Trajectory::locate(double t) const {
  const std::size_t segments = padded_.size() - 3;
  const double s = std::clamp(t, 0.0, duration_) / dt_;
  std::size_t i = static_cast<std::size_t>(std::floor(s));
  if (i >= segments) i = segments - 1;
  return {i, s - static_cast<double>(i)};
}

Rotation Trajectory::rotation(double t) const {
  const Local l = locate(t);
  const Vec3 b = cumulative_basis(l.u);
  Rotation r = padded_[l.segment].rotation;
  for (int j = 1; j <= 3; ++j) {
    const Rotation& r0 = padded_[l.segment + j - 1].rotation;
    const Rotation& r1 = padded_[l.segment + j].rotation;
    r = r * so3_exp(b(j - 1) * so3_log(r0.inverse() * r1));
  }
  return r;
}

RigidTransform Trajectory::pose(double t) const {
  const Local l = locate(t);
  const Vec3 b = cumulative_basis(l.u);
  Vec3 p = padded_[l.segment].translation;
  for (int j = 1; j <= 3; ++j) {
    p += b(j - 1) * (padded_[l.segment + j].translation - padded_[l.segment + j - 1].translation);
  }
  return {rotation(t), p};
}

Vec3 Trajectory::velocity(double t) const {
  if (t <= 0.0 || t >= duration_) return Vec3::Zero();
  const Local l = locate(t);
  const Vec3 b = cumulative_basis_d1(l.u);
  Vec3 v = Vec3::Zero();
  for (int j = 1; j <= 3; ++j) {
    v += b(j - 1) * (padded_[l.segment + j].translation - padded_[l.segment + j - 1].translation);
  }
  return v / dt_;
}

Vec3 Trajectory::acceleration(double t) const {
  if (t < 0.0 || t > duration_) return Vec3::Zero();
  const Local l = locate(t);
  const Vec3 b = cumulative_basis_d2(l.u);
  Vec3 a = Vec3::Zero();
  for (int j = 1; j <= 3; ++j) {
    a += b(j - 1) * (padded_[l.segment + j].translation - padded_[l.segment + j - 1].translation);
  }
  return a / (dt_ * dt_);
}

Vec3 Trajectory::angular_velocity(double t) const {
  constexpr double h = 1e-5;
  const Rotation r0 = rotation(t - h);
  const Rotation r1 = rotation(t + h);
  return so3_log(r0.inverse() * r1) / (2.0 * h);
}

SensorRig default_rig() {
  SensorRig rig;
  rig.lidar_to_imu.translation = Vec3(0.0, 0.0, 0.1);
  Mat3 r_oc;
  r_oc << 0.0, 0.0, 1.0,
          -1.0, 0.0, 0.0,
          0.0, -1.0, 0.0;
  rig.camera_to_imu.rotation = Rotation::from_matrix(r_oc);
  rig.camera_to_imu.translation = Vec3(0.1, 0.0, 0.05);
  return rig;
}

bool NoiseConfig::zero() const {
  return gyro_density == 0.0 && accel_density == 0.0 && gyro_bias.isZero() && accel_bias.isZero() &&
         range_sigma == 0.0 && pixel_sigma == 0.0;
}

std::vector<ImuSample> sample_imu(const Trajectory& traj, const SensorRig& rig, const Vec3& gravity,
                                  const NoiseConfig& noise, std::mt19937_64* rng) {
  if (!(rig.imu_hz > 0.0)) throw DomainError("sample_imu: IMU rate must be positive");
  const auto count = static_cast<long long>(std::floor(traj.duration() * rig.imu_hz + 1e-9));
  const double gyro_sigma = noise.gyro_density * std::sqrt(rig.imu_hz);
  const double accel_sigma = noise.accel_density * std::sqrt(rig.imu_hz);
  std::vector<ImuSample> out;
  out.reserve(static_cast<std::size_t>(count + 1));
  for (long long i = 0; i <= count; ++i) {
    const double t = static_cast<double>(i) / rig.imu_hz;
    const Rotation r = traj.rotation(t);
    ImuSample s;
    s.stamp = Timestamp(t);
    s.gyro = traj.angular_velocity(t) + noise.gyro_bias + gaussian3(rng, gyro_sigma);
    s.accel = r.inverse() * (traj.acceleration(t) - gravity) + noise.accel_bias + gaussian3(rng, accel_sigma);
    out.push_back(s);
  }
  return out;
}

RigidTransform lidar_pose(const Trajectory& traj, const SensorRig& rig, double t) {
  return traj.pose(t) * rig.lidar_to_imu;
}

std::vector<RawSweep> sample_lidar(const Trajectory& traj, const SensorRig& rig, const Scene& scene,
                                   const NoiseConfig& noise, std::mt19937_64* rng) {
  if (!(rig.lidar_hz > 0.0) || rig.beams < 1 || rig.azimuth_steps < 1) {
    throw DomainError("sample_lidar: invalid LiDAR configuration");
  }
  const long long per_sweep = static_cast<long long>(rig.beams) * rig.azimuth_steps;
  const double ticks_per_sec = static_cast<double>(per_sweep) * rig.lidar_hz;
  const auto sweeps = static_cast<long long>(std::floor(traj.duration() * rig.lidar_hz + 1e-9));

  std::vector<Vec3> rays(static_cast<std::size_t>(per_sweep));
  const double fov = deg(rig.vertical_fov_deg);
  for (long long g = 0; g < per_sweep; ++g) {
    const int col = static_cast<int>(g / rig.beams);
    const int beam = static_cast<int>(g % rig.beams);
    const double el = rig.beams == 1 ? 0.0 : -0.5 * fov + fov * beam / (rig.beams - 1);
    const double az = 2.0 * kPi * col / rig.azimuth_steps;
    rays[static_cast<std::size_t>(g)] = Vec3(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
  }

  std::vector<RawSweep> out;
  out.reserve(static_cast<std::size_t>(sweeps));
  for (long long k = 0; k < sweeps; ++k) {
    RawSweep sweep;
    sweep.begin = Timestamp(static_cast<double>(k) / rig.lidar_hz);
    sweep.end = Timestamp(static_cast<double>(k + 1) / rig.lidar_hz);
    if (scene.empty()) {
      out.push_back(std::move(sweep));
      continue;
    }
    sweep.points.reserve(static_cast<std::size_t>(per_sweep));
    for (long long g = 0; g < per_sweep; ++g) {
      const double t = static_cast<double>(k * per_sweep + g) / ticks_per_sec;
      const RigidTransform pose = lidar_pose(traj, rig, t);
      const Vec3& dir = rays[static_cast<std::size_t>(g)];
      const auto hit = scene.raycast(pose.translation, pose.rotation * dir, rig.lidar_min_range, rig.lidar_max_range);
      if (!hit) continue;
      const double range = hit->distance + gaussian(rng, noise.range_sigma);
      sweep.points.push_back({range * dir, Timestamp(t), hit->color.mean()});
    }
    out.push_back(std::move(sweep));
  }
  return out;
}

ImageFrame render_view(const Scene& scene, const RigidTransform& camera_pose, const SensorRig& rig, Timestamp stamp,
                       const NoiseConfig& noise, std::mt19937_64* rng) {
  ImageFrame img(stamp, rig.width, rig.height, 1);
  const PinholeIntrinsics& k = rig.intrinsics;
  const bool distorted = !rig.distortion.is_zero();
  const Mat3 r = camera_pose.rotation.matrix();
  for (int v = 0; v < rig.height; ++v) {
    for (int u = 0; u < rig.width; ++u) {
      Vec2 xy((u - k.cx) / k.fx, (v - k.cy) / k.fy);
      if (distorted) xy = undistort_normalized(xy, rig.distortion);
      const Vec3 dir = (r * Vec3(xy.x(), xy.y(), 1.0)).normalized();
      const auto hit = scene.raycast(camera_pose.translation, dir);
      double value = hit ? hit->color.mean() : 0.0;
      value += gaussian(rng, noise.pixel_sigma);
      img.at(u, v) = static_cast<float>(std::clamp(std::round(value), 0.0, 255.0));
    }
  }
  return img;
}

std::vector<ImageFrame> sample_camera(const Trajectory& traj, const SensorRig& rig, const Scene& scene,
                                      const NoiseConfig& noise, std::mt19937_64* rng) {
  if (!(rig.camera_hz > 0.0)) throw DomainError("sample_camera: camera rate must be positive");
  std::vector<ImageFrame> out;
  for (long long i = 0;; ++i) {
    const double stamp = static_cast<double>(i) / rig.camera_hz;
    const double exposure = stamp + rig.time_offset;
    if (exposure > traj.duration() + 1e-12) break;
    if (exposure < 0.0) continue;
    const RigidTransform cam = traj.pose(exposure) * rig.camera_to_imu;
    out.push_back(render_view(scene, cam, rig, Timestamp(stamp), noise, rng));
  }
  return out;
}

std::vector<TrackedFeature> oracle_correspondences(std::span<const Vec3> points, const Trajectory& traj,
                                                   const SensorRig& rig, double prev_stamp, double cur_stamp,
                                                   double margin) {
  CameraParams truth = rig.camera_params();
  truth.time_offset = 0.0;
  const RigidTransform prev_pose = traj.pose(prev_stamp + rig.time_offset);
  const RigidTransform cur_pose = traj.pose(cur_stamp + rig.time_offset);
  const ImageFrame bounds(Timestamp(cur_stamp), rig.width, rig.height, 1);

  std::vector<TrackedFeature> out;
  for (const Vec3& p : points) {
    const Vec3 pc0 = world_to_camera(p, prev_pose, truth);
    const Vec3 pc1 = world_to_camera(p, cur_pose, truth);
    if (pc0.z() <= 1e-6 || pc1.z() <= 1e-6) continue;
    TrackedFeature f;
    f.position = p;
    f.prev_pixel = pinhole(pc0, rig.intrinsics);
    f.cur_pixel = pinhole(pc1, rig.intrinsics);
    if (!in_bounds(bounds, f.prev_pixel, margin) || !in_bounds(bounds, f.cur_pixel, margin)) continue;
    f.valid = true;
    out.push_back(f);
  }
  return out;
}

std::vector<PoseKnot> ground_truth(const Trajectory& traj, std::span<const ImageFrame> images) {
  std::vector<Timestamp> stamps;
  const auto count = static_cast<long long>(std::floor(traj.duration() * 1000.0 + 1e-9));
  for (long long i = 0; i <= count; ++i) stamps.emplace_back(static_cast<double>(i) / 1000.0);
  for (const ImageFrame& img : images) stamps.push_back(img.stamp);
  std::sort(stamps.begin(), stamps.end());
  stamps.erase(std::unique(stamps.begin(), stamps.end(),
                           [](Timestamp a, Timestamp b) { return nearly_equal(a, b, 1e-12); }),
               stamps.end());
  std::vector<PoseKnot> out;
  out.reserve(stamps.size());
  for (Timestamp t : stamps) out.push_back({t, traj.pose(t.sec)});
  return out;
}

Dataset simulate(const SimulationConfig& cfg) {
  if (!cfg.trajectory) throw DomainError("simulate: no trajectory configured");
  const Trajectory& traj = *cfg.trajectory;
  std::mt19937_64 rng(cfg.seed);
  std::mt19937_64* noise_rng = cfg.noise.zero() ? nullptr : &rng;
  Dataset d;
  d.imu = sample_imu(traj, cfg.rig, cfg.gravity, cfg.noise, noise_rng);
  d.sweeps = sample_lidar(traj, cfg.rig, cfg.scene, cfg.noise, noise_rng);
  if (cfg.camera) d.images = sample_camera(traj, cfg.rig, cfg.scene, cfg.noise, noise_rng);
  d.ground_truth = ground_truth(traj, d.images);
  return d;
}

Scene room_scene() {
  Scene s;
  auto sine = [](double a, double b, double scale) {
    Material m;
    m.albedo = Vec3::Constant(a);
    m.albedo2 = Vec3::Constant(b);
    m.texture = Texture::kSine;
    m.scale = scale;
    return m;
  };
  // room spans x [-10, 10], y [-4, 10], z [-1.5, 2.5]
  const double x0 = -10.0, x1 = 10.0, y0 = -4.0, y1 = 10.0, z0 = -1.5, z1 = 2.5;
  const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1), cz = 0.5 * (z0 + z1);
  const double hx = 0.5 * (x1 - x0), hy = 0.5 * (y1 - y0), hz = 0.5 * (z1 - z0);
  s.add_patch({{cx, cy, z0}, Vec3::UnitZ(), Vec3::UnitX(), hx, hy, sine(50, 170, 1.3)});
  s.add_patch({{cx, cy, z1}, -Vec3::UnitZ(), Vec3::UnitX(), hx, hy, sine(90, 200, 1.7)});
  s.add_patch({{x0, cy, cz}, Vec3::UnitX(), Vec3::UnitY(), hy, hz, sine(40, 210, 0.9)});
  s.add_patch({{x1, cy, cz}, -Vec3::UnitX(), Vec3::UnitY(), hy, hz, sine(60, 190, 1.1)});
  s.add_patch({{cx, y0, cz}, Vec3::UnitY(), Vec3::UnitX(), hx, hz, sine(30, 220, 1.0)});
  s.add_patch({{cx, y1, cz}, -Vec3::UnitY(), Vec3::UnitX(), hx, hz, sine(70, 180, 0.8)});

  const Material pillar = sine(20, 240, 0.6);
  for (const Vec2& c : {Vec2(0.0, 3.0), Vec2(-7.0, 7.5), Vec2(7.5, 1.0), Vec2(-6.5, -2.0), Vec2(6.0, 8.0)}) {
    s.add_box({Vec3(c.x() - 0.4, c.y() - 0.4, z0), Vec3(c.x() + 0.4, c.y() + 0.4, z1), pillar});
  }
  // a few slanted panels break the symmetry of the box room
  s.add_patch({{-8.0, 2.0, 0.0}, Vec3(1.0, 0.4, 0.2), Vec3::UnitZ(), 1.0, 1.2, sine(40, 200, 0.5)});
  s.add_patch({{8.5, 6.0, 0.5}, Vec3(-1.0, -0.5, 0.0), Vec3::UnitZ(), 0.8, 1.0, sine(60, 230, 0.4)});
  s.add_box({Vec3(3.0, -3.5, z0), Vec3(4.5, -2.5, -0.6), sine(30, 200, 0.5)});
  s.add_box({Vec3(-3.5, 8.5, z0), Vec3(-2.0, 9.5, -0.3), sine(30, 200, 0.5)});
  return s;
}

Trajectory loop_trajectory(double duration) {
  if (!(duration > 0.0)) throw DomainError("loop_trajectory: duration must be positive");
  const int intervals = std::max(4, static_cast<int>(std::lround(duration)) - 2);
  const double dt = duration / (intervals + 2);
  const double a = 4.0;
  const double b = 3.0;
  std::vector<RigidTransform> control;
  double prev_yaw = 0.0;
  for (int k = 0; k <= intervals; ++k) {
    const double th = 2.0 * kPi * k / intervals;
    double yaw = std::atan2(b * std::sin(th), a * std::cos(th));
    while (yaw < prev_yaw - kPi) yaw += 2.0 * kPi;
    while (yaw > prev_yaw + kPi) yaw -= 2.0 * kPi;
    prev_yaw = yaw;
    RigidTransform pose;
    if (k > 0 && k < intervals) {
      pose.translation = Vec3(a * std::sin(th), b * (1.0 - std::cos(th)), 0.3 * std::sin(2.0 * th));
      pose.rotation = Rotation::from_rpy(deg(3.0) * std::sin(3.0 * th), deg(3.0) * std::sin(2.0 * th), yaw);
    }
    control.push_back(pose);
  }
  return Trajectory(std::move(control), dt);
}

}  // namespace livo::sim
