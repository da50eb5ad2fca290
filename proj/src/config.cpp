#include "livo/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "livo/error.hpp"

namespace livo {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> tokens(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

bool to_double(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

double deg(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  for (const std::string& t : tokens(text)) {
    double v = 0.0;
    if (!to_double(t, v)) throw ParseError("not a number: '" + t + "'");
    out.push_back(v);
  }
  return out;
}

KeyValueFile KeyValueFile::parse(std::string_view text, std::string source) {
  KeyValueFile f;
  f.source_ = std::move(source);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ParseError(f.source_ + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    Entry e{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), line_no, f.source_};
    if (e.key.empty()) throw ParseError(f.source_ + ":" + std::to_string(line_no) + ": empty key");
    f.entries_.push_back(std::move(e));
  }
  return f;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  KeyValueFile f = parse(ss.str(), path.string());
  f.base_dir_ = path.parent_path();
  return f;
}

KeyValueFile KeyValueFile::overlay(const KeyValueFile& base, const KeyValueFile& top) {
  KeyValueFile f;
  f.source_ = top.source_;
  f.base_dir_ = top.base_dir_;
  f.entries_ = base.entries_;
  f.entries_.insert(f.entries_.end(), top.entries_.begin(), top.entries_.end());
  return f;
}

bool KeyValueFile::has(std::string_view key) const { return find(key) != nullptr; }

const KeyValueFile::Entry* KeyValueFile::find(std::string_view key) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->key == key) return &*it;
  }
  return nullptr;
}

std::vector<const KeyValueFile::Entry*> KeyValueFile::all(std::string_view key) const {
  std::vector<const Entry*> out;
  for (const Entry& e : entries_) {
    if (e.key == key) out.push_back(&e);
  }
  return out;
}

void KeyValueFile::fail(const Entry& e, const std::string& what) const {
  throw ParseError(e.origin + ":" + std::to_string(e.line) + ": " + e.key + ": " + what);
}

std::string KeyValueFile::get_string(std::string_view key, std::string fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double KeyValueFile::get_double(std::string_view key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  double v = 0.0;
  if (!to_double(e->value, v)) fail(*e, "expected a number, got '" + e->value + "'");
  return v;
}

long KeyValueFile::get_int(std::string_view key, long fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  long v = 0;
  auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
  if (ec != std::errc() || ptr != e->value.data() + e->value.size()) {
    fail(*e, "expected an integer, got '" + e->value + "'");
  }
  return v;
}

bool KeyValueFile::get_bool(std::string_view key, bool fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "1" || e->value == "yes" || e->value == "on") return true;
  if (e->value == "false" || e->value == "0" || e->value == "no" || e->value == "off") return false;
  fail(*e, "expected a boolean, got '" + e->value + "'");
}

std::optional<std::vector<double>> KeyValueFile::get_doubles(std::string_view key, std::size_t count) const {
  const Entry* e = find(key);
  if (!e) return std::nullopt;
  std::vector<double> v;
  try {
    v = parse_numbers(e->value);
  } catch (const ParseError& err) {
    fail(*e, err.what());
  }
  if (count != 0 && v.size() != count) {
    fail(*e, "expected " + std::to_string(count) + " numbers, got " + std::to_string(v.size()));
  }
  return v;
}

std::filesystem::path KeyValueFile::get_path(std::string_view key) const {
  const Entry* e = find(key);
  if (!e || e->value.empty()) return {};
  std::filesystem::path p(e->value);
  if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
  return p;
}

void KeyValueFile::reject_unknown(std::span<const std::string_view> known) const {
  for (const Entry& e : entries_) {
    const bool ok = std::any_of(known.begin(), known.end(), [&](std::string_view k) {
      return k == e.key || (!k.empty() && k.back() == '.' && e.key.starts_with(k));
    });
    if (!ok) fail(e, "unknown key");
  }
}

std::optional<RigidTransform> read_transform(const KeyValueFile& cfg, const std::string& prefix) {
  const auto t = cfg.get_doubles(prefix + ".translation", 3);
  const auto rpy = cfg.get_doubles(prefix + ".rpy_deg", 3);
  const auto m = cfg.get_doubles(prefix + ".rotation", 9);
  if (!t && !rpy && !m) return std::nullopt;
  RigidTransform out;
  if (t) out.translation = Vec3((*t)[0], (*t)[1], (*t)[2]);
  if (m) {
    Mat3 r;
    r << (*m)[0], (*m)[1], (*m)[2], (*m)[3], (*m)[4], (*m)[5], (*m)[6], (*m)[7], (*m)[8];
    if (!((r.transpose() * r - Mat3::Identity()).norm() < 1e-6) || r.determinant() < 0.0) {
      cfg.fail(*cfg.find(prefix + ".rotation"), "not a rotation matrix");
    }
    out.rotation = Rotation::from_matrix(r);
  } else if (rpy) {
    out.rotation = Rotation::from_rpy(deg((*rpy)[0]), deg((*rpy)[1]), deg((*rpy)[2]));
  }
  return out;
}

namespace {

void require_positive(const KeyValueFile& cfg, std::string_view key, double v) {
  if (!(v > 0.0)) {
    const auto* e = cfg.find(key);
    if (e) cfg.fail(*e, "must be positive");
    throw ParseError(std::string(key) + ": must be positive");
  }
}

double positive(const KeyValueFile& cfg, std::string_view key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  require_positive(cfg, key, v);
  return v;
}

Vec3 vec3_or(const KeyValueFile& cfg, std::string_view key, const Vec3& fallback) {
  const auto v = cfg.get_doubles(key, 3);
  return v ? Vec3((*v)[0], (*v)[1], (*v)[2]) : fallback;
}

constexpr std::string_view kPipelineKeys[] = {
    "input.dataset", "input.simulator", "output.dir", "gravity",
    "lidar_to_imu.translation", "lidar_to_imu.rpy_deg", "lidar_to_imu.rotation",
    "camera_to_imu.translation", "camera_to_imu.rpy_deg", "camera_to_imu.rotation",
    "camera.enabled", "camera.intrinsics", "camera.distortion", "camera.time_offset", "camera.resolution",
    "imu.rate", "stream.lidar_hz", "stream.camera_hz", "stream.min_fraction", "stream.max_pending",
    "pipeline.max_degenerate",
    "lio.imu_period", "lio.gyro_noise", "lio.accel_noise", "lio.gyro_bias_walk", "lio.accel_bias_walk",
    "lio.voxel_size", "lio.max_points_per_voxel", "lio.min_point_distance", "lio.downsample_voxel",
    "lio.plane_neighbors", "lio.planarity_ratio", "lio.max_neighbor_distance", "lio.max_residual",
    "lio.lidar_sigma", "lio.max_iterations", "lio.convergence", "lio.min_correspondences",
    "lio.degenerate_inflation", "lio.min_range",
    "vision.sigma_pnp", "vision.sigma_photo", "vision.huber_pnp", "vision.huber_photo", "vision.max_iterations",
    "vision.convergence", "vision.max_time_offset", "vision.min_tracked", "vision.max_features", "vision.grid_cell",
    "vision.max_track_residual",
    "vision.pnp", "vision.photometric", "vision.render_max_weight", "vision.initial_p_diag",
};

}  // namespace

PipelineConfig parse_pipeline_config(const KeyValueFile& main, const KeyValueFile* fallback) {
  main.reject_unknown(kPipelineKeys);
  const KeyValueFile cfg = fallback ? KeyValueFile::overlay(*fallback, main) : main;

  PipelineConfig pc;
  pc.dataset_dir = cfg.get_path("input.dataset");
  pc.simulator_config = cfg.get_path("input.simulator");
  pc.output_dir = cfg.get_path("output.dir");

  LioConfig& lio = pc.lio;
  lio.gravity = vec3_or(cfg, "gravity", lio.gravity);
  if (auto t = read_transform(cfg, "lidar_to_imu")) lio.lidar_to_imu = *t;
  if (cfg.has("imu.rate")) lio.imu_period = 1.0 / positive(cfg, "imu.rate", 200.0);
  lio.imu_period = positive(cfg, "lio.imu_period", lio.imu_period);
  lio.noise.gyro = positive(cfg, "lio.gyro_noise", lio.noise.gyro);
  lio.noise.accel = positive(cfg, "lio.accel_noise", lio.noise.accel);
  lio.noise.gyro_bias_walk = positive(cfg, "lio.gyro_bias_walk", lio.noise.gyro_bias_walk);
  lio.noise.accel_bias_walk = positive(cfg, "lio.accel_bias_walk", lio.noise.accel_bias_walk);
  lio.map.voxel_size = positive(cfg, "lio.voxel_size", lio.map.voxel_size);
  lio.map.max_points_per_voxel =
      static_cast<std::size_t>(positive(cfg, "lio.max_points_per_voxel", static_cast<double>(lio.map.max_points_per_voxel)));
  lio.map.min_point_distance = positive(cfg, "lio.min_point_distance", lio.map.min_point_distance);
  lio.downsample_voxel = positive(cfg, "lio.downsample_voxel", lio.downsample_voxel);
  lio.plane_neighbors = static_cast<std::size_t>(positive(cfg, "lio.plane_neighbors", 5.0));
  lio.planarity_ratio = positive(cfg, "lio.planarity_ratio", lio.planarity_ratio);
  lio.max_neighbor_distance = positive(cfg, "lio.max_neighbor_distance", lio.max_neighbor_distance);
  lio.max_residual = positive(cfg, "lio.max_residual", lio.max_residual);
  lio.lidar_sigma = positive(cfg, "lio.lidar_sigma", lio.lidar_sigma);
  lio.max_iterations = static_cast<int>(positive(cfg, "lio.max_iterations", lio.max_iterations));
  lio.convergence = positive(cfg, "lio.convergence", lio.convergence);
  lio.min_correspondences = static_cast<std::size_t>(positive(cfg, "lio.min_correspondences", 10.0));
  lio.degenerate_inflation = positive(cfg, "lio.degenerate_inflation", lio.degenerate_inflation);
  lio.min_range = cfg.get_double("lio.min_range", lio.min_range);
  if (lio.plane_neighbors < 3) throw ParseError("lio.plane_neighbors: at least 3 required");

  StreamConfig& st = pc.stream;
  st.lidar_sweep_hz = positive(cfg, "stream.lidar_hz", st.lidar_sweep_hz);
  st.camera_hz = positive(cfg, "stream.camera_hz", st.camera_hz);
  st.min_fraction = positive(cfg, "stream.min_fraction", st.min_fraction);
  pc.max_pending_boundaries = static_cast<std::size_t>(positive(cfg, "stream.max_pending", 1024.0));
  pc.max_degenerate_packets = static_cast<std::size_t>(positive(cfg, "pipeline.max_degenerate", 20.0));

  pc.use_camera = cfg.get_bool("camera.enabled", true);
  CameraParams& cam = pc.camera_initial;
  if (auto t = read_transform(cfg, "camera_to_imu")) cam.extrinsic = *t;
  if (auto k = cfg.get_doubles("camera.intrinsics", 4)) {
    cam.intrinsics = {(*k)[0], (*k)[1], (*k)[2], (*k)[3]};
    require_positive(cfg, "camera.intrinsics", std::min((*k)[0], (*k)[1]));
  } else if (pc.use_camera) {
    throw ParseError(cfg.source() + ": camera.intrinsics is required when the camera is enabled");
  }
  if (auto d = cfg.get_doubles("camera.distortion")) {
    try {
      pc.vision.distortion = Distortion::from_coefficients(*d);
    } catch (const DomainError& e) {
      cfg.fail(*cfg.find("camera.distortion"), e.what());
    }
  }
  cam.time_offset = cfg.get_double("camera.time_offset", 0.0);

  VisionConfig& v = pc.vision;
  CameraFilterConfig& f = v.filter;
  f.sigma_pnp = positive(cfg, "vision.sigma_pnp", f.sigma_pnp);
  f.sigma_photo = positive(cfg, "vision.sigma_photo", f.sigma_photo);
  f.huber_pnp = positive(cfg, "vision.huber_pnp", f.huber_pnp);
  f.huber_photo = positive(cfg, "vision.huber_photo", f.huber_photo);
  f.max_iterations = static_cast<int>(positive(cfg, "vision.max_iterations", f.max_iterations));
  f.convergence = positive(cfg, "vision.convergence", f.convergence);
  f.max_time_offset = positive(cfg, "vision.max_time_offset", 0.5 / st.camera_hz);
  v.min_tracked = static_cast<std::size_t>(positive(cfg, "vision.min_tracked", static_cast<double>(v.min_tracked)));
  v.max_features = static_cast<std::size_t>(positive(cfg, "vision.max_features", static_cast<double>(v.max_features)));
  v.max_track_residual = cfg.get_double("vision.max_track_residual", v.max_track_residual);
  v.grid_cell = static_cast<int>(positive(cfg, "vision.grid_cell", v.grid_cell));
  v.enable_pnp = cfg.get_bool("vision.pnp", true);
  v.enable_photometric = cfg.get_bool("vision.photometric", true);
  v.render.max_weight = positive(cfg, "vision.render_max_weight", v.render.max_weight);

  CameraVector diag;
  diag << 1e-4, 3e-3, 3e-3, 3e-3, 1e-3, 1e-3, 1e-3, 400.0, 400.0, 100.0, 100.0;
  if (auto p = cfg.get_doubles("vision.initial_p_diag", kCameraStateDim)) {
    for (int i = 0; i < kCameraStateDim; ++i) diag(i) = (*p)[static_cast<std::size_t>(i)];
    if (!(diag.minCoeff() > 0.0)) cfg.fail(*cfg.find("vision.initial_p_diag"), "entries must be positive");
  }
  pc.camera_covariance = diag.asDiagonal();
  return pc;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  const KeyValueFile main = KeyValueFile::load(path);
  std::filesystem::path dataset = main.get_path("input.dataset");
  if (!dataset.empty() && std::filesystem::exists(dataset / "calib.txt")) {
    const KeyValueFile calib = KeyValueFile::load(dataset / "calib.txt");
    return parse_pipeline_config(main, &calib);
  }
  return parse_pipeline_config(main);
}

namespace {

constexpr std::string_view kSceneKeys[] = {
    "preset", "patch", "box", "seed", "gravity", "camera.enabled",
    "trajectory.preset", "trajectory.duration", "trajectory.pose", "trajectory.control_dt",
    "rig.lidar_to_imu.translation", "rig.lidar_to_imu.rpy_deg", "rig.lidar_to_imu.rotation",
    "rig.camera_to_imu.translation", "rig.camera_to_imu.rpy_deg", "rig.camera_to_imu.rotation",
    "rig.intrinsics", "rig.distortion", "rig.resolution", "rig.time_offset", "rig.imu_hz", "rig.lidar_hz",
    "rig.camera_hz", "rig.beams", "rig.vertical_fov_deg", "rig.azimuth_steps", "rig.min_range", "rig.max_range",
    "noise.gyro", "noise.accel", "noise.gyro_bias", "noise.accel_bias", "noise.range", "noise.pixel",
};

sim::Material parse_material(const KeyValueFile& cfg, const KeyValueFile::Entry& e,
                             const std::vector<std::string>& tok, std::size_t at) {
  sim::Material m;
  auto num = [&](std::size_t i) {
    double v = 0.0;
    if (i >= tok.size() || !to_double(tok[i], v)) cfg.fail(e, "malformed material");
    return v;
  };
  m.albedo = Vec3::Constant(num(at));
  m.albedo2 = m.albedo;
  if (tok.size() == at + 1) return m;
  if (tok.size() != at + 4) cfg.fail(e, "material is '<albedo> [uniform|checker|sine <scale> <albedo2>]'");
  const std::string& kind = tok[at + 1];
  if (kind == "uniform") m.texture = sim::Texture::kUniform;
  else if (kind == "checker") m.texture = sim::Texture::kChecker;
  else if (kind == "sine") m.texture = sim::Texture::kSine;
  else cfg.fail(e, "unknown texture '" + kind + "'");
  m.scale = num(at + 2);
  if (!(m.scale > 0.0)) cfg.fail(e, "texture scale must be positive");
  m.albedo2 = Vec3::Constant(num(at + 3));
  return m;
}

double number_at(const KeyValueFile& cfg, const KeyValueFile::Entry& e, const std::vector<std::string>& tok,
                 std::size_t i) {
  double v = 0.0;
  if (i >= tok.size() || !to_double(tok[i], v)) cfg.fail(e, "expected a number at field " + std::to_string(i + 1));
  return v;
}

}  // namespace

sim::SimulationConfig parse_scene_config(const KeyValueFile& cfg) {
  cfg.reject_unknown(kSceneKeys);
  sim::SimulationConfig sc;

  const std::string preset = cfg.get_string("preset", "");
  if (preset == "room") {
    sc.scene = sim::room_scene();
  } else if (!preset.empty() && preset != "none") {
    cfg.fail(*cfg.find("preset"), "unknown preset '" + preset + "'");
  }

  try {
    for (const auto* e : cfg.all("patch")) {
      const auto tok = tokens(e->value);
      if (tok.size() < 12) cfg.fail(*e, "patch needs center, normal, axis_u, half extents and albedo");
      std::array<double, 11> v{};
      for (std::size_t i = 0; i < 11; ++i) v[i] = number_at(cfg, *e, tok, i);
      sim::Patch p;
      p.center = Vec3(v[0], v[1], v[2]);
      p.normal = Vec3(v[3], v[4], v[5]);
      p.axis_u = Vec3(v[6], v[7], v[8]);
      p.half_u = v[9];
      p.half_v = v[10];
      p.material = parse_material(cfg, *e, tok, 11);
      sc.scene.add_patch(p);
    }
    for (const auto* e : cfg.all("box")) {
      const auto tok = tokens(e->value);
      if (tok.size() < 7) cfg.fail(*e, "box needs min, max and albedo");
      sim::Box b;
      for (int i = 0; i < 3; ++i) {
        b.min(i) = number_at(cfg, *e, tok, static_cast<std::size_t>(i));
        b.max(i) = number_at(cfg, *e, tok, static_cast<std::size_t>(i + 3));
      }
      b.material = parse_material(cfg, *e, tok, 6);
      sc.scene.add_box(b);
    }
  } catch (const DomainError& err) {
    throw ParseError(cfg.source() + ": " + err.what());
  }

  const std::string traj = cfg.get_string("trajectory.preset", "");
  const auto poses = cfg.all("trajectory.pose");
  if (traj == "loop") {
    sc.trajectory = sim::loop_trajectory(positive(cfg, "trajectory.duration", 30.0));
  } else if (!traj.empty()) {
    cfg.fail(*cfg.find("trajectory.preset"), "unknown trajectory preset '" + traj + "'");
  } else if (!poses.empty()) {
    std::vector<RigidTransform> control;
    for (const auto* e : poses) {
      const auto tok = tokens(e->value);
      if (tok.size() != 6) cfg.fail(*e, "expected 'x y z roll pitch yaw' (degrees)");
      std::array<double, 6> v{};
      for (std::size_t i = 0; i < 6; ++i) v[i] = number_at(cfg, *e, tok, i);
      control.push_back({Rotation::from_rpy(deg(v[3]), deg(v[4]), deg(v[5])), Vec3(v[0], v[1], v[2])});
    }
    sc.trajectory = sim::Trajectory(std::move(control), positive(cfg, "trajectory.control_dt", 1.0));
  }

  sim::SensorRig& rig = sc.rig;
  if (auto t = read_transform(cfg, "rig.lidar_to_imu")) rig.lidar_to_imu = *t;
  if (auto t = read_transform(cfg, "rig.camera_to_imu")) rig.camera_to_imu = *t;
  if (auto k = cfg.get_doubles("rig.intrinsics", 4)) rig.intrinsics = {(*k)[0], (*k)[1], (*k)[2], (*k)[3]};
  if (auto d = cfg.get_doubles("rig.distortion")) {
    try {
      rig.distortion = Distortion::from_coefficients(*d);
    } catch (const DomainError& e) {
      cfg.fail(*cfg.find("rig.distortion"), e.what());
    }
  }
  if (auto r = cfg.get_doubles("rig.resolution", 2)) {
    rig.width = static_cast<int>((*r)[0]);
    rig.height = static_cast<int>((*r)[1]);
    if (rig.width < 8 || rig.height < 8) cfg.fail(*cfg.find("rig.resolution"), "image too small");
  }
  rig.time_offset = cfg.get_double("rig.time_offset", rig.time_offset);
  rig.imu_hz = positive(cfg, "rig.imu_hz", rig.imu_hz);
  rig.lidar_hz = positive(cfg, "rig.lidar_hz", rig.lidar_hz);
  rig.camera_hz = positive(cfg, "rig.camera_hz", rig.camera_hz);
  rig.beams = static_cast<int>(positive(cfg, "rig.beams", rig.beams));
  rig.vertical_fov_deg = cfg.get_double("rig.vertical_fov_deg", rig.vertical_fov_deg);
  rig.azimuth_steps = static_cast<int>(positive(cfg, "rig.azimuth_steps", rig.azimuth_steps));
  rig.lidar_min_range = cfg.get_double("rig.min_range", rig.lidar_min_range);
  rig.lidar_max_range = positive(cfg, "rig.max_range", rig.lidar_max_range);

  sim::NoiseConfig& n = sc.noise;
  n.gyro_density = cfg.get_double("noise.gyro", 0.0);
  n.accel_density = cfg.get_double("noise.accel", 0.0);
  n.gyro_bias = vec3_or(cfg, "noise.gyro_bias", Vec3::Zero());
  n.accel_bias = vec3_or(cfg, "noise.accel_bias", Vec3::Zero());
  n.range_sigma = cfg.get_double("noise.range", 0.0);
  n.pixel_sigma = cfg.get_double("noise.pixel", 0.0);
  if (n.gyro_density < 0.0 || n.accel_density < 0.0 || n.range_sigma < 0.0 || n.pixel_sigma < 0.0) {
    throw ParseError(cfg.source() + ": noise levels must be non-negative");
  }

  sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  sc.gravity = vec3_or(cfg, "gravity", sc.gravity);
  sc.camera = cfg.get_bool("camera.enabled", true);
  return sc;
}

sim::SimulationConfig load_scene_config(const std::filesystem::path& path) {
  return parse_scene_config(KeyValueFile::load(path));
}

}  // namespace livo
