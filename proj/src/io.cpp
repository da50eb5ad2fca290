#include "livo/io.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "livo/config.hpp"
#include "livo/error.hpp"

namespace fs = std::filesystem;

namespace livo {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get_le(const char*& p, const char* end, const std::string& what) {
  if (end - p < static_cast<std::ptrdiff_t>(sizeof(T))) throw ParseError(what + ": truncated");
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T v;
  std::memcpy(&v, bytes, sizeof(T));
  p += sizeof(T);
  return v;
}

std::string line_error(const fs::path& path, int line, const std::string& what) {
  return path.string() + ":" + std::to_string(line) + ": " + what;
}

// Splits on commas or whitespace.
std::vector<double> numbers_in(const std::string& line, const fs::path& path, int line_no) {
  std::string s = line;
  std::replace(s.begin(), s.end(), ',', ' ');
  try {
    return parse_numbers(s);
  } catch (const ParseError& e) {
    throw ParseError(line_error(path, line_no, e.what()));
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

}  // namespace

std::string format_trajectory(const TrajectoryRecord& traj) {
  std::string out;
  char buf[256];
  for (const PoseKnot& k : traj) {
    const Eigen::Quaterniond& q = k.pose.rotation.quaternion();
    const Vec3& t = k.pose.translation;
    std::snprintf(buf, sizeof(buf), "%.9f %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", k.stamp.sec, t.x(), t.y(),
                  t.z(), q.x(), q.y(), q.z(), q.w());
    out += buf;
  }
  return out;
}

void write_trajectory(const fs::path& path, const TrajectoryRecord& traj) {
  for (std::size_t i = 1; i < traj.size(); ++i) {
    if (!(traj[i].stamp > traj[i - 1].stamp)) {
      throw OrderingError("trajectory stamps not strictly increasing at row " + std::to_string(i));
    }
  }
  std::ofstream out = open_out(path);
  out << format_trajectory(traj);
  if (!out) throw IoError("failed writing " + path.string());
}

TrajectoryRecord read_trajectory(const fs::path& path) {
  std::istringstream in(read_file(path));
  TrajectoryRecord out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t\r")] == '#') continue;
    const std::vector<double> v = numbers_in(line, path, line_no);
    if (v.size() != 8) throw ParseError(line_error(path, line_no, "expected 8 fields, got " + std::to_string(v.size())));
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(std::abs(q.norm() - 1.0) < 1e-3)) throw ParseError(line_error(path, line_no, "quaternion is not unit"));
    PoseKnot k{Timestamp(v[0]), RigidTransform{Rotation(q.normalized()), Vec3(v[1], v[2], v[3])}};
    if (!out.empty() && !(k.stamp > out.back().stamp)) {
      throw ParseError(line_error(path, line_no, "stamps must increase strictly"));
    }
    out.push_back(k);
  }
  return out;
}

std::vector<ColoredPoint> colored_points(const VoxelMap& map) {
  std::vector<const MapPoint*> all;
  all.reserve(map.num_points());
  map.for_each_cell([&](const VoxelKey&, const VoxelMap::Cell& cell) {
    for (const MapPoint& p : cell) all.push_back(&p);
  });
  std::sort(all.begin(), all.end(), [](const MapPoint* a, const MapPoint* b) { return a->sequence < b->sequence; });
  std::vector<ColoredPoint> out;
  out.reserve(all.size());
  for (const MapPoint* p : all) {
    ColoredPoint c;
    c.position = p->position.cast<float>();
    for (int i = 0; i < 3; ++i) {
      c.rgb[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::clamp(std::round(p->color(i)), 0.0, 255.0));
    }
    out.push_back(c);
  }
  return out;
}

PlyWriter::PlyWriter(const fs::path& path, std::size_t declared) : path_(path), declared_(declared) {
  out_ = open_out(path);
  out_ << "ply\n"
       << "format binary_little_endian 1.0\n"
       << "element vertex " << declared << "\n"
       << "property float x\nproperty float y\nproperty float z\n"
       << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
       << "end_header\n";
}

PlyWriter::~PlyWriter() {
  if (!closed_) {
    out_.close();
    std::error_code ec;
    fs::remove(path_, ec);
  }
}

void PlyWriter::abort(const std::string& why) {
  out_.close();
  closed_ = true;
  std::error_code ec;
  fs::remove(path_, ec);
  throw IoError("PLY write aborted for " + path_.string() + ": " + why);
}

void PlyWriter::add(const ColoredPoint& p) {
  if (closed_) throw IoError("PLY writer already closed");
  if (written_ == declared_) abort("more than the declared " + std::to_string(declared_) + " vertices");
  for (int i = 0; i < 3; ++i) put_le(out_, p.position(i));
  for (std::uint8_t c : p.rgb) put_le(out_, c);
  ++written_;
}

void PlyWriter::close() {
  if (closed_) return;
  if (written_ != declared_) {
    abort("declared " + std::to_string(declared_) + " vertices, wrote " + std::to_string(written_));
  }
  out_.flush();
  if (!out_) abort("stream error");
  out_.close();
  closed_ = true;
}

void write_ply(const fs::path& path, std::span<const ColoredPoint> points) {
  PlyWriter w(path, points.size());
  for (const ColoredPoint& p : points) w.add(p);
  w.close();
}

std::vector<ColoredPoint> read_ply(const fs::path& path) {
  const std::string data = read_file(path);
  const std::string marker = "end_header\n";
  const auto end = data.find(marker);
  if (data.rfind("ply\n", 0) != 0 || end == std::string::npos) throw ParseError(path.string() + ": not a PLY file");
  std::istringstream header(data.substr(0, end));
  std::vector<std::string> props;
  std::size_t count = 0;
  bool format_ok = false;
  for (std::string line; std::getline(header, line);) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string f;
      ls >> f;
      format_ok = f == "binary_little_endian";
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw ParseError(path.string() + ": unsupported element '" + name + "'");
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(type + " " + name);
    }
  }
  const std::vector<std::string> expected = {"float x", "float y", "float z",
                                             "uchar red", "uchar green", "uchar blue"};
  if (!format_ok || props != expected) throw ParseError(path.string() + ": unsupported PLY layout");
  const char* p = data.data() + end + marker.size();
  const char* stop = data.data() + data.size();
  if (static_cast<std::size_t>(stop - p) != count * 15) {
    throw ParseError(path.string() + ": vertex count does not match payload size");
  }
  std::vector<ColoredPoint> out(count);
  for (ColoredPoint& c : out) {
    for (int i = 0; i < 3; ++i) c.position(i) = get_le<float>(p, stop, path.string());
    for (auto& v : c.rgb) v = get_le<std::uint8_t>(p, stop, path.string());
  }
  return out;
}

namespace {
constexpr char kMapMagic[8] = {'L', 'I', 'V', 'O', 'M', 'A', 'P', '1'};
}

void write_map(const fs::path& path, const VoxelMap& map) {
  std::vector<const MapPoint*> all;
  map.for_each_cell([&](const VoxelKey&, const VoxelMap::Cell& cell) {
    for (const MapPoint& p : cell) all.push_back(&p);
  });
  std::sort(all.begin(), all.end(), [](const MapPoint* a, const MapPoint* b) { return a->sequence < b->sequence; });
  std::ofstream out = open_out(path);
  out.write(kMapMagic, sizeof(kMapMagic));
  put_le<std::uint64_t>(out, all.size());
  for (const MapPoint* p : all) {
    for (int i = 0; i < 3; ++i) put_le(out, p->position(i));
    for (int i = 0; i < 3; ++i) put_le(out, p->color(i));
    put_le(out, p->color_weight);
    put_le(out, p->insert_stamp.sec);
    put_le<std::uint64_t>(out, p->sequence);
    put_le<std::uint8_t>(out, p->rendered ? 1 : 0);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<MapPoint> read_map(const fs::path& path) {
  const std::string data = read_file(path);
  if (data.size() < 16 || std::memcmp(data.data(), kMapMagic, sizeof(kMapMagic)) != 0) {
    throw ParseError(path.string() + ": not a map snapshot");
  }
  const char* p = data.data() + sizeof(kMapMagic);
  const char* end = data.data() + data.size();
  const auto count = get_le<std::uint64_t>(p, end, path.string());
  constexpr std::size_t kRecord = 8 * 8 + 8 + 1;
  if (static_cast<std::uint64_t>(end - p) != count * kRecord) {
    throw ParseError(path.string() + ": point count " + std::to_string(count) + " does not match file size");
  }
  std::vector<MapPoint> out(static_cast<std::size_t>(count));
  for (MapPoint& m : out) {
    for (int i = 0; i < 3; ++i) m.position(i) = get_le<double>(p, end, path.string());
    for (int i = 0; i < 3; ++i) m.color(i) = get_le<double>(p, end, path.string());
    m.color_weight = get_le<double>(p, end, path.string());
    m.insert_stamp = Timestamp(get_le<double>(p, end, path.string()));
    m.sequence = get_le<std::uint64_t>(p, end, path.string());
    m.rendered = get_le<std::uint8_t>(p, end, path.string()) != 0;
  }
  return out;
}

std::string format_stamp_name(Timestamp t) { return fmt("%.9f", t.sec); }

std::vector<ImuSample> read_imu_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<ImuSample> out;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (line_no == 1 && std::isalpha(static_cast<unsigned char>(line[first]))) continue;  // header
    const std::vector<double> v = numbers_in(line, path, line_no);
    if (v.size() != 7) throw ParseError(line_error(path, line_no, "expected 7 fields, got " + std::to_string(v.size())));
    ImuSample s;
    s.stamp = Timestamp(v[0]);
    s.gyro = Vec3(v[1], v[2], v[3]);
    s.accel = Vec3(v[4], v[5], v[6]);
    if (!out.empty() && s.stamp < out.back().stamp) {
      throw ParseError(line_error(path, line_no, "stamps must not decrease"));
    }
    out.push_back(s);
  }
  return out;
}

void write_sweep(const fs::path& path, const RawSweep& sweep) {
  std::ofstream out = open_out(path);
  for (const LidarPoint& p : sweep.points) {
    for (int i = 0; i < 3; ++i) put_le(out, static_cast<float>(p.position(i)));
    put_le(out, static_cast<float>(p.intensity));
    put_le(out, p.stamp.sec);
  }
  if (!out) throw IoError("failed writing " + path.string());
}

RawSweep read_sweep(const fs::path& path) {
  const std::string data = read_file(path);
  constexpr std::size_t kRecord = 4 * 4 + 8;
  if (data.size() % kRecord != 0) {
    throw ParseError(path.string() + ": size " + std::to_string(data.size()) + " is not a multiple of " +
                     std::to_string(kRecord));
  }
  RawSweep sweep;
  const char* p = data.data();
  const char* end = p + data.size();
  sweep.points.reserve(data.size() / kRecord);
  while (p < end) {
    LidarPoint lp;
    for (int i = 0; i < 3; ++i) lp.position(i) = get_le<float>(p, end, path.string());
    lp.intensity = get_le<float>(p, end, path.string());
    lp.stamp = Timestamp(get_le<double>(p, end, path.string()));
    sweep.points.push_back(lp);
  }
  if (!sweep.points.empty()) {
    sweep.begin = sweep.points.front().stamp;
    sweep.end = sweep.points.back().stamp;
  }
  return sweep;
}

namespace {

std::string transform_lines(const std::string& prefix, const RigidTransform& t) {
  char buf[512];
  const Mat3 r = t.rotation.matrix();
  std::snprintf(buf, sizeof(buf),
                "%s.translation = %.17g %.17g %.17g\n%s.rotation = %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                prefix.c_str(), t.translation.x(), t.translation.y(), t.translation.z(), prefix.c_str(), r(0, 0),
                r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2), r(2, 0), r(2, 1), r(2, 2));
  return buf;
}

}  // namespace

void write_dataset(const fs::path& dir, const sim::Dataset& data, const sim::SensorRig& rig) {
  fs::create_directories(dir / "sweeps");
  fs::create_directories(dir / "images");
  {
    std::ofstream out = open_out(dir / "imu.csv");
    out << "stamp,wx,wy,wz,ax,ay,az\n";
    char buf[512];
    for (const ImuSample& s : data.imu) {
      std::snprintf(buf, sizeof(buf), "%.9f,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.stamp.sec, s.gyro.x(),
                    s.gyro.y(), s.gyro.z(), s.accel.x(), s.accel.y(), s.accel.z());
      out << buf;
    }
    if (!out) throw IoError("failed writing imu.csv");
  }
  for (std::size_t i = 0; i < data.sweeps.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06zu.bin", i);
    write_sweep(dir / "sweeps" / name, data.sweeps[i]);
  }
  for (const ImageFrame& img : data.images) {
    write_pnm(dir / "images" / (format_stamp_name(img.stamp) + (img.channels == 1 ? ".pgm" : ".ppm")), img);
  }
  {
    std::ofstream out = open_out(dir / "calib.txt");
    out << "# sensor calibration\n";
    out << transform_lines("lidar_to_imu", rig.lidar_to_imu);
    out << transform_lines("camera_to_imu", rig.camera_to_imu);
    char buf[512];
    const PinholeIntrinsics& k = rig.intrinsics;
    std::snprintf(buf, sizeof(buf), "camera.intrinsics = %.17g %.17g %.17g %.17g\n", k.fx, k.fy, k.cx, k.cy);
    out << buf;
    const Distortion& d = rig.distortion;
    std::snprintf(buf, sizeof(buf), "camera.distortion = %.17g %.17g %.17g %.17g %.17g\n", d.k1, d.k2, d.p1, d.p2,
                  d.k3);
    out << buf;
    out << "camera.resolution = " << rig.width << " " << rig.height << "\n";
    out << "imu.rate = " << fmt("%.17g", rig.imu_hz) << "\n";
    out << "stream.lidar_hz = " << fmt("%.17g", rig.lidar_hz) << "\n";
    out << "stream.camera_hz = " << fmt("%.17g", rig.camera_hz) << "\n";
    if (data.images.empty()) out << "camera.enabled = false\n";
  }
  if (!data.ground_truth.empty()) write_trajectory(dir / "gt.txt", data.ground_truth);
}

sim::Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory " + dir.string() + " does not exist");
  sim::Dataset d;
  d.imu = read_imu_csv(dir / "imu.csv");

  std::vector<fs::path> files;
  if (fs::is_directory(dir / "sweeps")) {
    for (const auto& e : fs::directory_iterator(dir / "sweeps")) {
      if (e.path().extension() == ".bin") files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) d.sweeps.push_back(read_sweep(f));

  files.clear();
  if (fs::is_directory(dir / "images")) {
    for (const auto& e : fs::directory_iterator(dir / "images")) {
      const auto ext = e.path().extension();
      if (ext == ".pgm" || ext == ".ppm") files.push_back(e.path());
    }
  }
  for (const fs::path& f : files) {
    double stamp = 0.0;
    try {
      const std::vector<double> v = parse_numbers(f.stem().string());
      if (v.size() != 1) throw ParseError("bad stamp");
      stamp = v[0];
    } catch (const ParseError&) {
      throw ParseError(f.string() + ": file name is not a timestamp");
    }
    ImageFrame img = read_pnm(f);
    img.stamp = Timestamp(stamp);
    d.images.push_back(std::move(img));
  }
  std::sort(d.images.begin(), d.images.end(), [](const ImageFrame& a, const ImageFrame& b) { return a.stamp < b.stamp; });
  if (fs::exists(dir / "gt.txt")) d.ground_truth = read_trajectory(dir / "gt.txt");
  return d;
}

}  // namespace livo
