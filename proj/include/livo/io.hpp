#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "livo/camera_model.hpp"
#include "livo/sim.hpp"
#include "livo/voxel_map.hpp"

namespace livo {

/// Stamped world <- IMU poses with strictly increasing stamps.
using TrajectoryRecord = std::vector<PoseKnot>;

/// "stamp tx ty tz qx qy qz qw" rows.
std::string format_trajectory(const TrajectoryRecord& traj);
void write_trajectory(const std::filesystem::path& path, const TrajectoryRecord& traj);
/// Throws ParseError with the line number for malformed rows; '#' lines are
/// comments.
TrajectoryRecord read_trajectory(const std::filesystem::path& path);

struct ColoredPoint {
  Eigen::Vector3f position{Eigen::Vector3f::Zero()};
  std::array<std::uint8_t, 3> rgb{0, 0, 0};
};

/// Map points ordered by insertion; colors rounded to 8 bits.
std::vector<ColoredPoint> colored_points(const VoxelMap& map);

/// Binary little-endian PLY writer for a declared number of vertices. The
/// file is removed and IoError thrown if the vertex count written differs
/// from the declaration.
class PlyWriter {
 public:
  PlyWriter(const std::filesystem::path& path, std::size_t declared);
  ~PlyWriter();
  PlyWriter(const PlyWriter&) = delete;
  PlyWriter& operator=(const PlyWriter&) = delete;

  void add(const ColoredPoint& p);
  void close();

 private:
  void abort(const std::string& why);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t declared_;
  std::size_t written_{0};
  bool closed_{false};
};

void write_ply(const std::filesystem::path& path, std::span<const ColoredPoint> points);
std::vector<ColoredPoint> read_ply(const std::filesystem::path& path);

/// Full-precision map snapshot used between `run` and `export-ply`.
void write_map(const std::filesystem::path& path, const VoxelMap& map);
std::vector<MapPoint> read_map(const std::filesystem::path& path);

/// Dataset directory: imu.csv, sweeps/NNNNNN.bin, images/<stamp>.pgm|ppm,
/// calib.txt and gt.txt (when ground truth is known).
void write_dataset(const std::filesystem::path& dir, const sim::Dataset& data, const sim::SensorRig& rig);
sim::Dataset read_dataset(const std::filesystem::path& dir);

std::vector<ImuSample> read_imu_csv(const std::filesystem::path& path);
RawSweep read_sweep(const std::filesystem::path& path);
void write_sweep(const std::filesystem::path& path, const RawSweep& sweep);

/// %.9f with the trailing digits kept; used for image file names.
std::string format_stamp_name(Timestamp t);

}  // namespace livo
