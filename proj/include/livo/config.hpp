#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "livo/lio.hpp"
#include "livo/sim.hpp"
#include "livo/vision.hpp"

namespace livo {

/// Flat "key = value" document. '#' starts a comment; keys may repeat.
/// Typed getters throw ParseError naming the source line.
class KeyValueFile {
 public:
  struct Entry {
    std::string key;
    std::string value;
    int line{0};
    std::string origin;
  };

  static KeyValueFile parse(std::string_view text, std::string source = "<memory>");
  static KeyValueFile load(const std::filesystem::path& path);
  /// Entries of `top` override those of `base`; paths resolve against top.
  static KeyValueFile overlay(const KeyValueFile& base, const KeyValueFile& top);

  const std::string& source() const { return source_; }
  /// Directory relative paths are resolved against.
  const std::filesystem::path& base_dir() const { return base_dir_; }

  bool has(std::string_view key) const;
  /// Last entry for the key.
  const Entry* find(std::string_view key) const;
  std::vector<const Entry*> all(std::string_view key) const;

  std::string get_string(std::string_view key, std::string fallback = {}) const;
  double get_double(std::string_view key, double fallback) const;
  long get_int(std::string_view key, long fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  /// Whitespace-separated numbers; `count` of 0 accepts any length.
  std::optional<std::vector<double>> get_doubles(std::string_view key, std::size_t count = 0) const;
  std::filesystem::path get_path(std::string_view key) const;

  /// Throws ParseError for the first key not in `known` (prefix match when a
  /// known entry ends with '.').
  void reject_unknown(std::span<const std::string_view> known) const;

  [[noreturn]] void fail(const Entry& e, const std::string& what) const;

 private:
  std::string source_;
  std::filesystem::path base_dir_;
  std::vector<Entry> entries_;
};

std::vector<double> parse_numbers(const std::string& text);

struct PipelineConfig {
  LioConfig lio;
  StreamConfig stream;
  VisionConfig vision;
  CameraParams camera_initial;
  CameraMatrix camera_covariance{CameraMatrix::Identity()};
  bool use_camera{true};
  std::filesystem::path dataset_dir;
  std::filesystem::path simulator_config;
  std::filesystem::path output_dir;
  std::size_t max_degenerate_packets{20};
  std::size_t max_pending_boundaries{1024};
};

/// Builds a pipeline configuration; keys missing from `cfg` are looked up in
/// `fallback` (the dataset calibration file) when given.
PipelineConfig parse_pipeline_config(const KeyValueFile& cfg, const KeyValueFile* fallback = nullptr);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Scene, trajectory, rig and noise for the simulator.
sim::SimulationConfig parse_scene_config(const KeyValueFile& cfg);
sim::SimulationConfig load_scene_config(const std::filesystem::path& path);

/// Reads a rigid transform from "<prefix>.translation" plus either
/// "<prefix>.rpy_deg" or "<prefix>.rotation" (row-major 3x3).
std::optional<RigidTransform> read_transform(const KeyValueFile& cfg, const std::string& prefix);

}  // namespace livo
