#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "livo/camera_filter.hpp"
#include "livo/optical_flow.hpp"
#include "livo/voxel_map.hpp"

namespace livo {

/// For each recently visited voxel, the point with the latest insert stamp
/// (ties broken by insertion order), in visiting order.
std::vector<MapPointRef> extract_recent_points(const VoxelMap& map);

/// Tracks cur_pixel of every valid feature from `prev` into `cur`. The old
/// cur_pixel becomes prev_pixel. Features that fail to converge, leave the
/// image (3 px margin) or fail the forward-backward check become invalid.
/// `guesses`, when given, holds one starting position per feature.
std::vector<TrackedFeature> track_features(const ImagePyramid& prev, const ImagePyramid& cur,
                                           std::span<const TrackedFeature> features, const LkParams& params,
                                           std::span<const Vec2> guesses = {});
std::vector<TrackedFeature> track_features(const ImageFrame& prev, const ImageFrame& cur,
                                           std::span<const TrackedFeature> features, const LkParams& params = {});

struct RenderConfig {
  double max_weight{100.0};
  double min_depth{1.0};  // depths below this weigh as this
  double margin{1.0};
};

/// Fuses image colors into every point of the recently visited voxels.
/// `previous` supplies the pose/params of the last image so the temporal
/// projection term can use the point's previous projection. Returns the
/// number of points that received a color.
std::size_t render(VoxelMap& map, const ImageFrame& image, const CameraParams& params, const RigidTransform& nav_pose,
                   double dt = 0.0, const std::optional<std::pair<RigidTransform, CameraParams>>& previous = {},
                   const RenderConfig& cfg = {});

enum class VisionStage { kUndistort, kTrack, kPredict, kPnp, kPhotometric, kRender, kPromote };
std::string_view to_string(VisionStage s);

struct VisionConfig {
  CameraFilterConfig filter;
  LkParams lk;
  Distortion distortion;
  RenderConfig render;
  std::size_t min_tracked{40};
  int grid_cell{40};
  std::size_t max_features{150};
  // tracked features farther than this from their predicted projection are
  // dropped; <= 0 disables the gate
  double max_track_residual{20.0};
  bool enable_pnp{true};
  bool enable_photometric{true};
};

struct VisionReport {
  Timestamp stamp;
  std::size_t tracked{0};
  std::size_t recent{0};
  std::size_t promoted{0};
  std::size_t rendered{0};
  UpdateReport pnp;
  UpdateReport photometric;
};

/// Per-image camera-parameter estimation and map coloring. The navigation
/// state is read-only here.
class VisionModule {
 public:
  VisionModule(CameraParams initial, CameraMatrix initial_covariance, VisionConfig cfg);

  /// `nav_pose` must be the IMU pose at the image stamp.
  VisionReport process(const ImageFrame& raw, Timestamp nav_stamp, const RigidTransform& nav_pose, VoxelMap& map);

  const CameraParams& params() const { return filter_.params(); }
  const CameraMatrix& covariance() const { return filter_.covariance(); }
  const CameraFilter& filter() const { return filter_; }
  const std::vector<TrackedFeature>& features() const { return features_; }
  const std::vector<VisionStage>& stage_log() const { return stages_; }
  const VisionConfig& config() const { return cfg_; }

 private:
  std::size_t promote(const VoxelMap& map, std::span<const MapPointRef> recent, const ImageFrame& image,
                      const RigidTransform& nav_pose);

  VisionConfig cfg_;
  CameraFilter filter_;
  std::vector<TrackedFeature> features_;
  std::vector<VisionStage> stages_;
  std::optional<ImagePyramid> prev_pyramid_;
  Timestamp prev_stamp_;
  RigidTransform prev_pose_;
  CameraParams prev_params_;
};

}  // namespace livo
