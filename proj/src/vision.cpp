#include "livo/vision.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "livo/error.hpp"

namespace livo {

std::vector<MapPointRef> extract_recent_points(const VoxelMap& map) {
  std::vector<MapPointRef> out;
  for (const VoxelKey& key : map.recently_visited()) {
    const VoxelMap::Cell* cell = map.find(key);
    if (cell == nullptr || cell->empty()) continue;
    std::uint32_t best = 0;
    for (std::uint32_t i = 1; i < cell->size(); ++i) {
      const MapPoint& a = (*cell)[i];
      const MapPoint& b = (*cell)[best];
      if (a.insert_stamp > b.insert_stamp || (a.insert_stamp == b.insert_stamp && a.sequence > b.sequence)) best = i;
    }
    out.push_back({key, best});
  }
  return out;
}

std::vector<TrackedFeature> track_features(const ImagePyramid& prev, const ImagePyramid& cur,
                                           std::span<const TrackedFeature> features, const LkParams& params,
                                           std::span<const Vec2> guesses) {
  if (!guesses.empty() && guesses.size() != features.size()) {
    throw DomainError("track_features: one guess per feature required");
  }
  std::vector<TrackedFeature> out(features.begin(), features.end());
  std::vector<Vec2> starts;
  std::vector<Vec2> seeds;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i].valid) continue;
    starts.push_back(out[i].cur_pixel);
    if (!guesses.empty()) seeds.push_back(guesses[i]);
    idx.push_back(i);
  }
  const std::vector<FlowResult> flow = track_with_check(prev, cur, starts, params, seeds);
  const ImageFrame& base = cur.level(0);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    TrackedFeature& f = out[idx[j]];
    f.prev_pixel = f.cur_pixel;
    f.cur_pixel = flow[j].position;
    f.valid = flow[j].ok && in_bounds(base, f.cur_pixel, params.border) && in_bounds(base, f.prev_pixel, params.border);
  }
  return out;
}

std::vector<TrackedFeature> track_features(const ImageFrame& prev, const ImageFrame& cur,
                                           std::span<const TrackedFeature> features, const LkParams& params) {
  const ImagePyramid a(prev.channels == 1 ? prev : to_gray(prev), params.levels);
  const ImagePyramid b(cur.channels == 1 ? cur : to_gray(cur), params.levels);
  return track_features(a, b, features, params);
}

namespace {

// Pixel displacement between the previous view's projection and the current
// pinhole projection; zero when there is no previous view.
Vec2 flow_from_previous(const Vec3& p_w, const Vec3& p_c, const PinholeIntrinsics& k,
                        const std::optional<std::pair<RigidTransform, CameraParams>>& previous) {
  if (!previous) return Vec2::Zero();
  const Vec3 prev_c = world_to_camera(p_w, previous->first, previous->second);
  if (prev_c.z() <= 1e-6) return Vec2::Zero();
  return pinhole(p_c, k) - pinhole(prev_c, previous->second.intrinsics);
}

Vec3 observed_color(const ImageFrame& image, const Vec2& uv) {
  Vec3 c = sample_color(image, uv);
  if (image.channels == 1) c = Vec3::Constant(c.x());
  return c;
}

}  // namespace

std::size_t render(VoxelMap& map, const ImageFrame& image, const CameraParams& params, const RigidTransform& nav_pose,
                   double dt, const std::optional<std::pair<RigidTransform, CameraParams>>& previous,
                   const RenderConfig& cfg) {
  std::size_t count = 0;
  for (const VoxelKey& key : map.recently_visited()) {
    VoxelMap::Cell* cell = map.find(key);
    if (cell == nullptr) continue;
    for (MapPoint& pt : *cell) {
      const Vec3 pc = world_to_camera(pt.position, nav_pose, params);
      if (pc.z() <= 1e-6) continue;
      const Vec2 flow = flow_from_previous(pt.position, pc, params.intrinsics, previous);
      Vec2 uv = pinhole(pc, params.intrinsics);
      if (dt > 0.0) uv += (params.time_offset / dt) * flow;
      if (!in_bounds(image, uv, cfg.margin)) continue;

      const double z = std::max(pc.z(), cfg.min_depth);
      const double w = (cfg.min_depth * cfg.min_depth) / (z * z);
      const Vec3 obs = observed_color(image, uv);
      pt.color = (pt.color_weight * pt.color + w * obs) / (pt.color_weight + w);
      pt.color_weight = std::min(pt.color_weight + w, cfg.max_weight);
      pt.rendered = true;
      ++count;
    }
  }
  return count;
}

std::string_view to_string(VisionStage s) {
  switch (s) {
    case VisionStage::kUndistort: return "undistort";
    case VisionStage::kTrack: return "track";
    case VisionStage::kPredict: return "predict";
    case VisionStage::kPnp: return "pnp";
    case VisionStage::kPhotometric: return "photometric";
    case VisionStage::kRender: return "render";
    case VisionStage::kPromote: return "promote";
  }
  return "?";
}

VisionModule::VisionModule(CameraParams initial, CameraMatrix initial_covariance, VisionConfig cfg)
    : cfg_(std::move(cfg)), filter_(initial, initial_covariance, cfg_.filter) {}

VisionReport VisionModule::process(const ImageFrame& raw, Timestamp nav_stamp, const RigidTransform& nav_pose,
                                   VoxelMap& map) {
  if (!nearly_equal(nav_stamp, raw.stamp)) {
    throw DomainError("vision: navigation state at " + std::to_string(nav_stamp.sec) + " but image at " +
                      std::to_string(raw.stamp.sec));
  }
  stages_.clear();
  VisionReport report;
  report.stamp = raw.stamp;

  const ImageFrame image = undistort_image(raw, filter_.params().intrinsics, cfg_.distortion);
  const ImageFrame gray = image.channels == 1 ? image : to_gray(image);
  ImagePyramid pyramid(gray, cfg_.lk.levels);
  stages_.push_back(VisionStage::kUndistort);

  const bool has_prev = prev_pyramid_.has_value();
  if (has_prev) {
    // start each feature at the projection of its map point
    std::vector<Vec2> guesses;
    std::vector<std::optional<Vec2>> predicted;
    for (const TrackedFeature& f : features_) {
      const Vec3 pc = world_to_camera(f.position, nav_pose, filter_.params());
      if (pc.z() > 1e-6) {
        predicted.push_back(pinhole(pc, filter_.params().intrinsics));
      } else {
        predicted.push_back(std::nullopt);
      }
      guesses.push_back(predicted.back().value_or(f.cur_pixel));
    }
    features_ = track_features(*prev_pyramid_, pyramid, features_, cfg_.lk, guesses);
    for (std::size_t i = 0; i < features_.size(); ++i) {
      if (cfg_.max_track_residual <= 0.0) break;
      if (!predicted[i] || (features_[i].cur_pixel - *predicted[i]).norm() > cfg_.max_track_residual) {
        features_[i].valid = false;
      }
    }
    std::erase_if(features_, [](const TrackedFeature& f) { return !f.valid; });
  } else {
    features_.clear();
  }
  report.tracked = features_.size();
  stages_.push_back(VisionStage::kTrack);

  filter_.predict();
  stages_.push_back(VisionStage::kPredict);

  const double dt = has_prev ? raw.stamp - prev_stamp_ : 0.0;
  if (cfg_.enable_pnp && has_prev && dt > 0.0) report.pnp = filter_.pnp_update(features_, nav_pose, dt);
  stages_.push_back(VisionStage::kPnp);

  const std::vector<MapPointRef> recent = extract_recent_points(map);
  report.recent = recent.size();
  std::optional<std::pair<RigidTransform, CameraParams>> previous;
  if (has_prev) previous.emplace(prev_pose_, prev_params_);
  if (cfg_.enable_photometric && dt > 0.0) {
    std::vector<PhotometricPoint> points;
    points.reserve(recent.size());
    const CameraParams& x = filter_.params();
    for (const MapPointRef& ref : recent) {
      const MapPoint& mp = map.at(ref);
      if (!mp.rendered) continue;
      const Vec3 pc = world_to_camera(mp.position, nav_pose, x);
      if (pc.z() <= 1e-6) continue;
      points.push_back({mp.position, mp.color, flow_from_previous(mp.position, pc, x.intrinsics, previous)});
    }
    const ImageIntensityField field(image);
    report.photometric = filter_.photometric_update(points, field, nav_pose, dt);
  }
  stages_.push_back(VisionStage::kPhotometric);

  report.rendered = render(map, image, filter_.params(), nav_pose, dt, previous, cfg_.render);
  stages_.push_back(VisionStage::kRender);

  // keep the copied positions of surviving features in sync with the map
  for (TrackedFeature& f : features_) f.position = map.at(f.map_point).position;
  if (features_.size() < cfg_.min_tracked) report.promoted = promote(map, recent, gray, nav_pose);
  stages_.push_back(VisionStage::kPromote);

  prev_pyramid_ = std::move(pyramid);
  prev_stamp_ = raw.stamp;
  prev_pose_ = nav_pose;
  prev_params_ = filter_.params();
  return report;
}

std::size_t VisionModule::promote(const VoxelMap& map, std::span<const MapPointRef> recent, const ImageFrame& image,
                                  const RigidTransform& nav_pose) {
  const int cell = std::max(cfg_.grid_cell, 1);
  const int cols = (image.width + cell - 1) / cell;
  auto cell_of = [&](const Vec2& uv) {
    return static_cast<int>(uv.y()) / cell * cols + static_cast<int>(uv.x()) / cell;
  };
  std::unordered_set<int> occupied;
  for (const TrackedFeature& f : features_) occupied.insert(cell_of(f.cur_pixel));

  const CameraParams& x = filter_.params();
  const double margin = std::max(cfg_.lk.border, 0.5 * cfg_.lk.window);
  std::size_t added = 0;
  for (const MapPointRef& ref : recent) {
    if (features_.size() >= cfg_.max_features) break;
    const MapPoint& mp = map.at(ref);
    const Vec3 pc = world_to_camera(mp.position, nav_pose, x);
    if (pc.z() <= 1e-6) continue;
    const Vec2 uv = pinhole(pc, x.intrinsics);
    if (!in_bounds(image, uv, margin)) continue;
    if (!occupied.insert(cell_of(uv)).second) continue;
    TrackedFeature f;
    f.map_point = ref;
    f.position = mp.position;
    f.prev_pixel = uv;
    f.cur_pixel = uv;
    f.valid = true;
    features_.push_back(f);
    ++added;
  }
  return added;
}

}  // namespace livo
