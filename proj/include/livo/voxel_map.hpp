#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "livo/geometry.hpp"

namespace livo {

struct VoxelKey {
  std::int32_t x{0};
  std::int32_t y{0};
  std::int32_t z{0};

  friend bool operator==(const VoxelKey&, const VoxelKey&) = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    return static_cast<std::size_t>((static_cast<std::int64_t>(k.x) * 73856093) ^
                                    (static_cast<std::int64_t>(k.y) * 19349669) ^
                                    (static_cast<std::int64_t>(k.z) * 83492791));
  }
};

struct MapPoint {
  Vec3 position{Vec3::Zero()};  // world frame
  Vec3 color{Vec3::Zero()};     // [0, 255]; gray maps repeat the channel
  double color_weight{0.0};
  Timestamp insert_stamp;
  std::uint64_t sequence{0};  // global insertion order
  bool rendered{false};
};

/// Stable handle: cells only grow, so (voxel, index) never dangles.
struct MapPointRef {
  VoxelKey voxel;
  std::uint32_t index{0};
};

struct VoxelMapConfig {
  double voxel_size{0.5};
  std::size_t max_points_per_voxel{20};
  double min_point_distance{0.1};
};

/// Hash voxel map holding bounded point lists per cell, plus the set of
/// cells touched by the latest update.
class VoxelMap {
 public:
  using Cell = std::vector<MapPoint>;

  explicit VoxelMap(VoxelMapConfig cfg = {});

  const VoxelMapConfig& config() const { return cfg_; }
  VoxelKey key_of(const Vec3& p) const;

  /// Inserts world-frame points; each point lands in its cell if the cell is
  /// below capacity and no stored point is within min_point_distance.
  /// Resets recently_visited to the distinct cells looked up or inserted.
  void update(std::span<const Vec3> world_points, Timestamp stamp);

  const std::vector<VoxelKey>& recently_visited() const { return recently_visited_; }

  const Cell* find(const VoxelKey& k) const;
  Cell* find(const VoxelKey& k);
  const MapPoint& at(const MapPointRef& ref) const;
  MapPoint& at(const MapPointRef& ref);

  bool empty() const { return num_points_ == 0; }
  std::size_t num_points() const { return num_points_; }
  std::size_t num_voxels() const { return cells_.size(); }

  /// The k nearest stored points among the query's cell and its 26
  /// neighbours, sorted by distance. Returns fewer when not enough exist.
  void nearest_neighbors(const Vec3& query, std::size_t k, std::vector<const MapPoint*>& out) const;

  template <typename F>
  void for_each_cell(F&& f) const {
    for (const auto& [key, cell] : cells_) f(key, cell);
  }

  /// Inserts a point without distance or capacity checks (map loading).
  void insert_raw(const MapPoint& p);

 private:
  VoxelMapConfig cfg_;
  std::unordered_map<VoxelKey, Cell, VoxelKeyHash> cells_;
  std::vector<VoxelKey> recently_visited_;
  std::size_t num_points_{0};
  std::uint64_t next_sequence_{0};
};

}  // namespace livo
