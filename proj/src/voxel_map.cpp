#include "livo/voxel_map.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace livo {

VoxelMap::VoxelMap(VoxelMapConfig cfg) : cfg_(cfg) {}

VoxelKey VoxelMap::key_of(const Vec3& p) const {
  const double inv = 1.0 / cfg_.voxel_size;
  return {static_cast<std::int32_t>(std::floor(p.x() * inv)),
          static_cast<std::int32_t>(std::floor(p.y() * inv)),
          static_cast<std::int32_t>(std::floor(p.z() * inv))};
}

void VoxelMap::update(std::span<const Vec3> world_points, Timestamp stamp) {
  recently_visited_.clear();
  std::unordered_set<VoxelKey, VoxelKeyHash> seen;
  const double min_d2 = cfg_.min_point_distance * cfg_.min_point_distance;

  for (const Vec3& p : world_points) {
    if (!p.allFinite()) continue;
    const VoxelKey key = key_of(p);
    if (seen.insert(key).second) recently_visited_.push_back(key);

    Cell& cell = cells_[key];
    if (cell.size() >= cfg_.max_points_per_voxel) continue;
    const bool too_close = std::any_of(cell.begin(), cell.end(), [&](const MapPoint& q) {
      return (q.position - p).squaredNorm() < min_d2;
    });
    if (too_close) continue;

    MapPoint mp;
    mp.position = p;
    mp.insert_stamp = stamp;
    mp.sequence = next_sequence_++;
    cell.push_back(mp);
    ++num_points_;
  }
}

void VoxelMap::insert_raw(const MapPoint& p) {
  MapPoint mp = p;
  mp.sequence = next_sequence_++;
  cells_[key_of(p.position)].push_back(mp);
  ++num_points_;
}

const VoxelMap::Cell* VoxelMap::find(const VoxelKey& k) const {
  const auto it = cells_.find(k);
  return it == cells_.end() ? nullptr : &it->second;
}

VoxelMap::Cell* VoxelMap::find(const VoxelKey& k) {
  const auto it = cells_.find(k);
  return it == cells_.end() ? nullptr : &it->second;
}

const MapPoint& VoxelMap::at(const MapPointRef& ref) const { return cells_.at(ref.voxel).at(ref.index); }
MapPoint& VoxelMap::at(const MapPointRef& ref) { return cells_.at(ref.voxel).at(ref.index); }

void VoxelMap::nearest_neighbors(const Vec3& query, std::size_t k, std::vector<const MapPoint*>& out) const {
  out.clear();
  if (k == 0) return;
  // max-heap of size k on (distance^2, insertion order)
  struct Entry {
    double d2;
    const MapPoint* p;
    bool operator<(const Entry& o) const { return d2 != o.d2 ? d2 < o.d2 : p->sequence < o.p->sequence; }
  };
  std::vector<Entry> heap;
  heap.reserve(k + 1);
  const VoxelKey c = key_of(query);
  for (int dx = -1; dx <= 1; ++dx) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dz = -1; dz <= 1; ++dz) {
        const Cell* cell = find({c.x + dx, c.y + dy, c.z + dz});
        if (!cell) continue;
        for (const MapPoint& p : *cell) {
          const double d2 = (p.position - query).squaredNorm();
          if (heap.size() < k) {
            heap.push_back({d2, &p});
            std::push_heap(heap.begin(), heap.end());
          } else if (Entry{d2, &p} < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = {d2, &p};
            std::push_heap(heap.begin(), heap.end());
          }
        }
      }
    }
  }
  std::sort_heap(heap.begin(), heap.end());
  for (const Entry& e : heap) out.push_back(e.p);
}

}  // namespace livo
