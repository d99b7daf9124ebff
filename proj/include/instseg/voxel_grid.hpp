#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "instseg/types.hpp"

namespace instseg {

// Uniform voxel hash grid over a subset of points. Cell key is
// floor(coord / cell_size) per axis, so a radius query with r <= cell_size
// only ever needs the 3x3x3 cell neighborhood around the query center.
// Immutable after construction; concurrent queries are safe.
class VoxelHashGrid {
 public:
  VoxelHashGrid(std::span<const Vec3> coords,
                std::span<const std::int32_t> point_ids, double cell_size);

  double cell_size() const { return cell_; }
  std::size_t n_points() const { return n_points_; }
  std::size_t n_cells() const { return cells_.size(); }

  // Indexed points with strict Euclidean distance < radius from center,
  // sorted ascending. Requires radius <= cell_size.
  std::vector<std::int32_t> query_radius(std::span<const Vec3> coords,
                                         const Vec3& center,
                                         double radius) const;

  // Visitor form of query_radius without the sort or the allocation;
  // visit order is unspecified.
  template <class Fn>
  void for_each_in_radius(std::span<const Vec3> coords, const Vec3& center,
                          double radius, Fn&& fn) const {
    check_radius(radius);
    const double r2 = radius * radius;
    const CellKey base = key_of(center);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = cells_.find({base.x + dx, base.y + dy, base.z + dz});
          if (it == cells_.end()) continue;
          for (std::int32_t id : it->second) {
            const Vec3 d = coords[static_cast<std::size_t>(id)] - center;
            if (d.x() * d.x() + d.y() * d.y() + d.z() * d.z() < r2) fn(id);
          }
        }
  }

  // Every indexed id, unordered. Each id appears exactly once.
  std::vector<std::int32_t> all_points() const;

 private:
  struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const CellKey& k) const {
      // Classic 3D spatial hash mix.
      std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL ^
                        static_cast<std::uint64_t>(k.y) * 19349663ULL ^
                        static_cast<std::uint64_t>(k.z) * 83492791ULL;
      return static_cast<std::size_t>(h);
    }
  };

  CellKey key_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
            static_cast<std::int64_t>(std::floor(p.y() / cell_)),
            static_cast<std::int64_t>(std::floor(p.z() / cell_))};
  }

  void check_radius(double radius) const {
    if (radius > cell_)
      throw std::invalid_argument(
          "query radius exceeds grid cell size; neighborhood would be "
          "incomplete");
  }

  double cell_;
  std::size_t n_points_ = 0;
  std::unordered_map<CellKey, std::vector<std::int32_t>, CellHash> cells_;
};

struct Downsample {
  std::vector<Vec3> representatives;      // mean coordinate per occupied voxel
  std::vector<std::int32_t> point_to_rep; // original index -> representative
};

// One representative per occupied voxel, ordered by first occurrence.
Downsample voxel_downsample(std::span<const Vec3> coords,
                            double voxel_size = 0.02);

}  // namespace instseg
