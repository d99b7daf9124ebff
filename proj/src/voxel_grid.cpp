#include "instseg/voxel_grid.hpp"

#include <algorithm>

namespace instseg {

VoxelHashGrid::VoxelHashGrid(std::span<const Vec3> coords,
                             std::span<const std::int32_t> point_ids,
                             double cell_size)
    : cell_(cell_size) {
  if (!(cell_size > 0.0))
    throw std::invalid_argument("VoxelHashGrid: cell_size must be positive");
  for (std::int32_t id : point_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= coords.size())
      throw std::invalid_argument("VoxelHashGrid: point id out of range");
    cells_[key_of(coords[static_cast<std::size_t>(id)])].push_back(id);
  }
  n_points_ = point_ids.size();
}

std::vector<std::int32_t> VoxelHashGrid::query_radius(
    std::span<const Vec3> coords, const Vec3& center, double radius) const {
  std::vector<std::int32_t> out;
  for_each_in_radius(coords, center, radius,
                     [&out](std::int32_t id) { out.push_back(id); });
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::int32_t> VoxelHashGrid::all_points() const {
  std::vector<std::int32_t> out;
  out.reserve(n_points_);
  for (const auto& [key, ids] : cells_) out.insert(out.end(), ids.begin(), ids.end());
  return out;
}

Downsample voxel_downsample(std::span<const Vec3> coords, double voxel_size) {
  if (!(voxel_size > 0.0))
    throw std::invalid_argument("voxel_downsample: voxel_size must be positive");

  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct Hash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ULL ^
                        static_cast<std::uint64_t>(k.y) * 19349663ULL ^
                        static_cast<std::uint64_t>(k.z) * 83492791ULL;
      return static_cast<std::size_t>(h);
    }
  };

  Downsample out;
  out.point_to_rep.resize(coords.size());
  std::unordered_map<Key, std::int32_t, Hash> rep_of_cell;
  std::vector<Vec3> sums;
  std::vector<std::int64_t> counts;

  for (std::size_t i = 0; i < coords.size(); ++i) {
    const Vec3& p = coords[i];
    const Key key{static_cast<std::int64_t>(std::floor(p.x() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.y() / voxel_size)),
                  static_cast<std::int64_t>(std::floor(p.z() / voxel_size))};
    auto [it, inserted] =
        rep_of_cell.try_emplace(key, static_cast<std::int32_t>(sums.size()));
    if (inserted) {
      sums.push_back(Vec3::Zero());
      counts.push_back(0);
    }
    sums[static_cast<std::size_t>(it->second)] += p;
    ++counts[static_cast<std::size_t>(it->second)];
    out.point_to_rep[i] = it->second;
  }

  out.representatives.resize(sums.size());
  for (std::size_t r = 0; r < sums.size(); ++r)
    out.representatives[r] = sums[r] / static_cast<double>(counts[r]);
  return out;
}

}  // namespace instseg
