#include "instseg/grouping.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "instseg/voxel_grid.hpp"

namespace instseg {

namespace {

// Union-find over positions 0..n-1 with path halving and union by size.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

std::vector<Proposal> components_to_proposals(
    std::vector<std::vector<std::int32_t>>&& components, int source_class,
    int min_points) {
  std::vector<Proposal> out;
  for (auto& comp : components) {
    if (static_cast<int>(comp.size()) < min_points) continue;
    out.push_back({std::move(comp), static_cast<std::int32_t>(source_class)});
  }
  return out;
}

std::vector<Proposal> group_subsets(
    const std::vector<std::vector<std::int32_t>>& subsets,
    std::span<const Vec3> shifted, const GroupingConfig& config) {
  const int n_classes = static_cast<int>(subsets.size());
  std::vector<std::vector<Proposal>> per_class(
      static_cast<std::size_t>(n_classes));

  auto run_class = [&](int j) {
    per_class[static_cast<std::size_t>(j)] = components_to_proposals(
        connected_components(subsets[static_cast<std::size_t>(j)], shifted,
                             config.bandwidth),
        j, config.min_points);
  };

  const int threads = std::min(grouping_thread_count(), n_classes);
  if (threads <= 1) {
    for (int j = 0; j < n_classes; ++j) run_class(j);
  } else {
    // Classes are independent; results land in per-class slots so the
    // concatenation order below is schedule-independent.
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int j = t; j < n_classes; j += threads) run_class(j);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<Proposal> out;
  for (auto& batch : per_class)
    for (auto& p : batch) out.push_back(std::move(p));
  return out;
}

void check_scene_for_grouping(const Scene& scene, const GroupingConfig& config) {
  config.validate();
  if (config.n_classes != 0 && config.n_classes != scene.n_classes())
    throw std::invalid_argument("grouping: config n_classes differs from scene");
  if (scene.offset.size() != scene.n_points() ||
      static_cast<std::size_t>(scene.semantic.scores.rows()) != scene.n_points())
    throw std::invalid_argument("grouping: scene field lengths disagree");
}

}  // namespace

void GroupingConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("GroupingConfig: tau must lie in (0, 1)");
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("GroupingConfig: bandwidth must be positive");
  if (min_points < 1)
    throw std::invalid_argument("GroupingConfig: min_points must be >= 1");
  if (n_classes < 0)
    throw std::invalid_argument("GroupingConfig: n_classes must be >= 0");
}

std::vector<std::int32_t> class_subset(const SemanticField& field, int class_j,
                                       double tau) {
  if (class_j < 0 || class_j >= field.n_classes())
    throw std::invalid_argument("class_subset: class index out of range");
  std::vector<std::int32_t> out;
  const auto n = field.scores.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (field.scores(i, class_j) > tau)
      out.push_back(static_cast<std::int32_t>(i));
  }
  return out;
}

std::vector<std::vector<std::int32_t>> connected_components(
    std::span<const std::int32_t> ids, std::span<const Vec3> coords,
    double bandwidth) {
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("connected_components: bandwidth must be positive");
  if (ids.empty()) return {};

  const VoxelHashGrid grid(coords, ids, bandwidth);

  // Dense point id -> position map; the per-neighbor lookup is hot.
  std::vector<std::int32_t> slot(coords.size(), -1);
  for (std::size_t i = 0; i < ids.size(); ++i)
    slot[static_cast<std::size_t>(ids[i])] = static_cast<std::int32_t>(i);

  DisjointSet dsu(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const std::int32_t a = ids[i];
    grid.for_each_in_radius(
        coords, coords[static_cast<std::size_t>(a)], bandwidth,
        [&](std::int32_t b) {
          if (b > a)
            dsu.unite(i, static_cast<std::size_t>(
                             slot[static_cast<std::size_t>(b)]));
        });
  }

  std::unordered_map<std::size_t, std::vector<std::int32_t>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i)
    groups[dsu.find(i)].push_back(ids[i]);

  std::vector<std::vector<std::int32_t>> components;
  components.reserve(groups.size());
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    components.push_back(std::move(members));
  }
  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return components;
}

std::vector<Proposal> soft_group(const Scene& scene,
                                 const GroupingConfig& config) {
  check_scene_for_grouping(scene, config);
  const std::vector<Vec3> shifted =
      shift_points(scene.cloud.coords, scene.offset.offsets);

  std::vector<std::vector<std::int32_t>> subsets(
      static_cast<std::size_t>(scene.n_classes()));
  for (int j = 0; j < scene.n_classes(); ++j)
    subsets[static_cast<std::size_t>(j)] =
        class_subset(scene.semantic, j, config.tau);

  return group_subsets(subsets, shifted, config);
}

std::vector<Proposal> hard_group(const Scene& scene,
                                 const GroupingConfig& config) {
  check_scene_for_grouping(scene, config);
  const std::vector<Vec3> shifted =
      shift_points(scene.cloud.coords, scene.offset.offsets);

  const std::vector<std::int32_t> labels = hard_labels(scene.semantic);
  std::vector<std::vector<std::int32_t>> subsets(
      static_cast<std::size_t>(scene.n_classes()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    subsets[static_cast<std::size_t>(labels[i])].push_back(
        static_cast<std::int32_t>(i));

  return group_subsets(subsets, shifted, config);
}

int grouping_thread_count() {
  const char* env = std::getenv("INSTSEG_THREADS");
  if (env == nullptr) return 1;
  const long v = std::strtol(env, nullptr, 10);
  if (v < 1) return 1;
  return static_cast<int>(v);
}

}  // namespace instseg
