#include "instseg/synthesis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "instseg/rng.hpp"

namespace instseg {

namespace {

// Stream tags for the counter-based RNG.
enum : std::uint64_t {
  kCenter = 1,
  kExtent = 2,
  kCount = 3,
  kClass = 4,
  kJitter = 5,
  kColor = 6,
  kCutDirection = 7,
  kWrongClass = 8,
};

// Per-point payloads are float32 on disk; quantizing at generation time
// keeps write/read round trips bit-exact. The volatile store forces the
// narrowing: gcc 11's vectorizer at -O3 otherwise drops the round trip
// when this inlines into the generation loops.
double q32(double v) {
  volatile float narrowed = static_cast<float>(v);
  return static_cast<double>(narrowed);
}

Vec3 q32(const Vec3& v) { return {q32(v.x()), q32(v.y()), q32(v.z())}; }

// Cells of an mx*my*mz grid in serpentine order: consecutive cells are
// face-adjacent, so consecutively placed points stay within linking
// distance and the blob is connected.
std::vector<std::array<int, 3>> serpentine_cells(int mx, int my, int mz) {
  std::vector<std::array<int, 3>> cells;
  cells.reserve(static_cast<std::size_t>(mx) * my * mz);
  for (int z = 0; z < mz; ++z) {
    const bool flip_y = (z % 2) != 0;
    for (int yy = 0; yy < my; ++yy) {
      const int y = flip_y ? my - 1 - yy : yy;
      const bool flip_x = ((yy + z) % 2) != 0;
      for (int xx = 0; xx < mx; ++xx) {
        const int x = flip_x ? mx - 1 - xx : xx;
        cells.push_back({x, y, z});
      }
    }
  }
  return cells;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_instances < 0)
    throw std::invalid_argument("SynthConfig: n_instances must be >= 0");
  if (n_classes < 1 || n_classes > 512)
    throw std::invalid_argument("SynthConfig: n_classes must lie in [1, 512]");
  if (min_points_per_instance < 1 ||
      max_points_per_instance < min_points_per_instance)
    throw std::invalid_argument("SynthConfig: bad points_per_instance range");
  if (!(min_extent > 0.0 && max_extent >= min_extent))
    throw std::invalid_argument("SynthConfig: bad instance_extent range");
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("SynthConfig: bandwidth must be positive");
  if (!(min_separation > 2.0 * bandwidth))
    throw std::invalid_argument(
        "SynthConfig: min_separation must exceed twice the bandwidth");
  if (!(corruption_fraction >= 0.0 && corruption_fraction < 1.0))
    throw std::invalid_argument("SynthConfig: corruption_fraction outside [0, 1)");
  if (corruption_fraction > 0.0) {
    if (!(corrupted_true_score > 0.2 && corrupted_true_score < 1.0))
      throw std::invalid_argument(
          "SynthConfig: corrupted_true_score must lie in (0.2, 1)");
    if (!(corrupted_wrong_score > 0.0 && corrupted_wrong_score < 1.0))
      throw std::invalid_argument(
          "SynthConfig: corrupted_wrong_score must lie in (0, 1)");
    if (corrupted_true_score + corrupted_wrong_score > 1.0)
      throw std::invalid_argument(
          "SynthConfig: corrupted scores must sum to at most 1");
    if (n_classes < 2)
      throw std::invalid_argument(
          "SynthConfig: corruption needs at least 2 classes");
    if (corrupted_true_score + corrupted_wrong_score < 1.0 && n_classes < 3)
      throw std::invalid_argument(
          "SynthConfig: score remainder needs at least 3 classes");
  }
}

namespace detail {

std::vector<Vec3> sample_centers(int n, double region_side, double min_dist,
                                 std::uint64_t seed, int max_attempts) {
  std::vector<Vec3> centers;
  centers.reserve(static_cast<std::size_t>(n));
  StreamRng rng{seed, kCenter};
  int attempts = 0;
  while (static_cast<int>(centers.size()) < n) {
    const Vec3 candidate(rng.uniform(0.0, region_side),
                         rng.uniform(0.0, region_side),
                         rng.uniform(0.0, region_side));
    bool ok = true;
    for (const Vec3& c : centers) {
      if ((candidate - c).norm() < min_dist) {
        ok = false;
        break;
      }
    }
    if (ok) {
      centers.push_back(candidate);
    } else if (++attempts > max_attempts) {
      throw std::runtime_error(
          "synth_scene: infeasible instance packing, retries exhausted");
    }
  }
  return centers;
}

}  // namespace detail

Scene synth_scene(const SynthConfig& config) {
  config.validate();
  const int n_inst = config.n_instances;
  const int n_classes = config.n_classes;

  // Separation of nominal centers covers the worst-case blob radius on
  // both sides, so actual point-to-point gaps stay above min_separation.
  const double required_sep =
      config.min_separation + std::sqrt(3.0) * config.max_extent;
  const double region_side =
      std::cbrt(20.0 * std::max(n_inst, 1)) * required_sep;
  const std::vector<Vec3> nominal_centers = detail::sample_centers(
      n_inst, region_side, required_sep, config.seed, 200 * n_inst + 200);

  Scene scene;
  std::vector<Eigen::RowVectorXd> score_rows;

  // Smoothed one-hot rows: dyadic values so rows sum to exactly 1.
  const double off_score = 0x1.0p-10;
  const double on_score = 1.0 - (n_classes - 1) * off_score;

  for (int k = 0; k < n_inst; ++k) {
    const std::uint64_t ku = static_cast<std::uint64_t>(k);
    StreamRng count_rng{config.seed, kCount, ku};
    const int n_points =
        config.min_points_per_instance +
        static_cast<int>(count_rng.next_below(static_cast<std::uint64_t>(
            config.max_points_per_instance - config.min_points_per_instance +
            1)));

    StreamRng extent_rng{config.seed, kExtent, ku};
    const Vec3 extent(extent_rng.uniform(config.min_extent, config.max_extent),
                      extent_rng.uniform(config.min_extent, config.max_extent),
                      extent_rng.uniform(config.min_extent, config.max_extent));

    StreamRng class_rng{config.seed, kClass, ku};
    const auto cls = static_cast<std::int32_t>(
        class_rng.next_below(static_cast<std::uint64_t>(n_classes)));

    StreamRng color_rng{config.seed, kColor, ku};
    const Vec3 base_color(color_rng.uniform(0.15, 0.85),
                          color_rng.uniform(0.15, 0.85),
                          color_rng.uniform(0.15, 0.85));

    // Pitch below bandwidth / sqrt(6): points jittered inside face-adjacent
    // cells cannot drift apart beyond the bandwidth.
    const double pitch = 0.39 * config.bandwidth;
    const int mx = std::max(1, static_cast<int>(extent.x() / pitch));
    const int my = std::max(1, static_cast<int>(extent.y() / pitch));
    const int mz = std::max(1, static_cast<int>(extent.z() / pitch));
    const std::vector<std::array<int, 3>> cells = serpentine_cells(mx, my, mz);

    const Vec3 origin =
        nominal_centers[static_cast<std::size_t>(k)] -
        0.5 * Vec3(mx * pitch, my * pitch, mz * pitch);

    for (int p = 0; p < n_points; ++p) {
      const auto& cell = cells[static_cast<std::size_t>(p) % cells.size()];
      StreamRng jitter_rng{config.seed, kJitter, ku,
                           static_cast<std::uint64_t>(p)};
      Vec3 pos;
      for (int axis = 0; axis < 3; ++axis) {
        const double jitter = jitter_rng.uniform(-0.49, 0.49);
        pos(axis) = origin(axis) + (cell[static_cast<std::size_t>(axis)] + 0.5 +
                                    jitter) *
                                       pitch;
      }
      scene.cloud.coords.push_back(q32(pos));

      const double tint = jitter_rng.uniform(-0.1, 0.1);
      scene.cloud.colors.push_back(q32(
          (base_color.array() + tint).cwiseMax(0.0).cwiseMin(1.0).matrix()));

      Eigen::RowVectorXd row =
          Eigen::RowVectorXd::Constant(n_classes, off_score);
      row(cls) = on_score;
      score_rows.push_back(std::move(row));

      scene.gt.semantic_labels.push_back(cls);
      scene.gt.instance_ids.push_back(static_cast<std::int32_t>(k));
    }
    scene.gt.instance_classes.push_back(cls);
  }

  const auto n_total = static_cast<Eigen::Index>(scene.cloud.coords.size());
  scene.semantic.scores.resize(n_total, n_classes);
  for (Eigen::Index i = 0; i < n_total; ++i)
    scene.semantic.scores.row(i) = score_rows[static_cast<std::size_t>(i)];

  scene.gt.instance_centers = compute_instance_centers(
      scene.cloud.coords, scene.gt.instance_ids, n_inst);

  scene.offset.offsets.resize(scene.cloud.coords.size());
  for (std::size_t i = 0; i < scene.cloud.coords.size(); ++i) {
    const std::int32_t k = scene.gt.instance_ids[i];
    scene.offset.offsets[i] =
        q32(scene.gt.instance_centers[static_cast<std::size_t>(k)] -
            scene.cloud.coords[i]);
  }
  return scene;
}

Scene corrupt_semantics(const Scene& scene, const SynthConfig& config) {
  config.validate();
  Scene out = scene;
  if (config.corruption_fraction == 0.0) return out;

  const int n_classes = scene.n_classes();
  if (n_classes < 2)
    throw std::invalid_argument("corrupt_semantics: needs at least 2 classes");
  const double remainder =
      1.0 - config.corrupted_true_score - config.corrupted_wrong_score;
  if (remainder > 0.0 && n_classes < 3)
    throw std::invalid_argument(
        "corrupt_semantics: score remainder needs at least 3 classes");
  const double other_score =
      n_classes > 2 ? remainder / static_cast<double>(n_classes - 2) : 0.0;

  const std::vector<std::vector<std::int32_t>> members =
      instance_point_sets(scene.gt);

  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto& ids = members[k];
    const auto n_corrupt = static_cast<std::size_t>(
        std::llround(config.corruption_fraction *
                     static_cast<double>(ids.size())));
    if (n_corrupt == 0) continue;

    const std::int32_t true_class = scene.gt.instance_classes[k];
    StreamRng wrong_rng{config.seed, kWrongClass,
                        static_cast<std::uint64_t>(k)};
    auto wrong_class = static_cast<std::int32_t>(
        wrong_rng.next_below(static_cast<std::uint64_t>(n_classes - 1)));
    if (wrong_class >= true_class) ++wrong_class;

    // Contiguous region: the n_corrupt points deepest along a random
    // half-space direction.
    StreamRng dir_rng{config.seed, kCutDirection, static_cast<std::uint64_t>(k)};
    Vec3 direction;
    do {
      direction = Vec3(dir_rng.uniform(-1.0, 1.0), dir_rng.uniform(-1.0, 1.0),
                       dir_rng.uniform(-1.0, 1.0));
    } while (direction.norm() < 1e-3);
    direction.normalize();

    std::vector<std::int32_t> order(ids.begin(), ids.end());
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
      const double pa = direction.dot(scene.cloud.coords[static_cast<std::size_t>(a)]);
      const double pb = direction.dot(scene.cloud.coords[static_cast<std::size_t>(b)]);
      if (pa != pb) return pa > pb;
      return a < b;
    });

    for (std::size_t r = 0; r < n_corrupt; ++r) {
      const std::int32_t id = order[r];
      for (int j = 0; j < n_classes; ++j)
        out.semantic.scores(id, j) = q32(other_score);
      out.semantic.scores(id, true_class) = q32(config.corrupted_true_score);
      out.semantic.scores(id, wrong_class) = q32(config.corrupted_wrong_score);
    }
  }
  return out;
}

}  // namespace instseg
