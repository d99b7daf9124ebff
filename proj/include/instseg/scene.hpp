#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "instseg/types.hpp"

namespace instseg {

struct PointCloud {
  std::vector<Vec3> coords;
  std::vector<Vec3> colors;  // empty when the scene carries no colors

  std::size_t size() const { return coords.size(); }
  bool has_colors() const { return !colors.empty(); }
};

// Per-point class probabilities, one row per point, rows summing to 1.
struct SemanticField {
  ScoreMatrix scores;

  std::size_t size() const { return static_cast<std::size_t>(scores.rows()); }
  int n_classes() const { return static_cast<int>(scores.cols()); }
};

struct OffsetField {
  std::vector<Vec3> offsets;

  std::size_t size() const { return offsets.size(); }
};

// Labels use -1 as the ignore/no-instance marker. Instance centers are
// derived data (mean of member coordinates), recomputed on load rather
// than stored on disk.
struct GroundTruth {
  std::vector<std::int32_t> semantic_labels;  // N, in {-1, 0..C-1}
  std::vector<std::int32_t> instance_ids;     // N, in {-1, 0..K-1}
  std::vector<std::int32_t> instance_classes; // K
  std::vector<Vec3> instance_centers;         // K, derived

  int n_instances() const { return static_cast<int>(instance_classes.size()); }
};

struct Scene {
  PointCloud cloud;
  SemanticField semantic;
  OffsetField offset;
  GroundTruth gt;

  std::size_t n_points() const { return cloud.size(); }
  int n_classes() const { return semantic.n_classes(); }
};

// A grouped point set, candidate instance before refinement.
struct Proposal {
  std::vector<std::int32_t> point_ids;  // sorted, unique
  std::int32_t source_class = 0;
};

struct Violation {
  std::string field;
  std::int64_t index;  // -1 when the violation is not tied to one element
  std::string reason;
};

// Checks every structural invariant; returns one entry per violation.
// Violations are data, not failures: an empty list means the scene is valid.
std::vector<Violation> validate_scene(const Scene& scene);

// out[i] = coords[i] + offsets[i]. Throws on length mismatch.
std::vector<Vec3> shift_points(std::span<const Vec3> coords,
                               std::span<const Vec3> offsets);

// Row-wise argmax; ties break toward the lowest class index.
std::vector<std::int32_t> hard_labels(const SemanticField& field);

// Mean coordinate per instance id. Instances with no points keep a zero
// center (such scenes fail validation anyway).
std::vector<Vec3> compute_instance_centers(
    std::span<const Vec3> coords, std::span<const std::int32_t> instance_ids,
    int n_instances);

// Sorted member ids per instance.
std::vector<std::vector<std::int32_t>> instance_point_sets(
    const GroundTruth& gt);

struct OffsetTargets {
  std::vector<Vec3> targets;            // center - coord; zero off-instance
  std::vector<std::uint8_t> foreground; // instance_id >= 0
};

OffsetTargets offset_targets(const Scene& scene);

}  // namespace instseg
