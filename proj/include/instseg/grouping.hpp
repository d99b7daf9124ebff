#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "instseg/scene.hpp"

namespace instseg {

struct GroupingConfig {
  double tau = 0.2;        // score threshold, strict >
  double bandwidth = 0.04; // meters, strict < linking distance
  int min_points = 50;     // minimum component size kept as a proposal
  int n_classes = 0;       // 0 = take from the scene

  void validate() const;  // throws std::invalid_argument on bad ranges
};

// Sorted ids with scores[i][class_j] strictly greater than tau.
std::vector<std::int32_t> class_subset(const SemanticField& field, int class_j,
                                       double tau);

// Partition of ids into maximal components of the relation
// dist(coords[a], coords[b]) < bandwidth. Members sorted ascending;
// components ordered by minimum member id.
std::vector<std::vector<std::int32_t>> connected_components(
    std::span<const std::int32_t> ids, std::span<const Vec3> coords,
    double bandwidth);

// Shift points by their offsets, then per class: threshold subset,
// connected components under the bandwidth, keep components of at least
// min_points. Proposals ordered by (source_class, min member id); a point
// may appear in proposals of several classes.
std::vector<Proposal> soft_group(const Scene& scene,
                                 const GroupingConfig& config);

// Same pipeline on argmax label subsets; each point joins at most one
// proposal.
std::vector<Proposal> hard_group(const Scene& scene,
                                 const GroupingConfig& config);

// Worker count for per-class grouping; reads INSTSEG_THREADS, defaults to 1.
int grouping_thread_count();

}  // namespace instseg
