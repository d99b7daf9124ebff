#pragma once

#include <cstdint>
#include <vector>

#include "instseg/scene.hpp"

namespace instseg {

// Deterministic synthetic scene generator. Instances are grid-jittered
// blobs (guaranteed connected under the grouping bandwidth) inside random
// boxes with well-separated centers; scores are smoothed one-hot rows and
// offsets point exactly at instance centers. Per-point payloads are
// quantized to float32 at generation time so file round trips are
// bit-exact.
struct SynthConfig {
  int n_instances = 5;
  int n_classes = 6;
  int min_points_per_instance = 1800;
  int max_points_per_instance = 2200;
  double min_extent = 0.25;       // meters, per-axis blob box
  double max_extent = 0.40;
  double min_separation = 0.30;   // meters, between instance centers
  double corruption_fraction = 0.0;      // rho, contiguous fraction per instance
  double corrupted_true_score = 0.35;    // must stay above the grouping tau
  double corrupted_wrong_score = 0.45;
  std::uint64_t seed = 0;
  double bandwidth = 0.04;        // grouping bandwidth the blobs must satisfy

  void validate() const;  // throws std::invalid_argument
};

// Fully determined by the config (equal seeds give bit-identical scenes).
// Throws on infeasible center packing after bounded retries.
Scene synth_scene(const SynthConfig& config);

// For each instance, turns a spatially contiguous corruption_fraction of
// its points into rows with corrupted_wrong_score on a per-instance wrong
// class, corrupted_true_score on the true class, and the remainder spread
// over the other classes. Identity when corruption_fraction is 0.
Scene corrupt_semantics(const Scene& scene, const SynthConfig& config);

namespace detail {

// Rejection-samples n centers in [0, region_side]^3 with pairwise distance
// >= min_dist. Throws std::runtime_error after max_attempts rejections.
std::vector<Vec3> sample_centers(int n, double region_side, double min_dist,
                                 std::uint64_t seed, int max_attempts);

}  // namespace detail

}  // namespace instseg
