#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "instseg/scene.hpp"

namespace instseg {

// Per-proposal training target. Negatives train toward the background
// class (index C); mask and mask-score targets exist for positives only.
struct TargetAssignment {
  bool is_positive = false;
  std::optional<std::int32_t> gt_index;
  std::int32_t class_target = 0;  // C = background
  std::optional<std::vector<std::uint8_t>> mask_target;  // over proposal pts
  std::optional<double> mask_score_target;
};

struct RefinedInstance {
  std::vector<std::int32_t> mask;  // sorted, unique
  std::int32_t category = 0;       // C = background
  double class_score = 0.0;
  double mask_score = 0.0;
  double confidence = 0.0;         // class_score * mask_score
  Box box;
};

// |a n b| / |a u b| over sorted unique id lists. Throws when both empty.
double mask_iou(std::span<const std::int32_t> a,
                std::span<const std::int32_t> b);

// Positive iff max IoU against any ground-truth instance is strictly
// greater than iou_threshold; assignment goes to the argmax instance,
// ties toward the lowest instance id. mask_score_target is left unset;
// it depends on a predicted mask (see mask_score_target below).
std::vector<TargetAssignment> assign_targets(std::span<const Proposal> proposals,
                                             const Scene& scene,
                                             double iou_threshold = 0.5);

// IoU between a predicted mask and the assigned ground-truth mask.
double mask_score_target(std::span<const std::int32_t> predicted_mask,
                         std::span<const std::int32_t> gt_mask);

// Network-free stand-in for the refinement branches. Class scores are the
// mean member score rows with background = 1 - max foreground mean; the
// mask keeps members whose chosen-category score exceeds mask_threshold,
// falling back to the whole proposal when that empties it.
RefinedInstance heuristic_refine(const Scene& scene, const Proposal& proposal,
                                 double mask_threshold = 0.5);

std::vector<RefinedInstance> heuristic_refine_all(
    const Scene& scene, std::span<const Proposal> proposals,
    double mask_threshold = 0.5);

// Tight axis-aligned bounding box over mask coords. Throws on empty mask.
Box extract_box(std::span<const std::int32_t> mask,
                std::span<const Vec3> coords);

}  // namespace instseg
