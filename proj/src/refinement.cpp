#include "instseg/refinement.hpp"

#include <algorithm>
#include <stdexcept>

namespace instseg {

namespace {

std::size_t intersection_size(std::span<const std::int32_t> a,
                              std::span<const std::int32_t> b) {
  std::size_t count = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

}  // namespace

double mask_iou(std::span<const std::int32_t> a,
                std::span<const std::int32_t> b) {
  if (a.empty() && b.empty())
    throw std::invalid_argument("mask_iou: both sets empty");
  const std::size_t inter = intersection_size(a, b);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<TargetAssignment> assign_targets(
    std::span<const Proposal> proposals, const Scene& scene,
    double iou_threshold) {
  const std::vector<std::vector<std::int32_t>> gt_sets =
      instance_point_sets(scene.gt);
  const int background = scene.n_classes();

  std::vector<TargetAssignment> out;
  out.reserve(proposals.size());
  for (const Proposal& proposal : proposals) {
    TargetAssignment ta;
    double best_iou = -1.0;
    int best_gt = -1;
    for (std::size_t k = 0; k < gt_sets.size(); ++k) {
      if (gt_sets[k].empty()) continue;
      const double iou = mask_iou(proposal.point_ids, gt_sets[k]);
      if (iou > best_iou) {  // strict: ties keep the lowest instance id
        best_iou = iou;
        best_gt = static_cast<int>(k);
      }
    }
    if (best_gt >= 0 && best_iou > iou_threshold) {
      ta.is_positive = true;
      ta.gt_index = best_gt;
      ta.class_target =
          scene.gt.instance_classes[static_cast<std::size_t>(best_gt)];
      std::vector<std::uint8_t> mask(proposal.point_ids.size(), 0);
      const auto& gt_mask = gt_sets[static_cast<std::size_t>(best_gt)];
      for (std::size_t i = 0; i < proposal.point_ids.size(); ++i) {
        mask[i] = std::binary_search(gt_mask.begin(), gt_mask.end(),
                                     proposal.point_ids[i])
                      ? 1
                      : 0;
      }
      ta.mask_target = std::move(mask);
    } else {
      ta.is_positive = false;
      ta.class_target = background;
    }
    out.push_back(std::move(ta));
  }
  return out;
}

double mask_score_target(std::span<const std::int32_t> predicted_mask,
                         std::span<const std::int32_t> gt_mask) {
  if (gt_mask.empty())
    throw std::invalid_argument("mask_score_target: empty ground-truth mask");
  return mask_iou(predicted_mask, gt_mask);
}

RefinedInstance heuristic_refine(const Scene& scene, const Proposal& proposal,
                                 double mask_threshold) {
  if (proposal.point_ids.empty())
    throw std::invalid_argument("heuristic_refine: empty proposal");

  const int n_classes = scene.n_classes();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n_classes);
  for (std::int32_t id : proposal.point_ids)
    mean += scene.semantic.scores.row(id).transpose();
  mean /= static_cast<double>(proposal.point_ids.size());

  const double background_score = 1.0 - mean.maxCoeff();
  int category = 0;
  double class_score = mean(0);
  for (int j = 1; j < n_classes; ++j) {
    if (mean(j) > class_score) {
      class_score = mean(j);
      category = j;
    }
  }
  if (background_score > class_score) {
    category = n_classes;
    class_score = background_score;
  }

  // Per-point score of the chosen category; for background, the point's
  // complement of its best foreground score.
  auto point_score = [&](std::int32_t id) {
    if (category < n_classes) return scene.semantic.scores(id, category);
    return 1.0 - scene.semantic.scores.row(id).maxCoeff();
  };

  RefinedInstance ri;
  for (std::int32_t id : proposal.point_ids)
    if (point_score(id) > mask_threshold) ri.mask.push_back(id);
  if (ri.mask.empty()) ri.mask = proposal.point_ids;

  double score_sum = 0.0;
  for (std::int32_t id : ri.mask) score_sum += point_score(id);
  ri.mask_score = score_sum / static_cast<double>(ri.mask.size());
  ri.category = category;
  ri.class_score = class_score;
  ri.confidence = ri.class_score * ri.mask_score;
  ri.box = extract_box(ri.mask, scene.cloud.coords);
  return ri;
}

std::vector<RefinedInstance> heuristic_refine_all(
    const Scene& scene, std::span<const Proposal> proposals,
    double mask_threshold) {
  std::vector<RefinedInstance> out;
  out.reserve(proposals.size());
  for (const Proposal& p : proposals)
    out.push_back(heuristic_refine(scene, p, mask_threshold));
  return out;
}

Box extract_box(std::span<const std::int32_t> mask,
                std::span<const Vec3> coords) {
  if (mask.empty()) throw std::invalid_argument("extract_box: empty mask");
  Box box{coords[static_cast<std::size_t>(mask[0])],
          coords[static_cast<std::size_t>(mask[0])]};
  for (std::int32_t id : mask) {
    const Vec3& p = coords[static_cast<std::size_t>(id)];
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  return box;
}

}  // namespace instseg
