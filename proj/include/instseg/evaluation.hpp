#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "instseg/refinement.hpp"
#include "instseg/scene.hpp"

namespace instseg {

// ---------------------------------------------------------------------------
// Semantic recall/precision sweep over score thresholds.

struct SemanticPrPoint {
  int class_id;
  double tau;
  double recall;
  double precision;
};

struct HardPrPoint {
  int class_id;
  double recall;
  double precision;
};

struct SemanticPrReport {
  std::vector<SemanticPrPoint> sweep;       // class-major, then tau order
  std::vector<HardPrPoint> hard_baseline;   // argmax predictions
};

// recall_j(t) = |{s_ij > t and label = j}| / |{label = j}|,
// precision_j(t) = |{s_ij > t and label = j}| / |{s_ij > t}|; ignored
// points (-1) count nowhere. Classes with no ground-truth points are
// absent from the report. Throws on an empty tau list.
SemanticPrReport semantic_pr_sweep(const SemanticField& field,
                                   std::span<const std::int32_t> gt_labels,
                                   std::span<const double> taus);

// ---------------------------------------------------------------------------
// Greedy confidence-ordered matching and average precision. The matcher and
// AP also run directly on an overlap matrix, which is what the evaluation of
// box predictions and the test oracles use.

struct PredInfo {
  std::int32_t category;
  double confidence;
  std::int64_t tie_id;  // lower wins on equal confidence (mask min id)
};

struct MatchEntry {
  std::int32_t pred_index;  // row into the overlap matrix / pred list
  bool tp;
};

struct MatchResult {
  std::vector<MatchEntry> ranked;            // confidence-descending order
  std::map<std::int32_t, std::int32_t> gt_per_class;
};

// overlaps is preds x gts. Each prediction takes the unmatched same-class
// ground truth of highest overlap and is a TP if that overlap reaches the
// threshold (>= by default, strict > when strict_greater). Background
// predictions must be excluded by the caller.
MatchResult match_overlaps(const Eigen::MatrixXd& overlaps,
                           std::span<const PredInfo> preds,
                           std::span<const std::int32_t> gt_classes,
                           double iou_threshold, bool strict_greater = false);

// Mask-IoU matching of refined instances against scene ground truth;
// drops background-category predictions first.
MatchResult match_predictions(std::span<const RefinedInstance> preds,
                              const Scene& scene, double iou_threshold);

// Per-class average precision: area under the monotone
// (right-envelope-interpolated) precision/recall curve of the ranked
// TP/FP sequence. Classes absent from ground truth are not reported.
std::map<std::int32_t, double> average_precision_on_overlaps(
    const Eigen::MatrixXd& overlaps, std::span<const PredInfo> preds,
    std::span<const std::int32_t> gt_classes, double iou_threshold,
    bool strict_greater = false);

std::map<std::int32_t, double> average_precision(
    std::span<const RefinedInstance> preds, const Scene& scene,
    double iou_threshold);

// ---------------------------------------------------------------------------
// Metric suites.

struct ClassAp {
  double ap;    // mean over IoU 0.50:0.95:0.05
  double ap50;
  double ap25;
};

struct ApSuite {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap25 = 0.0;
  std::map<std::int32_t, ClassAp> per_class;
};

// Throws when the scene has no ground-truth instances.
ApSuite ap_suite(std::span<const RefinedInstance> preds, const Scene& scene);

struct CoverageMetrics {
  double mcov = 0.0;
  double mwcov = 0.0;
  double mprec50 = 0.0;
  double mrec50 = 0.0;
  std::vector<std::string> warnings;
};

// Coverage (mean / size-weighted max IoU per ground-truth instance) and
// precision/recall of greedy matching at IoU strictly above 0.5, averaged
// over classes present in ground truth. Per-class precision with no
// predictions counts as 0 and emits a warning.
CoverageMetrics s3dis_metrics(std::span<const RefinedInstance> preds,
                              const Scene& scene);

// Volume IoU of axis-aligned boxes. Identical degenerate boxes give 1,
// any other zero-volume overlap gives 0. Throws on lo > hi.
double box_iou(const Box& a, const Box& b);

struct BoxApResult {
  double box_ap50 = 0.0;
  double box_ap25 = 0.0;
};

// Same matching/AP machinery with box overlap as the kernel; ground-truth
// boxes are tight boxes over each instance's points.
BoxApResult box_ap(std::span<const RefinedInstance> preds, const Scene& scene);

struct EvalReport {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap25 = 0.0;
  std::map<std::int32_t, ClassAp> per_class;
  double mcov = 0.0;
  double mwcov = 0.0;
  double mprec50 = 0.0;
  double mrec50 = 0.0;
  double box_ap50 = 0.0;
  double box_ap25 = 0.0;
  std::vector<std::string> warnings;
};

EvalReport evaluate_instances(std::span<const RefinedInstance> preds,
                              const Scene& scene);

}  // namespace instseg
