#include "instseg/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace instseg {

namespace {

constexpr double kApThresholds[] = {0.50, 0.55, 0.60, 0.65, 0.70,
                                    0.75, 0.80, 0.85, 0.90, 0.95};

std::vector<std::int32_t> present_classes(
    std::span<const std::int32_t> gt_classes) {
  std::vector<std::int32_t> classes(gt_classes.begin(), gt_classes.end());
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

// Per-class AP from a ranked TP/FP sequence: precision/recall at every
// prefix, right-envelope interpolation, exact step integration. The sum is
// divided once at the end so perfect predictions come out at exactly 1.
std::map<std::int32_t, double> ap_from_match(
    const MatchResult& match, std::span<const PredInfo> preds) {
  std::map<std::int32_t, double> ap;
  for (const auto& [cls, n_gt] : match.gt_per_class) {
    std::vector<bool> tp_seq;
    for (const MatchEntry& e : match.ranked) {
      if (preds[static_cast<std::size_t>(e.pred_index)].category == cls)
        tp_seq.push_back(e.tp);
    }
    std::vector<double> precision(tp_seq.size());
    std::int64_t tp_count = 0;
    for (std::size_t k = 0; k < tp_seq.size(); ++k) {
      if (tp_seq[k]) ++tp_count;
      precision[k] = static_cast<double>(tp_count) / static_cast<double>(k + 1);
    }
    // Monotone envelope from the right.
    for (std::size_t k = precision.size(); k-- > 1;)
      precision[k - 1] = std::max(precision[k - 1], precision[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < tp_seq.size(); ++k)
      if (tp_seq[k]) sum += precision[k];
    ap[cls] = sum / static_cast<double>(n_gt);
  }
  return ap;
}

double class_mean(const std::map<std::int32_t, double>& per_class) {
  double sum = 0.0;
  for (const auto& [cls, v] : per_class) sum += v;
  return per_class.empty() ? 0.0
                           : sum / static_cast<double>(per_class.size());
}

struct GtView {
  std::vector<std::vector<std::int32_t>> point_sets;
  std::vector<std::int32_t> classes;
};

GtView gt_view(const Scene& scene) {
  return {instance_point_sets(scene.gt), scene.gt.instance_classes};
}

// Non-background predictions with matcher metadata; keeps original indices.
struct FilteredPreds {
  std::vector<std::int32_t> original_index;
  std::vector<PredInfo> info;
};

FilteredPreds filter_background(std::span<const RefinedInstance> preds,
                                int n_classes) {
  FilteredPreds out;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    if (preds[p].category >= n_classes) continue;  // suppressed instance
    const std::int64_t tie =
        preds[p].mask.empty() ? std::numeric_limits<std::int64_t>::max()
                              : preds[p].mask.front();
    out.original_index.push_back(static_cast<std::int32_t>(p));
    out.info.push_back({preds[p].category, preds[p].confidence, tie});
  }
  return out;
}

Eigen::MatrixXd mask_overlaps(std::span<const RefinedInstance> preds,
                              const FilteredPreds& filtered,
                              const GtView& gt) {
  Eigen::MatrixXd overlaps(filtered.info.size(), gt.point_sets.size());
  for (std::size_t p = 0; p < filtered.info.size(); ++p) {
    const auto& mask =
        preds[static_cast<std::size_t>(filtered.original_index[p])].mask;
    for (std::size_t g = 0; g < gt.point_sets.size(); ++g)
      overlaps(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g)) =
          gt.point_sets[g].empty() ? 0.0 : mask_iou(mask, gt.point_sets[g]);
  }
  return overlaps;
}

}  // namespace

SemanticPrReport semantic_pr_sweep(const SemanticField& field,
                                   std::span<const std::int32_t> gt_labels,
                                   std::span<const double> taus) {
  if (taus.empty())
    throw std::invalid_argument("semantic_pr_sweep: empty tau list");
  if (static_cast<std::size_t>(field.scores.rows()) != gt_labels.size())
    throw std::invalid_argument("semantic_pr_sweep: field/labels length mismatch");

  const int n_classes = field.n_classes();
  const auto n = static_cast<Eigen::Index>(gt_labels.size());

  std::vector<std::int64_t> gt_count(static_cast<std::size_t>(n_classes), 0);
  for (std::int32_t label : gt_labels)
    if (label >= 0) ++gt_count[static_cast<std::size_t>(label)];

  SemanticPrReport report;
  const std::vector<std::int32_t> argmax = hard_labels(field);

  for (int j = 0; j < n_classes; ++j) {
    if (gt_count[static_cast<std::size_t>(j)] == 0) continue;  // class absent
    for (double tau : taus) {
      std::int64_t hit = 0, predicted = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (gt_labels[static_cast<std::size_t>(i)] < 0) continue;
        if (field.scores(i, j) > tau) {
          ++predicted;
          if (gt_labels[static_cast<std::size_t>(i)] == j) ++hit;
        }
      }
      const double recall =
          static_cast<double>(hit) /
          static_cast<double>(gt_count[static_cast<std::size_t>(j)]);
      const double precision =
          predicted == 0
              ? 0.0
              : static_cast<double>(hit) / static_cast<double>(predicted);
      report.sweep.push_back({j, tau, recall, precision});
    }

    std::int64_t hard_hit = 0, hard_predicted = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (gt_labels[static_cast<std::size_t>(i)] < 0) continue;
      if (argmax[static_cast<std::size_t>(i)] == j) {
        ++hard_predicted;
        if (gt_labels[static_cast<std::size_t>(i)] == j) ++hard_hit;
      }
    }
    report.hard_baseline.push_back(
        {j,
         static_cast<double>(hard_hit) /
             static_cast<double>(gt_count[static_cast<std::size_t>(j)]),
         hard_predicted == 0 ? 0.0
                             : static_cast<double>(hard_hit) /
                                   static_cast<double>(hard_predicted)});
  }
  return report;
}

MatchResult match_overlaps(const Eigen::MatrixXd& overlaps,
                           std::span<const PredInfo> preds,
                           std::span<const std::int32_t> gt_classes,
                           double iou_threshold, bool strict_greater) {
  if (overlaps.rows() != static_cast<Eigen::Index>(preds.size()) ||
      overlaps.cols() != static_cast<Eigen::Index>(gt_classes.size()))
    throw std::invalid_argument("match_overlaps: shape mismatch");

  MatchResult result;
  for (std::int32_t cls : gt_classes) ++result.gt_per_class[cls];

  std::vector<std::int32_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    const PredInfo& pa = preds[static_cast<std::size_t>(a)];
    const PredInfo& pb = preds[static_cast<std::size_t>(b)];
    if (pa.confidence != pb.confidence) return pa.confidence > pb.confidence;
    if (pa.tie_id != pb.tie_id) return pa.tie_id < pb.tie_id;
    if (pa.category != pb.category) return pa.category < pb.category;
    return a < b;
  });

  std::vector<bool> gt_taken(gt_classes.size(), false);
  for (std::int32_t p : order) {
    const PredInfo& info = preds[static_cast<std::size_t>(p)];
    double best = -1.0;
    int best_gt = -1;
    for (std::size_t g = 0; g < gt_classes.size(); ++g) {
      if (gt_taken[g] || gt_classes[g] != info.category) continue;
      const double ov = overlaps(p, static_cast<Eigen::Index>(g));
      if (ov > best) {  // ties keep the lowest ground-truth index
        best = ov;
        best_gt = static_cast<int>(g);
      }
    }
    const bool matched =
        best_gt >= 0 &&
        (strict_greater ? best > iou_threshold : best >= iou_threshold);
    if (matched) gt_taken[static_cast<std::size_t>(best_gt)] = true;
    result.ranked.push_back({p, matched});
  }
  return result;
}

MatchResult match_predictions(std::span<const RefinedInstance> preds,
                              const Scene& scene, double iou_threshold) {
  const GtView gt = gt_view(scene);
  const FilteredPreds filtered = filter_background(preds, scene.n_classes());
  const Eigen::MatrixXd overlaps = mask_overlaps(preds, filtered, gt);
  MatchResult result =
      match_overlaps(overlaps, filtered.info, gt.classes, iou_threshold);
  for (MatchEntry& e : result.ranked)
    e.pred_index =
        filtered.original_index[static_cast<std::size_t>(e.pred_index)];
  return result;
}

std::map<std::int32_t, double> average_precision_on_overlaps(
    const Eigen::MatrixXd& overlaps, std::span<const PredInfo> preds,
    std::span<const std::int32_t> gt_classes, double iou_threshold,
    bool strict_greater) {
  return ap_from_match(
      match_overlaps(overlaps, preds, gt_classes, iou_threshold, strict_greater),
      preds);
}

std::map<std::int32_t, double> average_precision(
    std::span<const RefinedInstance> preds, const Scene& scene,
    double iou_threshold) {
  const GtView gt = gt_view(scene);
  const FilteredPreds filtered = filter_background(preds, scene.n_classes());
  const Eigen::MatrixXd overlaps = mask_overlaps(preds, filtered, gt);
  return average_precision_on_overlaps(overlaps, filtered.info, gt.classes,
                                       iou_threshold);
}

ApSuite ap_suite(std::span<const RefinedInstance> preds, const Scene& scene) {
  if (scene.gt.n_instances() == 0)
    throw std::invalid_argument("ap_suite: scene has no ground-truth instances");

  const GtView gt = gt_view(scene);
  const FilteredPreds filtered = filter_background(preds, scene.n_classes());
  const Eigen::MatrixXd overlaps = mask_overlaps(preds, filtered, gt);

  auto at = [&](double threshold) {
    return average_precision_on_overlaps(overlaps, filtered.info, gt.classes,
                                         threshold);
  };

  ApSuite suite;
  const auto ap50 = at(0.50);
  const auto ap25 = at(0.25);

  std::map<std::int32_t, double> ap_sum;
  for (double t : kApThresholds)
    for (const auto& [cls, v] : at(t)) ap_sum[cls] += v;

  for (const std::int32_t cls : present_classes(gt.classes)) {
    ClassAp entry;
    entry.ap = ap_sum.at(cls) / static_cast<double>(std::size(kApThresholds));
    entry.ap50 = ap50.at(cls);
    entry.ap25 = ap25.at(cls);
    suite.per_class[cls] = entry;
  }

  double sum_ap = 0.0, sum_50 = 0.0, sum_25 = 0.0;
  for (const auto& [cls, entry] : suite.per_class) {
    sum_ap += entry.ap;
    sum_50 += entry.ap50;
    sum_25 += entry.ap25;
  }
  const double n = static_cast<double>(suite.per_class.size());
  suite.ap = sum_ap / n;
  suite.ap50 = sum_50 / n;
  suite.ap25 = sum_25 / n;
  return suite;
}

CoverageMetrics s3dis_metrics(std::span<const RefinedInstance> preds,
                              const Scene& scene) {
  const GtView gt = gt_view(scene);
  const FilteredPreds filtered = filter_background(preds, scene.n_classes());
  const Eigen::MatrixXd overlaps = mask_overlaps(preds, filtered, gt);

  // Strict > 0.5 one-to-one matching for precision/recall.
  const MatchResult match =
      match_overlaps(overlaps, filtered.info, gt.classes, 0.5, true);

  CoverageMetrics out;
  const std::vector<std::int32_t> classes = present_classes(gt.classes);
  if (classes.empty()) return out;

  std::map<std::int32_t, std::int64_t> tp_per_class, pred_per_class;
  for (const MatchEntry& e : match.ranked) {
    const std::int32_t cls =
        filtered.info[static_cast<std::size_t>(e.pred_index)].category;
    ++pred_per_class[cls];
    if (e.tp) ++tp_per_class[cls];
  }

  double cov_sum = 0.0, wcov_sum = 0.0, prec_sum = 0.0, rec_sum = 0.0;
  for (const std::int32_t cls : classes) {
    double cov_acc = 0.0, wcov_acc = 0.0, weight_acc = 0.0;
    std::int64_t n_gt = 0;
    for (std::size_t g = 0; g < gt.classes.size(); ++g) {
      if (gt.classes[g] != cls) continue;
      ++n_gt;
      double best = 0.0;
      for (std::size_t p = 0; p < filtered.info.size(); ++p) {
        if (filtered.info[p].category != cls) continue;
        best = std::max(best, overlaps(static_cast<Eigen::Index>(p),
                                       static_cast<Eigen::Index>(g)));
      }
      const double size = static_cast<double>(gt.point_sets[g].size());
      cov_acc += best;
      wcov_acc += size * best;
      weight_acc += size;
    }
    cov_sum += cov_acc / static_cast<double>(n_gt);
    wcov_sum += weight_acc == 0.0 ? 0.0 : wcov_acc / weight_acc;

    const std::int64_t tp = tp_per_class.count(cls) ? tp_per_class.at(cls) : 0;
    const std::int64_t np =
        pred_per_class.count(cls) ? pred_per_class.at(cls) : 0;
    if (np == 0) {
      out.warnings.push_back("class " + std::to_string(cls) +
                             ": no predictions, precision counted as 0");
      prec_sum += 0.0;
    } else {
      prec_sum += static_cast<double>(tp) / static_cast<double>(np);
    }
    rec_sum += static_cast<double>(tp) / static_cast<double>(n_gt);
  }

  const double n = static_cast<double>(classes.size());
  out.mcov = cov_sum / n;
  out.mwcov = wcov_sum / n;
  out.mprec50 = prec_sum / n;
  out.mrec50 = rec_sum / n;
  return out;
}

double box_iou(const Box& a, const Box& b) {
  if ((a.lo.array() > a.hi.array()).any() ||
      (b.lo.array() > b.hi.array()).any())
    throw std::invalid_argument("box_iou: malformed box");

  const Vec3 lo = a.lo.cwiseMax(b.lo);
  const Vec3 hi = a.hi.cwiseMin(b.hi);
  const Vec3 extent = (hi - lo).cwiseMax(0.0);
  const double inter = extent.prod();
  const double vol_a = (a.hi - a.lo).prod();
  const double vol_b = (b.hi - b.lo).prod();
  const double uni = vol_a + vol_b - inter;
  if (uni > 0.0) return inter / uni;
  // Both boxes degenerate: identical ones count as a perfect match.
  return a.lo == b.lo && a.hi == b.hi ? 1.0 : 0.0;
}

BoxApResult box_ap(std::span<const RefinedInstance> preds, const Scene& scene) {
  const GtView gt = gt_view(scene);
  const FilteredPreds filtered = filter_background(preds, scene.n_classes());

  std::vector<Box> gt_boxes;
  gt_boxes.reserve(gt.point_sets.size());
  for (const auto& set : gt.point_sets)
    gt_boxes.push_back(set.empty() ? Box{Vec3::Zero(), Vec3::Zero()}
                                   : extract_box(set, scene.cloud.coords));

  Eigen::MatrixXd overlaps(filtered.info.size(), gt.point_sets.size());
  for (std::size_t p = 0; p < filtered.info.size(); ++p) {
    const Box& pred_box =
        preds[static_cast<std::size_t>(filtered.original_index[p])].box;
    for (std::size_t g = 0; g < gt.point_sets.size(); ++g)
      overlaps(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g)) =
          gt.point_sets[g].empty() ? 0.0 : box_iou(pred_box, gt_boxes[g]);
  }

  BoxApResult out;
  out.box_ap50 = class_mean(average_precision_on_overlaps(
      overlaps, filtered.info, gt.classes, 0.50));
  out.box_ap25 = class_mean(average_precision_on_overlaps(
      overlaps, filtered.info, gt.classes, 0.25));
  return out;
}

EvalReport evaluate_instances(std::span<const RefinedInstance> preds,
                              const Scene& scene) {
  EvalReport report;
  const ApSuite suite = ap_suite(preds, scene);
  report.ap = suite.ap;
  report.ap50 = suite.ap50;
  report.ap25 = suite.ap25;
  report.per_class = suite.per_class;

  const CoverageMetrics cov = s3dis_metrics(preds, scene);
  report.mcov = cov.mcov;
  report.mwcov = cov.mwcov;
  report.mprec50 = cov.mprec50;
  report.mrec50 = cov.mrec50;
  report.warnings = cov.warnings;

  const BoxApResult boxes = box_ap(preds, scene);
  report.box_ap50 = boxes.box_ap50;
  report.box_ap25 = boxes.box_ap25;
  return report;
}

}  // namespace instseg
