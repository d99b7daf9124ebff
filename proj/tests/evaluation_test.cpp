#include "instseg/evaluation.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "test_util.hpp"

namespace {

using instseg::PredInfo;
using instseg::RefinedInstance;
using instseg::Scene;
using instseg::SemanticField;
using instseg::Vec3;

Scene three_instance_scene() {
  std::vector<Vec3> coords;
  std::vector<std::int32_t> instance_ids;
  const int sizes[] = {10, 30, 20};
  for (int k = 0; k < 3; ++k)
    for (int i = 0; i < sizes[k]; ++i) {
      coords.push_back({k * 2.0 + 0.01 * i, 0.1 * (i % 4), 0.0});
      instance_ids.push_back(k);
    }
  return testutil::build_scene(coords, instance_ids, {1, 0, 1}, 3);
}

RefinedInstance instance_from(const Scene& scene,
                              std::vector<std::int32_t> mask,
                              std::int32_t category, double confidence) {
  RefinedInstance ri;
  ri.mask = std::move(mask);
  ri.category = category;
  ri.class_score = confidence;
  ri.mask_score = 1.0;
  ri.confidence = confidence;
  ri.box = instseg::extract_box(ri.mask, scene.cloud.coords);
  return ri;
}

std::vector<RefinedInstance> perfect_predictions(const Scene& scene) {
  std::vector<RefinedInstance> preds;
  const auto gt_sets = instseg::instance_point_sets(scene.gt);
  for (std::size_t k = 0; k < gt_sets.size(); ++k)
    preds.push_back(instance_from(scene, gt_sets[k],
                                  scene.gt.instance_classes[k], 1.0));
  return preds;
}

// ---------------------------------------------------------------------------

TEST(SemanticPrSweep, OneHotIsPerfectEverywhere) {
  const Scene scene = three_instance_scene();
  const std::vector<double> taus{0.05, 0.2, 0.5, 0.9};
  const auto report = instseg::semantic_pr_sweep(
      scene.semantic, scene.gt.semantic_labels, taus);
  ASSERT_EQ(report.sweep.size(), 2u * taus.size());  // classes 0 and 1 present
  for (const auto& row : report.sweep) {
    EXPECT_EQ(row.recall, 1.0);
    EXPECT_EQ(row.precision, 1.0);
  }
  ASSERT_EQ(report.hard_baseline.size(), 2u);
  for (const auto& row : report.hard_baseline) {
    EXPECT_EQ(row.recall, 1.0);
    EXPECT_EQ(row.precision, 1.0);
  }
}

TEST(SemanticPrSweep, HandCountedRecall) {
  SemanticField field;
  field.scores.resize(2, 2);
  field.scores.row(0) << 0.6, 0.4;
  field.scores.row(1) << 0.1, 0.9;
  const std::vector<std::int32_t> labels{0, 0};
  const std::vector<double> taus{0.2};
  const auto report = instseg::semantic_pr_sweep(field, labels, taus);
  // Only point 0 clears the threshold for class 0: recall 1/2.
  ASSERT_FALSE(report.sweep.empty());
  EXPECT_EQ(report.sweep[0].class_id, 0);
  EXPECT_EQ(report.sweep[0].recall, 0.5);
  EXPECT_EQ(report.sweep[0].precision, 1.0);
}

TEST(SemanticPrSweep, RecallNonIncreasingInTau) {
  std::mt19937_64 rng(3);
  std::vector<double> taus;
  for (int i = 1; i <= 19; ++i) taus.push_back(0.05 * i);
  for (int trial = 0; trial < 10; ++trial) {
    SemanticField field;
    field.scores = testutil::random_field(rng, 100, 4);
    std::vector<std::int32_t> labels(100);
    for (auto& l : labels) l = static_cast<std::int32_t>(rng() % 4);
    const auto report = instseg::semantic_pr_sweep(field, labels, taus);
    // Rows arrive class-major in tau order.
    for (std::size_t i = 1; i < report.sweep.size(); ++i) {
      if (report.sweep[i].class_id != report.sweep[i - 1].class_id) continue;
      EXPECT_LE(report.sweep[i].recall, report.sweep[i - 1].recall);
    }

    // Below the lowest positive score of a class, recall is exactly 1.
    for (int j = 0; j < 4; ++j) {
      double min_score = 1.0;
      bool present = false;
      for (Eigen::Index i = 0; i < field.scores.rows(); ++i) {
        if (labels[static_cast<std::size_t>(i)] != j) continue;
        present = true;
        min_score = std::min(min_score, field.scores(i, j));
      }
      if (!present) continue;
      const std::vector<double> below{min_score * 0.5};
      const auto full = instseg::semantic_pr_sweep(field, labels, below);
      for (const auto& row : full.sweep) {
        if (row.class_id == j) {
          EXPECT_EQ(row.recall, 1.0);
        }
      }
    }
  }
}

TEST(SemanticPrSweep, AbsentClassesAndEmptyTaus) {
  const Scene scene = three_instance_scene();  // class 2 has no points
  const std::vector<double> taus{0.2};
  const auto report = instseg::semantic_pr_sweep(
      scene.semantic, scene.gt.semantic_labels, taus);
  for (const auto& row : report.sweep) EXPECT_NE(row.class_id, 2);
  EXPECT_THROW(instseg::semantic_pr_sweep(scene.semantic,
                                          scene.gt.semantic_labels, {}),
               std::invalid_argument);
}

TEST(MatchPredictions, PerfectPredictionsAllTp) {
  const Scene scene = three_instance_scene();
  const auto preds = perfect_predictions(scene);
  const auto match = instseg::match_predictions(preds, scene, 0.5);
  ASSERT_EQ(match.ranked.size(), 3u);
  for (const auto& entry : match.ranked) EXPECT_TRUE(entry.tp);
}

TEST(MatchPredictions, DuplicateOnOneGtSecondIsFp) {
  const Scene scene = three_instance_scene();
  const auto gt_sets = instseg::instance_point_sets(scene.gt);
  std::vector<RefinedInstance> preds;
  preds.push_back(instance_from(scene, gt_sets[0], 1, 0.9));
  preds.push_back(instance_from(scene, gt_sets[0], 1, 0.7));
  const auto match = instseg::match_predictions(preds, scene, 0.5);
  ASSERT_EQ(match.ranked.size(), 2u);
  EXPECT_EQ(match.ranked[0].pred_index, 0);  // higher confidence first
  EXPECT_TRUE(match.ranked[0].tp);
  EXPECT_FALSE(match.ranked[1].tp);
}

TEST(MatchPredictions, WrongClassIsFpAndGtMatchedOnce) {
  const Scene scene = three_instance_scene();
  const auto gt_sets = instseg::instance_point_sets(scene.gt);
  std::vector<RefinedInstance> preds;
  preds.push_back(instance_from(scene, gt_sets[0], 0, 0.9));  // gt 0 is class 1
  const auto match = instseg::match_predictions(preds, scene, 0.5);
  ASSERT_EQ(match.ranked.size(), 1u);
  EXPECT_FALSE(match.ranked[0].tp);
}

TEST(MatchPredictions, BackgroundPredictionsExcluded) {
  const Scene scene = three_instance_scene();
  auto preds = perfect_predictions(scene);
  preds.push_back(
      instance_from(scene, instseg::instance_point_sets(scene.gt)[0], 3, 1.0));
  const auto match = instseg::match_predictions(preds, scene, 0.5);
  EXPECT_EQ(match.ranked.size(), 3u);  // category 3 = background, dropped
}

TEST(AveragePrecision, PerfectAndEmpty) {
  const Scene scene = three_instance_scene();
  const auto per_class =
      instseg::average_precision(perfect_predictions(scene), scene, 0.5);
  ASSERT_EQ(per_class.size(), 2u);
  for (const auto& [cls, ap] : per_class) EXPECT_EQ(ap, 1.0);

  const auto empty = instseg::average_precision({}, scene, 0.5);
  for (const auto& [cls, ap] : empty) EXPECT_EQ(ap, 0.0);
}

TEST(AveragePrecision, TpFpTpSequenceMatchesOracle) {
  // One class, 2 ground truths, three ranked predictions: TP, FP, TP.
  Eigen::MatrixXd overlaps(3, 2);
  overlaps << 0.9, 0.0,
              0.1, 0.2,
              0.0, 0.8;
  const std::vector<PredInfo> preds{{0, 0.9, 0}, {0, 0.8, 1}, {0, 0.7, 2}};
  const std::vector<std::int32_t> gt_classes{0, 0};
  const auto ap = instseg::average_precision_on_overlaps(overlaps, preds,
                                                         gt_classes, 0.5);
  const auto oracle =
      oracles::ap_prefix_enumeration(overlaps, preds, gt_classes, 0.5);
  ASSERT_EQ(ap.size(), 1u);
  EXPECT_NEAR(ap.at(0), oracle.at(0), 1e-15);
  // Prefixes give precisions 1, 1/2, 2/3; envelope keeps 1 and 2/3.
  EXPECT_NEAR(ap.at(0), 0.5 * (1.0 + 2.0 / 3.0), 1e-15);
}

TEST(AveragePrecision, RandomTinyCasesMatchOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_preds = 1 + static_cast<int>(rng() % 5);
    const int n_gt = 1 + static_cast<int>(rng() % 3);
    Eigen::MatrixXd overlaps(n_preds, n_gt);
    for (int p = 0; p < n_preds; ++p)
      for (int g = 0; g < n_gt; ++g) overlaps(p, g) = u(rng);
    std::vector<PredInfo> preds;
    for (int p = 0; p < n_preds; ++p)
      preds.push_back({static_cast<std::int32_t>(rng() % 2), u(rng), p});
    std::vector<std::int32_t> gt_classes;
    for (int g = 0; g < n_gt; ++g)
      gt_classes.push_back(static_cast<std::int32_t>(rng() % 2));
    const double threshold = u(rng);
    const auto ap = instseg::average_precision_on_overlaps(
        overlaps, preds, gt_classes, threshold);
    const auto oracle = oracles::ap_prefix_enumeration(overlaps, preds,
                                                       gt_classes, threshold);
    ASSERT_EQ(ap.size(), oracle.size());
    for (const auto& [cls, v] : oracle) EXPECT_NEAR(ap.at(cls), v, 1e-12);
  }
}

TEST(AveragePrecision, MonotoneInThreshold) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n_preds = 1 + static_cast<int>(rng() % 6);
    const int n_gt = 1 + static_cast<int>(rng() % 4);
    Eigen::MatrixXd overlaps(n_preds, n_gt);
    for (int p = 0; p < n_preds; ++p)
      for (int g = 0; g < n_gt; ++g) overlaps(p, g) = u(rng);
    std::vector<PredInfo> preds;
    for (int p = 0; p < n_preds; ++p)
      preds.push_back({static_cast<std::int32_t>(rng() % 2), u(rng), p});
    std::vector<std::int32_t> gt_classes;
    for (int g = 0; g < n_gt; ++g)
      gt_classes.push_back(static_cast<std::int32_t>(rng() % 2));

    double previous = 1.0;
    for (double threshold : {0.25, 0.5, 0.75, 0.9}) {
      const auto per_class = instseg::average_precision_on_overlaps(
          overlaps, preds, gt_classes, threshold);
      double mean = 0.0;
      for (const auto& [cls, v] : per_class) mean += v;
      mean /= static_cast<double>(per_class.size());
      EXPECT_LE(mean, previous + 1e-12);
      previous = mean;
    }
  }
}

TEST(ApSuite, PerfectPredictionsAreExactlyOne) {
  const Scene scene = three_instance_scene();
  const auto suite = instseg::ap_suite(perfect_predictions(scene), scene);
  EXPECT_EQ(suite.ap, 1.0);
  EXPECT_EQ(suite.ap50, 1.0);
  EXPECT_EQ(suite.ap25, 1.0);
  for (const auto& [cls, entry] : suite.per_class) {
    EXPECT_EQ(entry.ap, 1.0);
    EXPECT_EQ(entry.ap50, 1.0);
    EXPECT_EQ(entry.ap25, 1.0);
  }
}

TEST(ApSuite, DegradedMasksFollowThresholdGrid) {
  const Scene scene = three_instance_scene();
  const auto gt_sets = instseg::instance_point_sets(scene.gt);
  std::vector<RefinedInstance> preds;
  for (std::size_t k = 0; k < gt_sets.size(); ++k) {
    // Keep 60% of each instance: IoU 0.6 against the ground truth.
    std::vector<std::int32_t> mask(
        gt_sets[k].begin(),
        gt_sets[k].begin() + static_cast<std::ptrdiff_t>(
                                 (gt_sets[k].size() * 6) / 10));
    preds.push_back(
        instance_from(scene, mask, scene.gt.instance_classes[k], 1.0));
  }
  const auto suite = instseg::ap_suite(preds, scene);
  EXPECT_EQ(suite.ap50, 1.0);
  EXPECT_EQ(suite.ap25, 1.0);
  // Matched at 0.50, 0.55, 0.60 of the ten thresholds.
  EXPECT_NEAR(suite.ap, 0.3, 1e-12);
  EXPECT_LE(suite.ap, suite.ap50);
  EXPECT_LE(suite.ap50, suite.ap25);
}

TEST(ApSuite, EmptyGroundTruthIsAnError) {
  Scene scene;
  scene.semantic.scores.resize(0, 3);
  EXPECT_THROW(instseg::ap_suite({}, scene), std::invalid_argument);
}

TEST(S3disMetrics, PerfectPredictions) {
  const Scene scene = three_instance_scene();
  const auto metrics =
      instseg::s3dis_metrics(perfect_predictions(scene), scene);
  EXPECT_EQ(metrics.mcov, 1.0);
  EXPECT_EQ(metrics.mwcov, 1.0);
  EXPECT_EQ(metrics.mprec50, 1.0);
  EXPECT_EQ(metrics.mrec50, 1.0);
  EXPECT_TRUE(metrics.warnings.empty());
}

TEST(S3disMetrics, NoPredictionsWarns) {
  const Scene scene = three_instance_scene();
  const auto metrics = instseg::s3dis_metrics({}, scene);
  EXPECT_EQ(metrics.mcov, 0.0);
  EXPECT_EQ(metrics.mrec50, 0.0);
  EXPECT_EQ(metrics.mprec50, 0.0);
  EXPECT_EQ(metrics.warnings.size(), 2u);  // one per present class
}

TEST(S3disMetrics, HandComputedCoverage) {
  // One class, two instances of 10 and 30 points, covered 0.6 and 1.0.
  std::vector<Vec3> coords;
  std::vector<std::int32_t> instance_ids;
  for (int i = 0; i < 10; ++i) {
    coords.push_back({0.01 * i, 0, 0});
    instance_ids.push_back(0);
  }
  for (int i = 0; i < 30; ++i) {
    coords.push_back({5.0 + 0.01 * i, 0, 0});
    instance_ids.push_back(1);
  }
  const Scene scene = testutil::build_scene(coords, instance_ids, {0, 0}, 2);
  const auto gt_sets = instseg::instance_point_sets(scene.gt);

  std::vector<RefinedInstance> preds;
  // Covers 6 of instance 0's 10 points: IoU 6/10 = 0.6.
  preds.push_back(instance_from(
      scene, std::vector<std::int32_t>(gt_sets[0].begin(),
                                       gt_sets[0].begin() + 6),
      0, 0.9));
  preds.push_back(instance_from(scene, gt_sets[1], 0, 0.8));

  const auto metrics = instseg::s3dis_metrics(preds, scene);
  EXPECT_NEAR(metrics.mcov, 0.8, 1e-12);   // (0.6 + 1.0) / 2
  EXPECT_NEAR(metrics.mwcov, 0.9, 1e-12);  // (10*0.6 + 30*1.0) / 40
  EXPECT_NEAR(metrics.mprec50, 1.0, 1e-12);
  EXPECT_NEAR(metrics.mrec50, 1.0, 1e-12);
}

TEST(BoxIou, Values) {
  const instseg::Box unit{{0, 0, 0}, {1, 1, 1}};
  EXPECT_EQ(instseg::box_iou(unit, unit), 1.0);
  const instseg::Box apart{{5, 5, 5}, {6, 6, 6}};
  EXPECT_EQ(instseg::box_iou(unit, apart), 0.0);
  const instseg::Box shifted{{0.5, 0, 0}, {1.5, 1, 1}};
  EXPECT_NEAR(instseg::box_iou(unit, shifted), 1.0 / 3.0, 1e-15);

  const instseg::Box point{{1, 1, 1}, {1, 1, 1}};
  EXPECT_EQ(instseg::box_iou(point, point), 1.0);  // identical degenerate
  const instseg::Box other_point{{2, 2, 2}, {2, 2, 2}};
  EXPECT_EQ(instseg::box_iou(point, other_point), 0.0);
  EXPECT_EQ(instseg::box_iou(point, unit), 0.0);  // degenerate vs solid

  const instseg::Box malformed{{1, 0, 0}, {0, 1, 1}};
  EXPECT_THROW(instseg::box_iou(unit, malformed), std::invalid_argument);
}

TEST(BoxAp, PerfectMasksAndEmpty) {
  const Scene scene = three_instance_scene();
  const auto result = instseg::box_ap(perfect_predictions(scene), scene);
  EXPECT_EQ(result.box_ap50, 1.0);
  EXPECT_EQ(result.box_ap25, 1.0);

  const auto none = instseg::box_ap({}, scene);
  EXPECT_EQ(none.box_ap50, 0.0);
  EXPECT_EQ(none.box_ap25, 0.0);
}

TEST(BoxAp, TightBoxesSurviveMaskPerturbation) {
  const Scene scene = three_instance_scene();
  const auto gt_sets = instseg::instance_point_sets(scene.gt);
  std::vector<RefinedInstance> preds;
  for (std::size_t k = 0; k < gt_sets.size(); ++k) {
    // Drop interior points but keep the extremes: the box stays tight.
    std::vector<std::int32_t> mask{gt_sets[k].front(), gt_sets[k].back()};
    RefinedInstance ri = instance_from(
        scene, mask, scene.gt.instance_classes[k], 1.0);
    ri.box = instseg::extract_box(gt_sets[k], scene.cloud.coords);
    preds.push_back(ri);
  }
  const auto boxes = instseg::box_ap(preds, scene);
  const auto masks = instseg::ap_suite(preds, scene);
  EXPECT_GE(boxes.box_ap50, masks.ap50);
  EXPECT_EQ(boxes.box_ap50, 1.0);
}

TEST(EvaluateInstances, AllValuesInUnitInterval) {
  std::mt19937_64 rng(17);
  const Scene scene = three_instance_scene();
  const auto gt_sets = instseg::instance_point_sets(scene.gt);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RefinedInstance> preds;
  for (int trial = 0; trial < 6; ++trial) {
    const auto& gt = gt_sets[static_cast<std::size_t>(rng() % 3)];
    std::vector<std::int32_t> mask;
    for (std::int32_t id : gt)
      if (u(rng) < 0.7) mask.push_back(id);
    if (mask.empty()) mask.push_back(gt.front());
    preds.push_back(instance_from(scene, mask,
                                  static_cast<std::int32_t>(rng() % 3),
                                  u(rng)));
  }
  const auto report = instseg::evaluate_instances(preds, scene);
  for (double v : {report.ap, report.ap50, report.ap25, report.mcov,
                   report.mwcov, report.mprec50, report.mrec50,
                   report.box_ap50, report.box_ap25}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_LE(report.ap, report.ap50 + 1e-12);
  EXPECT_LE(report.ap50, report.ap25 + 1e-12);
}

}  // namespace
