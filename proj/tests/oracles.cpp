#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace oracles {

using instseg::Vec3;

std::vector<std::int32_t> linear_scan_radius(std::span<const Vec3> coords,
                                             std::span<const std::int32_t> ids,
                                             const Vec3& center,
                                             double radius) {
  std::vector<std::int32_t> out;
  const double r2 = radius * radius;
  for (std::int32_t id : ids) {
    const Vec3 d = coords[static_cast<std::size_t>(id)] - center;
    if (d.x() * d.x() + d.y() * d.y() + d.z() * d.z() < r2) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::int32_t>> pairwise_components(
    std::span<const std::int32_t> ids, std::span<const Vec3> coords,
    double bandwidth) {
  const std::size_t n = ids.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  const double b2 = bandwidth * bandwidth;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& pi = coords[static_cast<std::size_t>(ids[i])];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3 d = coords[static_cast<std::size_t>(ids[j])] - pi;
      if (d.x() * d.x() + d.y() * d.y() + d.z() * d.z() < b2)
        parent[find(i)] = find(j);
    }
  }

  std::map<std::size_t, std::vector<std::int32_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(ids[i]);

  std::vector<std::vector<std::int32_t>> components;
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    components.push_back(std::move(members));
  }
  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return components;
}

double set_iou(std::span<const std::int32_t> a,
               std::span<const std::int32_t> b) {
  const std::set<std::int32_t> sa(a.begin(), a.end());
  const std::set<std::int32_t> sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (std::int32_t v : sa) inter += sb.count(v);
  std::set<std::int32_t> uni = sa;
  uni.insert(sb.begin(), sb.end());
  return static_cast<double>(inter) / static_cast<double>(uni.size());
}

std::map<std::int32_t, double> ap_prefix_enumeration(
    const Eigen::MatrixXd& overlaps, std::span<const instseg::PredInfo> preds,
    std::span<const std::int32_t> gt_classes, double iou_threshold,
    bool strict_greater) {
  // Rank predictions: confidence descending, then tie id, category, index.
  std::vector<std::int32_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    const auto& pa = preds[static_cast<std::size_t>(a)];
    const auto& pb = preds[static_cast<std::size_t>(b)];
    if (pa.confidence != pb.confidence) return pa.confidence > pb.confidence;
    if (pa.tie_id != pb.tie_id) return pa.tie_id < pb.tie_id;
    if (pa.category != pb.category) return pa.category < pb.category;
    return a < b;
  });

  // Greedy matching: best unmatched same-class ground truth.
  std::vector<bool> taken(gt_classes.size(), false);
  std::vector<bool> tp(order.size(), false);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::int32_t p = order[rank];
    double best = -1.0;
    int best_gt = -1;
    for (std::size_t g = 0; g < gt_classes.size(); ++g) {
      if (taken[g] ||
          gt_classes[g] != preds[static_cast<std::size_t>(p)].category)
        continue;
      const double ov = overlaps(p, static_cast<Eigen::Index>(g));
      if (ov > best) {
        best = ov;
        best_gt = static_cast<int>(g);
      }
    }
    const bool matched = best_gt >= 0 && (strict_greater ? best > iou_threshold
                                                         : best >= iou_threshold);
    if (matched) {
      taken[static_cast<std::size_t>(best_gt)] = true;
      tp[rank] = true;
    }
  }

  std::map<std::int32_t, std::int64_t> gt_count;
  for (std::int32_t cls : gt_classes) ++gt_count[cls];

  std::map<std::int32_t, double> ap;
  for (const auto& [cls, n_gt] : gt_count) {
    // Class-restricted TP/FP sequence.
    std::vector<bool> seq;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (preds[static_cast<std::size_t>(order[rank])].category == cls)
        seq.push_back(tp[rank]);
    }
    // Precision and recall at every prefix cutoff.
    std::vector<double> precision(seq.size() + 1, 0.0);
    std::vector<std::int64_t> tps(seq.size() + 1, 0);
    for (std::size_t k = 1; k <= seq.size(); ++k) {
      tps[k] = tps[k - 1] + (seq[k - 1] ? 1 : 0);
      precision[k] = static_cast<double>(tps[k]) / static_cast<double>(k);
    }
    // AP = sum over recall steps of max precision among prefixes whose
    // recall reaches the step.
    double sum = 0.0;
    for (std::int64_t t = 1; t <= n_gt; ++t) {
      double env = 0.0;
      for (std::size_t k = 1; k <= seq.size(); ++k)
        if (tps[k] >= t) env = std::max(env, precision[k]);
      sum += env;
    }
    ap[cls] = sum / static_cast<double>(n_gt);
  }
  return ap;
}

double semantic_loss_naive(const instseg::ScoreMatrix& logits,
                           std::span<const std::int32_t> labels) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    double denom = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j)
      denom += std::exp(logits(static_cast<Eigen::Index>(i), j));
    const double p =
        std::exp(logits(static_cast<Eigen::Index>(i), labels[i])) / denom;
    sum += -std::log(p);
    ++count;
  }
  return sum / static_cast<double>(count);
}

double classification_loss_naive(const instseg::ScoreMatrix& logits,
                                 std::span<const std::int32_t> targets) {
  double sum = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    double denom = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j)
      denom += std::exp(logits(static_cast<Eigen::Index>(k), j));
    sum += -std::log(
        std::exp(logits(static_cast<Eigen::Index>(k), targets[k])) / denom);
  }
  return sum / static_cast<double>(targets.size());
}

double offset_loss_naive(std::span<const Vec3> offsets,
                         std::span<const Vec3> targets,
                         std::span<const std::uint8_t> foreground) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!foreground[i]) continue;
    sum += std::abs(offsets[i].x() - targets[i].x()) +
           std::abs(offsets[i].y() - targets[i].y()) +
           std::abs(offsets[i].z() - targets[i].z());
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double mask_loss_naive(std::span<const Eigen::VectorXd> logits,
                       std::span<const Eigen::VectorXd> targets,
                       std::span<const std::uint8_t> positive) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t k = 0; k < positive.size(); ++k) {
    if (!positive[k]) continue;
    double proposal = 0.0;
    for (Eigen::Index i = 0; i < logits[k].size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-logits[k](i)));
      const double t = targets[k](i);
      proposal += -(t * std::log(p) + (1.0 - t) * std::log(1.0 - p));
    }
    sum += proposal / static_cast<double>(logits[k].size());
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double mask_score_loss_naive(std::span<const double> predicted,
                             std::span<const double> targets,
                             std::span<const std::uint8_t> positive) {
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t k = 0; k < positive.size(); ++k) {
    if (!positive[k]) continue;
    sum += std::sqrt((predicted[k] - targets[k]) * (predicted[k] - targets[k]));
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace oracles
