#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "instseg/types.hpp"

namespace instseg {

// Loss functions take logits; grouping takes probabilities. All
// accumulation is in double. Empty-denominator sums (no foreground, no
// positives) return 0.

struct LossReport {
  double semantic = 0.0;
  double offset = 0.0;
  double classification = 0.0;
  double mask = 0.0;
  double mask_score = 0.0;
  double total = 0.0;
};

// Max-shifted softmax of one logit row.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Mean cross-entropy over points with label >= 0; -1 labels are ignored.
// Throws when every point is ignored.
double semantic_loss(const ScoreMatrix& logits,
                     std::span<const std::int32_t> labels);

// Mean l1 distance over foreground points; 0 when there is no foreground.
double offset_loss(std::span<const Vec3> offsets, std::span<const Vec3> targets,
                   std::span<const std::uint8_t> foreground);

// Mean cross-entropy over all K proposals, negatives included (their
// target is the background class).
double classification_loss(const ScoreMatrix& logits,
                           std::span<const std::int32_t> targets);

// Per-positive mean binary cross-entropy on sigmoid(logits), averaged over
// positives; 0 when there are none. logits/targets are indexed per
// proposal and consulted only where positive[k] is set.
double mask_loss(std::span<const Eigen::VectorXd> logits,
                 std::span<const Eigen::VectorXd> targets,
                 std::span<const std::uint8_t> positive);

// Mean |predicted - target| over positives; 0 when there are none.
double mask_score_loss(std::span<const double> predicted,
                       std::span<const double> targets,
                       std::span<const std::uint8_t> positive);

// Unweighted sum of the five parts. Throws on non-finite or negative input.
LossReport total_loss(double semantic, double offset, double classification,
                      double mask, double mask_score);

// d/dlogits of cross-entropy: softmax(logits) - one_hot(label).
Eigen::VectorXd ce_logit_gradient(const Eigen::VectorXd& logits, int label);

// d/dlogit of binary cross-entropy: sigmoid(logit) - target.
double bce_logit_gradient(double logit, double target);

}  // namespace instseg
