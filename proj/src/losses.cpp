#include "instseg/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace instseg {

namespace {

// -log softmax(logits)[label], evaluated through log-sum-exp.
double ce_row(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int label) {
  const double max = logits.maxCoeff();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < logits.size(); ++j)
    sum += std::exp(logits(j) - max);
  return std::log(sum) - (logits(label) - max);
}

// Binary cross-entropy on a logit, stable for large |z|:
// max(z,0) - z*t + log(1 + exp(-|z|)).
double bce_logit(double z, double t) {
  return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  if (!logits.allFinite())
    throw std::invalid_argument("softmax: non-finite logit");
  const double max = logits.maxCoeff();
  Eigen::VectorXd out = (logits.array() - max).exp();
  out /= out.sum();
  return out;
}

double semantic_loss(const ScoreMatrix& logits,
                     std::span<const std::int32_t> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size())
    throw std::invalid_argument("semantic_loss: logits/labels length mismatch");
  const int n_classes = static_cast<int>(logits.cols());
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::int32_t label = labels[i];
    if (label < 0) continue;
    if (label >= n_classes)
      throw std::invalid_argument("semantic_loss: label out of range");
    sum += ce_row(logits.row(static_cast<Eigen::Index>(i)), label);
    ++count;
  }
  if (count == 0)
    throw std::invalid_argument("semantic_loss: every point is ignored");
  return sum / static_cast<double>(count);
}

double offset_loss(std::span<const Vec3> offsets, std::span<const Vec3> targets,
                   std::span<const std::uint8_t> foreground) {
  if (offsets.size() != targets.size() || offsets.size() != foreground.size())
    throw std::invalid_argument("offset_loss: length mismatch");
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!foreground[i]) continue;
    sum += (offsets[i] - targets[i]).cwiseAbs().sum();
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double classification_loss(const ScoreMatrix& logits,
                           std::span<const std::int32_t> targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size())
    throw std::invalid_argument(
        "classification_loss: logits/targets length mismatch");
  if (targets.empty())
    throw std::invalid_argument("classification_loss: no proposals");
  const int n_columns = static_cast<int>(logits.cols());
  double sum = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    if (targets[k] < 0 || targets[k] >= n_columns)
      throw std::invalid_argument("classification_loss: target out of range");
    sum += ce_row(logits.row(static_cast<Eigen::Index>(k)), targets[k]);
  }
  return sum / static_cast<double>(targets.size());
}

double mask_loss(std::span<const Eigen::VectorXd> logits,
                 std::span<const Eigen::VectorXd> targets,
                 std::span<const std::uint8_t> positive) {
  if (logits.size() != positive.size() || targets.size() != positive.size())
    throw std::invalid_argument("mask_loss: length mismatch");
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t k = 0; k < positive.size(); ++k) {
    if (!positive[k]) continue;
    if (logits[k].size() != targets[k].size() || logits[k].size() == 0)
      throw std::invalid_argument("mask_loss: logits/targets shape mismatch");
    double proposal_sum = 0.0;
    for (Eigen::Index i = 0; i < logits[k].size(); ++i)
      proposal_sum += bce_logit(logits[k](i), targets[k](i));
    sum += proposal_sum / static_cast<double>(logits[k].size());
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double mask_score_loss(std::span<const double> predicted,
                       std::span<const double> targets,
                       std::span<const std::uint8_t> positive) {
  if (predicted.size() != positive.size() || targets.size() != positive.size())
    throw std::invalid_argument("mask_score_loss: length mismatch");
  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t k = 0; k < positive.size(); ++k) {
    if (!positive[k]) continue;
    sum += std::abs(predicted[k] - targets[k]);
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

LossReport total_loss(double semantic, double offset, double classification,
                      double mask, double mask_score) {
  const double parts[] = {semantic, offset, classification, mask, mask_score};
  for (double p : parts) {
    if (!std::isfinite(p))
      throw std::invalid_argument("total_loss: non-finite part");
    if (p < 0.0) throw std::invalid_argument("total_loss: negative part");
  }
  LossReport report{semantic, offset, classification, mask, mask_score, 0.0};
  report.total = semantic + offset + classification + mask + mask_score;
  return report;
}

Eigen::VectorXd ce_logit_gradient(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size())
    throw std::invalid_argument("ce_logit_gradient: label out of range");
  Eigen::VectorXd grad = softmax(logits);
  grad(label) -= 1.0;
  return grad;
}

double bce_logit_gradient(double logit, double target) {
  return 1.0 / (1.0 + std::exp(-logit)) - target;
}

}  // namespace instseg
