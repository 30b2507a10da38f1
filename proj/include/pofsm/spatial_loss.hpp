#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "pofsm/errors.hpp"
#include "pofsm/flow_types.hpp"

namespace pofsm {

enum class LossVariant { kV1, kV2 };

// Rank weighting for the order-statistic loss. With no explicit weights,
// rank r (1-based) weighs 1/top_k for r <= top_k and 0 beyond, so a pixel
// contributes -log(p_true)/K iff its true cluster sits in the top K.
struct LossConfig {
  int top_k = 10;
  std::vector<double> weights;  // optional explicit per-rank weights
  double clamp = 1e-12;

  double weight_at(int rank) const {  // rank is 1-based
    if (!weights.empty())
      return rank <= static_cast<int>(weights.size()) ? weights[static_cast<size_t>(rank - 1)]
                                                      : 0.0;
    return rank <= top_k ? 1.0 / static_cast<double>(top_k) : 0.0;
  }

  void validate() const {
    if (weights.empty() && top_k <= 0) throw ConfigError("loss top_k must be positive");
    for (double w : weights)
      if (w < 0.0 || !std::isfinite(w)) throw ConfigError("loss weights must be >= 0 and finite");
  }

  // All-zero weighting makes the loss identically zero; callers may warn.
  bool degenerate(int clusters) const {
    for (int r = 1; r <= clusters; ++r)
      if (weight_at(r) > 0.0) return false;
    return true;
  }
};

template <typename S>
struct SpatialLossResult {
  double value = 0.0;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> grad_probs;  // (MN) x C
  Eigen::VectorXd per_pixel;                                                     // MN
};

namespace detail {

template <typename S>
void check_loss_inputs(const SpatialProbMap<S>& probs, const ClusterLabelMap& labels) {
  if (probs.rows != labels.rows || probs.cols != labels.cols)
    throw ConfigError("probability map and label map dims differ");
  if (probs.rows <= 0 || probs.clusters() <= 0) throw ConfigError("empty probability map");
  labels.check_range(probs.clusters());
}

// Rank of cluster `y` when clusters are sorted by probability descending,
// ties broken toward the lower original index. 1-based.
template <typename S>
int rank_of(const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& p, long pixel,
            int y) {
  const S py = p(pixel, y);
  int ahead = 0;
  for (int j = 0; j < p.cols(); ++j) {
    if (p(pixel, j) > py || (p(pixel, j) == py && j < y)) ++ahead;
  }
  return ahead + 1;
}

}  // namespace detail

// Plain per-pixel negative log likelihood, summed over the image:
//   L = -sum_i log p_i(y_i)
// grad wrt probabilities is -1/p at the true cluster, 0 elsewhere.
template <typename S>
SpatialLossResult<S> spatial_loss_v1(const SpatialProbMap<S>& probs, const ClusterLabelMap& labels,
                                     const LossConfig& cfg = {}) {
  detail::check_loss_inputs(probs, labels);
  const long n = probs.pixels();
  SpatialLossResult<S> res;
  res.grad_probs.setZero(n, probs.clusters());
  res.per_pixel.setZero(n);
  double total = 0.0;
  for (long i = 0; i < n; ++i) {
    const int y = labels.labels[i];
    const double py = std::max(static_cast<double>(probs.p(i, y)), cfg.clamp);
    const double contrib = -std::log(py);
    res.per_pixel[i] = contrib;
    total += contrib;
    res.grad_probs(i, y) = static_cast<S>(-1.0 / py);
  }
  res.value = total;
  return res;
}

// Order-statistic variant: the true cluster's log-probability is weighted by
// its rank in the sorted per-pixel distribution. The sort permutation is
// treated as locally constant for the gradient.
template <typename S>
SpatialLossResult<S> spatial_loss_v2(const SpatialProbMap<S>& probs, const ClusterLabelMap& labels,
                                     const LossConfig& cfg = {}) {
  detail::check_loss_inputs(probs, labels);
  cfg.validate();
  const long n = probs.pixels();
  SpatialLossResult<S> res;
  res.grad_probs.setZero(n, probs.clusters());
  res.per_pixel.setZero(n);
  double total = 0.0;
  for (long i = 0; i < n; ++i) {
    const int y = labels.labels[i];
    const double w = cfg.weight_at(detail::rank_of(probs.p, i, y));
    if (w == 0.0) continue;
    const double py = std::max(static_cast<double>(probs.p(i, y)), cfg.clamp);
    const double contrib = -w * std::log(py);
    res.per_pixel[i] = contrib;
    total += contrib;
    res.grad_probs(i, y) = static_cast<S>(-w / py);
  }
  res.value = total;
  return res;
}

// Loss gradient taken directly at the pre-softmax logits. For V1 this is the
// classic (softmax - onehot) per pixel; V2 scales that by the rank weight of
// the true cluster (zero when it falls outside the weighted ranks).
template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> spatial_loss_grad_logits(
    const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& logits, int rows,
    int cols, const ClusterLabelMap& labels, LossVariant variant, const LossConfig& cfg = {}) {
  const int c = static_cast<int>(logits.cols());
  SpatialProbMap<S> probs(rows, cols, c);
  if (logits.rows() != probs.pixels()) throw ConfigError("logit matrix does not match dims");
  for (long i = 0; i < logits.rows(); ++i) {
    double m = static_cast<double>(logits(i, 0));
    for (int j = 1; j < c; ++j) m = std::max(m, static_cast<double>(logits(i, j)));
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      const double e = std::exp(static_cast<double>(logits(i, j)) - m);
      probs.p(i, j) = static_cast<S>(e);
      sum += e;
    }
    for (int j = 0; j < c; ++j) probs.p(i, j) = static_cast<S>(probs.p(i, j) / sum);
  }
  detail::check_loss_inputs(probs, labels);
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> grad;
  grad.setZero(logits.rows(), c);
  for (long i = 0; i < logits.rows(); ++i) {
    const int y = labels.labels[i];
    double w = 1.0;
    if (variant == LossVariant::kV2) {
      cfg.validate();
      w = cfg.weight_at(detail::rank_of(probs.p, i, y));
      if (w == 0.0) continue;
    }
    for (int j = 0; j < c; ++j) {
      const double onehot = (j == y) ? 1.0 : 0.0;
      grad(i, j) = static_cast<S>(w * (static_cast<double>(probs.p(i, j)) - onehot));
    }
  }
  return grad;
}

}  // namespace pofsm
