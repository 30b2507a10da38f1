#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <utility>
#include <vector>

#include "pofsm/errors.hpp"
#include "pofsm/flow_types.hpp"

namespace pofsm {

inline constexpr int kDefaultClusterCount = 40;

// Motion-cluster codebook: centroids in (u, v) space, canonically sorted by
// u then v, plus the normalization scale f_max used to map components into
// [0, 1] channels.
class FlowCodebook {
 public:
  FlowCodebook() = default;
  FlowCodebook(std::vector<Eigen::Vector2d> centroids, double f_max)
      : centroids_(std::move(centroids)), f_max_(f_max) {
    if (centroids_.empty()) throw ConfigError("codebook needs at least one centroid");
    if (!(f_max_ > 0.0)) throw ConfigError("codebook f_max must be positive");
  }

  int size() const { return static_cast<int>(centroids_.size()); }
  const std::vector<Eigen::Vector2d>& centroids() const { return centroids_; }
  double f_max() const { return f_max_; }
  void set_f_max(double f) {
    if (!(f > 0.0)) throw ConfigError("f_max must be positive");
    f_max_ = f;
  }

 private:
  std::vector<Eigen::Vector2d> centroids_;
  double f_max_ = 1.0;
};

// Lloyd's algorithm from a k-means++ style seeded init, run to the assignment
// fixpoint or max_iters. Empty clusters are re-seeded from the point farthest
// from its assigned centroid. sse_log, when given, records the SSE after each
// assignment step and is non-increasing.
FlowCodebook kmeans_fit_single(const std::vector<Eigen::Vector2d>& samples, int clusters,
                               int max_iters, std::uint64_t seed,
                               std::vector<double>* sse_log = nullptr);

// Production entry point: a few deterministic restarts (seeds derived from
// `seed`), best SSE wins, centroids sorted canonically. f_max defaults to the
// 99th percentile of |component| over the samples.
FlowCodebook kmeans_fit(const std::vector<Eigen::Vector2d>& samples, int clusters, int max_iters,
                        std::uint64_t seed);

double kmeans_sse(const std::vector<Eigen::Vector2d>& samples, const FlowCodebook& cb);

// Nearest-rank percentile of |u| and |v| pooled; falls back to the max, then
// to 1.0, when the percentile would be zero.
double abs_component_percentile(const std::vector<Eigen::Vector2d>& samples, double q);

// Text format: "POFCB v1" / "<C> <f_max>" / C lines "<u> <v>", full %.17g
// precision so save/load round-trips bit-exactly.
void save_codebook(const FlowCodebook& cb, const std::filesystem::path& path);
FlowCodebook load_codebook(const std::filesystem::path& path);

enum class DecodeMode { kExpected, kArgmax };

// Nearest centroid in Euclidean distance; ties go to the lowest index.
template <typename S>
ClusterLabelMap encode_flow(const FlowField<S>& flow, const FlowCodebook& cb) {
  ClusterLabelMap out(flow.rows(), flow.cols());
  const auto& cents = cb.centroids();
  for (int r = 0; r < flow.rows(); ++r) {
    for (int c = 0; c < flow.cols(); ++c) {
      const double u = static_cast<double>(flow.u(r, c));
      const double v = static_cast<double>(flow.v(r, c));
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < cb.size(); ++k) {
        const double du = u - cents[static_cast<size_t>(k)].x();
        const double dv = v - cents[static_cast<size_t>(k)].y();
        const double d = du * du + dv * dv;
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      out.at(r, c) = best;
    }
  }
  return out;
}

// kExpected: probability-weighted centroid average (linear in the map);
// kArgmax: centroid of the most probable cluster, ties to the lowest index.
template <typename S>
FlowField<S> decode_flow(const SpatialProbMap<S>& probs, const FlowCodebook& cb,
                         DecodeMode mode = DecodeMode::kExpected) {
  if (probs.clusters() != cb.size())
    throw ConfigError("probability map has " + std::to_string(probs.clusters()) +
                      " clusters but codebook has " + std::to_string(cb.size()));
  FlowField<S> out(probs.rows, probs.cols);
  const auto& cents = cb.centroids();
  for (int r = 0; r < probs.rows; ++r) {
    for (int c = 0; c < probs.cols; ++c) {
      const long i = static_cast<long>(r) * probs.cols + c;
      double u = 0.0, v = 0.0;
      if (mode == DecodeMode::kExpected) {
        for (int k = 0; k < cb.size(); ++k) {
          const double p = static_cast<double>(probs.p(i, k));
          u += p * cents[static_cast<size_t>(k)].x();
          v += p * cents[static_cast<size_t>(k)].y();
        }
      } else {
        int best = 0;
        for (int k = 1; k < cb.size(); ++k)
          if (probs.p(i, k) > probs.p(i, best)) best = k;
        u = cents[static_cast<size_t>(best)].x();
        v = cents[static_cast<size_t>(best)].y();
      }
      out.u(r, c) = static_cast<S>(u);
      out.v(r, c) = static_cast<S>(v);
    }
  }
  return out;
}

// Channel values live on the 1/2^24 lattice: the affine map lands exactly on
// 0.5 for zero motion and the horizontal mirror's value reflection (x -> 1-x)
// is closed and exactly involutive there.
inline double quantize_unit(double v) { return std::nearbyint(v * 16777216.0) / 16777216.0; }

// clamp((component + f_max) / (2 f_max), 0, 1), then lattice quantization.
template <typename S>
PlaneT<S> normalize_flow_channel(const PlaneT<S>& comp, double f_max) {
  if (!(f_max > 0.0)) throw ConfigError("normalize_flow_channel needs f_max > 0");
  PlaneT<S> out(comp.rows(), comp.cols());
  for (long r = 0; r < comp.rows(); ++r) {
    for (long c = 0; c < comp.cols(); ++c) {
      const double n = (static_cast<double>(comp(r, c)) + f_max) / (2.0 * f_max);
      out(r, c) = static_cast<S>(quantize_unit(std::clamp(n, 0.0, 1.0)));
    }
  }
  return out;
}

}  // namespace pofsm
