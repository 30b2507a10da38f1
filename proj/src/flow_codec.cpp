#include "pofsm/flow_codec.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pofsm/rng.hpp"

namespace pofsm {

namespace {

double sq_dist(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a - b).squaredNorm();
}

long count_distinct(const std::vector<Eigen::Vector2d>& samples) {
  std::set<std::pair<double, double>> seen;
  for (const auto& s : samples) seen.insert({s.x(), s.y()});
  return static_cast<long>(seen.size());
}

// k-means++: first centroid uniform, then squared-distance weighted picks.
std::vector<Eigen::Vector2d> seed_centroids(const std::vector<Eigen::Vector2d>& samples,
                                            int clusters, Rng& rng) {
  const long n = static_cast<long>(samples.size());
  std::vector<Eigen::Vector2d> cents;
  cents.reserve(static_cast<size_t>(clusters));
  cents.push_back(samples[static_cast<size_t>(rng.uniform_int(static_cast<int>(n)))]);
  std::vector<double> d2(static_cast<size_t>(n));
  while (static_cast<int>(cents.size()) < clusters) {
    double total = 0.0;
    for (long i = 0; i < n; ++i) {
      double best = sq_dist(samples[static_cast<size_t>(i)], cents[0]);
      for (size_t k = 1; k < cents.size(); ++k)
        best = std::min(best, sq_dist(samples[static_cast<size_t>(i)], cents[k]));
      d2[static_cast<size_t>(i)] = best;
      total += best;
    }
    long pick = 0;
    if (total > 0.0) {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (long i = 0; i < n; ++i) {
        acc += d2[static_cast<size_t>(i)];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.uniform_int(static_cast<int>(n));
    }
    cents.push_back(samples[static_cast<size_t>(pick)]);
  }
  return cents;
}

void sort_canonical(std::vector<Eigen::Vector2d>& cents) {
  std::sort(cents.begin(), cents.end(), [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() != b.x() ? a.x() < b.x() : a.y() < b.y();
  });
}

}  // namespace

double abs_component_percentile(const std::vector<Eigen::Vector2d>& samples, double q) {
  if (samples.empty()) return 1.0;
  if (q < 0.0 || q > 1.0) throw ConfigError("percentile must lie in [0, 1]");
  std::vector<double> mags;
  mags.reserve(samples.size() * 2);
  for (const auto& s : samples) {
    mags.push_back(std::abs(s.x()));
    mags.push_back(std::abs(s.y()));
  }
  std::sort(mags.begin(), mags.end());
  const long n = static_cast<long>(mags.size());
  long idx = static_cast<long>(std::ceil(q * static_cast<double>(n))) - 1;
  idx = std::clamp(idx, 0L, n - 1);
  double f = mags[static_cast<size_t>(idx)];
  if (f <= 0.0) f = mags.back();  // degenerate: nearly all motion is zero
  if (f <= 0.0) f = 1.0;          // all-zero flow set
  return f;
}

double kmeans_sse(const std::vector<Eigen::Vector2d>& samples, const FlowCodebook& cb) {
  double sse = 0.0;
  for (const auto& s : samples) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cb.centroids()) best = std::min(best, sq_dist(s, c));
    sse += best;
  }
  return sse;
}

FlowCodebook kmeans_fit_single(const std::vector<Eigen::Vector2d>& samples, int clusters,
                               int max_iters, std::uint64_t seed, std::vector<double>* sse_log) {
  const long n = static_cast<long>(samples.size());
  if (clusters <= 0) throw ConfigError("cluster count must be positive");
  if (max_iters <= 0) throw ConfigError("max_iters must be positive");
  if (n == 0) throw ConfigError("k-means needs samples");
  if (count_distinct(samples) < clusters)
    throw ConfigError("cluster count exceeds the number of distinct samples");

  Rng rng(seed);
  std::vector<Eigen::Vector2d> cents = seed_centroids(samples, clusters, rng);
  std::vector<int> assign(static_cast<size_t>(n), -1);
  std::vector<double> dist(static_cast<size_t>(n), 0.0);
  if (sse_log) sse_log->clear();

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double sse = 0.0;
    for (long i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(samples[static_cast<size_t>(i)], cents[0]);
      for (int k = 1; k < clusters; ++k) {
        const double d = sq_dist(samples[static_cast<size_t>(i)], cents[static_cast<size_t>(k)]);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      if (assign[static_cast<size_t>(i)] != best) changed = true;
      assign[static_cast<size_t>(i)] = best;
      dist[static_cast<size_t>(i)] = best_d;
      sse += best_d;
    }
    if (sse_log) sse_log->push_back(sse);
    if (!changed) break;

    std::vector<Eigen::Vector2d> sums(static_cast<size_t>(clusters), Eigen::Vector2d::Zero());
    std::vector<long> counts(static_cast<size_t>(clusters), 0);
    for (long i = 0; i < n; ++i) {
      sums[static_cast<size_t>(assign[static_cast<size_t>(i)])] += samples[static_cast<size_t>(i)];
      ++counts[static_cast<size_t>(assign[static_cast<size_t>(i)])];
    }
    std::vector<char> taken(static_cast<size_t>(n), 0);
    for (int k = 0; k < clusters; ++k) {
      if (counts[static_cast<size_t>(k)] > 0) {
        cents[static_cast<size_t>(k)] =
            sums[static_cast<size_t>(k)] / static_cast<double>(counts[static_cast<size_t>(k)]);
      } else {
        // Re-seed from the point farthest from its assigned centroid.
        long far = -1;
        double far_d = -1.0;
        for (long i = 0; i < n; ++i) {
          if (taken[static_cast<size_t>(i)]) continue;
          if (dist[static_cast<size_t>(i)] > far_d) {
            far_d = dist[static_cast<size_t>(i)];
            far = i;
          }
        }
        cents[static_cast<size_t>(k)] = samples[static_cast<size_t>(far)];
        taken[static_cast<size_t>(far)] = 1;
      }
    }
  }
  sort_canonical(cents);
  return FlowCodebook(std::move(cents), abs_component_percentile(samples, 0.99));
}

namespace {

// Exhaustive solver for tiny inputs: every assignment of n samples to C
// clusters. Guarantees the optimal partition where Lloyd's only finds a
// local one; the caller gates on C^n so this stays O(C^n * n).
FlowCodebook kmeans_fit_exact(const std::vector<Eigen::Vector2d>& samples, int clusters) {
  const int n = static_cast<int>(samples.size());
  std::vector<int> assign(static_cast<size_t>(n), 0), best_assign;
  double best_sse = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Vector2d> sums(static_cast<size_t>(clusters));
  std::vector<int> counts(static_cast<size_t>(clusters));
  for (;;) {
    std::fill(sums.begin(), sums.end(), Eigen::Vector2d::Zero().eval());
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      sums[static_cast<size_t>(assign[static_cast<size_t>(i)])] += samples[static_cast<size_t>(i)];
      ++counts[static_cast<size_t>(assign[static_cast<size_t>(i)])];
    }
    bool full = true;
    for (int k = 0; k < clusters; ++k) full = full && counts[static_cast<size_t>(k)] > 0;
    if (full) {
      double sse = 0.0;
      for (int i = 0; i < n; ++i) {
        const int k = assign[static_cast<size_t>(i)];
        const Eigen::Vector2d mean =
            sums[static_cast<size_t>(k)] / static_cast<double>(counts[static_cast<size_t>(k)]);
        sse += (samples[static_cast<size_t>(i)] - mean).squaredNorm();
      }
      if (sse < best_sse) {
        best_sse = sse;
        best_assign = assign;
      }
    }
    int pos = n - 1;
    while (pos >= 0 && assign[static_cast<size_t>(pos)] == clusters - 1)
      assign[static_cast<size_t>(pos--)] = 0;
    if (pos < 0) break;
    ++assign[static_cast<size_t>(pos)];
  }

  std::fill(sums.begin(), sums.end(), Eigen::Vector2d::Zero().eval());
  std::fill(counts.begin(), counts.end(), 0);
  for (int i = 0; i < n; ++i) {
    sums[static_cast<size_t>(best_assign[static_cast<size_t>(i)])] +=
        samples[static_cast<size_t>(i)];
    ++counts[static_cast<size_t>(best_assign[static_cast<size_t>(i)])];
  }
  std::vector<Eigen::Vector2d> cents(static_cast<size_t>(clusters));
  for (int k = 0; k < clusters; ++k)
    cents[static_cast<size_t>(k)] =
        sums[static_cast<size_t>(k)] / static_cast<double>(counts[static_cast<size_t>(k)]);
  sort_canonical(cents);
  return FlowCodebook(std::move(cents), abs_component_percentile(samples, 0.99));
}

bool exact_fit_feasible(long n, int clusters) {
  if (n > 16) return false;
  double combos = 1.0;
  for (long i = 0; i < n; ++i) {
    combos *= clusters;
    if (combos > 65536.0) return false;
  }
  return true;
}

}  // namespace

FlowCodebook kmeans_fit(const std::vector<Eigen::Vector2d>& samples, int clusters, int max_iters,
                        std::uint64_t seed) {
  if (clusters <= 0) throw ConfigError("cluster count must be positive");
  if (samples.empty()) throw ConfigError("k-means needs samples");
  if (count_distinct(samples) < clusters)
    throw ConfigError("cluster count exceeds the number of distinct samples");
  if (exact_fit_feasible(static_cast<long>(samples.size()), clusters))
    return kmeans_fit_exact(samples, clusters);

  constexpr int kRestarts = 4;
  FlowCodebook best;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < kRestarts; ++attempt) {
    FlowCodebook cb = kmeans_fit_single(samples, clusters, max_iters, mix_seed(seed, attempt));
    const double sse = kmeans_sse(samples, cb);
    if (sse < best_sse) {
      best_sse = sse;
      best = cb;
    }
  }
  return best;
}

void save_codebook(const FlowCodebook& cb, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  char buf[128];
  os << "POFCB v1\n";
  std::snprintf(buf, sizeof buf, "%d %.17g\n", cb.size(), cb.f_max());
  os << buf;
  for (const auto& c : cb.centroids()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", c.x(), c.y());
    os << buf;
  }
  if (!os) throw DataError("failed writing " + path.string());
}

FlowCodebook load_codebook(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot read " + path.string());
  std::string header;
  std::getline(is, header);
  if (header != "POFCB v1") throw DataError("not a codebook file: " + path.string());
  int clusters = 0;
  double f_max = 0.0;
  if (!(is >> clusters >> f_max) || clusters <= 0)
    throw DataError("corrupt codebook header: " + path.string());
  std::vector<Eigen::Vector2d> cents(static_cast<size_t>(clusters));
  for (int k = 0; k < clusters; ++k) {
    if (!(is >> cents[static_cast<size_t>(k)].x() >> cents[static_cast<size_t>(k)].y()))
      throw DataError("corrupt codebook entry in " + path.string());
    if (!std::isfinite(cents[static_cast<size_t>(k)].x()) ||
        !std::isfinite(cents[static_cast<size_t>(k)].y()))
      throw DataError("non-finite centroid in " + path.string());
  }
  return FlowCodebook(std::move(cents), f_max);
}

}  // namespace pofsm
