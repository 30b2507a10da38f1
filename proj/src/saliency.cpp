#include "pofsm/saliency.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace pofsm {

namespace {

// Mirror-101 index: -1 -> 1, n -> n-2. Loops for deep overshoot.
long mirror(long i, long n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

// Separable [1 2 1]/4 blur passes. Weights sum to 1 so constants pass through.
Eigen::ArrayXXd binomial_smooth(Eigen::ArrayXXd img, int passes) {
  const long rows = img.rows(), cols = img.cols();
  Eigen::ArrayXXd tmp(rows, cols);
  for (int pass = 0; pass < passes; ++pass) {
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c)
        tmp(r, c) = 0.25 * (img(r, mirror(c - 1, cols)) + 2.0 * img(r, c) +
                            img(r, mirror(c + 1, cols)));
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c)
        img(r, c) = 0.25 * (tmp(mirror(r - 1, rows), c) + 2.0 * tmp(r, c) +
                            tmp(mirror(r + 1, rows), c));
  }
  return img;
}

struct DescriptorField {
  Eigen::MatrixXd d;            // one row per pixel (row-major pixel order)
  std::vector<char> flat;      // descriptor norm was zero
};

DescriptorField build_descriptors(const Plane& gray, const SaliencyParams& p) {
  const long rows = gray.rows(), cols = gray.cols();
  const Eigen::ArrayXXd img = binomial_smooth(gray.cast<double>(), p.smooth_passes);

  Eigen::ArrayXXd gx(rows, cols), gy(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      gx(r, c) = 0.5 * (img(r, mirror(c + 1, cols)) - img(r, mirror(c - 1, cols)));
      gy(r, c) = 0.5 * (img(mirror(r + 1, rows), c) - img(mirror(r - 1, rows), c));
    }

  const int half = p.patch / 2;
  const long len = p.descriptor == SaliencyDescriptor::kLsk
                       ? 2L * p.patch * p.patch
                       : static_cast<long>(p.hist_bins);
  DescriptorField field;
  field.d.resize(rows * cols, len);
  field.flat.assign(static_cast<size_t>(rows * cols), 0);

  Eigen::VectorXd desc(len);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      desc.setZero();
      long k = 0;
      for (int dr = -half; dr <= half; ++dr)
        for (int dc = -half; dc <= half; ++dc) {
          const long rr = mirror(r + dr, rows), cc = mirror(c + dc, cols);
          if (p.descriptor == SaliencyDescriptor::kLsk) {
            desc(k++) = gx(rr, cc);
            desc(k++) = gy(rr, cc);
          } else {
            const double mag = std::hypot(gx(rr, cc), gy(rr, cc));
            if (mag > 0.0) {
              const double ang = std::atan2(gy(rr, cc), gx(rr, cc));  // (-pi, pi]
              long bin = static_cast<long>((ang + std::numbers::pi) /
                                           (2.0 * std::numbers::pi) * p.hist_bins);
              if (bin >= p.hist_bins) bin = p.hist_bins - 1;
              if (bin < 0) bin = 0;
              desc(bin) += mag;
            }
          }
        }
      const double norm = desc.norm();
      const long pix = r * cols + c;
      if (norm > 0.0) {
        field.d.row(pix) = desc.transpose() / norm;
      } else {
        field.d.row(pix).setZero();
        field.flat[static_cast<size_t>(pix)] = 1;
      }
    }
  return field;
}

}  // namespace

SaliencyMap saliency_map(const Plane& gray, const SaliencyParams& params) {
  params.validate();
  const long rows = gray.rows(), cols = gray.cols();
  if (rows < params.patch || cols < params.patch)
    throw DataError("image smaller than the descriptor patch");
  if (!gray.isFinite().all()) throw DataError("non-finite image values");

  const DescriptorField field = build_descriptors(gray, params);
  const int rad = params.radius;
  Eigen::ArrayXXd score(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      const long i = r * cols + c;
      const bool flat_i = field.flat[static_cast<size_t>(i)] != 0;
      double denom = 0.0;
      for (int dr = -rad; dr <= rad; ++dr)
        for (int dc = -rad; dc <= rad; ++dc) {
          const long j = mirror(r + dr, rows) * cols + mirror(c + dc, cols);
          const bool flat_j = field.flat[static_cast<size_t>(j)] != 0;
          // Two flat patches agree perfectly; flat vs structured disagree.
          double rho;
          if (flat_i && flat_j)
            rho = 1.0;
          else if (flat_i || flat_j)
            rho = 0.0;
          else
            rho = field.d.row(i).dot(field.d.row(j));
          denom += std::exp(-(1.0 - rho) / params.h);
        }
      score(r, c) = 1.0 / denom;
    }

  const double lo = score.minCoeff(), hi = score.maxCoeff();
  SaliencyMap out(rows, cols);
  if (hi - lo <= 1e-12) {
    out.setZero();  // uniform self-resemblance: nothing is salient
  } else {
    out = ((score - lo) / (hi - lo)).cast<float>();
  }
  return out;
}

Threshold otsu_threshold(const SaliencyMap& map, int bins) {
  if (map.size() == 0) throw DataError("empty saliency map");
  if (bins < 2) throw ConfigError("otsu needs at least 2 bins");
  const double lo = static_cast<double>(map.minCoeff());
  const double hi = static_cast<double>(map.maxCoeff());
  Threshold th;
  th.bins = bins;
  if (hi - lo <= 1e-12) {
    th.tau = lo;
    th.degenerate = true;
    return th;
  }

  const double width = (hi - lo) / bins;
  std::vector<double> hist(static_cast<size_t>(bins), 0.0);
  for (long i = 0; i < map.size(); ++i) {
    long b = static_cast<long>((static_cast<double>(map(i)) - lo) / width);
    b = std::min<long>(std::max<long>(b, 0), bins - 1);
    hist[static_cast<size_t>(b)] += 1.0;
  }

  const double total = static_cast<double>(map.size());
  double mean_total = 0.0;
  for (int b = 0; b < bins; ++b) hist[static_cast<size_t>(b)] /= total;
  for (int b = 0; b < bins; ++b)
    mean_total += (static_cast<double>(b) + 0.5) * hist[static_cast<size_t>(b)];

  // Scan cuts: class 0 = bins [0, t], class 1 = the rest. Ties keep the
  // lower cut, so tau sits as low as the data allows.
  int best_t = 0;
  double best_var = -1.0;
  double w0 = 0.0, mean0 = 0.0;
  for (int t = 0; t + 1 < bins; ++t) {
    w0 += hist[static_cast<size_t>(t)];
    mean0 += (static_cast<double>(t) + 0.5) * hist[static_cast<size_t>(t)];
    const double w1 = 1.0 - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = mean0 / w0;
    const double mu1 = (mean_total - mean0) / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  if (best_var < 0.0) best_t = 0;  // single occupied bin; any cut is as good
  th.tau = lo + (static_cast<double>(best_t) + 0.5) * width;
  return th;
}

SaliencyMap apply_threshold(const SaliencyMap& map, double tau) {
  if (!std::isfinite(tau)) throw ConfigError("threshold must be finite");
  // Compare in double; tau comes from otsu_threshold uncast.
  return map.unaryExpr([tau](float v) { return static_cast<double>(v) < tau ? 0.0f : v; });
}

}  // namespace pofsm
