#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "pofsm/errors.hpp"
#include "pofsm/tensor.hpp"

namespace pofsm {

template <typename S>
using PlaneT = Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic>;
using Plane = PlaneT<float>;

// Dense 2D motion field; u is the horizontal component (+right), v vertical
// (+down), indexed (row, col).
template <typename S = float>
struct FlowField {
  PlaneT<S> u, v;

  FlowField() = default;
  FlowField(int rows, int cols) : u(PlaneT<S>::Zero(rows, cols)), v(PlaneT<S>::Zero(rows, cols)) {}

  int rows() const { return static_cast<int>(u.rows()); }
  int cols() const { return static_cast<int>(u.cols()); }
};

// Per-pixel cluster index, pixel-major (index = row * cols + col).
struct ClusterLabelMap {
  int rows = 0, cols = 0;
  Eigen::ArrayXi labels;

  ClusterLabelMap() = default;
  ClusterLabelMap(int r, int c) : rows(r), cols(c), labels(Eigen::ArrayXi::Zero(r * c)) {}

  int& at(int r, int c) { return labels[static_cast<long>(r) * cols + c]; }
  int at(int r, int c) const { return labels[static_cast<long>(r) * cols + c]; }

  void check_range(int clusters) const {
    for (long i = 0; i < labels.size(); ++i)
      if (labels[i] < 0 || labels[i] >= clusters)
        throw DataError("cluster label " + std::to_string(labels[i]) + " outside [0, " +
                        std::to_string(clusters) + ")");
  }
};

// Per-pixel distribution over motion clusters: row i of `p` is the simplex
// for pixel i (pixel-major), so the matrix is (rows*cols) x clusters and its
// storage matches the network's channels-last activation layout.
template <typename S = float>
struct SpatialProbMap {
  int rows = 0, cols = 0;
  Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> p;

  SpatialProbMap() = default;
  SpatialProbMap(int r, int c, int clusters) : rows(r), cols(c) {
    p.setZero(static_cast<long>(r) * c, clusters);
  }

  int clusters() const { return static_cast<int>(p.cols()); }
  long pixels() const { return static_cast<long>(rows) * cols; }

  // From a [1, rows, cols, clusters] network output.
  static SpatialProbMap from_tensor(const Tensor<S>& t) {
    if (t.rank() != 4 || t.dim(0) != 1) throw ConfigError("expected a [1,M,N,C] tensor");
    SpatialProbMap m(t.dim(1), t.dim(2), t.dim(3));
    for (long i = 0; i < t.size(); ++i) m.p.data()[i] = t.data()[i];
    return m;
  }

  double max_simplex_error() const {
    double worst = 0.0;
    for (long i = 0; i < p.rows(); ++i) {
      double sum = 0.0;
      for (int c = 0; c < p.cols(); ++c) {
        const double v = static_cast<double>(p(i, c));
        if (v < 0.0) worst = std::max(worst, -v);
        sum += v;
      }
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
  }
};

// Three-channel mapped image: horizontal/vertical predicted-flow channels
// plus the thresholded saliency channel, all in [0, 1] and the same shape.
struct PofSmImage {
  Plane pof_h, pof_v, sm;

  PofSmImage() = default;
  PofSmImage(long rows, long cols)
      : pof_h(Plane::Zero(rows, cols)),
        pof_v(Plane::Zero(rows, cols)),
        sm(Plane::Zero(rows, cols)) {}

  long rows() const { return pof_h.rows(); }
  long cols() const { return pof_h.cols(); }

  void check() const {
    const auto same = [&](const Plane& p) {
      return p.rows() == pof_h.rows() && p.cols() == pof_h.cols();
    };
    if (!same(pof_v) || !same(sm)) throw DataError("pofsm channels disagree on shape");
    for (const Plane* p : {&pof_h, &pof_v, &sm}) {
      if (!p->isFinite().all()) throw DataError("non-finite pofsm channel value");
      if (p->size() > 0 && (p->minCoeff() < 0.0f || p->maxCoeff() > 1.0f))
        throw DataError("pofsm channel value outside [0,1]");
    }
  }
};

}  // namespace pofsm
