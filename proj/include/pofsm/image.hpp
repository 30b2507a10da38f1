#pragma once

// Small float image containers plus the handful of geometry ops the
// mapping pipeline needs. Values live in [0, 1] by convention but the
// ops do not enforce it.

#include <Eigen/Core>

#include "pofsm/errors.hpp"
#include "pofsm/flow_types.hpp"

namespace pofsm {

// Planar RGB, all three planes the same shape.
struct ImageRgb {
  Plane r, g, b;

  ImageRgb() = default;
  ImageRgb(long rows, long cols)
      : r(Plane::Zero(rows, cols)), g(Plane::Zero(rows, cols)), b(Plane::Zero(rows, cols)) {}

  long rows() const { return r.rows(); }
  long cols() const { return r.cols(); }

  void check() const {
    if (g.rows() != r.rows() || g.cols() != r.cols() || b.rows() != r.rows() ||
        b.cols() != r.cols())
      throw DataError("rgb planes disagree on shape");
  }
};

// ITU-R BT.601 luma weights.
Plane rgb_luminance(const ImageRgb& img);

// Bilinear resampling with edge clamping. Sample positions map pixel
// centers to pixel centers so a resize to the same shape is the identity.
Plane bilinear_resize(const Plane& src, long rows, long cols);
ImageRgb bilinear_resize(const ImageRgb& src, long rows, long cols);

// Column order reversal (left-right mirror).
Plane hflip(const Plane& src);
ImageRgb hflip(const ImageRgb& src);

}  // namespace pofsm
