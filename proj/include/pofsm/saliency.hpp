#pragma once

// Bottom-up static saliency by local self-resemblance: each pixel scores
// how poorly its local descriptor matches the descriptors around it,
//   s_i = 1 / sum_{j in N(i)} exp(-(1 - rho_ij) / h)
// with rho_ij the cosine similarity between descriptors and N(i) the
// square window of the given radius (center included, rho_ii = 1).
// The map is min-max normalized to [0, 1]; a threshold picked by Otsu's
// method zeroes the non-salient background.

#include <Eigen/Core>

#include "pofsm/errors.hpp"
#include "pofsm/flow_types.hpp"

namespace pofsm {

// Normalized saliency values in [0, 1].
using SaliencyMap = Plane;

enum class SaliencyDescriptor {
  kLsk,           // contrast-normalized (gx, gy) patch stack
  kGradientHist,  // magnitude-weighted orientation histogram
};

struct SaliencyParams {
  int patch = 3;   // descriptor patch side, odd
  int radius = 3;  // neighborhood radius
  SaliencyDescriptor descriptor = SaliencyDescriptor::kLsk;
  double h = 0.2;  // kernel temperature
  int smooth_passes = 1;
  int hist_bins = 8;  // kGradientHist only

  void validate() const {
    if (patch < 3 || patch % 2 == 0) throw ConfigError("saliency patch must be odd and >= 3");
    if (radius < 1) throw ConfigError("saliency radius must be >= 1");
    if (!(h > 0.0)) throw ConfigError("saliency temperature must be positive");
    if (smooth_passes < 0) throw ConfigError("smooth_passes must be >= 0");
    if (hist_bins < 2) throw ConfigError("hist_bins must be >= 2");
  }
};

struct Threshold {
  double tau = 0.0;
  int bins = 256;
  bool degenerate = false;  // all input values identical
};

// Borders use mirror padding (edge pixel not repeated). Constant images
// produce an all-zero map: no pixel is distinctive.
SaliencyMap saliency_map(const Plane& gray, const SaliencyParams& params = {});

// Histogram Otsu over [min, max] of the map. tau is the center of the
// last low-class bin of the variance-maximizing cut; ties pick the lower
// cut. A constant map yields tau = value with the degenerate flag set.
Threshold otsu_threshold(const SaliencyMap& map, int bins = 256);

// Strict-below zeroing: values >= tau pass through unchanged.
SaliencyMap apply_threshold(const SaliencyMap& map, double tau);

}  // namespace pofsm
