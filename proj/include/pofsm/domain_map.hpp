#pragma once

// Maps a still image into the three-channel motion domain: the flow net
// predicts a per-pixel cluster distribution, the codebook decodes it to a
// flow field normalized into [0, 1], and a thresholded saliency map fills
// the third channel. Mirror augmentation operates directly on the mapped
// image so cached mappings can be flipped without rerunning the net.

#include "pofsm/flow_codec.hpp"
#include "pofsm/flow_types.hpp"
#include "pofsm/image.hpp"
#include "pofsm/network.hpp"
#include "pofsm/saliency.hpp"

namespace pofsm {

struct MappingConfig {
  const Network<float>* flow_net = nullptr;
  const FlowCodebook* codebook = nullptr;
  DecodeMode decode = DecodeMode::kExpected;
  SaliencyParams saliency;
  double f_max_override = 0.0;  // > 0 replaces the codebook's f_max

  void validate() const {
    if (!flow_net || !codebook) throw ConfigError("mapping needs a flow net and a codebook");
    if (flow_net->spec().layers.back().kind != LayerKind::kSpatialSoftmax)
      throw ConfigError("flow net must end in a spatial softmax");
    if (codebook->size() != flow_net->spec().num_classes)
      throw ConfigError("codebook size does not match flow net output channels");
  }
};

// Resizes the image to the net input (bilinear), feeds RGB channels (or
// luminance for single-channel nets) and returns the per-pixel simplex.
SpatialProbMap<float> predict_flow(const ImageRgb& image, const Network<float>& net);

// Full mapping; equals the manual chain predict -> decode -> normalize
// plus saliency -> otsu -> threshold -> resample, with no extra steps.
PofSmImage map_to_pofsm(const ImageRgb& image, const MappingConfig& cfg);

// Left-right flip of all channels; pof_h is additionally reflected about
// 0.5 (v' = 1 - v) since mirroring reverses horizontal motion. Bit-exact
// involution: normalize_flow_channel emits pof values on the 2^-24
// lattice, where 1 - v is exact; pof_v and sm are flip-only.
PofSmImage mirror_augment(const PofSmImage& in);

}  // namespace pofsm
