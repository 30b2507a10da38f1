#include "pofsm/domain_map.hpp"

namespace pofsm {

SpatialProbMap<float> predict_flow(const ImageRgb& image, const Network<float>& net) {
  image.check();
  const Shape3& in = net.spec().input;
  if (net.spec().layers.back().kind != LayerKind::kSpatialSoftmax)
    throw ConfigError("flow net must end in a spatial softmax");
  if (in.channels != 3 && in.channels != 1)
    throw ConfigError("flow net input must have 1 or 3 channels");

  Tensorf x({1, in.rows, in.cols, in.channels});
  if (in.channels == 3) {
    const ImageRgb r = bilinear_resize(image, in.rows, in.cols);
    for (long i = 0; i < in.rows; ++i)
      for (long j = 0; j < in.cols; ++j) {
        x(0, i, j, 0) = r.r(i, j);
        x(0, i, j, 1) = r.g(i, j);
        x(0, i, j, 2) = r.b(i, j);
      }
  } else {
    const Plane g = bilinear_resize(rgb_luminance(image), in.rows, in.cols);
    for (long i = 0; i < in.rows; ++i)
      for (long j = 0; j < in.cols; ++j) x(0, i, j, 0) = g(i, j);
  }
  return SpatialProbMap<float>::from_tensor(net.forward(x));
}

PofSmImage map_to_pofsm(const ImageRgb& image, const MappingConfig& cfg) {
  cfg.validate();
  const SpatialProbMap<float> prob = predict_flow(image, *cfg.flow_net);
  const FlowField<float> flow = decode_flow(prob, *cfg.codebook, cfg.decode);
  const double f_max = cfg.f_max_override > 0.0 ? cfg.f_max_override : cfg.codebook->f_max();

  PofSmImage out;
  out.pof_h = normalize_flow_channel(flow.u, f_max);
  out.pof_v = normalize_flow_channel(flow.v, f_max);

  const SaliencyMap sal = saliency_map(rgb_luminance(image), cfg.saliency);
  const Threshold th = otsu_threshold(sal);
  const SaliencyMap kept = apply_threshold(sal, th.tau);
  out.sm = (kept.rows() == out.pof_h.rows() && kept.cols() == out.pof_h.cols())
               ? kept
               : bilinear_resize(kept, out.pof_h.rows(), out.pof_h.cols());
  return out;
}

PofSmImage mirror_augment(const PofSmImage& in) {
  PofSmImage out;
  // 1 - v is exact for v on the 2^-24 lattice, so the double flip restores
  // every bit. pof_v keeps its sign: a left-right mirror does not reverse
  // vertical motion.
  out.pof_h = hflip(in.pof_h).unaryExpr([](float v) { return 1.0f - v; });
  out.pof_v = hflip(in.pof_v);
  out.sm = hflip(in.sm);
  return out;
}

}  // namespace pofsm
