#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "pofsm/errors.hpp"
#include "pofsm/layer_kernels.hpp"
#include "pofsm/nn_spec.hpp"
#include "pofsm/rng.hpp"
#include "pofsm/tensor.hpp"

namespace pofsm {

template <typename Scalar>
struct LayerParams {
  Tensor<Scalar> w;
  Tensor<Scalar> b;
  bool empty() const { return w.size() == 0; }
};

// Activations recorded by forward() so backward() can run. outputs[i] is the
// output of layer i; pooling argmax and LRN denominators ride along.
template <typename Scalar>
struct ForwardCache {
  bool valid = false;
  Tensor<Scalar> input;
  std::vector<Tensor<Scalar>> outputs;
  std::vector<std::vector<std::int32_t>> pool_argmax;
  std::vector<Tensor<Scalar>> lrn_denom;
};

template <typename Scalar>
struct Gradients {
  std::vector<LayerParams<Scalar>> layers;  // aligned with spec layers; empty for non-param
  Tensor<Scalar> input;
};

template <typename Scalar>
class Network {
 public:
  Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.validate();
    trace_ = spec_.trace();
    init_params(seed);
  }

  const NetworkSpec& spec() const { return spec_; }
  const std::vector<Shape3>& trace() const { return trace_; }

  std::vector<LayerParams<Scalar>>& params() { return params_; }
  const std::vector<LayerParams<Scalar>>& params() const { return params_; }

  long parameter_count() const {
    long n = 0;
    for (const auto& p : params_) n += p.w.size() + p.b.size();
    return n;
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& input) const {
    ForwardCache<Scalar> cache;
    return forward(input, cache);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& input, ForwardCache<Scalar>& cache) const {
    check_input(input);
    const int batch = input.dim(0);
    cache.valid = false;
    cache.input = input;
    cache.outputs.assign(spec_.layers.size(), Tensor<Scalar>());
    cache.pool_argmax.assign(spec_.layers.size(), {});
    cache.lrn_denom.assign(spec_.layers.size(), Tensor<Scalar>());
    kernels::ColMat<Scalar> scratch;
    const Tensor<Scalar>* cur = &cache.input;
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      const LayerSpec& l = spec_.layers[li];
      const Shape3& os = trace_[li + 1];
      Tensor<Scalar> out({batch, os.rows, os.cols, os.channels});
      switch (l.kind) {
        case LayerKind::kConv:
          kernels::conv_forward(*cur, params_[li].w, params_[li].b, l.stride, l.pad, out, scratch);
          break;
        case LayerKind::kLrn: {
          Tensor<Scalar> denom(out.dims());
          kernels::lrn_forward(*cur, l.lrn, out, denom);
          cache.lrn_denom[li] = std::move(denom);
          break;
        }
        case LayerKind::kMaxPool:
          kernels::maxpool_forward(*cur, l.size, l.stride, out, cache.pool_argmax[li]);
          break;
        case LayerKind::kFc:
          kernels::fc_forward(*cur, params_[li].w, params_[li].b, out);
          break;
        case LayerKind::kRelu:
          kernels::relu_forward(*cur, out);
          break;
        case LayerKind::kSoftmax:
        case LayerKind::kSpatialSoftmax:
          kernels::softmax_forward(*cur, out);
          break;
      }
      cache.outputs[li] = std::move(out);
      cur = &cache.outputs[li];
    }
    cache.valid = true;
    return cache.outputs.back();
  }

  // grad_out is dLoss/dOutput of the terminal layer, same dims as the forward
  // result. Parameter gradients accumulate over the batch.
  Gradients<Scalar> backward(const ForwardCache<Scalar>& cache,
                             const Tensor<Scalar>& grad_out) const {
    if (!cache.valid) throw StateError("backward called before forward");
    if (cache.outputs.size() != spec_.layers.size())
      throw StateError("forward cache does not match this network");
    if (!grad_out.same_dims(cache.outputs.back()))
      throw ConfigError("grad_out dims " + grad_out.dims_str() + " do not match output " +
                        cache.outputs.back().dims_str());
    Gradients<Scalar> grads;
    grads.layers.resize(spec_.layers.size());
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      if (spec_.layers[li].has_params()) {
        grads.layers[li].w = Tensor<Scalar>(params_[li].w.dims());
        grads.layers[li].b = Tensor<Scalar>(params_[li].b.dims());
      }
    }
    kernels::ColMat<Scalar> scratch;
    Tensor<Scalar> g = grad_out;
    for (int li = static_cast<int>(spec_.layers.size()) - 1; li >= 0; --li) {
      const LayerSpec& l = spec_.layers[static_cast<size_t>(li)];
      const Tensor<Scalar>& in = (li == 0) ? cache.input : cache.outputs[static_cast<size_t>(li - 1)];
      Tensor<Scalar> din(in.dims());
      switch (l.kind) {
        case LayerKind::kConv:
          kernels::conv_backward(in, params_[static_cast<size_t>(li)].w, l.stride, l.pad, g,
                                 grads.layers[static_cast<size_t>(li)].w,
                                 grads.layers[static_cast<size_t>(li)].b, din, scratch);
          break;
        case LayerKind::kLrn:
          kernels::lrn_backward(in, cache.lrn_denom[static_cast<size_t>(li)], l.lrn, g, din);
          break;
        case LayerKind::kMaxPool:
          kernels::maxpool_backward(g, cache.pool_argmax[static_cast<size_t>(li)], din);
          break;
        case LayerKind::kFc:
          kernels::fc_backward(in, params_[static_cast<size_t>(li)].w, g,
                               grads.layers[static_cast<size_t>(li)].w,
                               grads.layers[static_cast<size_t>(li)].b, din);
          break;
        case LayerKind::kRelu:
          kernels::relu_backward(in, g, din);
          break;
        case LayerKind::kSoftmax:
        case LayerKind::kSpatialSoftmax:
          kernels::softmax_backward(cache.outputs[static_cast<size_t>(li)], g, din);
          break;
      }
      g = std::move(din);
    }
    grads.input = std::move(g);
    return grads;
  }

 private:
  void check_input(const Tensor<Scalar>& input) const {
    if (input.rank() != 4 || input.dim(1) != spec_.input.rows ||
        input.dim(2) != spec_.input.cols || input.dim(3) != spec_.input.channels)
      throw ConfigError("input dims " + input.dims_str() + " do not match network input");
  }

  void init_params(std::uint64_t seed) {
    params_.assign(spec_.layers.size(), LayerParams<Scalar>());
    Rng rng(seed);
    for (size_t li = 0; li < spec_.layers.size(); ++li) {
      const LayerSpec& l = spec_.layers[li];
      if (!l.has_params()) continue;
      long fan_in = 0;
      if (l.kind == LayerKind::kConv) {
        const int ci = trace_[li].channels;
        params_[li].w = Tensor<Scalar>({l.kernels, l.size, l.size, ci});
        params_[li].b = Tensor<Scalar>({l.kernels});
        fan_in = static_cast<long>(l.size) * l.size * ci;
      } else {
        const long f = trace_[li].count();
        params_[li].w = Tensor<Scalar>({l.neurons, static_cast<int>(f)});
        params_[li].b = Tensor<Scalar>({l.neurons});
        fan_in = f;
      }
      const double std = (spec_.init.kind == InitKind::kHeNormal)
                             ? std::sqrt(2.0 / static_cast<double>(fan_in))
                             : spec_.init.std;
      Tensor<Scalar>& w = params_[li].w;
      for (long i = 0; i < w.size(); ++i) w[i] = static_cast<Scalar>(std * rng.gaussian());
      // biases stay zero
    }
  }

  NetworkSpec spec_;
  std::vector<Shape3> trace_;
  std::vector<LayerParams<Scalar>> params_;
};

}  // namespace pofsm
