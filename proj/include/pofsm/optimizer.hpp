#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pofsm/errors.hpp"
#include "pofsm/network.hpp"
#include "pofsm/rng.hpp"

namespace pofsm {

// Transfer scenarios: which layers keep learning after the head is swapped.
enum class Scenario { kAllLayers, kTop5Layers, kHeadOnly };

inline Scenario scenario_from_string(const std::string& name) {
  if (name == "all" || name == "all-layers") return Scenario::kAllLayers;
  if (name == "top5" || name == "top5-layers") return Scenario::kTop5Layers;
  if (name == "head" || name == "head-only") return Scenario::kHeadOnly;
  throw ConfigError("unknown scenario '" + name + "' (expected all|top5|head)");
}

inline const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kAllLayers: return "all";
    case Scenario::kTop5Layers: return "top5";
    case Scenario::kHeadOnly: return "head";
  }
  return "?";
}

// Per-layer learning-rate multipliers over the parameterized layers, in
// network order. Multiplier 0 freezes a layer: its update is skipped
// entirely, so frozen parameters stay bit-identical.
struct FineTunePolicy {
  std::vector<double> multipliers;
  double base_lr = 0.001;
  long lr_step_iters = 70000;
  double lr_gamma = 0.1;
  double head_multiplier = 10.0;

  double lr_at(long iteration) const {
    return base_lr * std::pow(lr_gamma, static_cast<double>(iteration / lr_step_iters));
  }

  void validate(const NetworkSpec& spec) const {
    if (base_lr <= 0.0 || lr_gamma <= 0.0 || lr_step_iters <= 0)
      throw ConfigError("invalid learning-rate schedule");
    if (multipliers.size() != spec.param_layers().size())
      throw ConfigError("policy multiplier count does not match parameterized layers");
    for (double m : multipliers)
      if (m < 0.0 || !std::isfinite(m)) throw ConfigError("layer multiplier must be >= 0");
  }

  // Same multiplier everywhere; used for training from scratch.
  static FineTunePolicy uniform(const NetworkSpec& spec, double multiplier = 1.0) {
    FineTunePolicy p;
    p.multipliers.assign(spec.param_layers().size(), multiplier);
    return p;
  }

  // ALL:   every layer at 1x, head at head_multiplier.
  // TOP5:  first three conv layers frozen, the rest at 1x, head boosted.
  // HEAD:  everything frozen except the head.
  static FineTunePolicy for_scenario(Scenario s, const NetworkSpec& spec) {
    FineTunePolicy p;
    const std::vector<int> param_idx = spec.param_layers();
    p.multipliers.assign(param_idx.size(), 1.0);
    int conv_seen = 0;
    for (size_t i = 0; i < param_idx.size(); ++i) {
      const LayerSpec& l = spec.layers[static_cast<size_t>(param_idx[i])];
      if (l.kind == LayerKind::kConv) ++conv_seen;
      switch (s) {
        case Scenario::kAllLayers:
          p.multipliers[i] = 1.0;
          break;
        case Scenario::kTop5Layers:
          p.multipliers[i] = (l.kind == LayerKind::kConv && conv_seen <= 3) ? 0.0 : 1.0;
          break;
        case Scenario::kHeadOnly:
          p.multipliers[i] = 0.0;
          break;
      }
    }
    if (s == Scenario::kTop5Layers && conv_seen < 4)
      throw ConfigError("top5 scenario needs at least four conv layers");
    if (p.multipliers.empty()) throw ConfigError("network has no parameterized layers");
    if (spec.layers[static_cast<size_t>(param_idx.back())].kind != LayerKind::kFc)
      throw ConfigError("fine-tune scenarios need an fc head as the last parameterized layer");
    p.multipliers.back() = p.head_multiplier;
    return p;
  }
};

template <typename Scalar>
struct TrainState {
  Network<Scalar> net;
  long iteration = 0;
  std::uint64_t rng_seed = 0;
};

// param -= lr(iter) * multiplier * grad, then the step counter advances.
// Layers with multiplier 0 are not touched at all.
template <typename Scalar>
void sgd_step(TrainState<Scalar>& state, const Gradients<Scalar>& grads,
              const FineTunePolicy& policy) {
  const NetworkSpec& spec = state.net.spec();
  policy.validate(spec);
  if (grads.layers.size() != spec.layers.size())
    throw ConfigError("gradient layout does not match network");
  const double lr = policy.lr_at(state.iteration);
  const std::vector<int> param_idx = spec.param_layers();
  for (size_t pi = 0; pi < param_idx.size(); ++pi) {
    const double m = policy.multipliers[pi];
    if (m == 0.0) continue;
    const size_t li = static_cast<size_t>(param_idx[pi]);
    const Scalar scale = static_cast<Scalar>(lr * m);
    auto& p = state.net.params()[li];
    const auto& g = grads.layers[li];
    if (g.w.size() != p.w.size() || g.b.size() != p.b.size())
      throw ConfigError("gradient dims do not match parameters");
    p.w.vec() -= scale * g.w.vec();
    p.b.vec() -= scale * g.b.vec();
  }
  ++state.iteration;
}

// Swaps the terminal fc for a fresh one with `new_classes` outputs. All other
// parameters are copied bit-for-bit; the new head draws from `seed` with the
// network's init scheme, biases zero.
template <typename Scalar>
Network<Scalar> replace_head(const Network<Scalar>& net, int new_classes, std::uint64_t seed) {
  if (new_classes <= 0) throw ConfigError("replace_head needs a positive class count");
  NetworkSpec spec = net.spec();
  const int head = spec.head_layer();
  spec.layers[static_cast<size_t>(head)].neurons = new_classes;
  spec.num_classes = new_classes;
  Network<Scalar> out(spec, seed);
  const long fan_in = out.params()[static_cast<size_t>(head)].w.size() / new_classes;
  const double std = (spec.init.kind == InitKind::kHeNormal)
                         ? std::sqrt(2.0 / static_cast<double>(fan_in))
                         : spec.init.std;
  Rng rng(seed);
  Tensor<Scalar>& hw = out.params()[static_cast<size_t>(head)].w;
  for (long i = 0; i < hw.size(); ++i) hw[i] = static_cast<Scalar>(std * rng.gaussian());
  out.params()[static_cast<size_t>(head)].b.set_zero();
  for (size_t li = 0; li < spec.layers.size(); ++li) {
    if (static_cast<int>(li) == head || !spec.layers[li].has_params()) continue;
    out.params()[li] = net.params()[li];
  }
  return out;
}

}  // namespace pofsm
