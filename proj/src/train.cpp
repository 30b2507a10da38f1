#include "pofsm/train.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "pofsm/rng.hpp"

namespace pofsm {

namespace {

std::vector<long> draw_batch(Rng& rng, long dataset_size, int batch_size) {
  std::vector<long> idx(static_cast<size_t>(batch_size));
  for (auto& i : idx) i = rng.uniform_int(static_cast<int>(dataset_size));
  return idx;
}

Tensorf stack_batch(const std::vector<Tensorf>& inputs, const std::vector<long>& idx) {
  const Tensorf& first = inputs[static_cast<size_t>(idx[0])];
  Tensorf batch({static_cast<int>(idx.size()), first.dim(1), first.dim(2), first.dim(3)});
  const long item = first.size();
  for (size_t b = 0; b < idx.size(); ++b) {
    const Tensorf& src = inputs[static_cast<size_t>(idx[b])];
    if (src.size() != item) throw DataError("dataset items disagree on shape");
    std::copy(src.data(), src.data() + item, batch.data() + static_cast<long>(b) * item);
  }
  return batch;
}

}  // namespace

std::vector<TrainLogRow> train_classifier(TrainState<float>& state, const ClassifierDataset& data,
                                          const TrainConfig& cfg) {
  cfg.validate();
  cfg.policy.validate(state.net.spec());
  if (data.inputs.empty()) throw DataError("empty training split");
  if (state.net.spec().num_classes != static_cast<int>(data.vocab.size()))
    throw ConfigError("network classes do not match the dataset vocabulary");

  Rng rng(mix_seed(cfg.seed, 0x7261696e));
  std::vector<TrainLogRow> log;
  log.reserve(static_cast<size_t>(cfg.iterations));

  for (long it = 0; it < cfg.iterations; ++it) {
    const std::vector<long> idx = draw_batch(rng, static_cast<long>(data.inputs.size()),
                                             cfg.batch_size);
    const Tensorf batch = stack_batch(data.inputs, idx);
    ForwardCache<float> cache;
    const Tensorf probs = state.net.forward(batch, cache);

    // The head output is [B, 1, 1, classes]; index it flat per item.
    const long B = probs.dim(0);
    const long C = probs.size() / B;
    Tensorf grad(probs.dims());
    grad.set_zero();
    double loss = 0.0;
    for (long b = 0; b < B; ++b) {
      const int y = data.labels[static_cast<size_t>(idx[static_cast<size_t>(b)])];
      const double p = std::max(static_cast<double>(probs[b * C + y]), 1e-12);
      loss -= std::log(p);
      grad[b * C + y] = static_cast<float>(-1.0 / (p * static_cast<double>(B)));
    }
    loss /= static_cast<double>(B);

    const Gradients<float> grads = state.net.backward(cache, grad);
    log.push_back({state.iteration, loss, loss});
    sgd_step(state, grads, cfg.policy);
  }
  return log;
}

std::vector<TrainLogRow> train_flownet(TrainState<float>& state, const FlowDataset& data,
                                       const TrainConfig& cfg) {
  cfg.validate();
  cfg.policy.validate(state.net.spec());
  cfg.loss_cfg.validate();
  if (data.inputs.empty()) throw DataError("empty training split");
  if (state.net.spec().num_classes != data.clusters)
    throw ConfigError("network output channels do not match the codebook");

  Rng rng(mix_seed(cfg.seed, 0x666c6f77));
  std::vector<TrainLogRow> log;
  log.reserve(static_cast<size_t>(cfg.iterations));

  for (long it = 0; it < cfg.iterations; ++it) {
    const std::vector<long> idx = draw_batch(rng, static_cast<long>(data.inputs.size()),
                                             cfg.batch_size);
    const Tensorf batch = stack_batch(data.inputs, idx);
    ForwardCache<float> cache;
    const Tensorf out = state.net.forward(batch, cache);

    const long B = out.dim(0), M = out.dim(1), N = out.dim(2);
    const int C = static_cast<int>(out.dim(3));
    const long item = M * N * C;
    Tensorf grad(out.dims());
    grad.set_zero();
    double v1_sum = 0.0, active_sum = 0.0;

    for (long b = 0; b < B; ++b) {
      SpatialProbMap<float> pm(static_cast<int>(M), static_cast<int>(N), C);
      std::copy(out.data() + b * item, out.data() + (b + 1) * item, pm.p.data());
      const ClusterLabelMap& labels = data.labels[static_cast<size_t>(idx[static_cast<size_t>(b)])];

      const SpatialLossResult<float> r1 = spatial_loss_v1(pm, labels, cfg.loss_cfg);
      const SpatialLossResult<float> r2 = spatial_loss_v2(pm, labels, cfg.loss_cfg);
      v1_sum += r1.value;
      const SpatialLossResult<float>& active = cfg.flow_loss == LossVariant::kV1 ? r1 : r2;
      active_sum += active.value;

      const float inv_b = 1.0f / static_cast<float>(B);
      Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gslice(
          grad.data() + b * item, M * N, C);
      gslice = active.grad_probs * inv_b;
    }

    const Gradients<float> grads = state.net.backward(cache, grad);
    log.push_back({state.iteration, active_sum / static_cast<double>(B),
                   v1_sum / static_cast<double>(B)});
    sgd_step(state, grads, cfg.policy);
  }
  return log;
}

void save_train_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os << "iter,loss,loss_v1\n";
  char buf[96];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g\n", row.iter, row.loss, row.loss_v1);
    os << buf;
  }
  if (!os) throw DataError("failed writing " + path.string());
}

}  // namespace pofsm
