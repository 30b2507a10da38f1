#pragma once

// Mini-batch SGD loops for the two network roles. Both loops are
// deterministic per (seed, config): batches are drawn from a private
// stream and the kernels are sequential.

#include <filesystem>
#include <vector>

#include "pofsm/dataset.hpp"
#include "pofsm/optimizer.hpp"
#include "pofsm/spatial_loss.hpp"

namespace pofsm {

struct TrainConfig {
  long iterations = 500;
  int batch_size = 16;
  std::uint64_t seed = 1;
  FineTunePolicy policy;
  LossVariant flow_loss = LossVariant::kV2;  // train_flownet only
  LossConfig loss_cfg;                       // train_flownet only

  void validate() const {
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
    if (batch_size <= 0) throw ConfigError("batch size must be positive");
  }
};

// One row per iteration. For the flow net, `loss` is the active variant
// and `loss_v1` the plain per-pixel sum computed from the same forward
// pass; for the classifier both carry the cross-entropy value.
struct TrainLogRow {
  long iter = 0;
  double loss = 0.0;
  double loss_v1 = 0.0;
};

// Mean cross-entropy over the batch against the terminal softmax.
std::vector<TrainLogRow> train_classifier(TrainState<float>& state, const ClassifierDataset& data,
                                          const TrainConfig& cfg);

// Per-pixel spatial loss against encoded ground-truth flow, averaged over
// the batch images.
std::vector<TrainLogRow> train_flownet(TrainState<float>& state, const FlowDataset& data,
                                       const TrainConfig& cfg);

// CSV: "iter,loss,loss_v1".
void save_train_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path);

}  // namespace pofsm
