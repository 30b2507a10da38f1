#pragma once

// Test-split scoring: top-k accuracy, per-class average precision, MAP
// overall and per group, confusion matrix. All rankings break ties toward
// the lower index so reports are deterministic.

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pofsm/dataset.hpp"
#include "pofsm/network.hpp"

namespace pofsm {

struct EvalReport {
  double top1 = 0.0, top5 = 0.0;
  std::vector<std::string> vocab;
  std::vector<std::string> class_group;  // group of each vocab class
  std::vector<double> per_class_ap;      // NaN when the class has no test positives
  std::vector<std::pair<std::string, double>> group_map;
  double map_overall = 0.0;              // mean of defined per-class APs
  Eigen::MatrixXi confusion;             // row = truth, col = top-1 prediction

  std::string table() const;
  void save_csv(const std::filesystem::path& path) const;
};

// Discrete AP: mean over positives of precision at that positive's rank,
// scores sorted descending with index ties ranked first.
double average_precision(const std::vector<double>& scores, const std::vector<int>& is_positive);

// Group of each vocab class; a label appearing with two different groups
// is a data error.
std::vector<std::string> class_groups_from_manifest(const DatasetManifest& m,
                                                    const std::vector<std::string>& vocab);

// Scores every item with the network (parallel over items, order
// independent) and assembles the report.
EvalReport evaluate(const Network<float>& net, const ClassifierDataset& data,
                    const std::vector<std::string>& class_group, int threads = 1);

}  // namespace pofsm
