#include "pofsm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "pofsm/util.hpp"

namespace pofsm {

double average_precision(const std::vector<double>& scores, const std::vector<int>& is_positive) {
  if (scores.size() != is_positive.size()) throw ConfigError("scores/labels length mismatch");
  const long n = static_cast<long>(scores.size());
  std::vector<long> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0L);
  std::sort(order.begin(), order.end(), [&](long a, long b) {
    if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)])
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    return a < b;
  });
  long positives_seen = 0, total_positives = 0;
  double sum_prec = 0.0;
  for (long i : order)
    if (is_positive[static_cast<size_t>(i)]) ++total_positives;
  if (total_positives == 0) return std::numeric_limits<double>::quiet_NaN();
  for (long rank = 1; rank <= n; ++rank) {
    if (is_positive[static_cast<size_t>(order[static_cast<size_t>(rank - 1)])]) {
      ++positives_seen;
      sum_prec += static_cast<double>(positives_seen) / static_cast<double>(rank);
    }
  }
  return sum_prec / static_cast<double>(total_positives);
}

std::vector<std::string> class_groups_from_manifest(const DatasetManifest& m,
                                                    const std::vector<std::string>& vocab) {
  std::map<std::string, std::string> label_group;
  for (const auto& r : m.rows) {
    const auto [it, inserted] = label_group.try_emplace(r.label, r.group);
    if (!inserted && it->second != r.group)
      throw DataError("label '" + r.label + "' appears in groups '" + it->second + "' and '" +
                      r.group + "'");
  }
  std::vector<std::string> out;
  out.reserve(vocab.size());
  for (const auto& label : vocab) {
    const auto it = label_group.find(label);
    out.push_back(it == label_group.end() ? std::string("?") : it->second);
  }
  return out;
}

EvalReport evaluate(const Network<float>& net, const ClassifierDataset& data,
                    const std::vector<std::string>& class_group, int threads) {
  const int C = net.spec().num_classes;
  if (static_cast<int>(data.vocab.size()) != C)
    throw DataError("vocabulary size does not match the network class count");
  if (static_cast<int>(class_group.size()) != C)
    throw ConfigError("class_group size does not match the class count");
  if (data.inputs.empty()) throw DataError("empty evaluation split");
  const long n = static_cast<long>(data.inputs.size());
  const Shape3& in = net.spec().input;
  if (data.rows != in.rows || data.cols != in.cols)
    throw ConfigError("dataset dims do not match the network input");
  for (const Tensorf& t : data.inputs)
    if (t.dim(1) != in.rows || t.dim(2) != in.cols || t.dim(3) != in.channels)
      throw DataError("dataset item dims do not match the network input");

  // Workers must not throw; all shape checks happen above.
  Eigen::MatrixXd scores(n, C);
  parallel_for(n, threads, [&](long i) {
    const Tensorf probs = net.forward(data.inputs[static_cast<size_t>(i)]);
    for (int c = 0; c < C; ++c) scores(i, c) = static_cast<double>(probs[c]);
  });

  EvalReport rep;
  rep.vocab = data.vocab;
  rep.class_group = class_group;
  rep.confusion = Eigen::MatrixXi::Zero(C, C);

  // Rank classes per item: score descending, index ascending on ties.
  const int k5 = std::min(5, C);
  long correct1 = 0, correct5 = 0;
  std::vector<int> cls(static_cast<size_t>(C));
  for (long i = 0; i < n; ++i) {
    std::iota(cls.begin(), cls.end(), 0);
    std::sort(cls.begin(), cls.end(), [&](int a, int b) {
      if (scores(i, a) != scores(i, b)) return scores(i, a) > scores(i, b);
      return a < b;
    });
    const int truth = data.labels[static_cast<size_t>(i)];
    rep.confusion(truth, cls[0]) += 1;
    if (cls[0] == truth) ++correct1;
    if (std::find(cls.begin(), cls.begin() + k5, truth) != cls.begin() + k5) ++correct5;
  }
  rep.top1 = static_cast<double>(correct1) / static_cast<double>(n);
  rep.top5 = static_cast<double>(correct5) / static_cast<double>(n);

  rep.per_class_ap.resize(static_cast<size_t>(C));
  std::vector<double> col(static_cast<size_t>(n));
  std::vector<int> pos(static_cast<size_t>(n));
  for (int c = 0; c < C; ++c) {
    for (long i = 0; i < n; ++i) {
      col[static_cast<size_t>(i)] = scores(i, c);
      pos[static_cast<size_t>(i)] = data.labels[static_cast<size_t>(i)] == c ? 1 : 0;
    }
    rep.per_class_ap[static_cast<size_t>(c)] = average_precision(col, pos);
  }

  double ap_sum = 0.0;
  int ap_count = 0;
  std::map<std::string, std::pair<double, int>> by_group;
  for (int c = 0; c < C; ++c) {
    const double ap = rep.per_class_ap[static_cast<size_t>(c)];
    if (std::isnan(ap)) continue;
    ap_sum += ap;
    ++ap_count;
    auto& g = by_group[class_group[static_cast<size_t>(c)]];
    g.first += ap;
    g.second += 1;
  }
  rep.map_overall = ap_count > 0 ? ap_sum / ap_count : 0.0;
  for (const auto& [name, acc] : by_group)
    rep.group_map.emplace_back(name, acc.first / acc.second);
  return rep;
}

std::string EvalReport::table() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "top-1 accuracy  %.4f\ntop-5 accuracy  %.4f\n", top1, top5);
  os << buf;
  os << "per-class AP\n";
  for (size_t c = 0; c < vocab.size(); ++c) {
    if (std::isnan(per_class_ap[c]))
      std::snprintf(buf, sizeof buf, "  %-12s %-12s (no test positives)\n", vocab[c].c_str(),
                    "-");
    else
      std::snprintf(buf, sizeof buf, "  %-12s %.4f\n", vocab[c].c_str(), per_class_ap[c]);
    os << buf;
  }
  os << "MAP by group\n";
  for (const auto& [name, v] : group_map) {
    std::snprintf(buf, sizeof buf, "  %-12s %.4f\n", name.c_str(), v);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "MAP overall     %.4f\n", map_overall);
  os << buf;
  os << "confusion (row = truth)\n";
  os << "  " << std::string(13, ' ');
  for (const auto& v : vocab) {
    std::snprintf(buf, sizeof buf, "%8s", v.substr(0, 7).c_str());
    os << buf;
  }
  os << "\n";
  for (long r = 0; r < confusion.rows(); ++r) {
    std::snprintf(buf, sizeof buf, "  %-13s", vocab[static_cast<size_t>(r)].c_str());
    os << buf;
    for (long c = 0; c < confusion.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%8d", confusion(r, c));
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

void EvalReport::save_csv(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  char buf[160];
  os << "class,ap,group\n";
  for (size_t c = 0; c < vocab.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%s\n", vocab[c].c_str(), per_class_ap[c],
                  class_group[c].c_str());
    os << buf;
  }
  os << "metric,value\n";
  std::snprintf(buf, sizeof buf, "top1,%.17g\ntop5,%.17g\nmap,%.17g\n", top1, top5, map_overall);
  os << buf;
  for (const auto& [name, v] : group_map) {
    std::snprintf(buf, sizeof buf, "map@%s,%.17g\n", name.c_str(), v);
    os << buf;
  }
  if (!os) throw DataError("failed writing " + path.string());
}

}  // namespace pofsm
