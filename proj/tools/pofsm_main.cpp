// Command-line surface for the still-image action pipeline. Subcommands
// cover the whole flow: synth -> fit-codebook -> train-flow -> map ->
// pretrain -> finetune -> eval, plus inspect for dumping artifacts.
//
// Exit codes: 0 success, 1 configuration/usage problems, 2 data problems.
// --config reads an INI file ([subcommand] sections, key=value per option).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pofsm/dataset.hpp"
#include "pofsm/domain_map.hpp"
#include "pofsm/eval.hpp"
#include "pofsm/flow_codec.hpp"
#include "pofsm/image_io.hpp"
#include "pofsm/presets.hpp"
#include "pofsm/train.hpp"
#include "pofsm/util.hpp"
#include "pofsm/weights_io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace pofsm;

struct GlobalOpts {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = ".";
};

fs::path ensure_out_dir(const GlobalOpts& g) {
  const fs::path dir(g.out);
  fs::create_directories(dir);
  return dir;
}

SaliencyParams saliency_from(const std::string& descriptor, int patch, int radius, double h,
                             int smooth_passes) {
  SaliencyParams p;
  p.descriptor =
      descriptor == "hist" ? SaliencyDescriptor::kGradientHist : SaliencyDescriptor::kLsk;
  p.patch = patch;
  p.radius = radius;
  p.h = h;
  p.smooth_passes = smooth_passes;
  p.validate();
  return p;
}

void print_log_summary(const std::vector<TrainLogRow>& log) {
  if (log.empty()) {
    std::cout << "no training iterations requested\n";
    return;
  }
  std::cout << "iter " << log.front().iter << "  loss " << log.front().loss << "\n";
  std::cout << "iter " << log.back().iter << "  loss " << log.back().loss << "\n";
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
  std::string task = "target";
  long rows = 32, cols = 32;
  double noise = 0.02, displacement = 3.0;
  int train_per_class = 100, test_per_class = 30;
};

void run_synth(const GlobalOpts& g, const SynthOpts& o) {
  SyntheticSpec spec = o.task == "source" ? source_task_spec() : target_task_spec();
  spec.rows = o.rows;
  spec.cols = o.cols;
  spec.noise = o.noise;
  spec.displacement = o.displacement;
  spec.train_per_class = o.train_per_class;
  spec.test_per_class = o.test_per_class;
  spec.seed = g.seed;
  const fs::path dir = ensure_out_dir(g);
  const DatasetManifest m = synth_generate(spec, dir);
  std::cout << "wrote " << m.rows.size() << " samples and " << (dir / "manifest.csv").string()
            << "\n";
}

// --------------------------------------------------------- fit-codebook

struct FitCodebookOpts {
  std::string data;
  int clusters = kDefaultClusterCount;
  int max_iters = 50;
};

void run_fit_codebook(const GlobalOpts& g, const FitCodebookOpts& o) {
  const DatasetManifest m = DatasetManifest::load(o.data);
  const std::vector<Eigen::Vector2d> samples = collect_flow_samples(m, "train");
  if (samples.empty()) throw DataError("no training flow vectors found");
  const FlowCodebook cb = kmeans_fit(samples, o.clusters, o.max_iters, g.seed);
  const fs::path out = ensure_out_dir(g) / "codebook.txt";
  save_codebook(cb, out);
  std::cout << "fit " << cb.size() << " clusters on " << samples.size() << " vectors, f_max "
            << cb.f_max() << ", sse " << kmeans_sse(samples, cb) << "\n"
            << "wrote " << out.string() << "\n";
}

// ------------------------------------------------------------ train-flow

struct TrainFlowOpts {
  std::string data, codebook;
  std::string loss = "v2";
  int top_k = 10;
  long rows = 32, cols = 32;
  std::vector<int> hidden = {12, 16};
  long iterations = 300;
  int batch = 16;
  double base_lr = 0.001, lr_gamma = 0.1;
  long lr_step = 70000;
};

void run_train_flow(const GlobalOpts& g, const TrainFlowOpts& o) {
  const DatasetManifest m = DatasetManifest::load(o.data);
  const FlowCodebook cb = load_codebook(o.codebook);
  const FlowDataset data = load_flow_dataset(m, "train", cb, o.rows, o.cols);
  if (data.inputs.empty()) throw DataError("no training rows in " + o.data);

  const NetworkSpec spec = desk_flow_net(cb.size(), o.rows, o.cols, o.hidden);
  TrainState<float> state{Network<float>(spec, mix_seed(g.seed, 1)), 0, g.seed};

  TrainConfig tc;
  tc.iterations = o.iterations;
  tc.batch_size = o.batch;
  tc.seed = g.seed;
  tc.flow_loss = o.loss == "v1" ? LossVariant::kV1 : LossVariant::kV2;
  tc.loss_cfg.top_k = o.top_k;
  tc.policy = FineTunePolicy::uniform(spec);
  tc.policy.base_lr = o.base_lr;
  tc.policy.lr_gamma = o.lr_gamma;
  tc.policy.lr_step_iters = o.lr_step;

  const std::vector<TrainLogRow> log = train_flownet(state, data, tc);
  const fs::path dir = ensure_out_dir(g);
  save_weights(state.net, dir / "flow_net.psmw");
  save_train_log(log, dir / "flow_train_log.csv");
  print_log_summary(log);
  std::cout << "wrote " << (dir / "flow_net.psmw").string() << "\n";
}

// ------------------------------------------------------------------- map

struct MapOpts {
  std::string data, flow_net, codebook;
  std::string decode = "expected";
  std::string descriptor = "lsk";
  int patch = 3, radius = 3, smooth_passes = 1;
  double temperature = 0.2;
  double f_max = 0.0;
};

void run_map(const GlobalOpts& g, const MapOpts& o) {
  const DatasetManifest m = DatasetManifest::load(o.data);
  const Network<float> net = load_network(o.flow_net);
  const FlowCodebook cb = load_codebook(o.codebook);

  MappingConfig cfg;
  cfg.flow_net = &net;
  cfg.codebook = &cb;
  cfg.decode = o.decode == "argmax" ? DecodeMode::kArgmax : DecodeMode::kExpected;
  cfg.saliency = saliency_from(o.descriptor, o.patch, o.radius, o.temperature, o.smooth_passes);
  cfg.f_max_override = o.f_max;
  cfg.validate();

  // Outputs are flattened into one directory; stems must not collide.
  std::set<std::string> stems;
  for (const auto& row : m.rows)
    if (!stems.insert(fs::path(row.path).stem().string()).second)
      throw DataError("duplicate image stem in manifest: " + row.path);

  const fs::path dir = ensure_out_dir(g);
  const long n = static_cast<long>(m.rows.size());
  std::vector<ManifestRow> out_rows(static_cast<size_t>(n));
  std::vector<std::string> errors(static_cast<size_t>(n));
  parallel_for(n, g.threads, [&](long i) {
    const ManifestRow& row = m.rows[static_cast<size_t>(i)];
    try {
      const ImageRgb img = load_image_rgb(m.resolve(row));
      const PofSmImage mapped = map_to_pofsm(img, cfg);
      const std::string name = fs::path(row.path).stem().string() + ".pofsm";
      save_pofsm(mapped, dir / name);
      out_rows[static_cast<size_t>(i)] = {name, row.label, row.group, row.split};
    } catch (const std::exception& e) {
      errors[static_cast<size_t>(i)] = e.what();
    }
  });
  for (const std::string& e : errors)
    if (!e.empty()) throw DataError("mapping failed: " + e);

  DatasetManifest out;
  out.base_dir = dir;
  out.rows = std::move(out_rows);
  out.rebuild_vocab();
  out.save(dir / "manifest.csv");
  std::cout << "mapped " << n << " images into " << dir.string() << "\n";
}

// -------------------------------------------------------------- pretrain

struct PretrainOpts {
  std::string data;
  std::string preset = "desk";
  long rows = 32, cols = 32;
  long iterations = 800;
  int batch = 16;
  double base_lr = 0.001, lr_gamma = 0.1;
  long lr_step = 70000;
};

void run_pretrain(const GlobalOpts& g, const PretrainOpts& o) {
  const DatasetManifest m = DatasetManifest::load(o.data);
  if (m.class_vocab.empty()) throw DataError("no training rows in " + o.data);
  const int classes = static_cast<int>(m.class_vocab.size());
  const NetworkSpec spec = o.preset == "reference"
                               ? reference_classifier(classes)
                               : desk_classifier(classes, o.rows, o.cols);
  const ClassifierDataset data =
      load_classifier_dataset(m, "train", spec.input.rows, spec.input.cols);

  TrainState<float> state{Network<float>(spec, mix_seed(g.seed, 2)), 0, g.seed};
  TrainConfig tc;
  tc.iterations = o.iterations;
  tc.batch_size = o.batch;
  tc.seed = g.seed;
  tc.policy = FineTunePolicy::uniform(spec);
  tc.policy.base_lr = o.base_lr;
  tc.policy.lr_gamma = o.lr_gamma;
  tc.policy.lr_step_iters = o.lr_step;

  const std::vector<TrainLogRow> log = train_classifier(state, data, tc);
  const fs::path dir = ensure_out_dir(g);
  save_weights(state.net, dir / "classifier.psmw");
  save_train_log(log, dir / "classifier_train_log.csv");
  print_log_summary(log);
  std::cout << "wrote " << (dir / "classifier.psmw").string() << "\n";
}

// -------------------------------------------------------------- finetune

struct FinetuneOpts {
  std::string weights, data;
  std::string scenario = "top5";
  long iterations = 400;
  int batch = 16;
  double base_lr = 0.001, lr_gamma = 0.1, head_multiplier = 10.0;
  long lr_step = 70000;
};

void run_finetune(const GlobalOpts& g, const FinetuneOpts& o) {
  const Network<float> base = load_network(o.weights);
  const DatasetManifest m = DatasetManifest::load(o.data);
  if (m.class_vocab.empty()) throw DataError("no training rows in " + o.data);
  const ClassifierDataset data =
      load_classifier_dataset(m, "train", base.spec().input.rows, base.spec().input.cols);

  const int classes = static_cast<int>(data.vocab.size());
  TrainState<float> state{replace_head(base, classes, mix_seed(g.seed, 3)), 0, g.seed};

  TrainConfig tc;
  tc.iterations = o.iterations;
  tc.batch_size = o.batch;
  tc.seed = g.seed;
  tc.policy = FineTunePolicy::for_scenario(scenario_from_string(o.scenario), state.net.spec());
  tc.policy.base_lr = o.base_lr;
  tc.policy.lr_gamma = o.lr_gamma;
  tc.policy.lr_step_iters = o.lr_step;
  tc.policy.head_multiplier = o.head_multiplier;
  tc.policy.multipliers.back() = o.head_multiplier;

  const std::vector<TrainLogRow> log = train_classifier(state, data, tc);
  const fs::path dir = ensure_out_dir(g);
  save_weights(state.net, dir / "finetuned.psmw");
  save_train_log(log, dir / "finetune_train_log.csv");
  print_log_summary(log);
  std::cout << "wrote " << (dir / "finetuned.psmw").string() << "\n";
}

// ------------------------------------------------------------------ eval

struct EvalOpts {
  std::string weights, data;
};

void run_eval(const GlobalOpts& g, const EvalOpts& o) {
  const Network<float> net = load_network(o.weights);
  const DatasetManifest m = DatasetManifest::load(o.data);
  const ClassifierDataset data =
      load_classifier_dataset(m, "test", net.spec().input.rows, net.spec().input.cols);
  const std::vector<std::string> groups = class_groups_from_manifest(m, data.vocab);
  const EvalReport rep = evaluate(net, data, groups, g.threads);
  std::cout << rep.table();
  const fs::path out = ensure_out_dir(g) / "eval.csv";
  rep.save_csv(out);
  std::cout << "wrote " << out.string() << "\n";
}

// --------------------------------------------------------------- inspect

struct InspectOpts {
  std::string weights, codebook, pofsm, flow;
};

Plane spread_to_unit(const Plane& p) {
  const float lo = p.minCoeff(), hi = p.maxCoeff();
  if (hi - lo <= 0.0f) return Plane::Zero(p.rows(), p.cols());
  return (p - lo) / (hi - lo);
}

void run_inspect(const GlobalOpts& g, const InspectOpts& o) {
  if (o.weights.empty() && o.codebook.empty() && o.pofsm.empty() && o.flow.empty())
    throw ConfigError("inspect needs at least one of --weights/--codebook/--pofsm/--flow");
  const fs::path dir = ensure_out_dir(g);
  if (!o.weights.empty()) {
    const Network<float> net = load_network(o.weights);
    std::cout << net.spec().to_string();
    long params = 0;
    for (const auto& p : net.params()) params += p.w.size() + p.b.size();
    std::cout << "parameters " << params << "\n";
  }
  if (!o.codebook.empty()) {
    const FlowCodebook cb = load_codebook(o.codebook);
    std::cout << "clusters " << cb.size() << "  f_max " << cb.f_max() << "\n";
    for (int k = 0; k < cb.size(); ++k)
      std::cout << "  [" << k << "] u " << cb.centroids()[static_cast<size_t>(k)].x() << "  v "
                << cb.centroids()[static_cast<size_t>(k)].y() << "\n";
  }
  if (!o.pofsm.empty()) {
    const PofSmImage img = load_pofsm(o.pofsm);
    const std::string stem = fs::path(o.pofsm).stem().string();
    save_pgm(img.pof_h, dir / (stem + "_pof_h.pgm"));
    save_pgm(img.pof_v, dir / (stem + "_pof_v.pgm"));
    save_pgm(img.sm, dir / (stem + "_sm.pgm"));
    std::cout << "wrote " << (dir / (stem + "_{pof_h,pof_v,sm}.pgm")).string() << "\n";
  }
  if (!o.flow.empty()) {
    const FlowField<float> f = load_flow(o.flow);
    const std::string stem = fs::path(o.flow).stem().string();
    save_pgm(spread_to_unit(f.u), dir / (stem + "_u.pgm"));
    save_pgm(spread_to_unit(f.v), dir / (stem + "_v.pgm"));
    std::cout << "wrote " << (dir / (stem + "_{u,v}.pgm")).string() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Still-image action recognition through predicted-flow + saliency mapping"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI options file ([subcommand] sections, key=value)");

  GlobalOpts g;
  app.add_option("--seed", g.seed, "Master RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (map/eval)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  SynthOpts synth;
  CLI::App* c_synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  c_synth->add_option("--task", synth.task, "Preset task")
      ->check(CLI::IsMember({"source", "target"}))
      ->capture_default_str();
  c_synth->add_option("--rows", synth.rows)->capture_default_str();
  c_synth->add_option("--cols", synth.cols)->capture_default_str();
  c_synth->add_option("--noise", synth.noise, "Gaussian pixel noise sigma")->capture_default_str();
  c_synth->add_option("--displacement", synth.displacement, "Motion magnitude, px")
      ->capture_default_str();
  c_synth->add_option("--train-per-class", synth.train_per_class)->capture_default_str();
  c_synth->add_option("--test-per-class", synth.test_per_class)->capture_default_str();

  FitCodebookOpts fitcb;
  CLI::App* c_fit = app.add_subcommand("fit-codebook", "Cluster training flow vectors");
  c_fit->add_option("--data", fitcb.data, "Dataset manifest")->required();
  c_fit->add_option("--clusters", fitcb.clusters, "Cluster count C")->capture_default_str();
  c_fit->add_option("--max-iters", fitcb.max_iters)->capture_default_str();

  TrainFlowOpts tflow;
  CLI::App* c_tflow = app.add_subcommand("train-flow", "Train the flow-prediction net");
  c_tflow->add_option("--data", tflow.data, "Dataset manifest")->required();
  c_tflow->add_option("--codebook", tflow.codebook, "Codebook file")->required();
  c_tflow->add_option("--loss", tflow.loss, "Loss variant")
      ->check(CLI::IsMember({"v1", "v2"}))
      ->capture_default_str();
  c_tflow->add_option("--top-k", tflow.top_k, "Weighted ranks K for v2")->capture_default_str();
  c_tflow->add_option("--rows", tflow.rows)->capture_default_str();
  c_tflow->add_option("--cols", tflow.cols)->capture_default_str();
  c_tflow->add_option("--hidden", tflow.hidden, "Hidden conv channels")
      ->delimiter(',')
      ->capture_default_str();
  c_tflow->add_option("--iterations", tflow.iterations)->capture_default_str();
  c_tflow->add_option("--batch", tflow.batch)->capture_default_str();
  c_tflow->add_option("--base-lr", tflow.base_lr)->capture_default_str();
  c_tflow->add_option("--lr-gamma", tflow.lr_gamma)->capture_default_str();
  c_tflow->add_option("--lr-step", tflow.lr_step)->capture_default_str();

  MapOpts mapo;
  CLI::App* c_map = app.add_subcommand("map", "Map images into the three-channel motion domain");
  c_map->add_option("--data", mapo.data, "Dataset manifest")->required();
  c_map->add_option("--flow-net", mapo.flow_net, "Flow net weights")->required();
  c_map->add_option("--codebook", mapo.codebook, "Codebook file")->required();
  c_map->add_option("--decode", mapo.decode)
      ->check(CLI::IsMember({"expected", "argmax"}))
      ->capture_default_str();
  c_map->add_option("--descriptor", mapo.descriptor)
      ->check(CLI::IsMember({"lsk", "hist"}))
      ->capture_default_str();
  c_map->add_option("--patch", mapo.patch, "Saliency descriptor patch")->capture_default_str();
  c_map->add_option("--radius", mapo.radius, "Saliency neighborhood radius")
      ->capture_default_str();
  c_map->add_option("--temperature", mapo.temperature, "Saliency kernel temperature")
      ->capture_default_str();
  c_map->add_option("--smooth-passes", mapo.smooth_passes)->capture_default_str();
  c_map->add_option("--f-max", mapo.f_max, "Normalization bound override (0 = codebook)")
      ->capture_default_str();

  PretrainOpts pre;
  CLI::App* c_pre = app.add_subcommand("pretrain", "Train a classifier from scratch");
  c_pre->add_option("--data", pre.data, "Dataset manifest")->required();
  c_pre->add_option("--preset", pre.preset, "Network preset")
      ->check(CLI::IsMember({"desk", "reference"}))
      ->capture_default_str();
  c_pre->add_option("--rows", pre.rows)->capture_default_str();
  c_pre->add_option("--cols", pre.cols)->capture_default_str();
  c_pre->add_option("--iterations", pre.iterations)->capture_default_str();
  c_pre->add_option("--batch", pre.batch)->capture_default_str();
  c_pre->add_option("--base-lr", pre.base_lr)->capture_default_str();
  c_pre->add_option("--lr-gamma", pre.lr_gamma)->capture_default_str();
  c_pre->add_option("--lr-step", pre.lr_step)->capture_default_str();

  FinetuneOpts fin;
  CLI::App* c_fin = app.add_subcommand("finetune", "Swap the head and fine-tune");
  c_fin->add_option("--weights", fin.weights, "Pretrained weights")->required();
  c_fin->add_option("--data", fin.data, "Target dataset manifest")->required();
  c_fin->add_option("--scenario", fin.scenario, "Layer freeze scenario")
      ->check(CLI::IsMember({"all", "top5", "head"}))
      ->capture_default_str();
  c_fin->add_option("--iterations", fin.iterations)->capture_default_str();
  c_fin->add_option("--batch", fin.batch)->capture_default_str();
  c_fin->add_option("--base-lr", fin.base_lr)->capture_default_str();
  c_fin->add_option("--lr-gamma", fin.lr_gamma)->capture_default_str();
  c_fin->add_option("--lr-step", fin.lr_step)->capture_default_str();
  c_fin->add_option("--head-multiplier", fin.head_multiplier)->capture_default_str();

  EvalOpts ev;
  CLI::App* c_eval = app.add_subcommand("eval", "Score the test split");
  c_eval->add_option("--weights", ev.weights, "Classifier weights")->required();
  c_eval->add_option("--data", ev.data, "Dataset manifest")->required();

  InspectOpts ins;
  CLI::App* c_ins = app.add_subcommand("inspect", "Dump artifacts for inspection");
  c_ins->add_option("--weights", ins.weights, "Print a weight file's architecture");
  c_ins->add_option("--codebook", ins.codebook, "Print codebook centroids");
  c_ins->add_option("--pofsm", ins.pofsm, "Dump mapped channels as PGMs");
  c_ins->add_option("--flow", ins.flow, "Dump flow planes as PGMs");

  c_synth->callback([&] { run_synth(g, synth); });
  c_fit->callback([&] { run_fit_codebook(g, fitcb); });
  c_tflow->callback([&] { run_train_flow(g, tflow); });
  c_map->callback([&] { run_map(g, mapo); });
  c_pre->callback([&] { run_pretrain(g, pre); });
  c_fin->callback([&] { run_finetune(g, fin); });
  c_eval->callback([&] { run_eval(g, ev); });
  c_ins->callback([&] { run_inspect(g, ins); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
