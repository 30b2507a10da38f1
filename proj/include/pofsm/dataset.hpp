#pragma once

// Dataset manifests and the synthetic desk-scale data generator.
//
// Manifest CSV: header "path,label,group,split", one row per image, paths
// relative to the manifest's directory (absolute paths pass through).
// Ground-truth flow for an image lives next to it with a .poff extension.
//
// Synthetic scenes: one bright shape on a dark background. The shape
// carries an intensity ramp rising toward its motion direction; that ramp
// is the only cue a single frame offers about where the shape is headed.
// Ground-truth flow equals the class displacement inside the shape mask
// and zero outside.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pofsm/errors.hpp"
#include "pofsm/flow_types.hpp"
#include "pofsm/image.hpp"

namespace pofsm {

struct ManifestRow {
  std::string path;
  std::string label;
  std::string group;
  std::string split;  // "train" or "test"
};

struct DatasetManifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRow> rows;
  std::vector<std::string> class_vocab;  // sorted unique train labels
  std::vector<std::string> group_vocab;  // sorted unique groups, all rows

  static DatasetManifest load(const std::filesystem::path& csv);
  void save(const std::filesystem::path& csv) const;

  std::filesystem::path resolve(const ManifestRow& row) const;
  std::vector<const ManifestRow*> split(const std::string& which) const;
  int label_index(const std::string& label) const;  // -1 when absent

  // Missing files, duplicate paths, or test labels outside the train
  // vocabulary are data errors.
  void validate(bool check_files) const;
  void rebuild_vocab();
};

// Image path with the extension swapped for the flow sidecar.
std::filesystem::path flow_path_for(const std::filesystem::path& image_path);

enum class MotionClass { kLeft, kRight, kUp, kDown, kHold };
enum class ShapeKind { kSquare, kCircle, kCross, kTriangle, kDiamond };

const char* motion_name(MotionClass m);
const char* motion_group(MotionClass m);  // horizontal / vertical / static
MotionClass motion_from_name(const std::string& name);
const char* shape_name(ShapeKind s);
ShapeKind shape_from_name(const std::string& name);

struct SyntheticSpec {
  long rows = 32, cols = 32;
  std::vector<ShapeKind> shapes;
  std::vector<MotionClass> classes;
  double displacement = 3.0;
  double noise = 0.02;
  int train_per_class = 100;
  int test_per_class = 30;
  std::uint64_t seed = 1;

  void validate() const;
};

// Source task: three shapes, all five motion classes.
SyntheticSpec source_task_spec();
// Target task: two unseen shapes, three motion classes (chance 1/3).
SyntheticSpec target_task_spec();

// Writes one PGM + one .poff flow per sample plus manifest.csv into
// out_dir, then returns the loaded manifest. Byte-identical per seed.
DatasetManifest synth_generate(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

// Deterministic single-sample render, exposed for tests.
struct SyntheticSample {
  Plane image;
  FlowField<float> flow;
};
SyntheticSample render_sample(const SyntheticSpec& spec, MotionClass motion, ShapeKind shape,
                              long center_row, long center_col, std::uint64_t noise_seed);

// In-memory tensor views of a manifest split, ready for the network.
// Input channels come from the file type: .pofsm files load their three
// mapped channels, .pgm/.ppm load as RGB (gray replicated). Everything is
// bilinearly resized to rows x cols.
struct ClassifierDataset {
  std::vector<Tensorf> inputs;  // each [1, rows, cols, 3]
  std::vector<int> labels;      // indices into vocab
  std::vector<std::string> vocab;
  long rows = 0, cols = 0;
};
ClassifierDataset load_classifier_dataset(const DatasetManifest& m, const std::string& split,
                                          long rows, long cols);

class FlowCodebook;  // flow_codec.hpp

// Images plus their ground-truth flow encoded to cluster labels. Flow
// sidecars must match the requested dims exactly (labels cannot be
// resampled meaningfully).
struct FlowDataset {
  std::vector<Tensorf> inputs;  // each [1, rows, cols, 3]
  std::vector<ClusterLabelMap> labels;
  int clusters = 0;
};
FlowDataset load_flow_dataset(const DatasetManifest& m, const std::string& split,
                              const FlowCodebook& cb, long rows, long cols);

// Every ground-truth flow vector of the split, for codebook fitting.
std::vector<Eigen::Vector2d> collect_flow_samples(const DatasetManifest& m,
                                                  const std::string& split);

}  // namespace pofsm
