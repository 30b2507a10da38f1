#include "pofsm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pofsm/flow_codec.hpp"
#include "pofsm/image_io.hpp"
#include "pofsm/rng.hpp"

namespace pofsm {

namespace {

constexpr long kShapeRadius = 6;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

bool in_shape(ShapeKind s, long dr, long dc) {
  const long R = kShapeRadius;
  switch (s) {
    case ShapeKind::kSquare:
      return std::abs(dr) <= R && std::abs(dc) <= R;
    case ShapeKind::kCircle:
      return dr * dr + dc * dc <= R * R;
    case ShapeKind::kCross:
      return (std::abs(dr) <= 2 && std::abs(dc) <= R) || (std::abs(dc) <= 2 && std::abs(dr) <= R);
    case ShapeKind::kTriangle:  // apex up
      return dr >= -R && dr <= R && std::abs(dc) * 2 <= dr + R;
    case ShapeKind::kDiamond:
      return std::abs(dr) + std::abs(dc) <= R;
  }
  return false;
}

}  // namespace

const char* motion_name(MotionClass m) {
  switch (m) {
    case MotionClass::kLeft: return "left";
    case MotionClass::kRight: return "right";
    case MotionClass::kUp: return "up";
    case MotionClass::kDown: return "down";
    case MotionClass::kHold: return "hold";
  }
  return "?";
}

const char* motion_group(MotionClass m) {
  switch (m) {
    case MotionClass::kLeft:
    case MotionClass::kRight: return "horizontal";
    case MotionClass::kUp:
    case MotionClass::kDown: return "vertical";
    case MotionClass::kHold: return "static";
  }
  return "?";
}

MotionClass motion_from_name(const std::string& name) {
  for (MotionClass m : {MotionClass::kLeft, MotionClass::kRight, MotionClass::kUp,
                        MotionClass::kDown, MotionClass::kHold})
    if (name == motion_name(m)) return m;
  throw ConfigError("unknown motion class: " + name);
}

const char* shape_name(ShapeKind s) {
  switch (s) {
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kCross: return "cross";
    case ShapeKind::kTriangle: return "triangle";
    case ShapeKind::kDiamond: return "diamond";
  }
  return "?";
}

ShapeKind shape_from_name(const std::string& name) {
  for (ShapeKind s : {ShapeKind::kSquare, ShapeKind::kCircle, ShapeKind::kCross,
                      ShapeKind::kTriangle, ShapeKind::kDiamond})
    if (name == shape_name(s)) return s;
  throw ConfigError("unknown shape: " + name);
}

void SyntheticSpec::validate() const {
  if (rows < 4 * kShapeRadius || cols < 4 * kShapeRadius)
    throw ConfigError("synthetic images must be at least 24x24");
  if (shapes.empty()) throw ConfigError("synthetic spec needs at least one shape");
  if (classes.empty()) throw ConfigError("synthetic spec needs at least one motion class");
  std::set<MotionClass> uniq(classes.begin(), classes.end());
  if (uniq.size() != classes.size()) throw ConfigError("motion classes must be distinct");
  if (!(displacement > 0.0)) throw ConfigError("displacement must be positive");
  if (noise < 0.0) throw ConfigError("noise level must be >= 0");
  if (train_per_class < 0 || test_per_class < 0) throw ConfigError("sample counts must be >= 0");
}

SyntheticSpec source_task_spec() {
  SyntheticSpec s;
  s.shapes = {ShapeKind::kSquare, ShapeKind::kCircle, ShapeKind::kCross};
  s.classes = {MotionClass::kLeft, MotionClass::kRight, MotionClass::kUp, MotionClass::kDown,
               MotionClass::kHold};
  return s;
}

SyntheticSpec target_task_spec() {
  SyntheticSpec s;
  s.shapes = {ShapeKind::kTriangle, ShapeKind::kDiamond};
  s.classes = {MotionClass::kLeft, MotionClass::kRight, MotionClass::kUp};
  return s;
}

SyntheticSample render_sample(const SyntheticSpec& spec, MotionClass motion, ShapeKind shape,
                              long center_row, long center_col, std::uint64_t noise_seed) {
  SyntheticSample out;
  out.image = Plane::Constant(spec.rows, spec.cols, 0.12f);
  out.flow.u = PlaneT<float>::Zero(spec.rows, spec.cols);
  out.flow.v = PlaneT<float>::Zero(spec.rows, spec.cols);

  float du = 0.0f, dv = 0.0f;
  const float d = static_cast<float>(spec.displacement);
  switch (motion) {
    case MotionClass::kLeft: du = -d; break;
    case MotionClass::kRight: du = d; break;
    case MotionClass::kUp: dv = -d; break;
    case MotionClass::kDown: dv = d; break;
    case MotionClass::kHold: break;
  }

  for (long r = 0; r < spec.rows; ++r)
    for (long c = 0; c < spec.cols; ++c) {
      const long dr = r - center_row, dc = c - center_col;
      if (!in_shape(shape, dr, dc)) continue;
      // Brightness rises toward the leading edge; a single frame reveals
      // the heading through this ramp.
      double t = 0.0;
      switch (motion) {
        case MotionClass::kLeft: t = static_cast<double>(-dc); break;
        case MotionClass::kRight: t = static_cast<double>(dc); break;
        case MotionClass::kUp: t = static_cast<double>(-dr); break;
        case MotionClass::kDown: t = static_cast<double>(dr); break;
        case MotionClass::kHold: t = 0.0; break;
      }
      const double lum = motion == MotionClass::kHold
                             ? 0.7
                             : 0.45 + 0.5 * (t + kShapeRadius) / (2.0 * kShapeRadius);
      out.image(r, c) = static_cast<float>(lum);
      out.flow.u(r, c) = du;
      out.flow.v(r, c) = dv;
    }

  if (spec.noise > 0.0) {
    Rng rng(noise_seed);
    for (long r = 0; r < spec.rows; ++r)
      for (long c = 0; c < spec.cols; ++c)
        out.image(r, c) = std::clamp(
            out.image(r, c) + static_cast<float>(spec.noise * rng.gaussian()), 0.0f, 1.0f);
  }
  return out;
}

DatasetManifest synth_generate(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  DatasetManifest m;
  m.base_dir = out_dir;
  Rng rng(spec.seed);
  std::uint64_t counter = 0;
  char name[64];

  for (MotionClass cls : spec.classes) {
    for (const auto& [split, count] :
         {std::pair<const char*, int>{"train", spec.train_per_class},
          std::pair<const char*, int>{"test", spec.test_per_class}}) {
      for (int i = 0; i < count; ++i, ++counter) {
        const ShapeKind shape =
            spec.shapes[static_cast<size_t>(rng.uniform_int(static_cast<int>(spec.shapes.size())))];
        const long cy =
            kShapeRadius + rng.uniform_int(static_cast<int>(spec.rows - 2 * kShapeRadius));
        const long cx =
            kShapeRadius + rng.uniform_int(static_cast<int>(spec.cols - 2 * kShapeRadius));
        const SyntheticSample s =
            render_sample(spec, cls, shape, cy, cx, mix_seed(spec.seed, counter));

        std::snprintf(name, sizeof name, "%s_%s_%03d.pgm", motion_name(cls), split, i);
        save_pgm(s.image, out_dir / name);
        save_flow(s.flow, flow_path_for(out_dir / name));
        m.rows.push_back({name, motion_name(cls), motion_group(cls), split});
      }
    }
  }

  m.rebuild_vocab();
  m.save(out_dir / "manifest.csv");
  m.validate(true);
  return m;
}

std::filesystem::path flow_path_for(const std::filesystem::path& image_path) {
  std::filesystem::path p = image_path;
  p.replace_extension(".poff");
  return p;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& csv) {
  std::ifstream is(csv);
  if (!is) throw DataError("cannot read " + csv.string());
  DatasetManifest m;
  m.base_dir = csv.parent_path();

  std::string line;
  if (!std::getline(is, line) || trim(line) != "path,label,group,split")
    throw DataError("manifest must start with 'path,label,group,split': " + csv.string());
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 4 || f[0].empty() || f[1].empty() || f[2].empty() || f[3].empty())
      throw DataError("bad manifest row at line " + std::to_string(lineno) + " in " + csv.string());
    m.rows.push_back({f[0], f[1], f[2], f[3]});
  }
  m.rebuild_vocab();
  m.validate(true);
  return m;
}

void DatasetManifest::save(const std::filesystem::path& csv) const {
  std::ofstream os(csv, std::ios::trunc);
  if (!os) throw DataError("cannot write " + csv.string());
  os << "path,label,group,split\n";
  for (const auto& r : rows)
    os << r.path << "," << r.label << "," << r.group << "," << r.split << "\n";
  if (!os) throw DataError("failed writing " + csv.string());
}

std::filesystem::path DatasetManifest::resolve(const ManifestRow& row) const {
  const std::filesystem::path p(row.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<const ManifestRow*> DatasetManifest::split(const std::string& which) const {
  std::vector<const ManifestRow*> out;
  for (const auto& r : rows)
    if (r.split == which) out.push_back(&r);
  return out;
}

int DatasetManifest::label_index(const std::string& label) const {
  const auto it = std::lower_bound(class_vocab.begin(), class_vocab.end(), label);
  if (it == class_vocab.end() || *it != label) return -1;
  return static_cast<int>(it - class_vocab.begin());
}

void DatasetManifest::rebuild_vocab() {
  std::set<std::string> cls, grp;
  for (const auto& r : rows) {
    if (r.split == "train") cls.insert(r.label);
    grp.insert(r.group);
  }
  class_vocab.assign(cls.begin(), cls.end());
  group_vocab.assign(grp.begin(), grp.end());
}

void DatasetManifest::validate(bool check_files) const {
  std::set<std::string> seen;
  for (const auto& r : rows) {
    if (r.split != "train" && r.split != "test")
      throw DataError("unknown split '" + r.split + "' for " + r.path);
    if (!seen.insert(r.path).second) throw DataError("duplicate manifest path: " + r.path);
    if (r.split == "test" &&
        !std::binary_search(class_vocab.begin(), class_vocab.end(), r.label))
      throw DataError("test label '" + r.label + "' missing from the training vocabulary");
    if (check_files && !std::filesystem::exists(resolve(r)))
      throw DataError("manifest references a missing file: " + resolve(r).string());
  }
}

namespace {

Tensorf image_to_tensor(const ImageRgb& img, long rows, long cols) {
  const ImageRgb r = bilinear_resize(img, rows, cols);
  Tensorf t({1, static_cast<int>(rows), static_cast<int>(cols), 3});
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) {
      t(0, i, j, 0) = r.r(i, j);
      t(0, i, j, 1) = r.g(i, j);
      t(0, i, j, 2) = r.b(i, j);
    }
  return t;
}

}  // namespace

ClassifierDataset load_classifier_dataset(const DatasetManifest& m, const std::string& split,
                                          long rows, long cols) {
  if (rows <= 0 || cols <= 0) throw ConfigError("dataset target dims must be positive");
  ClassifierDataset out;
  out.rows = rows;
  out.cols = cols;
  out.vocab = m.class_vocab;
  for (const ManifestRow* row : m.split(split)) {
    const std::filesystem::path p = m.resolve(*row);
    if (p.extension() == ".pofsm") {
      PofSmImage img = load_pofsm(p);
      if (img.rows() != rows || img.cols() != cols) {
        PofSmImage resized;
        resized.pof_h = bilinear_resize(img.pof_h, rows, cols);
        resized.pof_v = bilinear_resize(img.pof_v, rows, cols);
        resized.sm = bilinear_resize(img.sm, rows, cols);
        img = resized;
      }
      Tensorf t({1, static_cast<int>(rows), static_cast<int>(cols), 3});
      for (long i = 0; i < rows; ++i)
        for (long j = 0; j < cols; ++j) {
          t(0, i, j, 0) = img.pof_h(i, j);
          t(0, i, j, 1) = img.pof_v(i, j);
          t(0, i, j, 2) = img.sm(i, j);
        }
      out.inputs.push_back(std::move(t));
    } else {
      out.inputs.push_back(image_to_tensor(load_image_rgb(p), rows, cols));
    }
    const int label = m.label_index(row->label);
    if (label < 0) throw DataError("label '" + row->label + "' missing from the vocabulary");
    out.labels.push_back(label);
  }
  return out;
}

FlowDataset load_flow_dataset(const DatasetManifest& m, const std::string& split,
                              const FlowCodebook& cb, long rows, long cols) {
  if (rows <= 0 || cols <= 0) throw ConfigError("dataset target dims must be positive");
  FlowDataset out;
  out.clusters = cb.size();
  for (const ManifestRow* row : m.split(split)) {
    const std::filesystem::path img_path = m.resolve(*row);
    out.inputs.push_back(image_to_tensor(load_image_rgb(img_path), rows, cols));
    const FlowField<float> flow = load_flow(flow_path_for(img_path));
    if (flow.rows() != rows || flow.cols() != cols)
      throw DataError("flow dims do not match the network input: " +
                      flow_path_for(img_path).string());
    out.labels.push_back(encode_flow(flow, cb));
  }
  return out;
}

std::vector<Eigen::Vector2d> collect_flow_samples(const DatasetManifest& m,
                                                  const std::string& split) {
  std::vector<Eigen::Vector2d> samples;
  for (const ManifestRow* row : m.split(split)) {
    const FlowField<float> flow = load_flow(flow_path_for(m.resolve(*row)));
    samples.reserve(samples.size() + static_cast<size_t>(flow.u.size()));
    for (long r = 0; r < flow.rows(); ++r)
      for (long c = 0; c < flow.cols(); ++c)
        samples.emplace_back(static_cast<double>(flow.u(r, c)),
                             static_cast<double>(flow.v(r, c)));
  }
  return samples;
}

}  // namespace pofsm
