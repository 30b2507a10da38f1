#include "pofsm/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pofsm {

static_assert(std::endian::native == std::endian::little,
              "raw float formats assume a little-endian host");

namespace {

std::uint8_t to_byte(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path.string());
  return is;
}

// Reads the next header token, skipping whitespace and # comments.
std::string pnm_token(std::istream& is) {
  std::string tok;
  int ch;
  while ((ch = is.get()) != EOF) {
    if (ch == '#') {
      while ((ch = is.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

void pnm_header(std::istream& is, const char* magic, long& rows, long& cols,
                const std::filesystem::path& path) {
  if (pnm_token(is) != magic) throw DataError("not a " + std::string(magic) + " file: " + path.string());
  const std::string w = pnm_token(is), h = pnm_token(is), maxv = pnm_token(is);
  try {
    cols = std::stol(w);
    rows = std::stol(h);
    if (std::stol(maxv) != 255) throw DataError("");
  } catch (const std::exception&) {
    throw DataError("unsupported pnm header in " + path.string());
  }
  if (rows <= 0 || cols <= 0) throw DataError("bad pnm dimensions in " + path.string());
}

std::vector<std::uint8_t> read_exact(std::istream& is, size_t n, const std::filesystem::path& path) {
  std::vector<std::uint8_t> buf(n);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(is.gcount()) != n) throw DataError("truncated file: " + path.string());
  return buf;
}

void write_planes(std::ostream& os, std::initializer_list<const Plane*> planes) {
  // Plane is column-major in memory; files are row-major.
  std::vector<float> row;
  for (const Plane* p : planes) {
    row.resize(static_cast<size_t>(p->cols()));
    for (long r = 0; r < p->rows(); ++r) {
      for (long c = 0; c < p->cols(); ++c) row[static_cast<size_t>(c)] = (*p)(r, c);
      os.write(reinterpret_cast<const char*>(row.data()),
               static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  }
}

void read_planes(std::istream& is, std::initializer_list<Plane*> planes,
                 const std::filesystem::path& path) {
  std::vector<float> row;
  for (Plane* p : planes) {
    row.resize(static_cast<size_t>(p->cols()));
    for (long r = 0; r < p->rows(); ++r) {
      is.read(reinterpret_cast<char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
      if (static_cast<size_t>(is.gcount()) != row.size() * sizeof(float))
        throw DataError("truncated file: " + path.string());
      for (long c = 0; c < p->cols(); ++c) (*p)(r, c) = row[static_cast<size_t>(c)];
    }
  }
  if (is.peek() != EOF) throw DataError("trailing bytes in " + path.string());
}

void text_header(std::istream& is, const char* magic, long& rows, long& cols,
                 const std::filesystem::path& path) {
  std::string line;
  std::getline(is, line);
  std::istringstream ls(line);
  std::string m, v;
  if (!(ls >> m >> v >> rows >> cols) || m != magic || v != "v1" || rows <= 0 || cols <= 0)
    throw DataError("not a " + std::string(magic) + " file: " + path.string());
}

}  // namespace

void save_ppm(const ImageRgb& img, const std::filesystem::path& path) {
  img.check();
  auto os = open_out(path);
  os << "P6\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<size_t>(img.cols()) * 3);
  for (long r = 0; r < img.rows(); ++r) {
    for (long c = 0; c < img.cols(); ++c) {
      row[static_cast<size_t>(c) * 3 + 0] = to_byte(img.r(r, c));
      row[static_cast<size_t>(c) * 3 + 1] = to_byte(img.g(r, c));
      row[static_cast<size_t>(c) * 3 + 2] = to_byte(img.b(r, c));
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw DataError("failed writing " + path.string());
}

ImageRgb load_ppm(const std::filesystem::path& path) {
  auto is = open_in(path);
  long rows = 0, cols = 0;
  pnm_header(is, "P6", rows, cols, path);
  const auto buf = read_exact(is, static_cast<size_t>(rows) * cols * 3, path);
  ImageRgb img(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) {
      const size_t i = (static_cast<size_t>(r) * cols + c) * 3;
      img.r(r, c) = static_cast<float>(buf[i + 0]) / 255.0f;
      img.g(r, c) = static_cast<float>(buf[i + 1]) / 255.0f;
      img.b(r, c) = static_cast<float>(buf[i + 2]) / 255.0f;
    }
  return img;
}

void save_pgm(const Plane& gray, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "P5\n" << gray.cols() << " " << gray.rows() << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<size_t>(gray.cols()));
  for (long r = 0; r < gray.rows(); ++r) {
    for (long c = 0; c < gray.cols(); ++c) row[static_cast<size_t>(c)] = to_byte(gray(r, c));
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw DataError("failed writing " + path.string());
}

Plane load_pgm(const std::filesystem::path& path) {
  auto is = open_in(path);
  long rows = 0, cols = 0;
  pnm_header(is, "P5", rows, cols, path);
  const auto buf = read_exact(is, static_cast<size_t>(rows) * cols, path);
  Plane gray(rows, cols);
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c)
      gray(r, c) = static_cast<float>(buf[static_cast<size_t>(r) * cols + c]) / 255.0f;
  return gray;
}

ImageRgb load_image_rgb(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".ppm") return load_ppm(path);
  if (ext == ".pgm") {
    ImageRgb img;
    img.r = load_pgm(path);
    img.g = img.r;
    img.b = img.r;
    return img;
  }
  throw DataError("unsupported image type: " + path.string());
}

void save_flow(const FlowField<float>& flow, const std::filesystem::path& path) {
  if (flow.u.rows() != flow.v.rows() || flow.u.cols() != flow.v.cols())
    throw DataError("flow planes disagree on shape");
  auto os = open_out(path);
  os << "POFF v1 " << flow.rows() << " " << flow.cols() << "\n";
  write_planes(os, {&flow.u, &flow.v});
  if (!os) throw DataError("failed writing " + path.string());
}

FlowField<float> load_flow(const std::filesystem::path& path) {
  auto is = open_in(path);
  long rows = 0, cols = 0;
  text_header(is, "POFF", rows, cols, path);
  FlowField<float> flow;
  flow.u.resize(rows, cols);
  flow.v.resize(rows, cols);
  read_planes(is, {&flow.u, &flow.v}, path);
  return flow;
}

void save_pofsm(const PofSmImage& img, const std::filesystem::path& path) {
  img.check();
  auto os = open_out(path);
  os << "POFSM v1 " << img.rows() << " " << img.cols() << "\n";
  write_planes(os, {&img.pof_h, &img.pof_v, &img.sm});
  if (!os) throw DataError("failed writing " + path.string());
}

PofSmImage load_pofsm(const std::filesystem::path& path) {
  auto is = open_in(path);
  long rows = 0, cols = 0;
  text_header(is, "POFSM", rows, cols, path);
  PofSmImage img(rows, cols);
  read_planes(is, {&img.pof_h, &img.pof_v, &img.sm}, path);
  img.check();
  return img;
}

}  // namespace pofsm
