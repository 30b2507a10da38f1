#include "pofsm/weights_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "pofsm/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "weight files assume a little-endian host");

namespace pofsm {

namespace {

constexpr char kMagic[4] = {'P', 'S', 'M', 'W'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::ifstream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw DataError(std::string("weights file truncated reading ") + what);
  return v;
}

struct Header {
  std::uint64_t digest;
  std::string spec_text;
  std::uint64_t float_count;
};

Header read_header(std::ifstream& is, const std::filesystem::path& path) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a weights file: " + path.string());
  const auto version = read_pod<std::uint32_t>(is, "version");
  if (version != kVersion)
    throw ConfigError("unsupported weights version " + std::to_string(version));
  Header h;
  h.digest = read_pod<std::uint64_t>(is, "digest");
  const auto spec_len = read_pod<std::uint32_t>(is, "spec length");
  h.spec_text.resize(spec_len);
  is.read(h.spec_text.data(), spec_len);
  if (!is) throw DataError("weights file truncated reading spec");
  h.float_count = read_pod<std::uint64_t>(is, "float count");
  return h;
}

void read_params(std::ifstream& is, Network<float>& net, std::uint64_t float_count,
                 const std::filesystem::path& path) {
  std::uint64_t expected = 0;
  for (const auto& p : net.params()) expected += static_cast<std::uint64_t>(p.w.size() + p.b.size());
  if (float_count != expected)
    throw DataError("weights file parameter count mismatch in " + path.string());
  for (auto& p : net.params()) {
    if (p.empty()) continue;
    is.read(reinterpret_cast<char*>(p.w.data()), p.w.size() * sizeof(float));
    is.read(reinterpret_cast<char*>(p.b.data()), p.b.size() * sizeof(float));
    if (!is) throw DataError("weights file truncated: " + path.string());
  }
  is.peek();
  if (!is.eof()) throw DataError("trailing bytes in weights file: " + path.string());
}

}  // namespace

void save_weights(const Network<float>& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write " + path.string());
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, net.spec().digest());
  const std::string spec_text = net.spec().to_string();
  write_pod(os, static_cast<std::uint32_t>(spec_text.size()));
  os.write(spec_text.data(), static_cast<std::streamsize>(spec_text.size()));
  std::uint64_t count = 0;
  for (const auto& p : net.params()) count += static_cast<std::uint64_t>(p.w.size() + p.b.size());
  write_pod(os, count);
  for (const auto& p : net.params()) {
    if (p.empty()) continue;
    os.write(reinterpret_cast<const char*>(p.w.data()), p.w.size() * sizeof(float));
    os.write(reinterpret_cast<const char*>(p.b.data()), p.b.size() * sizeof(float));
  }
  if (!os) throw DataError("failed writing " + path.string());
}

void load_weights(Network<float>& net, const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path.string());
  const Header h = read_header(is, path);
  if (h.digest != net.spec().digest())
    throw ConfigError("incompatible architecture: digest mismatch loading " + path.string());
  read_params(is, net, h.float_count, path);
}

Network<float> load_network(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot read " + path.string());
  const Header h = read_header(is, path);
  NetworkSpec spec = NetworkSpec::from_string(h.spec_text);
  if (spec.digest() != h.digest)
    throw DataError("weights file digest does not match embedded spec: " + path.string());
  Network<float> net(spec, 0);
  read_params(is, net, h.float_count, path);
  return net;
}

}  // namespace pofsm
