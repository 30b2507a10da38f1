#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pofsm/flow_codec.hpp"
#include "pofsm/rng.hpp"

using namespace pofsm;
namespace fs = std::filesystem;

namespace {

std::vector<Eigen::Vector2d> random_points(Rng& rng, int n, double scale) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    pts.emplace_back(rng.gaussian() * scale, rng.gaussian() * scale);
  return pts;
}

// Optimal 2-cluster SSE by exhaustive partition enumeration.
double brute_force_sse2(const std::vector<Eigen::Vector2d>& pts) {
  const int n = static_cast<int>(pts.size());
  double best = std::numeric_limits<double>::infinity();
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    Eigen::Vector2d m0 = Eigen::Vector2d::Zero(), m1 = Eigen::Vector2d::Zero();
    int n0 = 0, n1 = 0;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        m0 += pts[static_cast<size_t>(i)];
        ++n0;
      } else {
        m1 += pts[static_cast<size_t>(i)];
        ++n1;
      }
    }
    m0 /= n0;
    m1 /= n1;
    double sse = 0.0;
    for (int i = 0; i < n; ++i)
      sse += (pts[static_cast<size_t>(i)] - ((mask & (1u << i)) ? m0 : m1)).squaredNorm();
    best = std::min(best, sse);
  }
  return best;
}

fs::path temp_file(const char* tag) {
  return fs::temp_directory_path() / (std::string("pofsm_codec_") + tag + ".txt");
}

}  // namespace

TEST_CASE("two-cluster fit matches the brute-force optimal partition") {
  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + rng.uniform_int(5);  // 4..8 points
    std::vector<Eigen::Vector2d> pts = random_points(rng, n, 2.0);
    const FlowCodebook cb = kmeans_fit(pts, 2, 100, rng.next_u64());
    const double sse = kmeans_sse(pts, cb);
    const double best = brute_force_sse2(pts);
    REQUIRE(sse >= best - 1e-9);
    REQUIRE(sse <= best + 1e-9);
  }
}

TEST_CASE("single cluster is the sample mean") {
  Rng rng(405);
  const std::vector<Eigen::Vector2d> pts = random_points(rng, 17, 3.0);
  const FlowCodebook cb = kmeans_fit(pts, 1, 50, 7);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  CHECK(cb.size() == 1);
  CHECK(cb.centroids()[0].x() == doctest::Approx(mean.x()).epsilon(1e-12));
  CHECK(cb.centroids()[0].y() == doctest::Approx(mean.y()).epsilon(1e-12));
}

TEST_CASE("well-separated duplicates are recovered exactly and sorted") {
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < 5; ++i) pts.emplace_back(3.0, 0.0);
  for (int i = 0; i < 5; ++i) pts.emplace_back(-3.0, 0.0);
  for (int i = 0; i < 5; ++i) pts.emplace_back(0.0, 3.0);
  const FlowCodebook cb = kmeans_fit(pts, 3, 50, 99);
  CHECK(kmeans_sse(pts, cb) == 0.0);
  // canonical order: ascending x, then y
  CHECK(cb.centroids()[0] == Eigen::Vector2d(-3.0, 0.0));
  CHECK(cb.centroids()[1] == Eigen::Vector2d(0.0, 3.0));
  CHECK(cb.centroids()[2] == Eigen::Vector2d(3.0, 0.0));
  // f_max defaults to the 99th percentile of |components|
  CHECK(cb.f_max() == 3.0);
}

TEST_CASE("per-pass SSE log never increases") {
  Rng rng(406);
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const std::vector<Eigen::Vector2d> pts = random_points(rng, 60, 1.5);
    std::vector<double> log;
    kmeans_fit_single(pts, 4, 100, seed, &log);
    REQUIRE(log.size() >= 1);
    for (size_t i = 1; i < log.size(); ++i) CHECK(log[i] <= log[i - 1] + 1e-9);
  }
}

TEST_CASE("cluster count above the distinct sample count is rejected") {
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < 5; ++i) pts.emplace_back(0.0, 0.0);
  for (int i = 0; i < 5; ++i) pts.emplace_back(1.0, 1.0);
  CHECK_THROWS_AS(kmeans_fit(pts, 3, 50, 1), ConfigError);
  CHECK_THROWS_AS(kmeans_fit({}, 1, 50, 1), ConfigError);
  CHECK_THROWS_AS(kmeans_fit(pts, 0, 50, 1), ConfigError);
}

TEST_CASE("encode picks the nearest centroid, ties to the lowest index") {
  const FlowCodebook cb({{-1.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}}, 2.0);
  Rng rng(407);
  FlowField<float> flow(6, 5);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 5; ++c) {
      flow.u(r, c) = static_cast<float>(rng.gaussian());
      flow.v(r, c) = static_cast<float>(rng.gaussian());
    }
  const ClusterLabelMap labels = encode_flow(flow, cb);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 5; ++c) {
      // independent exhaustive scan in double
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < cb.size(); ++k) {
        const double du = static_cast<double>(flow.u(r, c)) - cb.centroids()[(size_t)k].x();
        const double dv = static_cast<double>(flow.v(r, c)) - cb.centroids()[(size_t)k].y();
        if (du * du + dv * dv < best_d) {
          best_d = du * du + dv * dv;
          best = k;
        }
      }
      REQUIRE(labels.at(r, c) == best);
    }

  // (0, 0) is equidistant from the first two centroids
  FlowField<float> tie(1, 1);
  CHECK(encode_flow(tie, cb).at(0, 0) == 0);
}

TEST_CASE("expected decode is the probability-weighted centroid average") {
  const FlowCodebook cb({{-3.0, 0.0}, {0.0, -3.0}, {0.0, 0.0}, {0.0, 3.0}, {3.0, 0.0}}, 3.0);
  SpatialProbMap<float> probs(1, 1, 5);
  probs.p(0, 2) = 0.75f;
  probs.p(0, 4) = 0.25f;
  const FlowField<float> f = decode_flow(probs, cb, DecodeMode::kExpected);
  CHECK(f.u(0, 0) == doctest::Approx(0.75).epsilon(1e-6));
  CHECK(f.v(0, 0) == 0.0f);
}

TEST_CASE("expected decode is linear in the probability map") {
  const FlowCodebook cb({{-2.0, 1.0}, {0.5, 0.5}, {3.0, -1.0}}, 3.0);
  Rng rng(408);
  SpatialProbMap<double> a(2, 2, 3), b(2, 2, 3);
  for (long i = 0; i < 4; ++i) {
    double sa = 0.0, sb = 0.0;
    for (int c = 0; c < 3; ++c) {
      a.p(i, c) = rng.uniform();
      b.p(i, c) = rng.uniform();
      sa += a.p(i, c);
      sb += b.p(i, c);
    }
    for (int c = 0; c < 3; ++c) {
      a.p(i, c) /= sa;
      b.p(i, c) /= sb;
    }
  }
  const double alpha = 0.3;
  SpatialProbMap<double> mix(2, 2, 3);
  mix.p = alpha * a.p + (1.0 - alpha) * b.p;
  const FlowField<double> fa = decode_flow(a, cb), fb = decode_flow(b, cb),
                          fm = decode_flow(mix, cb);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      CHECK(fm.u(r, c) ==
            doctest::Approx(alpha * fa.u(r, c) + (1 - alpha) * fb.u(r, c)).epsilon(1e-12));
      CHECK(fm.v(r, c) ==
            doctest::Approx(alpha * fa.v(r, c) + (1 - alpha) * fb.v(r, c)).epsilon(1e-12));
    }
}

TEST_CASE("argmax decode breaks probability ties toward the lower index") {
  const FlowCodebook cb({{-3.0, 0.0}, {0.0, 0.0}, {3.0, 0.0}}, 3.0);
  SpatialProbMap<float> probs(1, 1, 3);
  probs.p(0, 0) = 0.4f;
  probs.p(0, 2) = 0.4f;
  probs.p(0, 1) = 0.2f;
  const FlowField<float> f = decode_flow(probs, cb, DecodeMode::kArgmax);
  CHECK(f.u(0, 0) == -3.0f);

  SpatialProbMap<float> wrong(1, 1, 4);
  CHECK_THROWS_AS(decode_flow(wrong, cb), ConfigError);
}

TEST_CASE("percentile uses the nearest-rank rule over pooled |components|") {
  const std::vector<Eigen::Vector2d> pts = {{1.0, -2.0}, {-3.0, 4.0}};
  // pooled magnitudes: 1 2 3 4
  CHECK(abs_component_percentile(pts, 0.99) == 4.0);
  CHECK(abs_component_percentile(pts, 0.5) == 2.0);
  CHECK(abs_component_percentile(pts, 0.25) == 1.0);
  CHECK(abs_component_percentile(pts, 0.0) == 1.0);  // index clamps to the first

  // zero percentile value falls back to the max, then to 1.0
  const std::vector<Eigen::Vector2d> mostly_zero = {{0.0, 0.0}, {0.0, 0.0}, {0.0, 5.0}};
  CHECK(abs_component_percentile(mostly_zero, 0.5) == 5.0);
  const std::vector<Eigen::Vector2d> all_zero = {{0.0, 0.0}};
  CHECK(abs_component_percentile(all_zero, 0.99) == 1.0);
  CHECK_THROWS_AS(abs_component_percentile(pts, 1.5), ConfigError);
}

TEST_CASE("codebook file round-trip is bit-exact") {
  std::vector<Eigen::Vector2d> cents = {{-1.0 / 3.0, 0.1 + 1e-17}, {0.12345678901234567, -9.87}};
  const FlowCodebook cb(cents, 2.5000000000000004);
  const fs::path p = temp_file("roundtrip");
  save_codebook(cb, p);
  const FlowCodebook back = load_codebook(p);
  REQUIRE(back.size() == cb.size());
  for (int k = 0; k < cb.size(); ++k) {
    CHECK(back.centroids()[(size_t)k].x() == cb.centroids()[(size_t)k].x());
    CHECK(back.centroids()[(size_t)k].y() == cb.centroids()[(size_t)k].y());
  }
  CHECK(back.f_max() == cb.f_max());
  fs::remove(p);
}

TEST_CASE("malformed codebook files are data errors") {
  const fs::path p = temp_file("bad");
  {
    std::ofstream os(p);
    os << "NOTCB v1\n2 1.0\n0 0\n1 1\n";
  }
  CHECK_THROWS_AS(load_codebook(p), DataError);
  {
    std::ofstream os(p);
    os << "POFCB v1\n3 1.0\n0 0\n1 1\n";  // promises 3 centroids, has 2
  }
  CHECK_THROWS_AS(load_codebook(p), DataError);
  {
    std::ofstream os(p);
    os << "POFCB v1\n1 1.0\nnan 0\n";
  }
  CHECK_THROWS_AS(load_codebook(p), DataError);
  fs::remove(p);
  CHECK_THROWS_AS(load_codebook(p), DataError);  // missing file
}

TEST_CASE("normalization lands on the 2^-24 lattice and centers zero motion") {
  CHECK(quantize_unit(0.5) == 0.5);
  CHECK(quantize_unit(1.0) == 1.0);
  Rng rng(409);
  PlaneT<float> comp(4, 4);
  for (long i = 0; i < comp.size(); ++i)
    comp.data()[i] = static_cast<float>(rng.gaussian() * 4.0);
  comp(0, 0) = 0.0f;
  comp(0, 1) = 3.0f;
  comp(0, 2) = -3.0f;
  comp(0, 3) = 100.0f;  // clamps to 1
  const PlaneT<float> out = normalize_flow_channel(comp, 3.0);
  CHECK(out(0, 0) == 0.5f);
  CHECK(out(0, 1) == 1.0f);
  CHECK(out(0, 2) == 0.0f);
  CHECK(out(0, 3) == 1.0f);
  for (long i = 0; i < out.size(); ++i) {
    const double scaled = static_cast<double>(out.data()[i]) * 16777216.0;
    CHECK(scaled == std::nearbyint(scaled));  // on the lattice
    CHECK(out.data()[i] >= 0.0f);
    CHECK(out.data()[i] <= 1.0f);
  }
  CHECK_THROWS_AS(normalize_flow_channel(comp, 0.0), ConfigError);
}

TEST_CASE("value reflection is exact and involutive on the lattice") {
  Rng rng(410);
  for (int i = 0; i < 1000; ++i) {
    const float v = static_cast<float>(quantize_unit(rng.uniform()));
    const float r = 1.0f - v;
    // exact: the float arithmetic equals the real-number result
    CHECK(static_cast<double>(r) == 1.0 - static_cast<double>(v));
    CHECK(1.0f - r == v);
  }
}

TEST_CASE("default cluster count follows the production setting") {
  CHECK(kDefaultClusterCount == 40);
}
