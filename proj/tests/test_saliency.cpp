#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <vector>

#include "doctest.h"
#include "pofsm/image_io.hpp"
#include "pofsm/rng.hpp"
#include "pofsm/saliency.hpp"

using namespace pofsm;
namespace fs = std::filesystem;

namespace {

// Uniform field with a textured square planted at (r0, c0): a 2x2-block
// checkerboard, coarse enough to survive one smoothing pass.
Plane planted_patch(long rows, long cols, long r0, long c0, long side) {
  Plane img = Plane::Constant(rows, cols, 0.5f);
  for (long r = 0; r < side; ++r)
    for (long c = 0; c < side; ++c)
      img(r0 + r, c0 + c) = ((r / 2 + c / 2) % 2 == 0) ? 1.0f : 0.0f;
  return img;
}

std::pair<long, long> argmax_of(const SaliencyMap& m) {
  long br = 0, bc = 0;
  float best = m(0, 0);
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c)
      if (m(r, c) > best) {
        best = m(r, c);
        br = r;
        bc = c;
      }
  return {br, bc};
}

Plane noise_image(Rng& rng, long rows, long cols) {
  Plane img(rows, cols);
  for (long i = 0; i < img.size(); ++i)
    img.data()[i] = static_cast<float>(0.3 + 0.4 * rng.uniform());
  return img;
}

// Exhaustive reference for the Otsu cut over a prebuilt histogram.
double otsu_reference(const SaliencyMap& map, int bins) {
  const double lo = map.minCoeff(), hi = map.maxCoeff();
  const double width = (hi - lo) / bins;
  std::vector<double> hist(static_cast<size_t>(bins), 0.0);
  for (long i = 0; i < map.size(); ++i) {
    long b = static_cast<long>((static_cast<double>(map(i)) - lo) / width);
    b = std::min<long>(std::max<long>(b, 0), bins - 1);
    hist[static_cast<size_t>(b)] += 1.0;
  }
  int best_t = 0;
  double best_var = -1.0;
  for (int t = 0; t + 1 < bins; ++t) {
    double w0 = 0.0, m0 = 0.0, w1 = 0.0, m1 = 0.0;
    for (int b = 0; b <= t; ++b) {
      w0 += hist[static_cast<size_t>(b)];
      m0 += (b + 0.5) * hist[static_cast<size_t>(b)];
    }
    for (int b = t + 1; b < bins; ++b) {
      w1 += hist[static_cast<size_t>(b)];
      m1 += (b + 0.5) * hist[static_cast<size_t>(b)];
    }
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = m0 / w0, mu1 = m1 / w1;
    const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  return lo + (best_t + 0.5) * width;
}

}  // namespace

TEST_CASE("constant images have no salient pixel") {
  for (float v : {0.0f, 0.3f, 1.0f}) {
    const Plane img = Plane::Constant(32, 32, v);
    const SaliencyMap m = saliency_map(img);
    CHECK((m == 0.0f).all());
  }
}

TEST_CASE("planted patch owns the argmax and survives thresholding") {
  const long r0 = 28, c0 = 20, side = 8;
  const Plane img = planted_patch(64, 64, r0, c0, side);
  SaliencyParams params;
  const SaliencyMap m = saliency_map(img, params);

  CHECK(m.minCoeff() >= 0.0f);
  CHECK(m.maxCoeff() <= 1.0f);

  const auto [ar, ac] = argmax_of(m);
  const long pad = params.patch;
  CHECK(ar >= r0 - pad);
  CHECK(ar < r0 + side + pad);
  CHECK(ac >= c0 - pad);
  CHECK(ac < c0 + side + pad);

  const Threshold th = otsu_threshold(m);
  CHECK(!th.degenerate);
  const SaliencyMap kept = apply_threshold(m, th.tau);
  long zeros = 0;
  for (long i = 0; i < kept.size(); ++i)
    if (kept.data()[i] == 0.0f) ++zeros;
  CHECK(static_cast<double>(zeros) >= 0.8 * static_cast<double>(kept.size()));
}

TEST_CASE("gradient-histogram descriptor also localizes the patch") {
  const Plane img = planted_patch(64, 64, 12, 40, 8);
  SaliencyParams params;
  params.descriptor = SaliencyDescriptor::kGradientHist;
  const SaliencyMap m = saliency_map(img, params);
  CHECK(m.maxCoeff() <= 1.0f);
  const auto [ar, ac] = argmax_of(m);
  CHECK(ar >= 12 - params.patch);
  CHECK(ar < 12 + 8 + params.patch);
  CHECK(ac >= 40 - params.patch);
  CHECK(ac < 40 + 8 + params.patch);
}

TEST_CASE("affine intensity changes leave the map unchanged") {
  Rng rng(2101);
  const Plane img = noise_image(rng, 40, 40);
  Plane scaled = img;
  for (long i = 0; i < scaled.size(); ++i)
    scaled.data()[i] = 2.0f * scaled.data()[i] + 0.1f;
  const SaliencyMap a = saliency_map(img);
  const SaliencyMap b = saliency_map(scaled);
  for (long i = 0; i < a.size(); ++i)
    CHECK(std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i])) <= 1e-6);
}

TEST_CASE("translating the patch translates the argmax") {
  SaliencyParams params;
  const long margin = params.patch + params.radius;
  const Plane a = planted_patch(64, 64, 20, 16, 8);
  const Plane b = planted_patch(64, 64, 25, 19, 8);  // moved by (5, 3)
  const auto [ar, ac] = argmax_of(saliency_map(a, params));
  const auto [br, bc] = argmax_of(saliency_map(b, params));
  CHECK(std::abs((br - ar) - 5) <= margin);
  CHECK(std::abs((bc - ac) - 3) <= margin);
}

TEST_CASE("otsu equals the exhaustive cut-point scan") {
  Rng rng(2102);
  for (int trial = 0; trial < 20; ++trial) {
    SaliencyMap m(16, 16);
    for (long i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.uniform());
    // sprinkle duplicates so ties actually occur
    for (long i = 0; i + 1 < m.size(); i += 7) m.data()[i + 1] = m.data()[i];
    const Threshold th = otsu_threshold(m, 256);
    CHECK(th.tau == otsu_reference(m, 256));
    CHECK(!th.degenerate);
  }
}

TEST_CASE("bimodal map splits exactly between the modes") {
  SaliencyMap m(10, 10);
  for (long i = 0; i < m.size(); ++i) m.data()[i] = (i % 2 == 0) ? 0.2f : 0.8f;
  const Threshold th = otsu_threshold(m, 256);
  CHECK(th.tau > 0.2);
  CHECK(th.tau <= 0.8);
  const SaliencyMap kept = apply_threshold(m, th.tau);
  for (long i = 0; i < m.size(); ++i) {
    if (m.data()[i] == 0.2f) CHECK(kept.data()[i] == 0.0f);
    if (m.data()[i] == 0.8f) CHECK(kept.data()[i] == 0.8f);
  }
}

TEST_CASE("constant map flags the degenerate threshold") {
  const SaliencyMap m = SaliencyMap::Constant(8, 8, 0.4f);
  const Threshold th = otsu_threshold(m);
  CHECK(th.degenerate);
  CHECK(th.tau == doctest::Approx(0.4).epsilon(1e-6));
  CHECK_THROWS_AS(otsu_threshold(SaliencyMap()), DataError);
  CHECK_THROWS_AS(otsu_threshold(m, 1), ConfigError);
}

TEST_CASE("threshold zeroing is strict-below and idempotent") {
  SaliencyMap m(1, 3);
  m(0, 0) = 0.1f;
  m(0, 1) = 0.5f;
  m(0, 2) = 0.9f;
  const SaliencyMap once = apply_threshold(m, 0.5);
  CHECK(once(0, 0) == 0.0f);
  CHECK(once(0, 1) == 0.5f);  // equal to tau survives
  CHECK(once(0, 2) == 0.9f);
  const SaliencyMap twice = apply_threshold(once, 0.5);
  CHECK((twice == once).all());

  CHECK((apply_threshold(m, 0.0) == m).all());
  CHECK((apply_threshold(m, 1.0 + 1e-9) == 0.0f).all());
  CHECK_THROWS_AS(apply_threshold(m, std::nan("")), ConfigError);
}

TEST_CASE("parameter and size validation") {
  SaliencyParams p;
  p.patch = 4;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.radius = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.h = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);

  const Plane tiny = Plane::Constant(2, 2, 0.5f);
  CHECK_THROWS_AS(saliency_map(tiny), DataError);

  Plane bad = Plane::Constant(8, 8, 0.5f);
  bad(3, 3) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(saliency_map(bad), DataError);
}

TEST_CASE("maps export as 8-bit PGM") {
  const Plane img = planted_patch(32, 32, 10, 10, 8);
  const SaliencyMap m = saliency_map(img);
  const fs::path p = fs::temp_directory_path() / "pofsm_sal.pgm";
  save_pgm(m, p);
  const Plane back = load_pgm(p);
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  for (long i = 0; i < m.size(); ++i) {
    const double expect = std::round(255.0 * static_cast<double>(m.data()[i])) / 255.0;
    CHECK(std::abs(static_cast<double>(back.data()[i]) - expect) <= 1e-6);
  }
  fs::remove(p);
}
