#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "synthhw/error.hpp"
#include "synthhw/features.hpp"

using namespace synthhw;

namespace {

std::vector<GrayImage> random_images(int count, int side, unsigned seed) {
  std::mt19937 gen(seed);
  std::vector<GrayImage> out;
  for (int i = 0; i < count; ++i) {
    GrayImage g(side, side);
    for (auto& s : g.samples()) s = static_cast<std::uint8_t>(gen() % 256);
    out.push_back(g);
  }
  return out;
}

// Sample covariance (divisor M - 1) built directly from the definition.
std::vector<std::vector<double>> covariance(const std::vector<Vector>& xs) {
  const std::size_t n = xs.front().size(), m = xs.size();
  Vector mean(n, 0.0);
  for (const auto& x : xs)
    for (std::size_t i = 0; i < n; ++i) mean[i] += x[i] / m;
  std::vector<std::vector<double>> c(n, std::vector<double>(n, 0.0));
  for (const auto& x : xs)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]) / (m - 1.0);
  return c;
}

double dot(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l1(const Vector& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("PCA on random 8x8 images") {
    const auto imgs = random_images(20, 8, 21);
    const PcaModel m = pca_fit(imgs, 64, 8);
    REQUIRE(m.components.size() == 64);

    for (std::size_t a = 0; a < 64; ++a)
      for (std::size_t b = 0; b < 64; ++b) CHECK(std::abs(dot(m.components[a], m.components[b]) - (a == b)) < 1e-8);

    for (std::size_t k = 0; k < 64; ++k) {
      CHECK(m.eigenvalues[k] >= -1e-10);
      if (k > 0) CHECK(m.eigenvalues[k] <= m.eigenvalues[k - 1]);
    }

    std::vector<Vector> xs;
    for (const auto& g : imgs) xs.push_back(image_vector(g, 8));
    const auto want = oracle::jacobi_eigenvalues(covariance(xs));
    for (std::size_t k = 0; k < 64; ++k) CHECK(std::abs(m.eigenvalues[k] - want[k]) < 1e-8);

    for (const auto& x : xs) {
      const Vector back = pca_reconstruct(m, pca_project(m, x));
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-6);
    }

    for (double c : pca_project(m, m.mean)) CHECK(std::abs(c) < 1e-12);
    Vector shifted = m.mean;
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted[i] += m.components[2][i];
    const Vector unit = pca_project(m, shifted);
    for (std::size_t k = 0; k < unit.size(); ++k) CHECK(std::abs(unit[k] - (k == 2)) < 1e-9);
  }

  TEST_CASE("PCA small cases") {
    const std::vector<Vector> two{{0.0, 0.0, 1.0}, {2.0, 0.0, 1.0}};
    const PcaModel m = pca_fit_vectors(two, 1);
    CHECK(m.components[0][0] == doctest::Approx(1.0));
    CHECK(m.eigenvalues[0] == doctest::Approx(2.0));
    CHECK(m.mean == Vector{1.0, 0.0, 1.0});

    const std::vector<Vector> same{{0.3, 0.4}, {0.3, 0.4}, {0.3, 0.4}};
    const PcaModel z = pca_fit_vectors(same, 2);
    for (double v : z.eigenvalues) CHECK(std::abs(v) < 1e-12);

    const std::vector<Vector> one{{1.0, 2.0}};
    CHECK_THROWS_AS(pca_fit_vectors(one, 1), Error);
    const auto imgs = random_images(4, 8, 3);
    const PcaModel p = pca_fit(imgs, 2, 8);
    try {
      (void)pca_project(p, GrayImage(9, 8));
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
  }

  TEST_CASE("PCA Gram route on long vectors") {
    const auto imgs = random_images(6, 40, 8);
    const PcaModel m = pca_fit(imgs, 8, 40);
    std::vector<Vector> xs;
    for (const auto& g : imgs) xs.push_back(image_vector(g, 40));
    for (std::size_t a = 0; a < 8; ++a)
      for (std::size_t b = 0; b < 8; ++b) CHECK(std::abs(dot(m.components[a], m.components[b]) - (a == b)) < 1e-8);
    for (std::size_t k = 5; k < 8; ++k) CHECK(m.eigenvalues[k] == 0.0);
    for (const auto& x : xs) {
      const Vector back = pca_reconstruct(m, pca_project(m, x));
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(back[i] - x[i]) < 1e-6);
    }
  }

  TEST_CASE("PHOG length and normalisation") {
    CHECK(PhogSpec{}.length() == 168);
    const Vector flat = phog(GrayImage(30, 30, 128));
    CHECK(flat.size() == 168);
    for (double v : flat) CHECK(v == 0.0);
    const Vector g = phog(to_gray(fixture::glyph("6", 2)));
    CHECK(g.size() == 168);
    CHECK(l1(g) == doctest::Approx(1.0));
    for (double v : g) CHECK(v >= 0.0);
  }

  TEST_CASE("PHOG of a vertical step edge") {
    GrayImage img(16, 16, 255);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 6; ++x) img.set(x, y, 0);
    const Vector h = phog(img);
    for (std::size_t i = 0; i < h.size(); ++i)
      if (i % 8 != 0) CHECK(h[i] == 0.0);
    CHECK(h[0] == doctest::Approx(1.0 / 3.0));
    // Level 1: the edge lies in the left column of cells, equally in both rows.
    CHECK(h[8 + 0 * 8] == doctest::Approx(1.0 / 6.0));
    CHECK(h[8 + 2 * 8] == doctest::Approx(1.0 / 6.0));
    CHECK(h[8 + 1 * 8] == 0.0);
  }

  TEST_CASE("column features on fixtures") {
    const FeatureSequence blank = marti_bunke(BilevelImage(3, 4));
    REQUIRE(blank.size() == 3);
    CHECK(blank.frame_dim == 9);
    for (const auto& f : blank.frames) CHECK(f == Vector{0, 0, 0, 0.5, 0.5, 0, 0, 0, 0});

    const FeatureSequence s = marti_bunke(fixture::from_rows({"..", "##", "#.", "##"}));
    const Vector& c0 = s.frames[0];
    CHECK(c0[0] == doctest::Approx(0.75));
    CHECK(c0[1] == doctest::Approx(2.5 / 4));
    CHECK(c0[3] == doctest::Approx(1.5 / 4));
    CHECK(c0[4] == doctest::Approx(3.5 / 4));
    CHECK(c0[5] == 1.0);
    CHECK(c0[6] == 1.0);
    CHECK(c0[7] == 0.0);
    const Vector& c1 = s.frames[1];
    CHECK(c1[5] == 2.0);
    CHECK(c1[6] == doctest::Approx(2.0 / 3));
    CHECK(c1[2] == doctest::Approx(1.0 / 16));
    CHECK(c1[7] == doctest::Approx(0.0));
    CHECK(c1[8] == doctest::Approx(0.0));

    const FeatureSequence st = marti_bunke(fixture::from_rows({"..#", ".##", "###"}));
    CHECK(st.frames[1][7] == doctest::Approx(-1.0 / 3));
    CHECK(st.frames[2][7] == doctest::Approx(-1.0 / 3));
    CHECK(st.frames[2][8] == doctest::Approx(0.0));
  }

  TEST_CASE("mirroring reverses columns and negates contour gradients") {
    const BilevelImage g = fixture::glyph("water", 0, 40);
    BilevelImage m(g.width(), g.height());
    for (int y = 0; y < g.height(); ++y)
      for (int x = 0; x < g.width(); ++x) m.set(g.width() - 1 - x, y, g.at(x, y));
    const FeatureSequence a = marti_bunke(g), b = marti_bunke(m);
    const int w = g.width();
    for (int c = 0; c < w; ++c) {
      for (int d = 0; d < 7; ++d) CHECK(b.frames[c][d] == a.frames[w - 1 - c][d]);
      for (int d = 7; d < 9; ++d) {
        const double want = c == 0 ? 0.0 : -a.frames[w - c][d];
        CHECK(b.frames[c][d] == doctest::Approx(want));
      }
    }
  }

  TEST_CASE("window sequences") {
    BilevelImage narrow(6, 40), wide(12, 40), tiny(5, 40);
    narrow.set(2, 20);
    wide.set(2, 20);
    const FeatureSequence n = window_sequence(narrow);
    CHECK(n.size() == 1);
    CHECK(n.frame_dim == 168);
    CHECK(window_sequence(wide).size() == 3);
    CHECK(window_sequence(wide, {6, 3, 40, Extractor::MartiBunke}).frame_dim == 9);
    CHECK(frame_columns(window_sequence(wide), 2) == std::pair<int, int>{6, 12});
    try {
      (void)window_sequence(tiny);
      FAIL("expected ImageTooNarrow");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::ImageTooNarrow);
    }
    const BilevelImage w = fixture::glyph("light", 1, 60);
    const FeatureSequence seq = window_sequence(w);
    const int nw = normalize_height(w, 40).width();
    CHECK(static_cast<int>(seq.size()) == (nw - 6) / 3 + 1);
    for (const auto& f : seq.frames) CHECK(f.size() == 168);
  }

  TEST_CASE("feature dump round trip") {
    FeatureRecord r{"img7", "phog", 2, 3, {0.1, 1.0 / 3.0, -2.5e-300, 7.0, 1e17, std::nextafter(1.0, 2.0)}};
    std::stringstream ss;
    write_feature_record(ss, r);
    write_feature_record(ss, FeatureRecord{"b", "marti_bunke", 1, 1, {42.0}});
    const auto back = read_feature_dump(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "img7");
    CHECK(back[0].frames == 2);
    CHECK(back[0].dim == 3);
    CHECK(back[0].values == r.values);
    CHECK(back[1].values == Vector{42.0});
    std::stringstream bad;
    CHECK_THROWS_AS(write_feature_record(bad, FeatureRecord{"x", "phog", 2, 2, {1.0}}), Error);
  }
}
