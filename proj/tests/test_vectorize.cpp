#include <doctest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "synthhw/error.hpp"
#include "synthhw/skeleton.hpp"
#include "synthhw/vectorize.hpp"

using namespace synthhw;

namespace {

double seg_dist(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y, l2 = dx * dx + dy * dy;
  double t = l2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / l2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - a.x - t * dx, p.y - a.y - t * dy);
}

// Largest distance from any ink pixel of `a` to the nearest ink pixel of `b`.
double directed_hausdorff(const BilevelImage& a, const BilevelImage& b) {
  std::vector<Point> pb;
  for (int y = 0; y < b.height(); ++y)
    for (int x = 0; x < b.width(); ++x)
      if (b.at(x, y)) pb.push_back({x, y});
  double worst = 0.0;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!a.at(x, y)) continue;
      double best = 1e18;
      for (const auto& q : pb) best = std::min(best, std::hypot(q.x - x, q.y - y));
      worst = std::max(worst, best);
    }
  return worst;
}

BilevelImage t_shape() {
  return fixture::from_rows({
      "...........",
      ".#########.",
      ".....#.....",
      ".....#.....",
      ".....#.....",
      ".....#.....",
      "...........",
  });
}

}  // namespace

TEST_SUITE("vectorize") {
  TEST_CASE("straight line is one chain") {
    const TraceResult t = trace_chains(fixture::from_rows({"......", ".####.", "......"}));
    CHECK(t.chains.size() == 1);
    CHECK(t.junctions.empty());
    CHECK(t.chains[0].pixels.size() == 4);
  }

  TEST_CASE("T shape: three chains meeting at one junction") {
    const TraceResult t = trace_chains(t_shape());
    CHECK(t.junctions.size() == 1);
    CHECK(t.chains.size() == 3);
    for (const auto& c : t.chains) CHECK(c.start_node == 0);
  }

  TEST_CASE("rasterized circle is one closed chain covering every pixel") {
    BilevelImage img(40, 40);
    for (int k = 0; k < 64; ++k) {
      const double a0 = 2 * 3.14159265358979 * k / 64, a1 = 2 * 3.14159265358979 * (k + 1) / 64;
      const Point p0{static_cast<int>(std::lround(20 + 12 * std::cos(a0))),
                     static_cast<int>(std::lround(20 + 12 * std::sin(a0)))};
      const Point p1{static_cast<int>(std::lround(20 + 12 * std::cos(a1))),
                     static_cast<int>(std::lround(20 + 12 * std::sin(a1)))};
      for (auto p : bresenham_line(p0, p1)) img.set(p.x, p.y);
    }
    const BilevelImage skel = skeletonize(img);
    const TraceResult t = trace_chains(skel);
    REQUIRE(t.chains.size() == 1);
    CHECK(t.chains[0].closed);
    CHECK(t.junctions.empty());
    CHECK(t.chains[0].pixels.size() == skel.count());
    const Point top = t.chains[0].pixels.front();
    for (const auto& p : t.chains[0].pixels) CHECK_FALSE(p < top);
  }

  TEST_CASE("polygonal approximation cases") {
    std::vector<Point> straight;
    for (int x = 0; x <= 20; ++x) straight.push_back({x, 5});
    CHECK(polygonal_approx(straight).size() == 2);

    std::vector<Point> ell;
    for (int y = 0; y <= 10; ++y) ell.push_back({0, y});
    for (int x = 1; x <= 10; ++x) ell.push_back({x, 10});
    const auto v = polygonal_approx(ell);
    REQUIRE(v.size() == 3);
    CHECK(v[1] == Point{0, 10});
    CHECK(v.front() == ell.front());
    CHECK(v.back() == ell.back());

    std::vector<Point> arc;
    for (int x = 0; x <= 40; ++x) {
      const double y = 2.0 * (1.0 - std::pow((x - 20) / 20.0, 2));
      arc.push_back({x, static_cast<int>(std::lround(y))});
    }
    CHECK(polygonal_approx(arc).size() == 2);
  }

  TEST_CASE("every chain pixel stays within tolerance of its segment") {
    for (const auto& g : fixture::digit_corpus()) {
      const TraceResult t = trace_chains(skeletonize(g));
      for (const auto& c : t.chains) {
        if (c.pixels.size() < 2) continue;
        const auto v = polygonal_approx(c.pixels);
        CHECK(v.front() == c.pixels.front());
        CHECK(v.back() == c.pixels.back());
        for (const auto& p : c.pixels) {
          double best = 1e18;
          for (std::size_t i = 0; i + 1 < v.size(); ++i) best = std::min(best, seg_dist(p, v[i], v[i + 1]));
          CHECK(best < 3.0);
        }
      }
    }
  }

  TEST_CASE("chains and junction pixels partition the skeleton") {
    for (const auto& g : fixture::digit_corpus()) {
      const BilevelImage skel = skeletonize(g);
      const TraceResult t = trace_chains(skel);
      std::set<Point> seen;
      std::size_t total = 0;
      for (const auto& c : t.chains) {
        total += c.pixels.size();
        seen.insert(c.pixels.begin(), c.pixels.end());
      }
      for (const auto& j : t.junctions) {
        total += j.pixels.size();
        seen.insert(j.pixels.begin(), j.pixels.end());
      }
      CHECK(total == skel.count());
      CHECK(seen.size() == skel.count());
    }
  }

  TEST_CASE("rasterize_model") {
    VectorModel one{10, 6, {{{{1, 1}, {8, 4}}}}, {}, {}};
    BilevelImage want(10, 6);
    for (auto p : bresenham_line({1, 1}, {8, 4})) want.set(p.x, p.y);
    CHECK(rasterize_model(one) == want);
    CHECK(rasterize_model(VectorModel{7, 5, {}, {}, {}}) == BilevelImage(7, 5));

    const VectorModel tm = vectorize(t_shape());
    CHECK(tm.junctions.size() == 1);
    CHECK(tm.junctions[0].incident.size() == 3);
    CHECK(count_components(rasterize_model(tm)) == 1);

    VectorModel bad = one;
    bad.polylines[0].vertices[1] = {10, 2};
    try {
      (void)rasterize_model(bad);
      FAIL("expected OutOfBounds");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::OutOfBounds);
    }
  }

  TEST_CASE("vector model invariants and round-trip fidelity on glyphs") {
    for (const auto& g : fixture::digit_corpus()) {
      const BilevelImage skel = skeletonize(g);
      const VectorModel vm = vectorize(skel);
      for (const auto& pl : vm.polylines) {
        CHECK(pl.vertices.size() >= 2);
        for (std::size_t i = 1; i < pl.vertices.size(); ++i) CHECK(pl.vertices[i] != pl.vertices[i - 1]);
      }
      for (const auto& j : vm.junctions) {
        CHECK(j.incident.size() >= 3);
        for (const auto& inc : j.incident) CHECK(vm.endpoint(inc) == j.point);
      }
      // Skeleton pixels lie under 3 px from their segment and Bresenham
      // pixels within half a pixel per axis of it.
      const double bound = 3.0 + std::sqrt(0.5);
      const BilevelImage r = rasterize_model(vm);
      CHECK(directed_hausdorff(skel, r) < bound);
      CHECK(directed_hausdorff(r, skel) < bound);
      CHECK(count_components(r) == count_components(skel));
    }
  }

  TEST_CASE("text form round trip") {
    const VectorModel vm = vectorize(skeletonize(fixture::glyph("4", 2)));
    const VectorModel back = parse_vector_model(to_text(vm));
    CHECK(to_text(back) == to_text(vm));
    CHECK(rasterize_model(back) == rasterize_model(vm));
    CHECK_THROWS_AS(parse_vector_model("vectormodel 2\n"), Error);
  }
}
