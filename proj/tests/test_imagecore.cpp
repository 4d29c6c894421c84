#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>
#include <random>
#include <set>

#include "oracles.hpp"
#include "synthhw/error.hpp"
#include "synthhw/image.hpp"

using namespace synthhw;

TEST_SUITE("imagecore") {
  TEST_CASE("bresenham degenerate and diagonal") {
    CHECK(bresenham_line({2, 2}, {2, 2}) == std::vector<Point>{{2, 2}});
    CHECK(bresenham_line({0, 0}, {3, 3}) == std::vector<Point>{{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  }

  TEST_CASE("bresenham (0,0)-(5,2) follows the rounded line per column") {
    const auto pts = bresenham_line({0, 0}, {5, 2});
    REQUIRE(pts.size() == 6);
    for (int x = 0; x <= 5; ++x) {
      CHECK(pts[x].x == x);
      CHECK(pts[x].y == static_cast<int>(std::floor(x * 2.0 / 5.0 + 0.5)));
    }
    CHECK(oracle::is_digital_line(pts, {0, 0}, {5, 2}));
  }

  TEST_CASE("bresenham is a digital line and endpoint-symmetric on a 10x10 grid") {
    for (int a = 0; a < 100; ++a)
      for (int b = 0; b < 100; ++b) {
        const Point p0{a % 10, a / 10}, p1{b % 10, b / 10};
        const auto fwd = bresenham_line(p0, p1);
        auto rev = bresenham_line(p1, p0);
        REQUIRE(oracle::is_digital_line(fwd, p0, p1));
        std::reverse(rev.begin(), rev.end());
        REQUIRE(fwd == rev);
      }
  }

  TEST_CASE("connected components") {
    CHECK(connected_components(BilevelImage(5, 5)).empty());
    const auto blocks = fixture::from_rows({"##..", "##..", "....", "..##", "..##"});
    CHECK(count_components(blocks) == 2);
    const auto diag = fixture::from_rows({"#.", ".#"});
    CHECK(count_components(diag, Connectivity::Eight) == 1);
    CHECK(count_components(diag, Connectivity::Four) == 2);
  }

  TEST_CASE("components partition the foreground") {
    std::mt19937 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
      BilevelImage img(23, 17);
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) img.set(x, y, gen() % 3 == 0);
      for (auto conn : {Connectivity::Four, Connectivity::Eight}) {
        std::set<Point> seen;
        std::size_t total = 0;
        for (const auto& c : connected_components(img, conn)) {
          total += c.pixels.size();
          for (const auto& p : c.pixels) {
            CHECK(img.at(p.x, p.y));
            seen.insert(p);
          }
        }
        CHECK(total == img.count());
        CHECK(seen.size() == img.count());
      }
    }
  }

  TEST_CASE("horizontal projection") {
    const auto h0 = horizontal_projection(BilevelImage(4, 3));
    CHECK(std::all_of(h0.begin(), h0.end(), [](int v) { return v == 0; }));
    CHECK(horizontal_projection(fixture::from_rows({"###", "###", "###"})) == std::vector<int>{3, 3, 3});
    BilevelImage row(10, 10);
    for (int x = 0; x < 10; ++x) row.set(x, 4);
    const auto hp = horizontal_projection(row);
    CHECK(hp[4] == 10);
    CHECK(std::accumulate(hp.begin(), hp.end(), 0) == 10);
  }

  TEST_CASE("resize_gray matches the bilinear formula") {
    GrayImage flat(7, 5, 90);
    CHECK(resize_gray(flat, 13, 3) == GrayImage(13, 3, 90));

    GrayImage dot(3, 3, 255);
    dot.set(1, 1, 0);
    CHECK(resize_gray(dot, 3, 3) == dot);
    const GrayImage up = resize_gray(dot, 6, 6);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) {
        const double want = oracle::bilinear(dot, (x + 0.5) / 2.0 - 0.5, (y + 0.5) / 2.0 - 0.5);
        CHECK(std::abs(up.at(x, y) - want) <= 0.5 + 1e-9);
      }
    CHECK(up.at(2, 2) < 255);
    CHECK(up.at(2, 2) == up.at(3, 3));
  }

  TEST_CASE("shear_columns") {
    const auto bar = fixture::from_rows({"...", "###", "...", "...", "..."});
    CHECK(shear_columns(bar, 0, 2, 0.0) == bar);
    CHECK(shear_columns(bar, 1, 1, 5.0) == bar);
    const auto st = shear_columns(bar, 0, 2, 1.0);
    CHECK(st.at(0, 1));
    CHECK(st.at(1, 2));
    CHECK(st.at(2, 3));
    CHECK(st.count() == 3);
    CHECK(shear_columns(st, 0, 2, -1.0) == bar);
  }

  TEST_CASE("shear round trip with fractional slopes") {
    std::mt19937 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
      BilevelImage img(20, 40);
      for (int y = 15; y < 25; ++y)
        for (int x = 0; x < 20; ++x) img.set(x, y, gen() % 2);
      const double slope = (static_cast<int>(gen() % 200) - 100) / 100.0;
      CHECK(shear_columns(shear_columns(img, 2, 17, slope), 2, 17, -slope) == img);
    }
  }

  TEST_CASE("shear rejects bad ranges") {
    CHECK_THROWS_AS(shear_columns(BilevelImage(3, 3), 2, 1, 1.0), Error);
    CHECK_THROWS_AS(shear_columns(BilevelImage(3, 3), 0, 3, 1.0), Error);
  }

  TEST_CASE("PBM and PGM round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "synthhw_imagecore";
    std::filesystem::create_directories(dir);
    std::mt19937 gen(11);
    BilevelImage b(13, 7);
    GrayImage g(9, 4);
    for (int y = 0; y < b.height(); ++y)
      for (int x = 0; x < b.width(); ++x) b.set(x, y, gen() % 2);
    for (auto& s : g.samples()) s = static_cast<std::uint8_t>(gen());
    write_pbm(b, dir / "b.pbm");
    write_pgm(g, dir / "g.pgm");
    CHECK(read_pbm(dir / "b.pbm") == b);
    CHECK(read_pgm(dir / "g.pgm") == g);
    CHECK_THROWS_AS(read_pbm(dir / "missing.pbm"), Error);
  }
}
