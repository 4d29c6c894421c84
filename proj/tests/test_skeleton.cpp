#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "synthhw/skeleton.hpp"

using namespace synthhw;

namespace {

bool has_full_2x2(const BilevelImage& img) {
  for (int y = 0; y + 1 < img.height(); ++y)
    for (int x = 0; x + 1 < img.width(); ++x)
      if (img.at(x, y) && img.at(x + 1, y) && img.at(x, y + 1) && img.at(x + 1, y + 1)) return true;
  return false;
}

int neighbours(const BilevelImage& img, int x, int y) {
  int n = 0;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) n += (dx || dy) && img.get(x + dx, y + dy);
  return n;
}

bool subset(const BilevelImage& a, const BilevelImage& b) {
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      if (a.at(x, y) && !b.at(x, y)) return false;
  return true;
}

void check_skeleton(const BilevelImage& img) {
  const BilevelImage s = skeletonize(img);
  CHECK(subset(s, img));
  CHECK(count_components(s) == count_components(img));
  CHECK_FALSE(has_full_2x2(s));
  for (int y = 0; y < s.height(); ++y)
    for (int x = 0; x < s.width(); ++x)
      if (s.at(x, y)) CHECK((!is_simple_point(s, x, y) || neighbours(s, x, y) <= 1));
  CHECK(skeletonize(s) == s);
}

}  // namespace

TEST_SUITE("skeletonize") {
  TEST_CASE("chamfer distance definition cases") {
    BilevelImage dot(5, 5);
    dot.set(2, 2);
    CHECK(chamfer_34(dot).at(2, 2) == 3);
    CHECK(chamfer_34(dot).at(0, 0) == 0);
    const DistanceMap block = chamfer_34(fixture::from_rows({"###", "###", "###"}));
    CHECK(block.at(0, 0) == 3);
    CHECK(block.at(1, 0) == 3);
    CHECK(block.at(1, 1) == 6);
    const DistanceMap blank = chamfer_34(BilevelImage(4, 3));
    for (int v : blank.values) CHECK(v == 0);
  }

  TEST_CASE("chamfer matches weighted shortest paths") {
    std::mt19937 gen(5);
    for (int trial = 0; trial < 30; ++trial) {
      BilevelImage img(17, 13);
      for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) img.set(x, y, gen() % 5 != 0);
      CHECK(chamfer_34(img).values == oracle::chamfer(img));
    }
    const BilevelImage glyph = fixture::glyph("8", 0);
    CHECK(chamfer_34(glyph).values == oracle::chamfer(glyph));
  }

  TEST_CASE("thin inputs and blanks") {
    const BilevelImage line = fixture::from_rows({".......", ".#####.", "......."});
    CHECK(skeletonize(line) == line);
    CHECK(skeletonize(BilevelImage(6, 6)) == BilevelImage(6, 6));
  }

  TEST_CASE("5x5 block thins to one centred component") {
    BilevelImage block(9, 9);
    for (int y = 2; y < 7; ++y)
      for (int x = 2; x < 7; ++x) block.set(x, y);
    const BilevelImage s = skeletonize(block);
    CHECK(s.count() >= 1);
    CHECK(s.at(4, 4));
    check_skeleton(block);
  }

  TEST_CASE("random blobs keep topology") {
    std::mt19937 gen(9);
    for (int trial = 0; trial < 40; ++trial) {
      BilevelImage img(24, 20);
      for (int k = 0; k < 6; ++k) {
        const int x0 = gen() % 20, y0 = gen() % 16, w = 2 + gen() % 8, h = 2 + gen() % 8;
        for (int y = y0; y < std::min(20, y0 + h); ++y)
          for (int x = x0; x < std::min(24, x0 + w); ++x) img.set(x, y);
      }
      check_skeleton(img);
    }
  }

  TEST_CASE("rendered glyphs keep topology") {
    for (const auto& g : fixture::digit_corpus()) check_skeleton(g);
  }
}
