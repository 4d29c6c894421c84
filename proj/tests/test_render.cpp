#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "synthhw/error.hpp"
#include "synthhw/render.hpp"

using namespace synthhw;

namespace {

// Exhaustive Otsu: maximal between-class variance over all cut points, with
// the dark class being samples < t.
double best_between_class(const GrayImage& img) {
  double best = -1.0;
  const double n = static_cast<double>(img.samples().size());
  for (int t = 1; t <= 255; ++t) {
    double n0 = 0, s0 = 0, s1 = 0;
    for (auto v : img.samples()) {
      if (v < t) {
        ++n0;
        s0 += v;
      } else {
        s1 += v;
      }
    }
    const double n1 = n - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double m0 = s0 / n0, m1 = s1 / n1;
    best = std::max(best, n0 * n1 * (m0 - m1) * (m0 - m1) / (n * n));
  }
  return best;
}

double between_class(const GrayImage& img, int t) {
  double n0 = 0, s0 = 0, s1 = 0;
  const double n = static_cast<double>(img.samples().size());
  for (auto v : img.samples()) {
    if (v < t) {
      ++n0;
      s0 += v;
    } else {
      s1 += v;
    }
  }
  const double n1 = n - n0;
  if (n0 == 0 || n1 == 0) return -1.0;
  return n0 * n1 * (s0 / n0 - s1 / n1) * (s0 / n0 - s1 / n1) / (n * n);
}

}  // namespace

TEST_SUITE("render") {
  TEST_CASE("a rendered numeral has digit-sized ink and tight margins") {
    const GrayImage g = render_text({"1", Script::Latin, TextKind::Numeral}, fixture::font_ref(0));
    const BilevelImage b = binarize(g);
    const Box ink = b.ink_box();
    REQUIRE(!ink.empty());
    CHECK(ink.height() > 0.5 * 150);
    CHECK(ink.height() < 1.1 * 150);
    CHECK(ink.x0 <= 15);
    CHECK(ink.y0 <= 15);
    CHECK(g.width() - 1 - ink.x1 <= 15);
    CHECK(g.height() - 1 - ink.y1 <= 15);
  }

  TEST_CASE("two fonts render differently") {
    const TextItem item{"5", Script::Latin, TextKind::Numeral};
    const BilevelImage a = binarize(render_text(item, fixture::font_ref(0)));
    const BilevelImage b = binarize(render_text(item, fixture::font_ref(2)));
    const int w = std::max(a.width(), b.width()), h = std::max(a.height(), b.height());
    int diff = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) diff += a.get(x, y) != b.get(x, y);
    CHECK(diff >= 0.01 * w * h);
  }

  TEST_CASE("rendering is deterministic") {
    const TextItem item{"river", Script::Latin, TextKind::Word};
    CHECK(render_text(item, fixture::font_ref(1, 60)) == render_text(item, fixture::font_ref(1, 60)));
  }

  TEST_CASE("missing glyphs and fonts are reported") {
    const TextItem item{"\xee\x80\x80", Script::Other, TextKind::Character};  // U+E000
    try {
      (void)render_text(item, fixture::font_ref(0));
      FAIL("expected MissingGlyph");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MissingGlyph);
    }
    try {
      (void)render_text({"1", Script::Latin, TextKind::Numeral}, FontRef{"none", "/nonexistent.ttf", 150});
      FAIL("expected FontLoad");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::FontLoad);
    }
  }

  TEST_CASE("binarize extremes") {
    CHECK(binarize(GrayImage(5, 4, 255)).count() == 0);
    CHECK(binarize(GrayImage(5, 4, 0)).count() == 20);
    CHECK(binarize(GrayImage(5, 4, 255), 128).count() == 0);
    CHECK(binarize(GrayImage(5, 4, 0), 128).count() == 20);
  }

  TEST_CASE("Otsu threshold agrees with the exhaustive scan") {
    GrayImage img(10, 10, 200);
    for (int y = 0; y < 10; ++y)
      for (int x = 0; x < 4; ++x) img.set(x, y, 40);
    const int t = otsu_threshold(img);
    CHECK(t > 40);
    CHECK(t <= 200);
    CHECK(binarize(img).count() == 40);
    CHECK(between_class(img, t) == doctest::Approx(best_between_class(img)));

    const GrayImage glyph = render_text({"8", Script::Latin, TextKind::Numeral}, fixture::font_ref(2));
    CHECK(between_class(glyph, otsu_threshold(glyph)) == doctest::Approx(best_between_class(glyph)).epsilon(1e-12));
  }

  TEST_CASE("binarize is monotone in the threshold") {
    const GrayImage g = render_text({"3", Script::Latin, TextKind::Numeral}, fixture::font_ref(0));
    std::size_t prev = 0;
    for (int t = 0; t <= 256; t += 8) {
      const std::size_t c = binarize(g, t).count();
      CHECK(c >= prev);
      prev = c;
    }
  }

  TEST_CASE("crop_to_content") {
    BilevelImage one(5, 5);
    one.set(2, 3);
    const BilevelImage c1 = crop_to_content(one, 0);
    CHECK(c1.width() == 1);
    CHECK(c1.height() == 1);

    BilevelImage block(10, 10);
    for (int y = 3; y < 7; ++y)
      for (int x = 3; x < 7; ++x) block.set(x, y);
    const BilevelImage c2 = crop_to_content(block, 1);
    CHECK(c2.width() == 6);
    CHECK(c2.height() == 6);
    CHECK(c2.count() == block.count());
    CHECK(crop_to_content(block, 50).width() == 10);

    try {
      (void)crop_to_content(BilevelImage(4, 4), 1);
      FAIL("expected EmptyImage");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptyImage);
    }
  }

  TEST_CASE("label file ingestion") {
    const auto dir = std::filesystem::temp_directory_path() / "synthhw_render_labels";
    std::filesystem::create_directories(dir);
    write_pbm(fixture::from_rows({"#.", ".#"}), dir / "a.pbm");
    GrayImage g(4, 4, 255);
    g.set(1, 1, 0);
    write_pgm(g, dir / "b.pgm");
    std::ofstream(dir / "labels.tsv") << "a.pbm\tab\tlatin\nb.pgm\t\xe0\xa4\x95\tdevanagari\n";
    const auto items = read_label_file(dir / "labels.tsv");
    REQUIRE(items.size() == 2);
    CHECK(items[1].script == Script::Devanagari);
    CHECK(items[1].text == "\xe0\xa4\x95");
    CHECK(load_bilevel(items[0].path).count() == 2);
    CHECK(load_bilevel(items[1].path).count() == 1);
  }

  TEST_CASE("utf8 round trip") {
    const std::string s = "a\xe0\xa4\x95\xe0\xa5\x87z";
    CHECK(encode_utf8(decode_utf8(s)) == s);
    CHECK(utf8_chars(s).size() == 4);
  }
}
