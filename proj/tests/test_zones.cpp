#include <doctest.h>

#include "oracles.hpp"
#include "synthhw/error.hpp"
#include "synthhw/zones.hpp"

using namespace synthhw;

namespace {

void fill(BilevelImage& img, int x0, int y0, int x1, int y1) {  // inclusive
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) img.set(x, y);
}

// Marks above a 3-row bar (rows 10-12), a body down to row 30 and a thin
// descender in rows 35-44.
BilevelImage three_band() {
  BilevelImage img(60, 50);
  fill(img, 10, 2, 14, 6);
  fill(img, 2, 10, 57, 12);
  for (int x0 : {5, 20, 35, 50}) fill(img, x0, 13, x0 + 5, 30);
  fill(img, 21, 35, 23, 44);
  return img;
}

BilevelImage stack(const ZoneDecomposition& z) {
  const int w = z.middle.width();
  BilevelImage out(w, z.upper.height() + z.middle.height() + z.lower.height());
  int row = 0;
  for (const BilevelImage* part : {&z.upper, &z.middle, &z.lower}) {
    for (int y = 0; y < part->height(); ++y)
      for (int x = 0; x < w; ++x) out.set(x, row + y, part->at(x, y));
    row += part->height();
  }
  return out;
}

// Filled disc of radius r centred at (cx, cy).
void disc(BilevelImage& img, int cx, int cy, int r) {
  for (int y = cy - r; y <= cy + r; ++y)
    for (int x = cx - r; x <= cx + r; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.set(x, y);
}

// Two-pixel-thick rising diagonal stroke from (x0, y0) over n columns.
void stroke(BilevelImage& img, int x0, int y0, int n) {
  for (int k = 0; k < n; ++k) {
    img.set(x0 + k, y0 - k / 2);
    img.set(x0 + k, y0 - k / 2 + 1);
  }
}

SvmModel modifier_model() {
  std::vector<Vector> x;
  std::vector<std::string> y;
  for (int s = 0; s < 4; ++s) {
    BilevelImage d(20, 20), b(40, 24);
    disc(d, 10, 10, 4 + s);
    stroke(b, 2, 20, 20 + 4 * s);
    x.push_back(modifier_features(crop_to_content(d, 0)));
    y.push_back("dot");
    x.push_back(modifier_features(crop_to_content(b, 0)));
    y.push_back("stroke");
  }
  return multiclass_train(x, y);
}

}  // namespace

TEST_SUITE("zones") {
  TEST_CASE("headline detection") {
    BilevelImage img(40, 40);
    fill(img, 0, 12, 39, 12);
    fill(img, 5, 13, 7, 35);
    CHECK(detect_matra(img) == 12);
    const ZoneDecomposition z = split_zones(img);
    CHECK(z.has_matra);
    CHECK(z.upper.height() == 12);
    CHECK(z.upper.count() == 0);

    BilevelImage thick(40, 40);
    fill(thick, 0, 10, 39, 12);
    fill(thick, 5, 13, 7, 35);
    const int r = detect_matra(thick);
    CHECK(r >= 10);
    CHECK(r <= 12);
    CHECK_THROWS_AS(detect_matra(BilevelImage(5, 5)), Error);
  }

  TEST_CASE("inserted bars are found on every corpus glyph") {
    for (const auto& g : fixture::digit_corpus()) {
      BilevelImage img = pad(g, 0, 10, 0, 0);
      fill(img, 0, 4, img.width() - 1, 6);
      const int r = detect_matra(img);
      CHECK(r >= 4);
      CHECK(r <= 6);
    }
  }

  TEST_CASE("three-band fixture") {
    const BilevelImage img = three_band();
    const ZoneDecomposition z = split_zones(img);
    CHECK(z.has_matra);
    CHECK(std::abs(z.matra_row - 10) <= 2);
    CHECK(std::abs(z.baseline_row - 30) <= 2);
    CHECK(z.upper.count() > 0);
    CHECK(z.middle.count() > 0);
    CHECK(z.lower.count() > 0);
    CHECK(stack(z) == img);
  }

  TEST_CASE("words without a headline stay in the middle zone") {
    // Serif x-height lines reach about two thirds of the width in printed
    // Latin words, so the gate is raised above that for this check.
    ZoneOptions opt;
    opt.matra_gate = 0.75;
    for (std::size_t f = 0; f < fixture::fonts().size(); ++f)
      for (const char* text : {"water", "money", "zebra"}) {
        const BilevelImage w = fixture::glyph(text, f, 60);
        const ZoneDecomposition z = split_zones(w, opt);
        CHECK_FALSE(z.has_matra);
        CHECK(z.upper.height() == 0);
        CHECK(z.lower.height() == 0);
        CHECK(stack(z) == w);
        CHECK(stack(split_zones(w)) == w);
      }
  }

  TEST_CASE("modifier classification") {
    const SvmModel m = modifier_model();
    CHECK(classify_modifiers(BilevelImage(20, 0), Zone::Upper, m).empty());
    CHECK(classify_modifiers(BilevelImage(20, 8), Zone::Upper, m).empty());

    BilevelImage zone(80, 18);
    disc(zone, 55, 8, 5);
    const auto one = classify_modifiers(zone, Zone::Lower, m);
    REQUIRE(one.size() == 1);
    CHECK(one[0].zone == Zone::Lower);
    CHECK(one[0].x0 == 50);
    CHECK(one[0].x1 == 61);
    CHECK(one[0].label == "dot");

    stroke(zone, 5, 15, 26);
    const auto two = classify_modifiers(zone, Zone::Upper, m);
    REQUIRE(two.size() == 2);
    CHECK(two[0].x0 == 5);
    CHECK(two[0].x1 == 31);
    CHECK(two[0].label == "stroke");
    CHECK(two[1].label == "dot");
  }

  TEST_CASE("composition rules") {
    const auto rules = read_composition_rules(synthhw::data_dir() / "rules" / "devanagari.tsv");
    CHECK(rules.size() == 7);
    CHECK(rules[0].label == "e_sign");
    CHECK(rules[4].placement == Zone::Lower);
    const auto parsed = parse_composition_rules("# c\nm\tupper\t^\tab\n");
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].bases == std::vector<std::string>{"a", "b"});
    try {
      (void)parse_composition_rules("m\tsideways\t^\n");
      FAIL("expected Parse");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Parse);
    }
  }

  TEST_CASE("frame spans map to pixel columns") {
    const std::vector<std::pair<int, int>> frames{{0, 2}, {2, 5}};
    CHECK(pixel_spans(frames, 6, 3, 1.0) == std::vector<std::pair<int, int>>{{0, 9}, {6, 18}});
    CHECK(pixel_spans(frames, 6, 3, 2.0) == std::vector<std::pair<int, int>>{{0, 18}, {12, 36}});
  }

  TEST_CASE("combining modifiers with N-best hypotheses") {
    const std::vector<CompositionRule> rules{{"m", Zone::Upper, "^", {"c"}}, {"u", Zone::Lower, "_", {}}};
    const std::vector<Hypothesis> nbest{{"ab", -10.0, {}}, {"cb", -11.0, {}}};
    const std::vector<std::vector<std::pair<int, int>>> spans{{{0, 10}, {10, 20}}, {{0, 10}, {10, 20}}};

    const CombinedWord none = combine_word(nbest, {}, spans, rules);
    CHECK(none.transcription == "ab");
    CHECK(none.hypothesis == 0);

    const std::vector<ModifierHypothesis> low{{Zone::Lower, 12, 18, "u", 1.0}};
    CHECK(combine_word(nbest, low, spans, rules).transcription == "ab_");

    const std::vector<ModifierHypothesis> strong{{Zone::Upper, 2, 8, "m", 2.0}};
    const CombinedWord pick = combine_word(nbest, strong, spans, rules);
    CHECK(pick.hypothesis == 1);
    CHECK(pick.transcription == "c^b");
    CHECK(pick.score == doctest::Approx(-9.0));

    const std::vector<ModifierHypothesis> weak{{Zone::Upper, 2, 8, "m", 0.3}};
    CombineOptions no_penalty;
    no_penalty.penalty = 0.0;
    const CombinedWord keep = combine_word(nbest, weak, spans, rules, no_penalty);
    CHECK(keep.hypothesis == 0);
    CHECK(keep.transcription == "ab");

    const std::vector<Hypothesis> tied{{"cb", -5.0, {}}, {"cb", -5.0, {}}};
    CHECK(combine_word(tied, strong, spans, rules).hypothesis == 0);
    CHECK_THROWS_AS(combine_word(std::vector<Hypothesis>{}, strong, {}, rules), Error);
  }
}
