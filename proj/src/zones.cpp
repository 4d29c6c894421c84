#include "synthhw/zones.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "synthhw/error.hpp"
#include "synthhw/render.hpp"

namespace synthhw {

namespace {

std::pair<int, int> ink_rows(const std::vector<int>& proj) {
  int top = -1, bottom = -1;
  for (int r = 0; r < static_cast<int>(proj.size()); ++r)
    if (proj[r] > 0) {
      if (top < 0) top = r;
      bottom = r;
    }
  return {top, bottom};
}

BilevelImage rows(const BilevelImage& img, int r0, int r1) {  // [r0, r1)
  if (r1 <= r0) return BilevelImage(img.width(), 0);
  return crop(img, Box{0, r0, img.width() - 1, r1 - 1});
}

}  // namespace

int detect_matra(const BilevelImage& img) {
  const std::vector<int> proj = horizontal_projection(img);
  const auto [top, bottom] = ink_rows(proj);
  if (top < 0) fail(ErrorKind::EmptyImage, "no ink to locate a headline in");
  const int span = std::max(1, (bottom - top + 1) / 2);
  int best = top;
  for (int r = top; r < top + span; ++r)
    if (proj[r] > proj[best]) best = r;
  return best;
}

ZoneDecomposition split_zones(const BilevelImage& img, const ZoneOptions& opt) {
  const std::vector<int> proj = horizontal_projection(img);
  const auto [top, bottom] = ink_rows(proj);
  if (top < 0) fail(ErrorKind::EmptyImage, "cannot split an empty image into zones");
  const int h = img.height();
  ZoneDecomposition z;
  const int peak = detect_matra(img);
  z.has_matra = proj[peak] > opt.matra_gate * img.width();
  if (!z.has_matra || h < 2) {
    z.matra_row = 0;
    z.baseline_row = h - 1;
  } else {
    // The bar is the run of rows around the peak that stay close to it.
    int bar_top = peak, bar_bottom = peak;
    const double keep = 0.8 * proj[peak];
    while (bar_top > 0 && proj[bar_top - 1] >= keep) --bar_top;
    while (bar_bottom + 1 < h && proj[bar_bottom + 1] >= keep) ++bar_bottom;
    z.matra_row = bar_top;

    int mid_max = 0;
    for (int r = bar_bottom + 1; r <= bottom; ++r) mid_max = std::max(mid_max, proj[r]);
    int base = bottom;
    if (mid_max > 0) {
      const double thr = opt.baseline_beta * mid_max;
      while (base > bar_bottom + 1 && proj[base] < thr) --base;
    }
    z.baseline_row = std::max(base, z.matra_row + 1);
    z.baseline_row = std::min(z.baseline_row, h - 1);
    if (z.baseline_row <= z.matra_row) z.matra_row = z.baseline_row - 1;
  }
  z.upper = rows(img, 0, z.matra_row);
  z.middle = rows(img, z.matra_row, z.baseline_row + 1);
  z.lower = rows(img, z.baseline_row + 1, h);
  return z;
}

std::string to_string(Zone z) { return z == Zone::Upper ? "upper" : "lower"; }

Vector modifier_features(const BilevelImage& component) {
  return phog(resize_gray(to_gray(component), 150, 150));
}

std::vector<ModifierHypothesis> classify_modifiers(const BilevelImage& zone, Zone which, const SvmModel& model) {
  std::vector<ModifierHypothesis> out;
  if (zone.height() == 0 || zone.width() == 0) return out;
  for (const Component& c : connected_components(zone)) {
    const Vector f = modifier_features(c.mask());
    const Vector dv = decision_values(model, f);
    const std::size_t best = static_cast<std::size_t>(std::max_element(dv.begin(), dv.end()) - dv.begin());
    out.push_back({which, c.box.x0, c.box.x1 + 1, model.labels[best], dv[best]});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x0 < b.x0; });
  return out;
}

std::vector<CompositionRule> parse_composition_rules(const std::string& text) {
  std::vector<CompositionRule> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, '\t');) f.push_back(cell);
    if (f.size() < 3 || f[0].empty())
      fail(ErrorKind::Parse, "composition rules line " + std::to_string(lineno) + ": expected label, placement, grapheme");
    CompositionRule r;
    r.label = f[0];
    if (f[1] == "upper")
      r.placement = Zone::Upper;
    else if (f[1] == "lower")
      r.placement = Zone::Lower;
    else
      fail(ErrorKind::Parse, "composition rules line " + std::to_string(lineno) + ": placement '" + f[1] + "'");
    r.grapheme = f[2];
    if (f.size() > 3) r.bases = utf8_chars(f[3]);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<CompositionRule> read_composition_rules(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_composition_rules(ss.str());
}

std::vector<std::pair<int, int>> pixel_spans(std::span<const std::pair<int, int>> frames, int win_w, int step,
                                             double scale) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [first, last] : frames) {
    const int x0 = static_cast<int>(std::floor(first * step * scale));
    const int x1 = static_cast<int>(std::ceil(((last - 1) * step + win_w) * scale));
    out.emplace_back(x0, std::max(x0 + 1, x1));
  }
  return out;
}

CombinedWord combine_word(std::span<const Hypothesis> nbest, std::span<const ModifierHypothesis> modifiers,
                          std::span<const std::vector<std::pair<int, int>>> char_spans,
                          std::span<const CompositionRule> rules, const CombineOptions& opt) {
  require(!nbest.empty(), ErrorKind::Precondition, "N-best list is empty");
  require(char_spans.size() == nbest.size(), ErrorKind::LengthMismatch, "one span list per hypothesis is required");

  double penalty = 0.0;
  if (opt.penalty) {
    penalty = *opt.penalty;
  } else if (!modifiers.empty()) {
    std::vector<double> c;
    for (const auto& m : modifiers) c.push_back(m.confidence);
    std::sort(c.begin(), c.end());
    penalty = c.size() % 2 ? c[c.size() / 2] : 0.5 * (c[c.size() / 2 - 1] + c[c.size() / 2]);
  }

  auto rule_for = [&](const ModifierHypothesis& m, const std::string& base) -> const CompositionRule* {
    for (const auto& r : rules)
      if (r.label == m.label && r.placement == m.zone &&
          (r.bases.empty() || std::find(r.bases.begin(), r.bases.end(), base) != r.bases.end()))
        return &r;
    return nullptr;
  };

  CombinedWord best;
  bool have = false;
  for (std::size_t h = 0; h < nbest.size(); ++h) {
    const std::vector<std::string> chars = utf8_chars(nbest[h].transcription);
    const auto& spans = char_spans[h];
    require(spans.size() == chars.size(), ErrorKind::LengthMismatch, "span count differs from character count");
    std::vector<std::string> attached(chars.size());
    double score = nbest[h].score;
    for (const auto& m : modifiers) {
      int arg = -1, best_overlap = 0;
      for (std::size_t c = 0; c < spans.size(); ++c) {
        const int ov = std::min(m.x1, spans[c].second) - std::max(m.x0, spans[c].first);
        if (ov > best_overlap) {
          best_overlap = ov;
          arg = static_cast<int>(c);
        }
      }
      const CompositionRule* r = arg >= 0 ? rule_for(m, chars[arg]) : nullptr;
      if (r) {
        score += m.confidence;
        attached[arg] += r->grapheme;
      } else {
        score -= penalty;
      }
    }
    if (!have || score > best.score) {
      std::string word;
      for (std::size_t c = 0; c < chars.size(); ++c) word += chars[c] + attached[c];
      best = {word, h, score};
      have = true;
    }
  }
  return best;
}

}  // namespace synthhw
