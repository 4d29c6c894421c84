#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synthhw/hmm.hpp"
#include "synthhw/image.hpp"
#include "synthhw/svm.hpp"

namespace synthhw {

struct ZoneOptions {
  double matra_gate = 0.6;     // bar projection must exceed this fraction of the width
  double baseline_beta = 0.15;  // of the middle band's maximum projection
};

// Rows [0, matra_row) are the upper zone, [matra_row, baseline_row] the
// middle zone, (baseline_row, height) the lower zone.
struct ZoneDecomposition {
  int matra_row = 0;
  int baseline_row = 0;
  bool has_matra = false;
  BilevelImage upper, middle, lower;
};

// Row of maximal horizontal projection within the upper half of the inked
// rows (first row wins ties).
int detect_matra(const BilevelImage& img);

ZoneDecomposition split_zones(const BilevelImage& img, const ZoneOptions& opt = {});

enum class Zone { Upper, Lower };
std::string to_string(Zone z);

struct ModifierHypothesis {
  Zone zone = Zone::Upper;
  int x0 = 0, x1 = 0;  // columns [x0, x1)
  std::string label;
  double confidence = 0.0;
};

// Every 8-connected component of the zone image, resized to 150x150 and
// classified from its PHOG descriptor; ordered by x.
std::vector<ModifierHypothesis> classify_modifiers(const BilevelImage& zone, Zone which, const SvmModel& model);

// Same descriptor the modifier classifier is trained on.
Vector modifier_features(const BilevelImage& component);

struct CompositionRule {
  std::string label;
  Zone placement = Zone::Upper;
  std::string grapheme;
  std::vector<std::string> bases;  // empty: any base character
};

// Tab-separated lines: label, placement (upper|lower), grapheme, and an
// optional string of admissible base characters. '#' starts a comment.
std::vector<CompositionRule> read_composition_rules(const std::filesystem::path& path);
std::vector<CompositionRule> parse_composition_rules(const std::string& text);

struct CombineOptions {
  std::optional<double> penalty;  // default: median modifier confidence
};

struct CombinedWord {
  std::string transcription;
  std::size_t hypothesis = 0;  // index into the N-best list
  double score = 0.0;
};

// Frame spans to pixel columns of the source image: frame t covers
// [t*step, t*step + win_w) of the height-normalised image, scaled by
// source_width / normalised_width.
std::vector<std::pair<int, int>> pixel_spans(std::span<const std::pair<int, int>> frames, int win_w, int step,
                                             double scale);

// Attaches every modifier to the character span it overlaps most, scores each
// hypothesis as HMM score + matched confidences - penalty per unmatched
// modifier, and returns the best one (earlier N-best rank wins ties) with
// its modifiers' graphemes appended after their base characters.
CombinedWord combine_word(std::span<const Hypothesis> nbest, std::span<const ModifierHypothesis> modifiers,
                          std::span<const std::vector<std::pair<int, int>>> char_spans,
                          std::span<const CompositionRule> rules, const CombineOptions& opt = {});

}  // namespace synthhw
