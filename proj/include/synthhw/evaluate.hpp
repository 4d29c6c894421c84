#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "synthhw/config.hpp"

namespace synthhw {

struct EvalMeta {
  std::string font;
  std::string distortion;  // distortion_key of the record
};

struct Tally {
  int correct = 0;
  int total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

struct EvalReport {
  int items = 0;
  std::vector<double> top_k;  // top_k[k - 1], k = 1..5
  std::map<std::string, Tally> per_font;
  std::map<std::string, Tally> per_distortion;
  std::vector<std::string> classes;        // sorted union of truths and top-1 predictions
  std::vector<std::vector<int>> confusion;  // [truth][top-1 prediction]
};

// ranked[i] is the prediction list for item i, best first. Per-font and
// per-distortion tables count top-1 hits and are filled only when `meta` is
// given.
EvalReport evaluate(std::span<const std::vector<std::string>> ranked, std::span<const std::string> truth,
                    std::span<const EvalMeta> meta = {});

Json report_to_json(const EvalReport& r);
std::string report_to_text(const EvalReport& r);
// Tab-separated matrix with a header row of predicted classes.
std::string confusion_to_text(const EvalReport& r);

}  // namespace synthhw
