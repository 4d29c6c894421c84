#include "synthhw/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "synthhw/error.hpp"

namespace synthhw {

EvalReport evaluate(std::span<const std::vector<std::string>> ranked, std::span<const std::string> truth,
                    std::span<const EvalMeta> meta) {
  require(ranked.size() == truth.size(), ErrorKind::LengthMismatch, "one prediction list per test item is required");
  require(meta.empty() || meta.size() == truth.size(), ErrorKind::LengthMismatch,
          "metadata must cover every test item");
  constexpr int kMaxK = 5;
  EvalReport r;
  r.items = static_cast<int>(truth.size());
  std::vector<int> hits(kMaxK, 0);
  std::set<std::string> classes;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    require(!ranked[i].empty(), ErrorKind::Precondition, "test item " + std::to_string(i) + " has no prediction");
    const auto it = std::find(ranked[i].begin(), ranked[i].end(), truth[i]);
    const int rank = static_cast<int>(it - ranked[i].begin());
    for (int k = rank; k < kMaxK; ++k) ++hits[k];
    classes.insert(truth[i]);
    classes.insert(ranked[i].front());
    if (!meta.empty()) {
      Tally& f = r.per_font[meta[i].font];
      Tally& d = r.per_distortion[meta[i].distortion];
      ++f.total;
      ++d.total;
      if (rank == 0) {
        ++f.correct;
        ++d.correct;
      }
    }
  }
  for (int k = 0; k < kMaxK; ++k) r.top_k.push_back(r.items ? static_cast<double>(hits[k]) / r.items : 0.0);
  r.classes.assign(classes.begin(), classes.end());
  r.confusion.assign(r.classes.size(), std::vector<int>(r.classes.size(), 0));
  auto index = [&](const std::string& c) {
    return static_cast<std::size_t>(std::lower_bound(r.classes.begin(), r.classes.end(), c) - r.classes.begin());
  };
  for (std::size_t i = 0; i < truth.size(); ++i) ++r.confusion[index(truth[i])][index(ranked[i].front())];
  return r;
}

Json report_to_json(const EvalReport& r) {
  Json j;
  j["items"] = r.items;
  j["top_k"] = r.top_k;
  auto table = [](const std::map<std::string, Tally>& t) {
    Json o = Json::object();
    for (const auto& [k, v] : t) o[k] = {{"correct", v.correct}, {"total", v.total}, {"accuracy", v.accuracy()}};
    return o;
  };
  j["per_font"] = table(r.per_font);
  j["per_distortion"] = table(r.per_distortion);
  j["classes"] = r.classes;
  j["confusion"] = r.confusion;
  return j;
}

std::string report_to_text(const EvalReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "items\t%d\n", r.items);
  out += buf;
  for (std::size_t k = 0; k < r.top_k.size(); ++k) {
    std::snprintf(buf, sizeof buf, "top-%zu\t%.4f\n", k + 1, r.top_k[k]);
    out += buf;
  }
  auto table = [&](const char* title, const std::map<std::string, Tally>& t) {
    if (t.empty()) return;
    out += std::string("\n") + title + "\tcorrect\ttotal\taccuracy\n";
    for (const auto& [k, v] : t) {
      std::snprintf(buf, sizeof buf, "\t%d\t%d\t%.4f\n", v.correct, v.total, v.accuracy());
      out += k + buf;
    }
  };
  table("font", r.per_font);
  table("distortion", r.per_distortion);
  return out;
}

std::string confusion_to_text(const EvalReport& r) {
  std::string out = "truth\\pred";
  for (const auto& c : r.classes) out += "\t" + c;
  out += "\n";
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    out += r.classes[i];
    for (int v : r.confusion[i]) out += "\t" + std::to_string(v);
    out += "\n";
  }
  return out;
}

}  // namespace synthhw
