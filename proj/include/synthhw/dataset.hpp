#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synthhw/config.hpp"

namespace synthhw {

// One generated image. `variant` is -1 for the clean render.
struct ManifestRecord {
  std::string path;  // relative to the dataset root
  std::string transcription;
  Script script = Script::Latin;
  TextKind kind = TextKind::Numeral;
  std::string font;
  int item = 0;
  int variant = -1;
  std::string split = "train";
  std::uint64_t seed = 0;
  Json distortion;  // resolved spec; null for the clean render

  bool distorted() const { return !distortion.is_null(); }
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<ManifestRecord> records;
};

// Manifest file "manifest.tsv": a header line, then one tab-separated record
// per line in the order
//   path transcription script kind font item variant split seed distortion
// where distortion is compact JSON ("null" for clean renders).
void write_manifest(const DatasetManifest& m, const std::filesystem::path& file);
DatasetManifest read_manifest(const std::filesystem::path& file_or_dir);

// Renders every (item, font), emits the clean render and cfg.count distorted
// variants, writes PBM images plus manifest.tsv and stamp.json under
// cfg.output. Rows are ordered by item, font, variant and do not depend on
// cfg.jobs. A previous dataset at the same root is replaced.
DatasetManifest generate_dataset(const GenerationConfig& cfg);

struct RecordFilter {
  std::optional<std::string> split;
  std::vector<std::string> fonts;      // empty: any
  std::optional<bool> distorted;
  std::optional<int> max_variant;      // clean renders always pass
};

std::vector<ManifestRecord> select(const DatasetManifest& m, const RecordFilter& f);
RecordFilter record_filter_from_json(const Json& j);

}  // namespace synthhw
