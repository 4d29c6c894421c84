#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthhw/distort.hpp"
#include "synthhw/features.hpp"
#include "synthhw/hmm.hpp"
#include "synthhw/render.hpp"
#include "synthhw/svm.hpp"
#include "synthhw/zones.hpp"

namespace synthhw {

using Json = nlohmann::json;

// Distortion specs as JSON objects with a "type" member:
//   {"type": "random_shift", "amplitude_coeff": 0.05, "share_junctions": true}
//   {"type": "gaussian_shift", "sigma_coeff": 0.02, "clamp_sigmas": 2}
//   {"type": "curved", "shape": "rainbow"|"inverted", "max_offset": 10, "segments": 8}
//   {"type": "sinusoidal", "amplitude": 6, "period": 100, "segments": 8}
//   {"type": "elliptical", "a": 0, "peak_ratio": 1.3}
//   {"type": "composite", "steps": [ ... ]}
// A template may give any numeric parameter as a [lo, hi] range and
// "shape" as a list; resolve_distortion draws concrete values.
Json to_json(const DistortionSpec& spec);
Json to_json(const DistortionStep& step);
DistortionSpec distortion_from_json(const Json& j);
Json resolve_distortion(const Json& tmpl, SeededRng& rng);

// "clean" for no distortion, otherwise the step types joined by '+'.
std::string distortion_key(const Json& resolved);

struct TextSource {
  Script script = Script::Latin;
  TextKind kind = TextKind::Numeral;
  std::vector<std::string> items;
};

struct GenerationConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output = "dataset";
  int jobs = 1;
  std::vector<FontRef> fonts;
  std::vector<TextSource> sources;
  int crop_margin = 4;
  int count = 200;           // distorted variants per (item, font)
  bool include_clean = true;
  std::vector<Json> pool;    // distortion templates, used round-robin
  int test_every = 5;        // variant v is held out when v % test_every == test_every - 1
  Json raw;                  // the parsed document, for stamping
};

// Relative paths in the document resolve against `base_dir`; font paths fall
// back to the bundled data directory.
GenerationConfig parse_generation_config(const Json& j, const std::filesystem::path& base_dir);
GenerationConfig load_generation_config(const std::filesystem::path& path);

Json load_json(const std::filesystem::path& path);

// Bundled data directory (fonts, lexicons, rules).
std::filesystem::path data_dir();

// 64-bit FNV-1a of the canonical (sorted-key) serialisation, as hex.
std::string config_hash(const Json& j);

WindowSpec window_spec_from_json(const Json& j);
SvmOptions svm_options_from_json(const Json& j);
HmmTrainOptions hmm_options_from_json(const Json& j);
ZoneOptions zone_options_from_json(const Json& j);

}  // namespace synthhw
