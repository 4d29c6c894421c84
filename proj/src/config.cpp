#include "synthhw/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "synthhw/error.hpp"

namespace synthhw {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

[[noreturn]] void bad(const std::string& what) { fail(ErrorKind::Parse, "config: " + what); }

double num(const Json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) bad(std::string("'") + key + "' must be a number (resolve ranges first)");
  return j[key].get<double>();
}

int integer(const Json& j, const char* key, int fallback) {
  const double v = num(j, key, fallback);
  if (v != std::floor(v)) bad(std::string("'") + key + "' must be an integer");
  return static_cast<int>(v);
}

bool flag(const Json& j, const char* key, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) bad(std::string("'") + key + "' must be true or false");
  return j[key].get<bool>();
}

const char* shape_name(CurveShape s) { return s == CurveShape::Rainbow ? "rainbow" : "inverted"; }

CurveShape parse_shape(const std::string& s) {
  if (s == "rainbow") return CurveShape::Rainbow;
  if (s == "inverted") return CurveShape::Inverted;
  bad("unknown curve shape '" + s + "'");
}

DistortionStep step_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) bad("distortion step needs a string 'type'");
  const std::string type = j["type"];
  if (type == "random_shift") {
    RandomShift s;
    s.amplitude_coeff = num(j, "amplitude_coeff", s.amplitude_coeff);
    s.share_junctions = flag(j, "share_junctions", s.share_junctions);
    return s;
  }
  if (type == "gaussian_shift") {
    GaussianShift s;
    s.sigma_coeff = num(j, "sigma_coeff", s.sigma_coeff);
    s.clamp_sigmas = num(j, "clamp_sigmas", s.clamp_sigmas);
    s.share_junctions = flag(j, "share_junctions", s.share_junctions);
    return s;
  }
  if (type == "curved") {
    Curved s;
    if (j.contains("shape")) s.shape = parse_shape(j["shape"].get<std::string>());
    s.max_offset = num(j, "max_offset", s.max_offset);
    s.segments = integer(j, "segments", s.segments);
    return s;
  }
  if (type == "sinusoidal") {
    Sinusoidal s;
    s.amplitude = num(j, "amplitude", s.amplitude);
    s.period = num(j, "period", s.period);
    s.segments = integer(j, "segments", s.segments);
    return s;
  }
  if (type == "elliptical") {
    Elliptical s;
    s.a = num(j, "a", s.a);
    s.peak_ratio = num(j, "peak_ratio", s.peak_ratio);
    return s;
  }
  bad("unknown distortion type '" + type + "'");
}

}  // namespace

Json to_json(const DistortionStep& step) {
  return std::visit(
      Overloaded{[](const RandomShift& s) {
                   return Json{{"type", "random_shift"},
                               {"amplitude_coeff", s.amplitude_coeff},
                               {"share_junctions", s.share_junctions}};
                 },
                 [](const GaussianShift& s) {
                   return Json{{"type", "gaussian_shift"},
                               {"sigma_coeff", s.sigma_coeff},
                               {"clamp_sigmas", s.clamp_sigmas},
                               {"share_junctions", s.share_junctions}};
                 },
                 [](const Curved& s) {
                   return Json{{"type", "curved"},
                               {"shape", shape_name(s.shape)},
                               {"max_offset", s.max_offset},
                               {"segments", s.segments}};
                 },
                 [](const Sinusoidal& s) {
                   return Json{
                       {"type", "sinusoidal"}, {"amplitude", s.amplitude}, {"period", s.period}, {"segments", s.segments}};
                 },
                 [](const Elliptical& s) { return Json{{"type", "elliptical"}, {"a", s.a}, {"peak_ratio", s.peak_ratio}}; }},
      step);
}

Json to_json(const DistortionSpec& spec) {
  if (const auto* c = std::get_if<Composite>(&spec)) {
    Json steps = Json::array();
    for (const auto& s : c->steps) steps.push_back(to_json(s));
    return Json{{"type", "composite"}, {"steps", steps}};
  }
  return std::visit(Overloaded{[](const Composite&) { return Json(); },
                               [](const auto& s) { return to_json(DistortionStep{s}); }},
                    spec);
}

DistortionSpec distortion_from_json(const Json& j) {
  if (j.is_object() && j.value("type", "") == "composite") {
    if (!j.contains("steps") || !j["steps"].is_array()) bad("composite distortion needs a 'steps' array");
    Composite c;
    for (const Json& s : j["steps"]) {
      if (s.value("type", "") == "composite") bad("composite steps cannot nest");
      c.steps.push_back(step_from_json(s));
    }
    return c;
  }
  return std::visit([](const auto& s) -> DistortionSpec { return s; }, step_from_json(j));
}

Json resolve_distortion(const Json& tmpl, SeededRng& rng) {
  if (tmpl.is_null()) return tmpl;
  if (!tmpl.is_object()) bad("distortion template must be an object");
  Json out = Json::object();
  // Keys are visited in sorted order, so draws are reproducible.
  for (const auto& [key, value] : tmpl.items()) {
    if (key == "steps") {
      Json steps = Json::array();
      for (const Json& s : value) steps.push_back(resolve_distortion(s, rng));
      out[key] = steps;
    } else if (value.is_array() && value.size() == 2 && value[0].is_number() && value[1].is_number()) {
      const double lo = value[0].get<double>(), hi = value[1].get<double>();
      if (hi < lo) bad("range for '" + key + "' has hi < lo");
      if (value[0].is_number_integer() && value[1].is_number_integer())
        out[key] = static_cast<long long>(lo) + static_cast<long long>(rng.below(static_cast<std::uint64_t>(hi - lo) + 1));
      else
        out[key] = rng.uniform(lo, hi);
    } else if (value.is_array() && !value.empty() && value[0].is_string()) {
      out[key] = value[rng.below(value.size())];
    } else {
      out[key] = value;
    }
  }
  (void)distortion_from_json(out);  // validate
  return out;
}

std::string distortion_key(const Json& resolved) {
  if (resolved.is_null()) return "clean";
  if (resolved.value("type", "") == "composite") {
    std::string key;
    for (const Json& s : resolved["steps"]) key += (key.empty() ? "" : "+") + s.value("type", std::string("?"));
    return key;
  }
  return resolved.value("type", std::string("?"));
}

std::filesystem::path data_dir() {
  if (const char* env = std::getenv("SYNTHHW_DATA_DIR"); env && *env) return env;
#ifdef SYNTHHW_DATA_DIR
  return SYNTHHW_DATA_DIR;
#else
  return "data";
#endif
}

Json load_json(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  try {
    return Json::parse(is, nullptr, true, true);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

std::string config_hash(const Json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::filesystem::path resolve_path(const std::filesystem::path& p, const std::filesystem::path& base) {
  if (p.is_absolute()) return p;
  if (std::filesystem::exists(base / p)) return base / p;
  if (std::filesystem::exists(data_dir() / p)) return data_dir() / p;
  return base / p;
}

}  // namespace

GenerationConfig parse_generation_config(const Json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) bad("top level must be an object");
  GenerationConfig cfg;
  cfg.raw = j;
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("output")) cfg.output = base_dir / j["output"].get<std::string>();
  cfg.jobs = integer(j, "jobs", cfg.jobs);

  if (!j.contains("fonts") || !j["fonts"].is_array() || j["fonts"].empty()) bad("'fonts' must be a non-empty list");
  for (const Json& f : j["fonts"]) {
    FontRef r;
    r.path = resolve_path(f.at("path").get<std::string>(), base_dir);
    r.id = f.value("id", r.path.stem().string());
    r.size_px = integer(f, "size_px", r.size_px);
    if (r.size_px <= 0) bad("font size must be positive");
    cfg.fonts.push_back(r);
  }

  if (!j.contains("sources") || !j["sources"].is_array() || j["sources"].empty()) bad("'sources' must be a non-empty list");
  for (const Json& s : j["sources"]) {
    TextSource src;
    src.script = parse_script(s.value("script", std::string("latin")));
    src.kind = parse_kind(s.value("kind", std::string("numeral")));
    if (s.contains("items"))
      for (const Json& it : s["items"]) src.items.push_back(it.get<std::string>());
    if (s.contains("lexicon"))
      for (auto& w : read_lexicon(resolve_path(s["lexicon"].get<std::string>(), base_dir))) src.items.push_back(w);
    if (src.items.empty()) bad("a text source has no items");
    cfg.sources.push_back(std::move(src));
  }

  if (j.contains("render")) cfg.crop_margin = integer(j["render"], "crop_margin", cfg.crop_margin);
  if (j.contains("distortions")) {
    const Json& d = j["distortions"];
    cfg.count = integer(d, "count", cfg.count);
    cfg.include_clean = flag(d, "include_clean", cfg.include_clean);
    if (d.contains("pool"))
      for (const Json& t : d["pool"]) cfg.pool.push_back(t);
  }
  if (cfg.count < 0) bad("distortion count must be non-negative");
  if (cfg.count > 0 && cfg.pool.empty()) bad("distortion count > 0 needs a non-empty 'pool'");
  if (j.contains("split")) cfg.test_every = integer(j["split"], "test_every", cfg.test_every);
  if (cfg.test_every < 0) bad("'test_every' must be non-negative");
  return cfg;
}

GenerationConfig load_generation_config(const std::filesystem::path& path) {
  return parse_generation_config(load_json(path), path.parent_path());
}

WindowSpec window_spec_from_json(const Json& j) {
  WindowSpec w;
  if (!j.is_object()) return w;
  w.win_w = integer(j, "win_w", w.win_w);
  w.step = integer(j, "step", w.step);
  w.norm_h = integer(j, "norm_h", w.norm_h);
  if (j.contains("extractor")) w.extractor = parse_extractor(j["extractor"].get<std::string>());
  return w;
}

SvmOptions svm_options_from_json(const Json& j) {
  SvmOptions o;
  if (!j.is_object()) return o;
  o.c = num(j, "c", o.c);
  o.tol = num(j, "tol", o.tol);
  const std::string kernel = j.value("kernel", std::string("rbf"));
  if (kernel == "linear")
    o.kernel = KernelSpec::linear();
  else if (kernel == "rbf")
    o.kernel = KernelSpec::rbf(num(j, "sigma", 0.0));
  else
    bad("unknown kernel '" + kernel + "'");
  return o;
}

HmmTrainOptions hmm_options_from_json(const Json& j) {
  HmmTrainOptions o;
  if (!j.is_object()) return o;
  o.states_per_char = integer(j, "states_per_char", o.states_per_char);
  o.max_mixtures = integer(j, "max_mixtures", o.max_mixtures);
  o.iterations_per_stage = integer(j, "iterations_per_stage", o.iterations_per_stage);
  o.var_floor_rel = num(j, "var_floor_rel", o.var_floor_rel);
  o.leave_floor = num(j, "leave_floor", o.leave_floor);
  return o;
}

ZoneOptions zone_options_from_json(const Json& j) {
  ZoneOptions o;
  if (!j.is_object()) return o;
  o.matra_gate = num(j, "matra_gate", o.matra_gate);
  o.baseline_beta = num(j, "baseline_beta", o.baseline_beta);
  return o;
}

}  // namespace synthhw
