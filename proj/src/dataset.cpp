#include "synthhw/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "synthhw/error.hpp"
#include "synthhw/parallel.hpp"

namespace synthhw {

namespace {

constexpr const char* kManifestHeader =
    "#path\ttranscription\tscript\tkind\tfont\titem\tvariant\tsplit\tseed\tdistortion";

std::string image_name(int item, const std::string& font, int variant) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "i%05d_", item);
  std::string name = std::string("images/") + buf + font;
  if (variant < 0) return name + "_clean.pbm";
  std::snprintf(buf, sizeof buf, "_v%04d.pbm", variant);
  return name + buf;
}

std::string split_of(int variant, int test_every) {
  if (variant < 0 || test_every <= 0) return "train";
  return variant % test_every == test_every - 1 ? "test" : "train";
}

Json stamp_config(const GenerationConfig& cfg) {
  Json j = cfg.raw.is_object() ? cfg.raw : Json::object();
  j.erase("jobs");
  j.erase("output");
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace

void write_manifest(const DatasetManifest& m, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot write " + file.string());
  os << kManifestHeader << '\n';
  for (const auto& r : m.records)
    os << r.path << '\t' << r.transcription << '\t' << to_string(r.script) << '\t' << to_string(r.kind) << '\t'
       << r.font << '\t' << r.item << '\t' << r.variant << '\t' << r.split << '\t' << r.seed << '\t'
       << r.distortion.dump() << '\n';
  if (!os) fail(ErrorKind::Io, "write failed: " + file.string());
}

DatasetManifest read_manifest(const std::filesystem::path& file_or_dir) {
  const std::filesystem::path file =
      std::filesystem::is_directory(file_or_dir) ? file_or_dir / "manifest.tsv" : file_or_dir;
  std::ifstream is(file, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open manifest " + file.string());
  DatasetManifest m;
  m.root = file.parent_path();
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, '\t');) f.push_back(cell);
    const std::string where = file.string() + ":" + std::to_string(lineno);
    if (f.size() != 10) fail(ErrorKind::Parse, where + ": expected 10 fields, got " + std::to_string(f.size()));
    ManifestRecord r;
    try {
      r.path = f[0];
      r.transcription = f[1];
      r.script = parse_script(f[2]);
      r.kind = parse_kind(f[3]);
      r.font = f[4];
      r.item = std::stoi(f[5]);
      r.variant = std::stoi(f[6]);
      r.split = f[7];
      r.seed = std::stoull(f[8]);
      r.distortion = Json::parse(f[9]);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(ErrorKind::Parse, where + ": " + e.what());
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

DatasetManifest generate_dataset(const GenerationConfig& cfg) {
  require(!cfg.fonts.empty(), ErrorKind::Precondition, "no fonts configured");
  require(!cfg.sources.empty(), ErrorKind::Precondition, "no text sources configured");
  require(cfg.count > 0 || cfg.include_clean, ErrorKind::Precondition, "nothing to generate");

  std::vector<Font> fonts;
  for (const auto& f : cfg.fonts) fonts.push_back(Font::load(f.path));

  std::vector<TextItem> items;
  for (const auto& src : cfg.sources)
    for (const auto& t : src.items) items.push_back({t, src.script, src.kind});

  namespace fs = std::filesystem;
  const fs::path root = cfg.output;
  std::error_code ec;
  if (fs::exists(root / "images")) {
    require(fs::exists(root / "manifest.tsv"), ErrorKind::Io,
            (root / "images").string() + " exists but is not part of a generated dataset");
    fs::remove_all(root / "images", ec);
    if (ec) fail(ErrorKind::Io, "cannot clear " + (root / "images").string() + ": " + ec.message());
  }
  fs::create_directories(root / "images", ec);
  if (ec) fail(ErrorKind::Io, "cannot create " + (root / "images").string() + ": " + ec.message());

  const int first_variant = cfg.include_clean ? -1 : 0;
  const std::size_t per_task = static_cast<std::size_t>(cfg.count - first_variant);
  const std::size_t n_tasks = items.size() * fonts.size();
  std::vector<ManifestRecord> records(n_tasks * per_task);

  parallel_for(n_tasks, cfg.jobs, [&](std::size_t task) {
    const int item = static_cast<int>(task / fonts.size());
    const std::size_t fi = task % fonts.size();
    const FontRef& ref = cfg.fonts[fi];
    const BilevelImage clean =
        crop_to_content(binarize(render_text(items[item], fonts[fi], ref.size_px)), cfg.crop_margin);
    for (int v = first_variant; v < cfg.count; ++v) {
      ManifestRecord& r = records[task * per_task + static_cast<std::size_t>(v - first_variant)];
      r.transcription = items[item].text;
      r.script = items[item].script;
      r.kind = items[item].kind;
      r.font = ref.id;
      r.item = item;
      r.variant = v;
      r.split = split_of(v, cfg.test_every);
      r.path = image_name(item, ref.id, v);
      r.seed = derive_seed({cfg.seed, static_cast<std::uint64_t>(item), static_cast<std::uint64_t>(fi),
                            static_cast<std::uint64_t>(v + 1)});
      if (v < 0) {
        write_pbm(clean, root / r.path);
        continue;
      }
      SeededRng draw(r.seed, 1);
      r.distortion = resolve_distortion(cfg.pool[static_cast<std::size_t>(v) % cfg.pool.size()], draw);
      SeededRng rng(r.seed, 0);
      const BilevelImage out = apply(clean, distortion_from_json(r.distortion), rng);
      write_pbm(crop_to_content(out, cfg.crop_margin), root / r.path);
    }
  });

  DatasetManifest m{root, std::move(records)};
  write_manifest(m, root / "manifest.tsv");
  std::ofstream stamp(root / "stamp.json", std::ios::binary);
  const Json sc = stamp_config(cfg);
  stamp << Json{{"config_hash", config_hash(sc)}, {"seed", cfg.seed}, {"images", m.records.size()}}.dump(2) << '\n';
  if (!stamp) fail(ErrorKind::Io, "cannot write stamp.json");
  return m;
}

std::vector<ManifestRecord> select(const DatasetManifest& m, const RecordFilter& f) {
  std::vector<ManifestRecord> out;
  for (const auto& r : m.records) {
    if (f.split && *f.split != "all" && r.split != *f.split) continue;
    if (!f.fonts.empty() && std::find(f.fonts.begin(), f.fonts.end(), r.font) == f.fonts.end()) continue;
    if (f.distorted && r.distorted() != *f.distorted) continue;
    if (f.max_variant && r.variant > *f.max_variant) continue;
    out.push_back(r);
  }
  return out;
}

RecordFilter record_filter_from_json(const Json& j) {
  RecordFilter f;
  if (!j.is_object()) return f;
  if (j.contains("split")) f.split = j["split"].get<std::string>();
  if (j.contains("fonts"))
    for (const auto& x : j["fonts"]) f.fonts.push_back(x.get<std::string>());
  if (j.contains("distorted") && !j["distorted"].is_null()) f.distorted = j["distorted"].get<bool>();
  if (j.contains("max_variant")) f.max_variant = j["max_variant"].get<int>();
  return f;
}

}  // namespace synthhw
