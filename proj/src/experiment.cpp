#include "synthhw/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "synthhw/error.hpp"
#include "synthhw/parallel.hpp"

namespace synthhw {

namespace {

GrayImage square_gray(const BilevelImage& img, int side) { return resize_gray(to_gray(img), side, side); }

void put_vector(std::string& out, const char* tag, std::span<const double> v) {
  out += tag;
  char buf[32];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, " %.17g", x);
    out += buf;
  }
  out += '\n';
}

Vector get_vector(std::istream& is, const char* tag, std::size_t n) {
  std::string line, t;
  if (!std::getline(is, line)) fail(ErrorKind::Parse, std::string("pca model: truncated before '") + tag + "'");
  std::istringstream ls(line);
  ls >> t;
  if (t != tag) fail(ErrorKind::Parse, std::string("pca model: expected '") + tag + "', got '" + t + "'");
  Vector v(n);
  for (auto& x : v)
    if (!(ls >> x)) fail(ErrorKind::Parse, std::string("pca model: short '") + tag + "' row");
  return v;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
  return p.is_absolute() ? p : base / p;
}

}  // namespace

Vector image_features(const ImageRecognizer& r, const BilevelImage& img) {
  if (r.features == "pca") {
    require(r.pca.has_value(), ErrorKind::Precondition, "PCA recognizer without a PCA model");
    return pca_project(*r.pca, image_vector(to_gray(img), r.pca->side));
  }
  return phog(square_gray(img, 150));
}

std::vector<Vector> image_features(const ImageRecognizer& r, std::span<const BilevelImage> imgs, int jobs) {
  std::vector<Vector> out(imgs.size());
  parallel_for(imgs.size(), jobs, [&](std::size_t i) { out[i] = image_features(r, imgs[i]); });
  return out;
}

ImageRecognizer train_image_recognizer(std::span<const BilevelImage> imgs, std::span<const std::string> labels,
                                       const ImageRecognizerOptions& opt) {
  require(imgs.size() == labels.size(), ErrorKind::LengthMismatch, "one label per training image is required");
  require(opt.features == "phog" || opt.features == "pca", ErrorKind::Precondition,
          "unknown image features '" + opt.features + "'");
  ImageRecognizer r;
  r.features = opt.features;
  if (opt.features == "pca") {
    std::vector<Vector> vecs(imgs.size());
    parallel_for(imgs.size(), opt.svm.jobs,
                 [&](std::size_t i) { vecs[i] = image_vector(to_gray(imgs[i]), opt.pca_side); });
    PcaModel m = pca_fit_vectors(vecs, opt.pca_components);
    m.side = opt.pca_side;
    r.pca = std::move(m);
  }
  const std::vector<Vector> x = image_features(r, imgs, opt.svm.jobs);
  r.svm = multiclass_train(x, labels, opt.svm);
  return r;
}

std::vector<std::string> rank_labels(const ImageRecognizer& r, const BilevelImage& img) {
  std::vector<std::string> out;
  for (int c : ranked_classes(r.svm, image_features(r, img))) out.push_back(r.svm.labels[c]);
  return out;
}

WordRecognizer train_word_recognizer(std::span<const BilevelImage> imgs, std::span<const std::string> transcriptions,
                                     const WindowSpec& window, const HmmTrainOptions& opt,
                                     std::vector<std::string> lexicon) {
  require(imgs.size() == transcriptions.size(), ErrorKind::LengthMismatch,
          "one transcription per training image is required");
  std::vector<TrainingSample> corpus(imgs.size());
  parallel_for(imgs.size(), opt.jobs, [&](std::size_t i) {
    corpus[i] = {window_sequence(imgs[i], window).frames, transcriptions[i]};
  });
  WordRecognizer r;
  r.window = window;
  r.hmm = baum_welch(corpus, opt);
  if (lexicon.empty()) {
    std::set<std::string> words(transcriptions.begin(), transcriptions.end());
    lexicon.assign(words.begin(), words.end());
  }
  r.lexicon = std::move(lexicon);
  return r;
}

std::vector<Hypothesis> recognize_word(const WordRecognizer& r, const BilevelImage& img, std::size_t n) {
  return nbest_lexicon(r.hmm, r.lexicon, window_sequence(img, r.window).frames, n);
}

std::vector<std::string> rank(const Recognizer& r, const BilevelImage& img, std::size_t n) {
  std::vector<std::string> out;
  if (const auto* ir = std::get_if<ImageRecognizer>(&r)) {
    out = rank_labels(*ir, img);
    if (out.size() > n) out.resize(n);
  } else {
    for (const auto& h : recognize_word(std::get<WordRecognizer>(r), img, n)) out.push_back(h.transcription);
  }
  return out;
}

std::string pca_to_text(const PcaModel& m) {
  std::string out = "pca 1\n";
  out += "shape " + std::to_string(m.side) + " " + std::to_string(m.components.size()) + " " +
         std::to_string(m.mean.size()) + "\n";
  put_vector(out, "mean", m.mean);
  put_vector(out, "eigenvalues", m.eigenvalues);
  for (const auto& c : m.components) put_vector(out, "component", c);
  return out;
}

PcaModel pca_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line, tag;
  if (!std::getline(is, line) || line != "pca 1") fail(ErrorKind::Parse, "pca model: missing header");
  std::getline(is, line);
  std::istringstream ls(line);
  PcaModel m;
  std::size_t p = 0, n = 0;
  if (!(ls >> tag >> m.side >> p >> n) || tag != "shape") fail(ErrorKind::Parse, "pca model: bad shape line");
  m.mean = get_vector(is, "mean", n);
  m.eigenvalues = get_vector(is, "eigenvalues", p);
  for (std::size_t k = 0; k < p; ++k) m.components.push_back(get_vector(is, "component", n));
  return m;
}

std::string recognizer_to_text(const Recognizer& r) {
  if (const auto* ir = std::get_if<ImageRecognizer>(&r)) {
    std::string out = "recognizer 1 image " + ir->features + "\n";
    if (ir->pca) out += pca_to_text(*ir->pca);
    return out + svm_to_text(ir->svm);
  }
  const auto& wr = std::get<WordRecognizer>(r);
  std::string out = "recognizer 1 word\n";
  out += "window " + std::to_string(wr.window.win_w) + " " + std::to_string(wr.window.step) + " " +
         std::to_string(wr.window.norm_h) + " " + to_string(wr.window.extractor) + "\n";
  out += "lexicon " + std::to_string(wr.lexicon.size()) + "\n";
  for (const auto& w : wr.lexicon) out += w + "\n";
  return out + hmm_set_to_text(wr.hmm);
}

Recognizer recognizer_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  auto bad = [](const std::string& what) { fail(ErrorKind::Parse, "recognizer: " + what); };
  if (!std::getline(is, line)) bad("empty file");
  std::istringstream hs(line);
  std::string tag, version, type;
  hs >> tag >> version >> type;
  if (tag != "recognizer" || version != "1") bad("missing header");
  auto rest = [&] {
    const auto pos = is.tellg();
    return pos < 0 ? std::string() : text.substr(static_cast<std::size_t>(pos));
  };
  if (type == "image") {
    ImageRecognizer r;
    hs >> r.features;
    std::string body = rest();
    if (r.features == "pca") {
      const auto cut = body.find("svmmodel 1\n");
      if (cut == std::string::npos) bad("missing svm block");
      r.pca = pca_from_text(body.substr(0, cut));
      body = body.substr(cut);
    } else if (r.features != "phog") {
      bad("unknown features '" + r.features + "'");
    }
    r.svm = svm_from_text(body);
    return r;
  }
  if (type == "word") {
    WordRecognizer r;
    std::string ext;
    if (!std::getline(is, line)) bad("missing window line");
    std::istringstream ws(line);
    if (!(ws >> tag >> r.window.win_w >> r.window.step >> r.window.norm_h >> ext) || tag != "window")
      bad("bad window line");
    r.window.extractor = parse_extractor(ext);
    std::size_t n = 0;
    if (!std::getline(is, line)) bad("missing lexicon");
    std::istringstream lx(line);
    if (!(lx >> tag >> n) || tag != "lexicon") bad("bad lexicon line");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::getline(is, line)) bad("truncated lexicon");
      r.lexicon.push_back(line);
    }
    r.hmm = hmm_set_from_text(rest());
    return r;
  }
  bad("unknown recognizer type '" + type + "'");
  return {};
}

void save_recognizer(const Recognizer& r, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  os << recognizer_to_text(r);
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

Recognizer load_recognizer(const std::filesystem::path& path) { return recognizer_from_text(read_file(path)); }

std::vector<Sample> samples_from_manifest(const DatasetManifest& m, std::span<const ManifestRecord> records) {
  std::vector<Sample> out;
  for (const auto& r : records)
    out.push_back({r.path, m.root / r.path, r.transcription, {r.font, distortion_key(r.distortion)}});
  return out;
}

std::vector<Sample> samples_from_label_file(const std::filesystem::path& path) {
  std::vector<Sample> out;
  for (const auto& li : read_label_file(path))
    out.push_back({li.path.string(), li.path, li.text, {"external", "none"}});
  return out;
}

std::vector<BilevelImage> load_images(std::span<const Sample> samples, int jobs) {
  std::vector<BilevelImage> out(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) { out[i] = load_bilevel(samples[i].path); });
  return out;
}

void write_predictions(std::span<const Prediction> preds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  os << "#id\ttruth\tfont\tdistortion\tranked...\n";
  for (const auto& p : preds) {
    os << p.sample.id << '\t' << p.sample.truth << '\t' << p.sample.meta.font << '\t' << p.sample.meta.distortion;
    for (const auto& r : p.ranked) os << '\t' << r;
    os << '\n';
  }
  if (!os) fail(ErrorKind::Io, "write failed: " + path.string());
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<Prediction> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, '\t');) f.push_back(cell);
    if (f.size() < 5)
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected at least 5 fields");
    Prediction p;
    p.sample = {f[0], f[0], f[1], {f[2], f[3]}};
    p.ranked.assign(f.begin() + 4, f.end());
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Prediction> predict(const Recognizer& r, std::span<const Sample> samples, int jobs, std::size_t n) {
  std::vector<Prediction> out(samples.size());
  parallel_for(samples.size(), jobs, [&](std::size_t i) {
    out[i].sample = samples[i];
    try {
      out[i].ranked = rank(r, load_bilevel(samples[i].path), n);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoValidPath && e.kind() != ErrorKind::ImageTooNarrow) throw;
      out[i].ranked = {kReject};
    }
  });
  return out;
}

EvalReport evaluate(std::span<const Prediction> preds) {
  std::vector<std::vector<std::string>> ranked;
  std::vector<std::string> truth;
  std::vector<EvalMeta> meta;
  for (const auto& p : preds) {
    ranked.push_back(p.ranked);
    truth.push_back(p.sample.truth);
    meta.push_back(p.sample.meta);
  }
  return evaluate(ranked, truth, meta);
}

Json ExperimentResult::stamp() const {
  return Json{{"name", name}, {"config_hash", config_hash}, {"seed", seed}, {"train_items", train_items},
              {"report", report_to_json(report)}};
}

Recognizer train_recognizer(const Json& rc, std::span<const BilevelImage> imgs, std::span<const std::string> labels,
                            const std::filesystem::path& base_dir, int jobs) {
  const std::string type = rc.value("type", std::string("svm"));
  if (type == "svm") {
    ImageRecognizerOptions opt;
    opt.features = rc.value("features", opt.features);
    opt.pca_components = rc.value("pca_components", opt.pca_components);
    opt.pca_side = rc.value("pca_side", opt.pca_side);
    opt.svm = svm_options_from_json(rc.value("svm", Json::object()));
    opt.svm.jobs = jobs;
    return train_image_recognizer(imgs, labels, opt);
  }
  if (type == "hmm") {
    HmmTrainOptions opt = hmm_options_from_json(rc.value("hmm", Json::object()));
    opt.jobs = jobs;
    std::vector<std::string> lexicon;
    if (rc.contains("lexicon")) lexicon = read_lexicon(resolve(rc["lexicon"].get<std::string>(), base_dir));
    return train_word_recognizer(imgs, labels, window_spec_from_json(rc.value("window", Json::object())), opt,
                                 std::move(lexicon));
  }
  fail(ErrorKind::Parse, "unknown recognizer type '" + type + "'");
}

ExperimentResult run_experiment(const std::string& name, const Json& cfg, const std::filesystem::path& base_dir,
                                int jobs, std::optional<std::uint64_t> seed) {
  require(cfg.is_object(), ErrorKind::Parse, "experiment config must be an object");
  Json effective = cfg;
  if (seed) effective["seed"] = *seed;
  ExperimentResult res;
  res.name = name;
  res.seed = effective.value("seed", std::uint64_t{1});
  res.config_hash = config_hash(effective);

  std::vector<Sample> train, test;
  if (effective.contains("train_labels") || effective.contains("test_labels")) {
    train = samples_from_label_file(resolve(effective.at("train_labels").get<std::string>(), base_dir));
    test = samples_from_label_file(resolve(effective.at("test_labels").get<std::string>(), base_dir));
  } else {
    DatasetManifest m;
    if (effective.contains("generate")) {
      Json g = effective["generate"];
      g["seed"] = res.seed;
      GenerationConfig gc = parse_generation_config(g, base_dir);
      gc.jobs = jobs;
      m = generate_dataset(gc);
    } else {
      require(effective.contains("dataset"), ErrorKind::Parse, "experiment needs 'generate', 'dataset' or label files");
      m = read_manifest(resolve(effective["dataset"].get<std::string>(), base_dir));
    }
    train = samples_from_manifest(m, select(m, record_filter_from_json(effective.value("train", Json::object()))));
    test = samples_from_manifest(m, select(m, record_filter_from_json(effective.value("test", Json::object()))));
  }
  require(!train.empty(), ErrorKind::EmptyCorpus, "experiment '" + name + "' selects no training images");
  require(!test.empty(), ErrorKind::EmptyCorpus, "experiment '" + name + "' selects no test images");

  const std::vector<BilevelImage> imgs = load_images(train, jobs);
  std::vector<std::string> labels;
  for (const auto& s : train) labels.push_back(s.truth);
  const Json rc = effective.value("recognizer", Json::object());
  const Recognizer rec = train_recognizer(rc, imgs, labels, base_dir, jobs);
  res.train_items = static_cast<int>(train.size());
  res.predictions = predict(rec, test, jobs, rc.value("nbest", std::size_t{5}));
  res.report = evaluate(res.predictions);
  return res;
}

}  // namespace synthhw
