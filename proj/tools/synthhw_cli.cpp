#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "synthhw/dataset.hpp"
#include "synthhw/error.hpp"
#include "synthhw/evaluate.hpp"
#include "synthhw/experiment.hpp"
#include "synthhw/parallel.hpp"

namespace fs = std::filesystem;
using namespace synthhw;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
};

struct Selection {
  std::string manifest;
  std::string labels;
  std::string split;
  std::vector<std::string> fonts;
  std::string distorted = "any";

  void add(CLI::App* cmd, const std::string& default_split) {
    split = default_split;
    cmd->add_option("--manifest", manifest, "Dataset directory or manifest.tsv");
    cmd->add_option("--labels", labels, "Label file of pre-rendered images (instead of a manifest)");
    cmd->add_option("--split", split, "train | test | all")->capture_default_str();
    cmd->add_option("--font", fonts, "Restrict to these font ids");
    cmd->add_option("--distorted", distorted, "any | yes | no")
        ->check(CLI::IsMember({"any", "yes", "no"}))
        ->capture_default_str();
  }

  std::vector<Sample> samples() const {
    if (!labels.empty()) return samples_from_label_file(labels);
    if (manifest.empty()) throw CLI::ValidationError("--manifest or --labels is required");
    const DatasetManifest m = read_manifest(manifest);
    RecordFilter f;
    f.split = split;
    f.fonts = fonts;
    if (distorted != "any") f.distorted = distorted == "yes";
    return samples_from_manifest(m, select(m, f));
  }
};

fs::path out_dir(const Globals& g) {
  const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
  fs::create_directories(dir);
  return dir;
}

Json config_or_empty(const Globals& g) { return g.config.empty() ? Json::object() : load_json(g.config); }

Json recognizer_section(const Globals& g, const std::string& type) {
  Json j = config_or_empty(g);
  if (j.contains("recognizer")) j = j["recognizer"];
  if (!j.contains("type")) j["type"] = type;
  if (j["type"] != type) fail(ErrorKind::Parse, "config describes a '" + j["type"].get<std::string>() + "' recognizer");
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
}

std::vector<std::string> labels_of(const std::vector<Sample>& s) {
  std::vector<std::string> out;
  for (const auto& x : s) out.push_back(x.truth);
  return out;
}

int cmd_gen(const Globals& g) {
  if (g.config.empty()) throw CLI::RequiredError("--config");
  GenerationConfig cfg = load_generation_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.output = g.out;
  cfg.jobs = g.jobs;
  const DatasetManifest m = generate_dataset(cfg);
  std::size_t test = 0;
  for (const auto& r : m.records) test += r.split == "test";
  std::printf("wrote %zu images (%zu train, %zu test) to %s\n", m.records.size(), m.records.size() - test, test,
              m.root.string().c_str());
  return 0;
}

int cmd_featurize(const Globals& g, const Selection& sel, const std::string& mode) {
  const std::vector<Sample> samples = sel.samples();
  const Json cfg = config_or_empty(g);
  const WindowSpec window = window_spec_from_json(cfg.value("window", Json::object()));
  std::vector<FeatureRecord> recs(samples.size());
  const std::vector<BilevelImage> imgs = load_images(samples, g.jobs);
  ImageRecognizer phog_only;
  parallel_for(samples.size(), g.jobs, [&](std::size_t i) {
    FeatureRecord& r = recs[i];
    r.id = samples[i].id;
    if (mode == "image") {
      r.extractor = "phog";
      r.values = image_features(phog_only, imgs[i]);
      r.dim = static_cast<int>(r.values.size());
    } else {
      const FeatureSequence s = window_sequence(imgs[i], window);
      r.extractor = to_string(window.extractor);
      r.frames = static_cast<int>(s.size());
      r.dim = s.frame_dim;
      for (const auto& f : s.frames) r.values.insert(r.values.end(), f.begin(), f.end());
    }
  });
  const fs::path path = out_dir(g) / "features.tsv";
  std::ofstream os(path, std::ios::binary);
  for (const auto& r : recs) write_feature_record(os, r);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  std::printf("wrote %zu feature records to %s\n", recs.size(), path.string().c_str());
  return 0;
}

int cmd_train_svm(const Globals& g, const Selection& sel) {
  const std::vector<Sample> samples = sel.samples();
  require(!samples.empty(), ErrorKind::EmptyCorpus, "no training images selected");
  const Recognizer r = train_recognizer(recognizer_section(g, "svm"), load_images(samples, g.jobs),
                                        labels_of(samples), g.config.empty() ? fs::path(".") : fs::path(g.config).parent_path(),
                                        g.jobs);
  const fs::path path = out_dir(g) / "model.rec";
  save_recognizer(r, path);
  std::printf("trained SVM on %zu images (%zu classes), saved %s\n", samples.size(),
              std::get<ImageRecognizer>(r).svm.classes(), path.string().c_str());
  return 0;
}

int cmd_train_hmm(const Globals& g, const Selection& sel, const std::string& lexicon) {
  const std::vector<Sample> samples = sel.samples();
  require(!samples.empty(), ErrorKind::EmptyCorpus, "no training images selected");
  Json rc = recognizer_section(g, "hmm");
  if (!lexicon.empty()) rc["lexicon"] = fs::absolute(lexicon).string();
  const Recognizer r = train_recognizer(rc, load_images(samples, g.jobs), labels_of(samples),
                                        g.config.empty() ? fs::path(".") : fs::path(g.config).parent_path(), g.jobs);
  const fs::path path = out_dir(g) / "model.rec";
  save_recognizer(r, path);
  const auto& wr = std::get<WordRecognizer>(r);
  std::printf("trained %zu character models on %zu images, lexicon %zu words, saved %s\n", wr.hmm.models.size(),
              samples.size(), wr.lexicon.size(), path.string().c_str());
  return 0;
}

int cmd_recognize(const Globals& g, const Selection& sel, const std::string& model,
                  const std::vector<std::string>& images, std::size_t nbest) {
  const Recognizer r = load_recognizer(model);
  if (!images.empty()) {
    for (const auto& path : images) {
      std::printf("%s", path.c_str());
      for (const auto& w : rank(r, load_bilevel(path), nbest)) std::printf("\t%s", w.c_str());
      std::printf("\n");
    }
    return 0;
  }
  const std::vector<Sample> samples = sel.samples();
  const std::vector<Prediction> preds = predict(r, samples, g.jobs, nbest);
  const fs::path path = out_dir(g) / "predictions.tsv";
  write_predictions(preds, path);
  std::printf("wrote %zu predictions to %s\n", preds.size(), path.string().c_str());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& predictions, const std::string& name) {
  EvalReport report;
  if (!predictions.empty()) {
    report = evaluate(read_predictions(predictions));
    if (!g.out.empty()) write_text(out_dir(g) / "report.json", report_to_json(report).dump(2) + "\n");
  } else {
    if (g.config.empty()) throw CLI::ValidationError("eval needs --predictions or an experiment --config");
    const ExperimentResult res =
        run_experiment(name.empty() ? fs::path(g.config).stem().string() : name, load_json(g.config),
                       fs::path(g.config).parent_path(), g.jobs, g.seed);
    report = res.report;
    const fs::path dir = out_dir(g);
    write_predictions(res.predictions, dir / "predictions.tsv");
    write_text(dir / "report.json", res.stamp().dump(2) + "\n");
    std::printf("experiment\t%s\nconfig_hash\t%s\nseed\t%llu\ntrain_items\t%d\n", res.name.c_str(),
                res.config_hash.c_str(), static_cast<unsigned long long>(res.seed), res.train_items);
  }
  std::printf("%s", report_to_text(report).c_str());
  return 0;
}

int cmd_confusion(const Globals& g, const std::string& predictions) {
  const std::string text = confusion_to_text(evaluate(read_predictions(predictions)));
  if (!g.out.empty()) write_text(out_dir(g) / "confusion.tsv", text);
  std::printf("%s", text.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic handwriting dataset generator and recognizer toolkit", "synthhw"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--seed", g.seed, "Master seed (overrides the config)");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--out", g.out, "Output directory");

  Selection sel_feat, sel_svm, sel_hmm, sel_rec;
  std::string mode = "image", lexicon, model, predictions, name;
  std::vector<std::string> images;
  std::size_t nbest = 5;

  auto* gen = app.add_subcommand("gen", "Generate a dataset from a generation config");
  auto* feat = app.add_subcommand("featurize", "Dump PHOG image descriptors or windowed feature sequences");
  sel_feat.add(feat, "all");
  feat->add_option("--mode", mode, "image | sequence")->check(CLI::IsMember({"image", "sequence"}))->capture_default_str();
  auto* tsvm = app.add_subcommand("train-svm", "Train an isolated-glyph SVM recognizer");
  sel_svm.add(tsvm, "train");
  auto* thmm = app.add_subcommand("train-hmm", "Train character HMMs for lexicon word recognition");
  sel_hmm.add(thmm, "train");
  thmm->add_option("--lexicon", lexicon, "Word list (default: training transcriptions)");
  auto* rec = app.add_subcommand("recognize", "Rank transcriptions for test images");
  sel_rec.add(rec, "test");
  rec->add_option("--model", model, "Recognizer file from train-svm or train-hmm")->required();
  rec->add_option("--nbest", nbest, "Hypotheses per image")->capture_default_str();
  rec->add_option("images", images, "Image files to recognize directly");
  auto* ev = app.add_subcommand("eval", "Score predictions, or run an experiment config end to end");
  ev->add_option("--predictions", predictions, "predictions.tsv from recognize");
  ev->add_option("--name", name, "Experiment name for the report stamp");
  auto* conf = app.add_subcommand("confusion", "Print the top-1 confusion matrix of a predictions file");
  conf->add_option("--predictions", predictions, "predictions.tsv from recognize")->required();
  for (auto* sc : app.get_subcommands([](CLI::App*) { return true; })) sc->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen(g);
    if (*feat) return cmd_featurize(g, sel_feat, mode);
    if (*tsvm) return cmd_train_svm(g, sel_svm);
    if (*thmm) return cmd_train_hmm(g, sel_hmm, lexicon);
    if (*rec) return cmd_recognize(g, sel_rec, model, images, nbest);
    if (*ev) return cmd_eval(g, predictions, name);
    if (*conf) return cmd_confusion(g, predictions);
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 1;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
