#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "synthhw/dataset.hpp"
#include "synthhw/evaluate.hpp"

namespace synthhw {

// Isolated glyph recognizer: PHOG or PCA features into a multiclass SVM.
struct ImageRecognizerOptions {
  std::string features = "phog";  // "phog" | "pca"
  int pca_components = 40;
  int pca_side = 150;
  SvmOptions svm;
};

struct ImageRecognizer {
  std::string features = "phog";
  std::optional<PcaModel> pca;
  SvmModel svm;
};

Vector image_features(const ImageRecognizer& r, const BilevelImage& img);
// Feature vectors for a batch, computed on `jobs` threads.
std::vector<Vector> image_features(const ImageRecognizer& r, std::span<const BilevelImage> imgs, int jobs);
ImageRecognizer train_image_recognizer(std::span<const BilevelImage> imgs, std::span<const std::string> labels,
                                       const ImageRecognizerOptions& opt);
std::vector<std::string> rank_labels(const ImageRecognizer& r, const BilevelImage& img);

// Word recognizer: windowed features into character HMMs, lexicon decoding.
struct WordRecognizer {
  WindowSpec window;
  HmmSet hmm;
  std::vector<std::string> lexicon;
};

// An empty lexicon means the distinct training transcriptions.
WordRecognizer train_word_recognizer(std::span<const BilevelImage> imgs, std::span<const std::string> transcriptions,
                                     const WindowSpec& window, const HmmTrainOptions& opt,
                                     std::vector<std::string> lexicon = {});
std::vector<Hypothesis> recognize_word(const WordRecognizer& r, const BilevelImage& img, std::size_t n = 5);

using Recognizer = std::variant<ImageRecognizer, WordRecognizer>;

// Ranked transcriptions, best first.
std::vector<std::string> rank(const Recognizer& r, const BilevelImage& img, std::size_t n = 5);

std::string recognizer_to_text(const Recognizer& r);
Recognizer recognizer_from_text(const std::string& text);
void save_recognizer(const Recognizer& r, const std::filesystem::path& path);
Recognizer load_recognizer(const std::filesystem::path& path);

std::string pca_to_text(const PcaModel& m);
PcaModel pca_from_text(const std::string& text);

// A labelled test image with its provenance.
struct Sample {
  std::string id;
  std::filesystem::path path;
  std::string truth;
  EvalMeta meta;
};

std::vector<Sample> samples_from_manifest(const DatasetManifest& m, std::span<const ManifestRecord> records);
std::vector<Sample> samples_from_label_file(const std::filesystem::path& path);
std::vector<BilevelImage> load_images(std::span<const Sample> samples, int jobs);

struct Prediction {
  Sample sample;
  std::vector<std::string> ranked;
};

// Tab-separated: id truth font distortion pred1 pred2 ...
void write_predictions(std::span<const Prediction> preds, const std::filesystem::path& path);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

// Label recorded for images no lexicon word can explain; always a miss.
inline constexpr const char* kReject = "<reject>";

std::vector<Prediction> predict(const Recognizer& r, std::span<const Sample> samples, int jobs, std::size_t n = 5);
EvalReport evaluate(std::span<const Prediction> preds);

struct ExperimentResult {
  std::string name;
  EvalReport report;
  std::string config_hash;
  std::uint64_t seed = 0;
  int train_items = 0;
  std::vector<Prediction> predictions;

  Json stamp() const;
};

// Experiment document:
//   {"seed": 1,
//    "generate": {...generation config...}      (optional; seed is overridden)
//    "dataset": "dir",                          (when not generating)
//    "train": {"split": "train", "fonts": [...], "distorted": false, "max_variant": 9},
//    "test":  {...same filter keys...},
//    "train_labels": "file", "test_labels": "file"   (pre-rendered data instead)
//    "recognizer": {"type": "svm", "features": "phog", "svm": {...}}
//                | {"type": "hmm", "window": {...}, "hmm": {...}, "lexicon": "file", "nbest": 5}}
// Relative paths resolve against base_dir.
ExperimentResult run_experiment(const std::string& name, const Json& cfg, const std::filesystem::path& base_dir,
                                int jobs = 1, std::optional<std::uint64_t> seed = std::nullopt);

// Trains the recognizer section on the given samples.
Recognizer train_recognizer(const Json& recognizer_cfg, std::span<const BilevelImage> imgs,
                            std::span<const std::string> labels, const std::filesystem::path& base_dir, int jobs);

}  // namespace synthhw
