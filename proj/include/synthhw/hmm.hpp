#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synthhw/features.hpp"
#include "synthhw/rng.hpp"

namespace synthhw {

// Diagonal-covariance Gaussian mixture.
struct GaussianMixture {
  Vector weights;
  std::vector<Vector> means;
  std::vector<Vector> vars;

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
};

double gmm_logpdf(const GaussianMixture& g, std::span<const double> x);

// Left-to-right model entered in state 0. trans[i][j] is non-zero only for
// j in {i, i+1, i+2}; exit[i] is the probability of leaving the model from
// state i (only the last state may leave). Each row of trans plus exit sums
// to 1. Scores condition on the path ending in the last state and carry no
// exit factor.
struct HmmModel {
  std::vector<Vector> trans;
  Vector exit;
  std::vector<GaussianMixture> states;

  int size() const { return static_cast<int>(states.size()); }
};

// Bakis model with flat transitions (self 0.6, the rest shared by next and
// skip; skips only when n >= 3) and the given initial state densities.
HmmModel make_bakis(std::vector<GaussianMixture> states);

// Log emission table [t][state].
std::vector<Vector> log_emissions(const HmmModel& m, std::span<const Vector> frames);

double forward_loglik(const HmmModel& m, std::span<const Vector> frames);
double backward_loglik(const HmmModel& m, std::span<const Vector> frames);

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
};

// Throws NoValidPath when no path reaches the last state in T frames.
ViterbiResult viterbi(const HmmModel& m, std::span<const Vector> frames);

// Draws a state path from the entry until the model is left (or max_len
// frames) and emits one frame per visited state.
std::vector<Vector> sample_sequence(const HmmModel& m, SeededRng& rng, int max_len = 10000);

// Character models keyed by transcription unit (one UTF-8 codepoint).
struct HmmSet {
  int dim = 0;
  std::map<std::string, HmmModel> models;
};

struct WordModel {
  std::string transcription;
  std::vector<std::string> units;
  std::vector<int> first_state;  // composite index of each unit's first state
  HmmModel hmm;
};

// Concatenation of unit models: the last state of unit k leaves into the
// first state of unit k + 1 with its exit probability.
WordModel build_word_model(const HmmSet& set, const std::string& word);

struct TrainingSample {
  std::vector<Vector> frames;
  std::string transcription;
};

struct HmmTrainOptions {
  int states_per_char = 8;
  int max_mixtures = 32;
  int iterations_per_stage = 4;
  double var_floor_rel = 1e-4;   // times the global per-dimension variance
  double leave_floor = 0.02;     // minimum probability of leaving any state
  int jobs = 1;
};

// One Gaussian per state from a uniform segmentation of every sample over
// its word model.
HmmSet init_character_models(std::span<const TrainingSample> corpus, const HmmTrainOptions& opt);

// Per-dimension variance floor derived from the corpus.
Vector variance_floor(std::span<const TrainingSample> corpus, double rel);

struct EmStats {
  double loglik = 0.0;   // corpus log-likelihood under the models before the update
  int used = 0;          // samples with at least one valid path
};

// One embedded Baum-Welch iteration over whole-word composite models.
EmStats reestimate(HmmSet& set, std::span<const TrainingSample> corpus, std::span<const double> var_floor,
                   const HmmTrainOptions& opt);

// Doubles every mixture: means move by +-0.2 standard deviations along the
// highest-variance dimension, weights are halved.
void split_mixtures(HmmSet& set);

// Full schedule: initialise, then re-estimate and split 1 -> 2 -> 4 ... up to
// max_mixtures. Returns the per-iteration corpus log-likelihoods.
HmmSet baum_welch(std::span<const TrainingSample> corpus, const HmmTrainOptions& opt,
                  std::vector<double>* history = nullptr);

struct Hypothesis {
  std::string transcription;
  double score = 0.0;
  std::vector<std::pair<int, int>> boundaries;  // per unit: frames [first, last)
};

// Every lexicon word scored by Viterbi on its composite model, best first.
// Words with no valid path score -inf and rank last in lexicon order.
std::vector<Hypothesis> nbest_lexicon(const HmmSet& set, std::span<const std::string> lexicon,
                                      std::span<const Vector> frames, std::size_t n);

// Frame spans per unit along the best path.
std::vector<std::pair<int, int>> forced_alignment(const WordModel& word, std::span<const Vector> frames);

void save_hmm_set(const HmmSet& set, const std::filesystem::path& path);
HmmSet load_hmm_set(const std::filesystem::path& path);
std::string hmm_set_to_text(const HmmSet& set);
HmmSet hmm_set_from_text(const std::string& text);

std::vector<std::string> read_lexicon(const std::filesystem::path& path);

}  // namespace synthhw
