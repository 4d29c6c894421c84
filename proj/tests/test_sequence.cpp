#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "synthhw/error.hpp"
#include "synthhw/hmm.hpp"

using namespace synthhw;

namespace {

GaussianMixture gauss(Vector mean, Vector var) { return {{1.0}, {std::move(mean)}, {std::move(var)}}; }

// Random left-to-right model: Bakis support, rows plus exit summing to 1.
HmmModel random_model(std::mt19937& gen, int n, int dim) {
  std::uniform_real_distribution<double> u(0.05, 1.0), mu(-2.0, 2.0), var(0.3, 2.0);
  std::vector<GaussianMixture> states;
  for (int i = 0; i < n; ++i) {
    GaussianMixture g;
    const int k = 1 + static_cast<int>(gen() % 2);
    double wsum = 0.0;
    for (int c = 0; c < k; ++c) {
      g.weights.push_back(u(gen));
      wsum += g.weights.back();
      Vector m(dim), v(dim);
      for (int d = 0; d < dim; ++d) {
        m[d] = mu(gen);
        v[d] = var(gen);
      }
      g.means.push_back(m);
      g.vars.push_back(v);
    }
    for (double& w : g.weights) w /= wsum;
    states.push_back(g);
  }
  HmmModel m = make_bakis(states);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = i; j < std::min(n, i + 3); ++j) {
      m.trans[i][j] = u(gen);
      s += m.trans[i][j];
    }
    if (i == n - 1) {
      m.exit[i] = u(gen);
      s += m.exit[i];
    } else {
      m.exit[i] = 0.0;
    }
    for (int j = i; j < std::min(n, i + 3); ++j) m.trans[i][j] /= s;
    m.exit[i] /= s;
  }
  return m;
}

std::vector<Vector> random_frames(std::mt19937& gen, int t, int dim) {
  std::normal_distribution<double> nd(0.0, 1.5);
  std::vector<Vector> out(t, Vector(dim));
  for (auto& f : out)
    for (double& v : f) v = nd(gen);
  return out;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Toy corpus over the alphabet {a, b}: each character emits around its own
// mean for a random number of frames.
std::vector<TrainingSample> toy_corpus(unsigned seed, int count) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> nd(0.0, 0.4);
  const std::vector<std::string> words{"ab", "ba", "aab", "b", "a"};
  std::vector<TrainingSample> out;
  for (int i = 0; i < count; ++i) {
    TrainingSample s;
    s.transcription = words[i % words.size()];
    for (char c : s.transcription) {
      const int len = 6 + static_cast<int>(gen() % 5);
      for (int t = 0; t < len; ++t) {
        const double base = c == 'a' ? -1.0 : 1.5;
        s.frames.push_back({base + nd(gen) + 0.3 * t / len, base * 0.5 + nd(gen)});
      }
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_SUITE("sequence") {
  TEST_CASE("mixture log density") {
    CHECK(gmm_logpdf(gauss({0.0}, {1.0}), Vector{0.0}) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)));
    const GaussianMixture one = gauss({0.3, -1.0}, {0.5, 2.0});
    const GaussianMixture two{{0.5, 0.5}, {{0.3, -1.0}, {0.3, -1.0}}, {{0.5, 2.0}, {0.5, 2.0}}};
    CHECK(gmm_logpdf(two, Vector{1.0, 0.0}) == doctest::Approx(gmm_logpdf(one, Vector{1.0, 0.0})).epsilon(1e-14));

    const GaussianMixture g{{0.2, 0.5, 0.3},
                            {{0.0, 1.0}, {-1.0, 2.0}, {3.0, 0.5}},
                            {{1.0, 0.5}, {2.0, 0.3}, {0.7, 1.1}}};
    for (const Vector x : {Vector{0.1, 0.2}, Vector{-2.0, 3.0}, Vector{4.0, -1.0}}) {
      double p = 0.0;
      for (int k = 0; k < 3; ++k) {
        double d = g.weights[k];
        for (int i = 0; i < 2; ++i)
          d *= std::exp(-0.5 * (x[i] - g.means[k][i]) * (x[i] - g.means[k][i]) / g.vars[k][i]) /
               std::sqrt(2 * std::numbers::pi * g.vars[k][i]);
        p += d;
      }
      CHECK(std::abs(gmm_logpdf(g, x) - std::log(p)) <= 1e-12 * std::abs(std::log(p)));
    }
    try {
      (void)gmm_logpdf(one, Vector{1.0});
      FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DimensionMismatch);
    }
  }

  TEST_CASE("one-dimensional mixtures integrate to one") {
    std::mt19937 gen(2);
    std::uniform_real_distribution<double> w(0.1, 1.0), mu(-3.0, 3.0), sd(0.2, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
      GaussianMixture g;
      double sum = 0.0, lo = 1e9, hi = -1e9;
      for (int k = 0; k < 3; ++k) {
        const double s = sd(gen), m = mu(gen);
        g.weights.push_back(w(gen));
        sum += g.weights.back();
        g.means.push_back({m});
        g.vars.push_back({s * s});
        lo = std::min(lo, m - 8 * s);
        hi = std::max(hi, m + 8 * s);
      }
      for (double& v : g.weights) v /= sum;
      const int steps = 20000;
      const double h = (hi - lo) / steps;
      double area = 0.0;
      for (int i = 0; i <= steps; ++i) {
        const double f = std::exp(gmm_logpdf(g, Vector{lo + i * h}));
        area += (i == 0 || i == steps ? 0.5 : 1.0) * f * h;
      }
      CHECK(std::abs(area - 1.0) < 1e-3);
    }
  }

  TEST_CASE("single-state model is a single path") {
    HmmModel m = make_bakis({gauss({0.5}, {2.0})});
    const std::vector<Vector> o{{0.1}, {1.2}, {-0.4}};
    double want = 0.0;
    for (const auto& f : o) want += gmm_logpdf(m.states[0], f) + 0.0;
    want += 2 * std::log(m.trans[0][0]);
    CHECK(forward_loglik(m, o) == doctest::Approx(want).epsilon(1e-12));
    const ViterbiResult v = viterbi(m, o);
    CHECK(v.path == std::vector<int>{0, 0, 0});
    CHECK(v.score == doctest::Approx(forward_loglik(m, o)).epsilon(1e-12));
  }

  TEST_CASE("forward and viterbi match exhaustive enumeration") {
    std::mt19937 gen(77);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(gen() % 4), t = 1 + static_cast<int>(gen() % 6);
      const HmmModel m = random_model(gen, n, 2);
      const auto o = random_frames(gen, t, 2);
      const auto e = log_emissions(m, o);
      const auto [sum, best] = oracle::enumerate_paths(m.trans, e);
      if (!std::isfinite(best)) {
        try {
          (void)viterbi(m, o);
          FAIL("expected NoValidPath");
        } catch (const Error& err) {
          CHECK(err.kind() == ErrorKind::NoValidPath);
        }
        continue;
      }
      ++checked;
      CHECK(rel_err(forward_loglik(m, o), sum) < 1e-9);
      CHECK(rel_err(backward_loglik(m, o), sum) < 1e-9);
      const ViterbiResult v = viterbi(m, o);
      CHECK(rel_err(v.score, best) < 1e-9);
      CHECK(v.score <= forward_loglik(m, o) + 1e-12);
      REQUIRE(v.path.size() == static_cast<std::size_t>(t));
      CHECK(v.path.front() == 0);
      CHECK(v.path.back() == n - 1);
      double rescored = e[0][v.path[0]];
      for (int k = 1; k < t; ++k) {
        const int d = v.path[k] - v.path[k - 1];
        CHECK((d >= 0 && d <= 2));
        rescored += std::log(m.trans[v.path[k - 1]][v.path[k]]) + e[k][v.path[k]];
      }
      CHECK(rel_err(rescored, v.score) < 1e-9);
    }
    CHECK(checked >= 100);
  }

  TEST_CASE("empty sequences are rejected") {
    const HmmModel m = make_bakis({gauss({0.0}, {1.0})});
    try {
      (void)forward_loglik(m, std::vector<Vector>{});
      FAIL("expected EmptySequence");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::EmptySequence);
    }
  }

  TEST_CASE("Baum-Welch log-likelihood never decreases") {
    for (unsigned seed = 1; seed <= 3; ++seed) {
      const auto corpus = toy_corpus(seed, 20);
      HmmTrainOptions opt;
      opt.states_per_char = 3;
      HmmSet set = init_character_models(corpus, opt);
      const Vector floor = variance_floor(corpus, opt.var_floor_rel);
      double prev = -std::numeric_limits<double>::infinity();
      for (int it = 0; it <= 20; ++it) {
        const EmStats s = reestimate(set, corpus, floor, opt);
        CHECK(s.used == 20);
        CHECK(s.loglik >= prev - 1e-8);
        prev = s.loglik;
      }
      if (seed == 1) split_mixtures(set);
      for (const auto& [name, m] : set.models)
        for (int i = 0; i < m.size(); ++i) {
          double row = m.exit[i];
          for (int j = 0; j < m.size(); ++j) {
            row += m.trans[i][j];
            if (j < i || j > i + 2) CHECK(m.trans[i][j] == 0.0);
          }
          CHECK(std::abs(row - 1.0) < 1e-9);
          double wsum = 0.0;
          for (double w : m.states[i].weights) wsum += w;
          CHECK(std::abs(wsum - 1.0) < 1e-9);
          for (const auto& v : m.states[i].vars)
            for (std::size_t d = 0; d < v.size(); ++d) CHECK(v[d] >= floor[d]);
        }
    }
  }

  TEST_CASE("single-state single-Gaussian training recovers the sample mean") {
    std::mt19937 gen(6);
    std::normal_distribution<double> nd(2.0, 0.7);
    std::vector<TrainingSample> corpus;
    double sum = 0.0;
    int count = 0;
    for (int i = 0; i < 10; ++i) {
      TrainingSample s{{}, "x"};
      for (int t = 0; t < 15; ++t) {
        s.frames.push_back({nd(gen)});
        sum += s.frames.back()[0];
        ++count;
      }
      corpus.push_back(s);
    }
    HmmTrainOptions opt;
    opt.states_per_char = 1;
    opt.max_mixtures = 1;
    const HmmSet set = baum_welch(corpus, opt);
    CHECK(std::abs(set.models.at("x").states[0].means[0][0] - sum / count) < 1e-6);
  }

  TEST_CASE("training errors") {
    CHECK_THROWS_AS(init_character_models(std::vector<TrainingSample>{}, HmmTrainOptions{}), Error);
    HmmSet set;
    set.dim = 1;
    set.models["a"] = make_bakis({gauss({0.0}, {1.0})});
    try {
      (void)build_word_model(set, "ab");
      FAIL("expected MissingCharacterModel");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::MissingCharacterModel);
    }
  }

  TEST_CASE("word models concatenate character models") {
    HmmSet set;
    set.dim = 1;
    set.models["a"] = make_bakis({gauss({0.0}, {1.0}), gauss({1.0}, {1.0}), gauss({2.0}, {1.0})});
    set.models["b"] = make_bakis({gauss({5.0}, {1.0}), gauss({6.0}, {1.0})});
    const WordModel w = build_word_model(set, "aba");
    CHECK(w.hmm.size() == 8);
    CHECK(w.first_state == std::vector<int>{0, 3, 5});
    CHECK(w.hmm.trans[2][3] == doctest::Approx(0.4));
    CHECK(w.hmm.exit[7] == doctest::Approx(0.4));
    CHECK(w.hmm.exit[2] == 0.0);
  }

  TEST_CASE("sampled sequences are recognised as their source word") {
    HmmSet set;
    set.dim = 2;
    const std::vector<std::pair<std::string, std::pair<double, double>>> chars{
        {"a", {0.0, 0.0}}, {"b", {3.0, 0.0}}, {"c", {0.0, 3.0}}, {"d", {3.0, 3.0}}};
    for (const auto& [name, mu] : chars) {
      std::vector<GaussianMixture> st;
      for (int i = 0; i < 3; ++i) st.push_back(gauss({mu.first + 0.3 * i, mu.second - 0.3 * i}, {0.4, 0.4}));
      set.models[name] = make_bakis(st);
    }
    const std::vector<std::string> lexicon{"abc", "bad", "cab", "dab", "acd"};
    const WordModel src = build_word_model(set, lexicon[2]);
    SeededRng rng(31);
    int hits = 0;
    for (int i = 0; i < 100; ++i) {
      const auto o = sample_sequence(src.hmm, rng);
      const auto hyp = nbest_lexicon(set, lexicon, o, 5);
      REQUIRE(hyp.size() == 5);
      for (std::size_t k = 1; k < hyp.size(); ++k) CHECK(hyp[k].score <= hyp[k - 1].score);
      hits += hyp[0].transcription == "cab";
    }
    CHECK(hits >= 95);

    const auto o = sample_sequence(src.hmm, rng);
    const auto single = nbest_lexicon(set, std::vector<std::string>{"dab"}, o, 3);
    REQUIRE(single.size() == 1);
    CHECK(single[0].transcription == "dab");
  }

  TEST_CASE("forced alignment") {
    HmmSet set;
    set.dim = 1;
    set.models["a"] = make_bakis({gauss({0.0}, {0.2}), gauss({0.0}, {0.2})});
    set.models["b"] = make_bakis({gauss({4.0}, {0.2}), gauss({4.0}, {0.2})});
    std::vector<Vector> o;
    for (int t = 0; t < 20; ++t) o.push_back({t < 10 ? 0.05 * (t % 3) : 4.0 - 0.05 * (t % 3)});
    const auto spans = forced_alignment(build_word_model(set, "ab"), o);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].first == 0);
    CHECK(spans[1].second == 20);
    CHECK(spans[0].second == spans[1].first);
    CHECK(std::abs(spans[1].first - 10) <= 1);

    const auto one = forced_alignment(build_word_model(set, "a"), std::vector<Vector>(o.begin(), o.begin() + 7));
    CHECK(one == std::vector<std::pair<int, int>>{{0, 7}});

    try {
      (void)forced_alignment(build_word_model(set, "abab"), std::vector<Vector>(o.begin(), o.begin() + 3));
      FAIL("expected NoValidPath");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::NoValidPath);
    }
  }

  TEST_CASE("model text round trip") {
    const auto corpus = toy_corpus(4, 10);
    HmmTrainOptions opt;
    opt.states_per_char = 2;
    opt.max_mixtures = 2;
    opt.iterations_per_stage = 2;
    const HmmSet set = baum_welch(corpus, opt);
    const HmmSet back = hmm_set_from_text(hmm_set_to_text(set));
    CHECK(hmm_set_to_text(back) == hmm_set_to_text(set));
    const auto& w = corpus[0];
    CHECK(nbest_lexicon(back, std::vector<std::string>{"ab", "ba"}, w.frames, 2)[0].score ==
          nbest_lexicon(set, std::vector<std::string>{"ab", "ba"}, w.frames, 2)[0].score);
  }
}
