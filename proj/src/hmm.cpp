#include "synthhw/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "synthhw/error.hpp"
#include "synthhw/parallel.hpp"
#include "synthhw/render.hpp"

namespace synthhw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Mixture with per-component constants folded in.
struct CompiledGmm {
  std::vector<double> konst;  // log w_k - 0.5 (D log 2pi + sum log var)
  std::vector<Vector> means;
  std::vector<Vector> inv_vars;

  explicit CompiledGmm(const GaussianMixture& g) : means(g.means) {
    const double d = static_cast<double>(g.dim());
    for (std::size_t k = 0; k < g.components(); ++k) {
      double log_det = 0.0;
      Vector inv(g.vars[k].size());
      for (std::size_t i = 0; i < inv.size(); ++i) {
        log_det += std::log(g.vars[k][i]);
        inv[i] = 1.0 / g.vars[k][i];
      }
      konst.push_back(safe_log(g.weights[k]) - 0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det));
      inv_vars.push_back(std::move(inv));
    }
  }

  double component(std::size_t k, std::span<const double> x) const {
    if (konst[k] == kNegInf) return kNegInf;
    double q = 0.0;
    const Vector& mu = means[k];
    const Vector& iv = inv_vars[k];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double dlt = x[i] - mu[i];
      q += dlt * dlt * iv[i];
    }
    return konst[k] - 0.5 * q;
  }

  // Fills per-component log terms and returns their log-sum-exp.
  double eval(std::span<const double> x, double* comps) const {
    double m = kNegInf;
    for (std::size_t k = 0; k < konst.size(); ++k) {
      comps[k] = component(k, x);
      m = std::max(m, comps[k]);
    }
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (std::size_t k = 0; k < konst.size(); ++k) s += std::exp(comps[k] - m);
    return m + std::log(s);
  }
};

void check_gmm(const GaussianMixture& g) {
  require(g.components() > 0 && g.means.size() == g.components() && g.vars.size() == g.components(),
          ErrorKind::Precondition, "malformed Gaussian mixture");
}

using Matrix = std::vector<Vector>;

Matrix log_trans(const HmmModel& m) {
  Matrix la(m.size(), Vector(m.size(), kNegInf));
  for (int i = 0; i < m.size(); ++i)
    for (int j = i; j < std::min(m.size(), i + 3); ++j) la[i][j] = safe_log(m.trans[i][j]);
  return la;
}

void check_model(const HmmModel& m) {
  require(m.size() > 0, ErrorKind::Precondition, "HMM has no states");
  require(static_cast<int>(m.trans.size()) == m.size() && static_cast<int>(m.exit.size()) == m.size(),
          ErrorKind::Precondition, "HMM transition table does not match its state count");
}

Matrix forward_table(const Matrix& la, const Matrix& e) {
  const std::size_t t_len = e.size(), n = la.size();
  Matrix a(t_len, Vector(n, kNegInf));
  a[0][0] = e[0][0];
  for (std::size_t t = 1; t < t_len; ++t)
    for (std::size_t j = 0; j < n; ++j) {
      double s = kNegInf;
      for (std::size_t i = j >= 2 ? j - 2 : 0; i <= j; ++i) s = lse(s, a[t - 1][i] + la[i][j]);
      a[t][j] = s + e[t][j];
    }
  return a;
}

Matrix backward_table(const Matrix& la, const Matrix& e) {
  const std::size_t t_len = e.size(), n = la.size();
  Matrix b(t_len, Vector(n, kNegInf));
  b[t_len - 1][n - 1] = 0.0;
  for (std::size_t t = t_len - 1; t-- > 0;)
    for (std::size_t i = 0; i < n; ++i) {
      double s = kNegInf;
      for (std::size_t j = i; j < std::min(n, i + 3); ++j) s = lse(s, la[i][j] + e[t + 1][j] + b[t + 1][j]);
      b[t][i] = s;
    }
  return b;
}

ViterbiResult viterbi_table(const Matrix& la, const Matrix& e) {
  const std::size_t t_len = e.size(), n = la.size();
  Matrix d(t_len, Vector(n, kNegInf));
  std::vector<std::vector<int>> back(t_len, std::vector<int>(n, -1));
  d[0][0] = e[0][0];
  for (std::size_t t = 1; t < t_len; ++t)
    for (std::size_t j = 0; j < n; ++j) {
      double best = kNegInf;
      int arg = -1;
      for (std::size_t i = j >= 2 ? j - 2 : 0; i <= j; ++i) {
        const double v = d[t - 1][i] + la[i][j];
        if (v > best) {
          best = v;
          arg = static_cast<int>(i);
        }
      }
      d[t][j] = best + e[t][j];
      back[t][j] = arg;
    }
  ViterbiResult r;
  r.score = d[t_len - 1][n - 1];
  if (r.score == kNegInf)
    fail(ErrorKind::NoValidPath,
         "no path through " + std::to_string(n) + " states in " + std::to_string(t_len) + " frames");
  r.path.assign(t_len, 0);
  int s = static_cast<int>(n) - 1;
  for (std::size_t t = t_len; t-- > 0;) {
    r.path[t] = s;
    if (t > 0) s = back[t][s];
  }
  return r;
}

void require_frames(std::span<const Vector> frames) {
  if (frames.empty()) fail(ErrorKind::EmptySequence, "observation sequence is empty");
}

}  // namespace

double gmm_logpdf(const GaussianMixture& g, std::span<const double> x) {
  check_gmm(g);
  require(x.size() == g.dim(), ErrorKind::DimensionMismatch,
          "frame has " + std::to_string(x.size()) + " dims, mixture expects " + std::to_string(g.dim()));
  const CompiledGmm c(g);
  std::vector<double> comps(g.components());
  return c.eval(x, comps.data());
}

HmmModel make_bakis(std::vector<GaussianMixture> states) {
  HmmModel m;
  const int n = static_cast<int>(states.size());
  require(n > 0, ErrorKind::Precondition, "HMM needs at least one state");
  m.states = std::move(states);
  m.trans.assign(n, Vector(n, 0.0));
  m.exit.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    m.trans[i][i] = 0.6;
    if (i + 2 < n) {
      m.trans[i][i + 1] = 0.3;
      m.trans[i][i + 2] = 0.1;
    } else if (i + 1 < n) {
      m.trans[i][i + 1] = 0.4;
    } else {
      m.exit[i] = 0.4;
    }
  }
  return m;
}

std::vector<Vector> log_emissions(const HmmModel& m, std::span<const Vector> frames) {
  check_model(m);
  std::vector<Vector> e(frames.size(), Vector(m.size()));
  for (int j = 0; j < m.size(); ++j) {
    check_gmm(m.states[j]);
    const CompiledGmm c(m.states[j]);
    std::vector<double> comps(m.states[j].components());
    for (std::size_t t = 0; t < frames.size(); ++t) {
      require(frames[t].size() == m.states[j].dim(), ErrorKind::DimensionMismatch, "frame dimension mismatch");
      e[t][j] = c.eval(frames[t], comps.data());
    }
  }
  return e;
}

double forward_loglik(const HmmModel& m, std::span<const Vector> frames) {
  require_frames(frames);
  const Matrix e = log_emissions(m, frames);
  return forward_table(log_trans(m), e).back().back();
}

double backward_loglik(const HmmModel& m, std::span<const Vector> frames) {
  require_frames(frames);
  const Matrix e = log_emissions(m, frames);
  return backward_table(log_trans(m), e)[0][0] + e[0][0];
}

ViterbiResult viterbi(const HmmModel& m, std::span<const Vector> frames) {
  require_frames(frames);
  return viterbi_table(log_trans(m), log_emissions(m, frames));
}

std::vector<Vector> sample_sequence(const HmmModel& m, SeededRng& rng, int max_len) {
  check_model(m);
  std::vector<Vector> out;
  int s = 0;
  while (static_cast<int>(out.size()) < max_len) {
    const GaussianMixture& g = m.states[s];
    double u = rng.uniform01();
    std::size_t k = 0;
    for (; k + 1 < g.components(); ++k) {
      if (u < g.weights[k]) break;
      u -= g.weights[k];
    }
    Vector x(g.dim());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = g.means[k][i] + std::sqrt(g.vars[k][i]) * rng.normal();
    out.push_back(std::move(x));

    double v = rng.uniform01();
    int next = -1;
    for (int j = s; j < std::min(m.size(), s + 3); ++j) {
      if (v < m.trans[s][j]) {
        next = j;
        break;
      }
      v -= m.trans[s][j];
    }
    if (next < 0) {
      if (s == m.size() - 1) break;  // left the model
      next = s;                      // rounding slack
    }
    s = next;
  }
  return out;
}

WordModel build_word_model(const HmmSet& set, const std::string& word) {
  WordModel w;
  w.transcription = word;
  w.units = utf8_chars(word);
  require(!w.units.empty(), ErrorKind::Precondition, "empty word");
  int total = 0;
  for (const std::string& u : w.units) {
    const auto it = set.models.find(u);
    if (it == set.models.end()) fail(ErrorKind::MissingCharacterModel, "no model for '" + u + "' in '" + word + "'");
    w.first_state.push_back(total);
    total += it->second.size();
  }
  HmmModel& h = w.hmm;
  h.trans.assign(total, Vector(total, 0.0));
  h.exit.assign(total, 0.0);
  for (std::size_t k = 0; k < w.units.size(); ++k) {
    const HmmModel& c = set.models.at(w.units[k]);
    const int o = w.first_state[k], n = c.size();
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < std::min(n, i + 3); ++j) h.trans[o + i][o + j] = c.trans[i][j];
      h.states.push_back(c.states[i]);
    }
    if (k + 1 < w.units.size())
      h.trans[o + n - 1][o + n] = c.exit[n - 1];
    else
      h.exit[o + n - 1] = c.exit[n - 1];
  }
  return w;
}

Vector variance_floor(std::span<const TrainingSample> corpus, double rel) {
  std::size_t dim = 0;
  for (const auto& s : corpus)
    if (!s.frames.empty()) {
      dim = s.frames.front().size();
      break;
    }
  Vector sum(dim, 0.0), sq(dim, 0.0);
  double count = 0.0;
  for (const auto& s : corpus)
    for (const Vector& f : s.frames) {
      for (std::size_t i = 0; i < dim; ++i) {
        sum[i] += f[i];
        sq[i] += f[i] * f[i];
      }
      count += 1.0;
    }
  Vector floor(dim, 1e-8);
  if (count == 0.0) return floor;
  for (std::size_t i = 0; i < dim; ++i) {
    const double mean = sum[i] / count;
    floor[i] = std::max(1e-8, rel * std::max(0.0, sq[i] / count - mean * mean));
  }
  return floor;
}

HmmSet init_character_models(std::span<const TrainingSample> corpus, const HmmTrainOptions& opt) {
  if (corpus.empty()) fail(ErrorKind::EmptyCorpus, "no training samples");
  require(opt.states_per_char >= 1, ErrorKind::Precondition, "states per character must be positive");
  HmmSet set;
  for (const auto& s : corpus)
    if (!s.frames.empty()) {
      set.dim = static_cast<int>(s.frames.front().size());
      break;
    }
  if (set.dim == 0) fail(ErrorKind::EmptyCorpus, "training samples carry no frames");
  const Vector floor = variance_floor(corpus, opt.var_floor_rel);
  const std::size_t d = set.dim;
  const int n = opt.states_per_char;

  struct Acc {
    std::vector<Vector> sum, sq;
    Vector count;
  };
  std::map<std::string, Acc> acc;
  Vector gsum(d, 0.0), gsq(d, 0.0);
  double gcount = 0.0;
  for (const auto& s : corpus) {
    const auto units = utf8_chars(s.transcription);
    if (units.empty()) continue;
    for (const auto& u : units)
      if (!acc.count(u)) acc[u] = Acc{std::vector<Vector>(n, Vector(d, 0.0)), std::vector<Vector>(n, Vector(d, 0.0)),
                                      Vector(n, 0.0)};
    const std::size_t total = units.size() * n, t_len = s.frames.size();
    for (std::size_t t = 0; t < t_len; ++t) {
      require(s.frames[t].size() == d, ErrorKind::DimensionMismatch, "training frames differ in dimension");
      const std::size_t g = t * total / t_len;
      Acc& a = acc[units[g / n]];
      const std::size_t st = g % n;
      for (std::size_t i = 0; i < d; ++i) {
        const double x = s.frames[t][i];
        a.sum[st][i] += x;
        a.sq[st][i] += x * x;
        gsum[i] += x;
        gsq[i] += x * x;
      }
      a.count[st] += 1.0;
      gcount += 1.0;
    }
  }
  auto gaussian = [&](const Vector& sum, const Vector& sq, double c) {
    GaussianMixture g;
    g.weights = {1.0};
    Vector mean(d), var(d);
    for (std::size_t i = 0; i < d; ++i) {
      mean[i] = sum[i] / c;
      var[i] = std::max(floor[i], sq[i] / c - mean[i] * mean[i]);
    }
    g.means = {mean};
    g.vars = {var};
    return g;
  };
  for (auto& [unit, a] : acc) {
    std::vector<GaussianMixture> states;
    for (int j = 0; j < n; ++j)
      states.push_back(a.count[j] > 0 ? gaussian(a.sum[j], a.sq[j], a.count[j]) : gaussian(gsum, gsq, gcount));
    set.models[unit] = make_bakis(std::move(states));
  }
  return set;
}

namespace {

struct UnitStats {
  Matrix trans;   // local i -> j counts
  Vector exit;    // leaving the unit
  std::vector<Vector> occ;               // [state][comp]
  std::vector<std::vector<Vector>> sum;  // [state][comp][dim]
  std::vector<std::vector<Vector>> sq;
};

struct Stats {
  std::map<std::string, UnitStats> units;
  double loglik = 0.0;
  int used = 0;

  void ensure(const HmmSet& set) {
    for (const auto& [name, m] : set.models) {
      UnitStats& u = units[name];
      if (!u.trans.empty()) continue;
      const int n = m.size();
      u.trans.assign(n, Vector(n, 0.0));
      u.exit.assign(n, 0.0);
      for (int j = 0; j < n; ++j) {
        const std::size_t mc = m.states[j].components();
        u.occ.emplace_back(mc, 0.0);
        u.sum.emplace_back(mc, Vector(set.dim, 0.0));
        u.sq.emplace_back(mc, Vector(set.dim, 0.0));
      }
    }
  }

  void merge(const Stats& o) {
    loglik += o.loglik;
    used += o.used;
    for (const auto& [name, s] : o.units) {
      UnitStats& u = units.at(name);
      for (std::size_t i = 0; i < s.trans.size(); ++i) {
        for (std::size_t j = 0; j < s.trans[i].size(); ++j) u.trans[i][j] += s.trans[i][j];
        u.exit[i] += s.exit[i];
        for (std::size_t k = 0; k < s.occ[i].size(); ++k) {
          u.occ[i][k] += s.occ[i][k];
          for (std::size_t d = 0; d < s.sum[i][k].size(); ++d) {
            u.sum[i][k][d] += s.sum[i][k][d];
            u.sq[i][k][d] += s.sq[i][k][d];
          }
        }
      }
    }
  }
};

constexpr double kMinPosterior = 1e-10;

void accumulate(const HmmSet& set, const TrainingSample& sample, Stats& st) {
  if (sample.frames.empty()) return;
  const WordModel w = build_word_model(set, sample.transcription);
  const HmmModel& h = w.hmm;
  const std::size_t t_len = sample.frames.size(), n = h.size();

  // Emissions with per-component terms kept for the mixture posteriors.
  std::vector<CompiledGmm> compiled;
  compiled.reserve(n);
  for (const auto& g : h.states) compiled.emplace_back(g);
  Matrix e(t_len, Vector(n));
  std::vector<std::vector<Vector>> comp(t_len, std::vector<Vector>(n));
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < n; ++j) {
      comp[t][j].resize(h.states[j].components());
      e[t][j] = compiled[j].eval(sample.frames[t], comp[t][j].data());
    }
  const Matrix la = log_trans(h);
  const Matrix a = forward_table(la, e);
  const double ll = a.back().back();
  if (ll == kNegInf) return;
  const Matrix b = backward_table(la, e);
  st.loglik += ll;
  st.used += 1;

  std::vector<UnitStats*> owner(n);
  std::vector<int> local(n);
  for (std::size_t k = 0; k < w.units.size(); ++k) {
    const int first = w.first_state[k];
    const int len = set.models.at(w.units[k]).size();
    for (int i = 0; i < len; ++i) {
      owner[first + i] = &st.units.at(w.units[k]);
      local[first + i] = i;
    }
  }

  for (std::size_t t = 0; t < t_len; ++t) {
    const Vector& x = sample.frames[t];
    for (std::size_t j = 0; j < n; ++j) {
      const double lg = a[t][j] + b[t][j] - ll;
      if (lg == kNegInf) continue;
      const double gamma = std::exp(lg);
      UnitStats& u = *owner[j];
      const int s = local[j];
      for (std::size_t k = 0; k < comp[t][j].size(); ++k) {
        const double r = gamma * std::exp(comp[t][j][k] - e[t][j]);
        if (r < kMinPosterior) continue;
        u.occ[s][k] += r;
        Vector& su = u.sum[s][k];
        Vector& sq = u.sq[s][k];
        for (std::size_t d = 0; d < x.size(); ++d) {
          su[d] += r * x[d];
          sq[d] += r * x[d] * x[d];
        }
      }
      if (t + 1 == t_len) continue;
      for (std::size_t jj = j; jj < std::min(n, j + 3); ++jj) {
        if (la[j][jj] == kNegInf) continue;
        const double xi = std::exp(a[t][j] + la[j][jj] + e[t + 1][jj] + b[t + 1][jj] - ll);
        if (owner[jj] == owner[j] && local[jj] > local[j])
          u.trans[s][local[jj]] += xi;
        else if (jj == j)
          u.trans[s][s] += xi;
        else
          u.exit[s] += xi;  // into the next unit
      }
    }
  }
}

}  // namespace

EmStats reestimate(HmmSet& set, std::span<const TrainingSample> corpus, std::span<const double> var_floor,
                   const HmmTrainOptions& opt) {
  if (corpus.empty()) fail(ErrorKind::EmptyCorpus, "no training samples");
  require(var_floor.size() == static_cast<std::size_t>(set.dim), ErrorKind::DimensionMismatch,
          "variance floor length mismatch");
  for (const auto& s : corpus) (void)build_word_model(set, s.transcription);  // surfaces missing models early

  // Fixed blocks, processed in waves of `jobs`, merged in block order: the
  // sums do not depend on the thread count.
  constexpr std::size_t kBlock = 16;
  const std::size_t blocks = (corpus.size() + kBlock - 1) / kBlock;
  const std::size_t wave = static_cast<std::size_t>(std::max(1, opt.jobs));
  Stats total;
  total.ensure(set);
  for (std::size_t w0 = 0; w0 < blocks; w0 += wave) {
    const std::size_t count = std::min(wave, blocks - w0);
    std::vector<Stats> part(count);
    parallel_for(count, opt.jobs, [&](std::size_t b) {
      part[b].ensure(set);
      const std::size_t lo = (w0 + b) * kBlock, hi = std::min(corpus.size(), lo + kBlock);
      for (std::size_t i = lo; i < hi; ++i) accumulate(set, corpus[i], part[b]);
    });
    for (const Stats& p : part) total.merge(p);
  }

  const double f = opt.leave_floor;
  for (auto& [name, m] : set.models) {
    const UnitStats& u = total.units.at(name);
    const int n = m.size();
    for (int i = 0; i < n; ++i) {
      // Transitions: ML row, then the stay probability is capped at 1 - f
      // with the leaving mass shared in proportion to its counts.
      std::vector<double> leave;
      std::vector<int> target;  // local index, or n for exit
      for (int j = i + 1; j < std::min(n, i + 3); ++j) {
        leave.push_back(u.trans[i][j]);
        target.push_back(j);
      }
      if (i == n - 1) {
        leave.push_back(u.exit[i]);
        target.push_back(n);
      }
      double leave_total = 0.0;
      for (double v : leave) leave_total += v;
      const double rowsum = u.trans[i][i] + leave_total;
      if (rowsum > 0.0 && !target.empty()) {
        double stay = u.trans[i][i] / rowsum;
        stay = std::min(stay, 1.0 - f);
        const double mass = 1.0 - stay;
        std::fill(m.trans[i].begin(), m.trans[i].end(), 0.0);
        m.exit[i] = 0.0;
        m.trans[i][i] = stay;
        for (std::size_t q = 0; q < target.size(); ++q) {
          const double p = leave_total > 0.0 ? mass * leave[q] / leave_total : (q == 0 ? mass : 0.0);
          if (target[q] == n)
            m.exit[i] = p;
          else
            m.trans[i][target[q]] = p;
        }
      }

      GaussianMixture& g = m.states[i];
      double occ = 0.0;
      for (double v : u.occ[i]) occ += v;
      if (occ <= 0.0) continue;
      for (std::size_t k = 0; k < g.components(); ++k) {
        const double ok = u.occ[i][k];
        g.weights[k] = ok / occ;
        if (ok <= 0.0) continue;
        for (int d = 0; d < set.dim; ++d) {
          const double mean = u.sum[i][k][d] / ok;
          g.means[k][d] = mean;
          g.vars[k][d] = std::max(var_floor[d], u.sq[i][k][d] / ok - mean * mean);
        }
      }
    }
  }
  return {total.loglik, total.used};
}

void split_mixtures(HmmSet& set) {
  for (auto& [name, m] : set.models)
    for (GaussianMixture& g : m.states) {
      GaussianMixture out;
      for (std::size_t k = 0; k < g.components(); ++k) {
        const Vector& var = g.vars[k];
        const std::size_t d = static_cast<std::size_t>(std::max_element(var.begin(), var.end()) - var.begin());
        const double delta = 0.2 * std::sqrt(var[d]);
        for (double sign : {1.0, -1.0}) {
          Vector mu = g.means[k];
          mu[d] += sign * delta;
          out.weights.push_back(g.weights[k] / 2.0);
          out.means.push_back(std::move(mu));
          out.vars.push_back(var);
        }
      }
      g = std::move(out);
    }
}

HmmSet baum_welch(std::span<const TrainingSample> corpus, const HmmTrainOptions& opt, std::vector<double>* history) {
  HmmSet set = init_character_models(corpus, opt);
  const Vector floor = variance_floor(corpus, opt.var_floor_rel);
  for (int mix = 1;; mix *= 2) {
    for (int it = 0; it < opt.iterations_per_stage; ++it) {
      const EmStats s = reestimate(set, corpus, floor, opt);
      if (history) history->push_back(s.loglik);
    }
    if (mix * 2 > opt.max_mixtures) break;
    split_mixtures(set);
  }
  return set;
}

namespace {

int unit_of(const WordModel& w, int state) {
  return static_cast<int>(std::upper_bound(w.first_state.begin(), w.first_state.end(), state) - w.first_state.begin()) -
         1;
}

std::vector<std::pair<int, int>> spans_from_path(const WordModel& w, const std::vector<int>& path) {
  std::vector<std::pair<int, int>> out(w.units.size(), {0, 0});
  std::vector<bool> seen(w.units.size(), false);
  for (std::size_t t = 0; t < path.size(); ++t) {
    const int u = unit_of(w, path[t]);
    if (!seen[u]) {
      out[u].first = static_cast<int>(t);
      seen[u] = true;
    }
    out[u].second = static_cast<int>(t) + 1;
  }
  return out;
}

}  // namespace

std::vector<Hypothesis> nbest_lexicon(const HmmSet& set, std::span<const std::string> lexicon,
                                      std::span<const Vector> frames, std::size_t n) {
  require(!lexicon.empty(), ErrorKind::Precondition, "lexicon is empty");
  require(n >= 1, ErrorKind::Precondition, "N must be at least 1");
  require_frames(frames);

  // Emission cache per unit, shared across lexicon entries.
  std::map<std::string, Matrix> cache;
  std::vector<Hypothesis> hyps;
  for (const std::string& word : lexicon) {
    const WordModel w = build_word_model(set, word);
    Matrix e(frames.size(), Vector(w.hmm.size()));
    for (std::size_t k = 0; k < w.units.size(); ++k) {
      auto it = cache.find(w.units[k]);
      if (it == cache.end()) it = cache.emplace(w.units[k], log_emissions(set.models.at(w.units[k]), frames)).first;
      const int o = w.first_state[k];
      for (std::size_t t = 0; t < frames.size(); ++t)
        for (std::size_t j = 0; j < it->second[t].size(); ++j) e[t][o + j] = it->second[t][j];
    }
    Hypothesis h;
    h.transcription = word;
    try {
      const ViterbiResult r = viterbi_table(log_trans(w.hmm), e);
      h.score = r.score;
      h.boundaries = spans_from_path(w, r.path);
    } catch (const Error& err) {
      if (err.kind() != ErrorKind::NoValidPath) throw;
      h.score = kNegInf;
    }
    hyps.push_back(std::move(h));
  }
  if (std::all_of(hyps.begin(), hyps.end(), [](const Hypothesis& h) { return h.score == kNegInf; }))
    fail(ErrorKind::NoValidPath, "no lexicon word fits " + std::to_string(frames.size()) + " frames");
  std::stable_sort(hyps.begin(), hyps.end(), [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
  if (hyps.size() > n) hyps.resize(n);
  return hyps;
}

std::vector<std::pair<int, int>> forced_alignment(const WordModel& word, std::span<const Vector> frames) {
  return spans_from_path(word, viterbi(word.hmm, frames).path);
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << ' ' << buf;
}

}  // namespace

std::string hmm_set_to_text(const HmmSet& set) {
  std::ostringstream os;
  os << "hmmset 1\ndim " << set.dim << "\nmodels " << set.models.size() << '\n';
  for (const auto& [name, m] : set.models) {
    os << "model " << name << ' ' << m.size() << '\n';
    for (int i = 0; i < m.size(); ++i) {
      os << "trans";
      for (double v : m.trans[i]) put(os, v);
      put(os, m.exit[i]);
      os << '\n';
    }
    for (const GaussianMixture& g : m.states) {
      os << "state " << g.components() << '\n';
      for (std::size_t k = 0; k < g.components(); ++k) {
        os << "mix";
        put(os, g.weights[k]);
        for (double v : g.means[k]) put(os, v);
        for (double v : g.vars[k]) put(os, v);
        os << '\n';
      }
    }
  }
  return os.str();
}

HmmSet hmm_set_from_text(const std::string& text) {
  std::istringstream is(text);
  auto bad = [](const std::string& what) { fail(ErrorKind::Parse, "hmm set: " + what); };
  std::string line, tag;
  auto next = [&](const std::string& expect) {
    if (!std::getline(is, line)) bad("truncated before '" + expect + "'");
    std::istringstream ls(line);
    ls >> tag;
    if (tag != expect) bad("expected '" + expect + "', got '" + tag + "'");
    return ls;
  };
  if (!std::getline(is, line) || line != "hmmset 1") bad("missing header");
  HmmSet set;
  std::size_t count = 0;
  if (!(next("dim") >> set.dim) || set.dim <= 0) bad("bad dim");
  if (!(next("models") >> count)) bad("bad model count");
  for (std::size_t q = 0; q < count; ++q) {
    auto ls = next("model");
    std::string name;
    int n = 0;
    if (!(ls >> name >> n) || n <= 0) bad("bad model header");
    HmmModel m;
    for (int i = 0; i < n; ++i) {
      auto tl = next("trans");
      Vector row(n);
      for (double& v : row)
        if (!(tl >> v)) bad("short transition row");
      double ex = 0;
      if (!(tl >> ex)) bad("missing exit probability");
      for (int j = 0; j < n; ++j)
        if (row[j] != 0.0 && (j < i || j > i + 2)) bad("transition outside the left-to-right band");
      m.trans.push_back(std::move(row));
      m.exit.push_back(ex);
    }
    for (int i = 0; i < n; ++i) {
      std::size_t mc = 0;
      if (!(next("state") >> mc) || mc == 0) bad("bad state header");
      GaussianMixture g;
      for (std::size_t k = 0; k < mc; ++k) {
        auto ml = next("mix");
        double w = 0;
        Vector mu(set.dim), var(set.dim);
        if (!(ml >> w)) bad("bad mixture weight");
        for (double& v : mu)
          if (!(ml >> v)) bad("short mean");
        for (double& v : var)
          if (!(ml >> v) || v <= 0) bad("bad variance");
        g.weights.push_back(w);
        g.means.push_back(std::move(mu));
        g.vars.push_back(std::move(var));
      }
      m.states.push_back(std::move(g));
    }
    set.models[name] = std::move(m);
  }
  return set;
}

void save_hmm_set(const HmmSet& set, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  os << hmm_set_to_text(set);
}

HmmSet load_hmm_set(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return hmm_set_from_text(ss.str());
}

std::vector<std::string> read_lexicon(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace synthhw
