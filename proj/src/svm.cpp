#include "synthhw/svm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "synthhw/error.hpp"
#include "synthhw/parallel.hpp"

namespace synthhw {

double kernel_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> xp) {
  require(x.size() == xp.size(), ErrorKind::DimensionMismatch,
          "kernel inputs have lengths " + std::to_string(x.size()) + " and " + std::to_string(xp.size()));
  if (k.type == KernelSpec::Type::Linear) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * xp[i];
    return s;
  }
  require(k.sigma > 0.0, ErrorKind::Precondition, "RBF sigma must be positive");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - xp[i]) * (x[i] - xp[i]);
  return std::exp(-d2 / (2.0 * k.sigma * k.sigma));
}

double median_distance(std::span<const Vector> samples) {
  const std::size_t n = std::min<std::size_t>(samples.size(), 1000);
  std::vector<double> d;
  d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < samples[i].size(); ++k) s += (samples[i][k] - samples[j][k]) * (samples[i][k] - samples[j][k]);
      d.push_back(std::sqrt(s));
    }
  if (d.empty()) return 1.0;
  std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
  const double m = d[d.size() / 2];
  return m > 0.0 ? m : 1.0;
}

SmoSolution smo_solve(std::span<const double> kernel, std::span<const int> y, double c, double tol, long max_iter) {
  const std::size_t n = y.size();
  require(kernel.size() == n * n, ErrorKind::DimensionMismatch, "kernel matrix is not n x n");
  require(c > 0.0, ErrorKind::Precondition, "C must be positive");
  bool pos = false, neg = false;
  for (int v : y) {
    require(v == 1 || v == -1, ErrorKind::Precondition, "binary labels must be +1 or -1");
    (v > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) fail(ErrorKind::DegenerateLabels, "binary training needs both classes");

  constexpr double kTau = 1e-12;
  auto K = [&](std::size_t i, std::size_t j) { return kernel[i * n + j]; };
  SmoSolution sol;
  Vector& a = sol.alpha;
  a.assign(n, 0.0);
  Vector g(n, -1.0);  // gradient of 0.5 a'Qa - e'a

  auto up = [&](std::size_t t) { return (y[t] > 0 && a[t] < c) || (y[t] < 0 && a[t] > 0); };
  auto low = [&](std::size_t t) { return (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < c); };

  double gmax = 0.0, gmin = 0.0;
  for (;;) {
    gmax = -std::numeric_limits<double>::infinity();
    gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * g[t];
      if (up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < tol || sol.iterations >= max_iter) break;
    ++sol.iterations;

    const double qij = y[i] * y[j] * K(i, j);
    const double old_i = a[i], old_j = a[j];
    if (y[i] != y[j]) {
      double quad = K(i, i) + K(j, j) + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-g[i] - g[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) {
          a[j] = 0;
          a[i] = diff;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = -diff;
      }
      if (diff > 0) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = c - diff;
        }
      } else if (a[j] > c) {
        a[j] = c;
        a[i] = c + diff;
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (g[i] - g[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = sum - c;
        }
      } else if (a[j] < 0) {
        a[j] = 0;
        a[i] = sum;
      }
      if (sum > c) {
        if (a[j] > c) {
          a[j] = c;
          a[i] = sum - c;
        }
      } else if (a[i] < 0) {
        a[i] = 0;
        a[j] = sum;
      }
    }
    const double di = a[i] - old_i, dj = a[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) g[t] += y[t] * (y[i] * K(i, t) * di + y[j] * K(j, t) * dj);
  }

  double free_sum = 0.0;
  int free_count = 0;
  for (std::size_t t = 0; t < n; ++t)
    if (a[t] > 0 && a[t] < c) {
      free_sum += -y[t] * g[t];
      ++free_count;
    }
  sol.bias = free_count > 0 ? free_sum / free_count : (gmax + gmin) / 2.0;
  return sol;
}

namespace {

std::vector<double> gram_matrix(std::span<const Vector> x, const KernelSpec& k, int jobs) {
  const std::size_t n = x.size();
  std::vector<double> out(n * n);
  parallel_for(n, jobs, [&](std::size_t i) {
    for (std::size_t j = 0; j <= i; ++j) out[i * n + j] = kernel_eval(k, x[i], x[j]);
  });
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out[i * n + j] = out[j * n + i];
  return out;
}

void check_samples(std::span<const Vector> x) {
  require(!x.empty(), ErrorKind::InsufficientData, "no training samples");
  for (const Vector& v : x)
    require(v.size() == x.front().size(), ErrorKind::DimensionMismatch, "training samples differ in length");
}

}  // namespace

BinarySvm train_binary(std::span<const Vector> x, std::span<const int> y, const KernelSpec& kernel, double c,
                       double tol) {
  check_samples(x);
  require(x.size() == y.size(), ErrorKind::LengthMismatch, "sample and label counts differ");
  KernelSpec k = kernel;
  if (k.type == KernelSpec::Type::Rbf && k.sigma <= 0.0) k.sigma = median_distance(x);
  const SmoSolution sol = smo_solve(gram_matrix(x, k, 1), y, c, tol);
  BinarySvm m;
  m.kernel = k;
  m.bias = sol.bias;
  for (std::size_t t = 0; t < x.size(); ++t)
    if (sol.alpha[t] > 0.0) {
      m.support.push_back(x[t]);
      m.coef.push_back(sol.alpha[t] * y[t]);
    }
  return m;
}

double decision_value(const BinarySvm& m, std::span<const double> x) {
  double f = m.bias;
  for (std::size_t j = 0; j < m.support.size(); ++j) f += m.coef[j] * kernel_eval(m.kernel, m.support[j], x);
  return f;
}

SvmModel multiclass_train(std::span<const Vector> x, std::span<const std::string> labels, const SvmOptions& opt) {
  check_samples(x);
  require(x.size() == labels.size(), ErrorKind::LengthMismatch, "sample and label counts differ");
  const std::set<std::string> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) fail(ErrorKind::DegenerateLabels, "multiclass training needs at least two classes");

  SvmModel m;
  m.kernel = opt.kernel;
  if (m.kernel.type == KernelSpec::Type::Rbf && m.kernel.sigma <= 0.0) m.kernel.sigma = median_distance(x);
  m.c = opt.c;
  m.dim = static_cast<int>(x.front().size());
  m.labels.assign(distinct.begin(), distinct.end());
  const std::size_t n = x.size(), classes = m.labels.size();

  const std::vector<double> gram = gram_matrix(x, m.kernel, opt.jobs);
  std::vector<SmoSolution> sols(classes);
  parallel_for(classes, opt.jobs, [&](std::size_t k) {
    std::vector<int> y(n);
    for (std::size_t t = 0; t < n; ++t) y[t] = labels[t] == m.labels[k] ? 1 : -1;
    sols[k] = smo_solve(gram, y, opt.c, opt.tol);
  });

  // Shared pool: every sample that is a support vector of some machine.
  std::vector<int> pool_index(n, -1);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = 0; k < classes; ++k)
      if (sols[k].alpha[t] > 0.0 && pool_index[t] < 0) {
        pool_index[t] = static_cast<int>(m.support.size());
        m.support.push_back(x[t]);
      }
  m.coef.assign(classes, Vector(m.support.size(), 0.0));
  for (std::size_t k = 0; k < classes; ++k) {
    m.bias.push_back(sols[k].bias);
    for (std::size_t t = 0; t < n; ++t)
      if (sols[k].alpha[t] > 0.0) m.coef[k][pool_index[t]] = sols[k].alpha[t] * (labels[t] == m.labels[k] ? 1 : -1);
  }
  return m;
}

Vector decision_values(const SvmModel& m, std::span<const double> x) {
  require(static_cast<int>(x.size()) == m.dim, ErrorKind::DimensionMismatch,
          "input has " + std::to_string(x.size()) + " dims, model expects " + std::to_string(m.dim));
  Vector kv(m.support.size());
  for (std::size_t j = 0; j < m.support.size(); ++j) kv[j] = kernel_eval(m.kernel, m.support[j], x);
  Vector out(m.classes());
  for (std::size_t k = 0; k < m.classes(); ++k) {
    double f = m.bias[k];
    for (std::size_t j = 0; j < kv.size(); ++j) f += m.coef[k][j] * kv[j];
    out[k] = f;
  }
  return out;
}

std::vector<int> ranked_classes(const SvmModel& m, std::span<const double> x) {
  const Vector dv = decision_values(m, x);
  std::vector<int> order(dv.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dv[a] > dv[b]; });
  return order;
}

std::string multiclass_predict(const SvmModel& m, std::span<const double> x) {
  return m.labels[ranked_classes(m, x).front()];
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

std::string svm_to_text(const SvmModel& m) {
  std::ostringstream os;
  os << "svmmodel 1\n";
  if (m.kernel.type == KernelSpec::Type::Linear) {
    os << "kernel linear\n";
  } else {
    os << "kernel rbf ";
    put(os, m.kernel.sigma);
    os << '\n';
  }
  os << "c ";
  put(os, m.c);
  os << "\ndim " << m.dim << "\nclasses " << m.classes() << '\n';
  for (const std::string& l : m.labels) os << "label " << l << '\n';
  os << "support " << m.support.size() << '\n';
  for (const Vector& v : m.support) {
    os << "sv";
    for (double d : v) {
      os << ' ';
      put(os, d);
    }
    os << '\n';
  }
  for (std::size_t k = 0; k < m.classes(); ++k) {
    std::size_t nnz = 0;
    for (double v : m.coef[k]) nnz += v != 0.0;
    os << "machine ";
    put(os, m.bias[k]);
    os << ' ' << nnz;
    for (std::size_t j = 0; j < m.coef[k].size(); ++j)
      if (m.coef[k][j] != 0.0) {
        os << ' ' << j << ' ';
        put(os, m.coef[k][j]);
      }
    os << '\n';
  }
  return os.str();
}

SvmModel svm_from_text(const std::string& text) {
  std::istringstream is(text);
  auto bad = [](const std::string& what) { fail(ErrorKind::Parse, "svm model: " + what); };
  std::string line, tag;
  SvmModel m;
  if (!std::getline(is, line) || line != "svmmodel 1") bad("missing header");
  auto next = [&](const std::string& expect) {
    if (!std::getline(is, line)) bad("truncated before '" + expect + "'");
    std::istringstream ls(line);
    ls >> tag;
    if (tag != expect) bad("expected '" + expect + "', got '" + tag + "'");
    return ls;
  };
  {
    auto ls = next("kernel");
    std::string type;
    ls >> type;
    if (type == "linear") {
      m.kernel = KernelSpec::linear();
    } else if (type == "rbf") {
      double s = 0;
      if (!(ls >> s) || s <= 0) bad("bad rbf sigma");
      m.kernel = KernelSpec::rbf(s);
    } else {
      bad("unknown kernel '" + type + "'");
    }
  }
  if (!(next("c") >> m.c)) bad("bad C");
  if (!(next("dim") >> m.dim) || m.dim < 0) bad("bad dim");
  std::size_t classes = 0, support = 0;
  if (!(next("classes") >> classes)) bad("bad class count");
  for (std::size_t k = 0; k < classes; ++k) {
    next("label");
    if (line.size() < 7) bad("empty label");
    m.labels.push_back(line.substr(6));
  }
  if (!(next("support") >> support)) bad("bad support count");
  for (std::size_t j = 0; j < support; ++j) {
    auto ls = next("sv");
    Vector v(m.dim);
    for (double& d : v)
      if (!(ls >> d)) bad("short support vector");
    m.support.push_back(std::move(v));
  }
  for (std::size_t k = 0; k < classes; ++k) {
    auto ls = next("machine");
    double b = 0;
    std::size_t nnz = 0;
    if (!(ls >> b >> nnz)) bad("bad machine header");
    Vector coef(support, 0.0);
    for (std::size_t q = 0; q < nnz; ++q) {
      std::size_t j = 0;
      double v = 0;
      if (!(ls >> j >> v) || j >= support) bad("bad machine coefficient");
      coef[j] = v;
    }
    m.bias.push_back(b);
    m.coef.push_back(std::move(coef));
  }
  return m;
}

void save_svm(const SvmModel& m, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  os << svm_to_text(m);
}

SvmModel load_svm(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return svm_from_text(ss.str());
}

}  // namespace synthhw
