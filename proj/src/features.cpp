#include "synthhw/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "synthhw/error.hpp"
#include "synthhw/render.hpp"

namespace synthhw {

namespace {

// Largest-magnitude entry positive; first index wins ties.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0) v = -v;
}

}  // namespace

Vector image_vector(const GrayImage& img, int side) {
  const GrayImage sized = (img.width() == side && img.height() == side) ? img : resize_gray(img, side, side);
  Vector out(sized.samples().size());
  std::transform(sized.samples().begin(), sized.samples().end(), out.begin(),
                 [](std::uint8_t s) { return s / 255.0; });
  return out;
}

PcaModel pca_fit(std::span<const GrayImage> images, int p, int side) {
  require(side > 0, ErrorKind::Precondition, "PCA image side must be positive");
  std::vector<Vector> samples;
  samples.reserve(images.size());
  for (const GrayImage& g : images) samples.push_back(image_vector(g, side));
  PcaModel m = pca_fit_vectors(samples, p);
  m.side = side;
  return m;
}

PcaModel pca_fit_vectors(std::span<const Vector> samples, int p) {
  require(samples.size() >= 2, ErrorKind::InsufficientData, "PCA needs at least two samples");
  const Eigen::Index rows = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index n = static_cast<Eigen::Index>(samples.front().size());
  require(n > 0, ErrorKind::InsufficientData, "PCA samples are empty");
  require(p >= 1 && p <= n, ErrorKind::Precondition, "PCA component count must be in [1, N]");

  Eigen::MatrixXd x(rows, n);
  for (Eigen::Index r = 0; r < rows; ++r) {
    require(static_cast<Eigen::Index>(samples[r].size()) == n, ErrorKind::DimensionMismatch,
            "PCA samples differ in length");
    x.row(r) = Eigen::Map<const Eigen::RowVectorXd>(samples[r].data(), n);
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const double denom = static_cast<double>(rows - 1);

  Eigen::MatrixXd comps(n, p);
  Eigen::VectorXd vals(p);
  if (n <= 1024 || n <= rows) {
    const Eigen::MatrixXd cov = (x.transpose() * x) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    for (int k = 0; k < p; ++k) {
      vals[k] = es.eigenvalues()[n - 1 - k];
      comps.col(k) = es.eigenvectors().col(n - 1 - k);
    }
  } else {
    // Gram route: eigenvectors of X X^T map to those of X^T X.
    const Eigen::MatrixXd gram = (x * x.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    int k = 0;
    for (; k < p && k < rows; ++k) {
      const double lambda = es.eigenvalues()[rows - 1 - k];
      if (lambda <= 1e-12 * scale) break;
      vals[k] = lambda;
      comps.col(k) = (x.transpose() * es.eigenvectors().col(rows - 1 - k)) / std::sqrt(lambda * denom);
      comps.col(k).normalize();
    }
    // Remaining directions carry zero variance; complete the basis by
    // Gram-Schmidt against the unit vectors.
    for (Eigen::Index e = 0; k < p && e < n; ++e) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, e);
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j < k; ++j) v -= comps.col(j).dot(v) * comps.col(j);
      if (v.norm() < 1e-6) continue;
      comps.col(k) = v.normalized();
      vals[k] = 0.0;
      ++k;
    }
  }

  PcaModel m;
  m.mean.assign(mean.data(), mean.data() + n);
  for (int k = 0; k < p; ++k) {
    fix_sign(comps.col(k));
    m.components.emplace_back(comps.col(k).data(), comps.col(k).data() + n);
    m.eigenvalues.push_back(vals[k]);
  }
  return m;
}

Vector pca_project(const PcaModel& model, const GrayImage& img) {
  require(img.width() == model.side && img.height() == model.side, ErrorKind::DimensionMismatch,
          "image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()) + ", model expects " +
              std::to_string(model.side) + "x" + std::to_string(model.side));
  const Vector x = image_vector(img, model.side);
  return pca_project(model, x);
}

Vector pca_project(const PcaModel& model, std::span<const double> x) {
  require(x.size() == model.mean.size(), ErrorKind::DimensionMismatch, "PCA input length mismatch");
  Vector out(model.components.size(), 0.0);
  for (std::size_t k = 0; k < model.components.size(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += model.components[k][i] * (x[i] - model.mean[i]);
    out[k] = s;
  }
  return out;
}

Vector pca_reconstruct(const PcaModel& model, std::span<const double> coeffs) {
  require(coeffs.size() == model.components.size(), ErrorKind::DimensionMismatch, "PCA coefficient count mismatch");
  Vector out = model.mean;
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coeffs[k] * model.components[k][i];
  return out;
}

int PhogSpec::length() const {
  int cells = 0;
  for (int l = 0; l <= levels; ++l) cells += 1 << (2 * l);
  return bins * cells;
}

Vector phog(const GrayImage& img, const PhogSpec& spec) {
  require(spec.levels >= 0 && spec.bins >= 1, ErrorKind::Precondition, "bad PHOG parameters");
  const int w = img.width(), h = img.height();
  Vector out(spec.length(), 0.0);
  if (w == 0 || h == 0) return out;
  const double bin_width = 360.0 / spec.bins;
  auto px = [&](int x, int y) { return static_cast<double>(img.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1))); };

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = px(x + 1, y) - px(x - 1, y);
      const double gy = px(x, y + 1) - px(x, y - 1);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (deg < 0.0) deg += 360.0;
      const int bin = std::min(spec.bins - 1, static_cast<int>(deg / bin_width));
      int offset = 0;
      for (int l = 0; l <= spec.levels; ++l) {
        const int n = 1 << l;
        const int cx = static_cast<int>(static_cast<long long>(x) * n / w);
        const int cy = static_cast<int>(static_cast<long long>(y) * n / h);
        out[offset + (cy * n + cx) * spec.bins + bin] += mag;
        offset += n * n * spec.bins;
      }
    }
  double total = 0.0;
  for (double v : out) total += v;
  if (total > 0.0)
    for (double& v : out) v /= total;
  return out;
}

FeatureSequence marti_bunke(const BilevelImage& img) {
  const int w = img.width(), h = img.height();
  FeatureSequence seq;
  seq.frame_dim = 9;
  seq.frames.reserve(w);
  std::vector<char> empty(w, 0);
  for (int c = 0; c < w; ++c) {
    Vector f(9, 0.0);
    int n = 0, top = -1, bottom = -1, runs = 0;
    double sum = 0.0;
    bool prev = false;
    for (int y = 0; y < h; ++y) {
      const bool ink = img.at(c, y);
      if (ink) {
        ++n;
        sum += y + 0.5;
        if (top < 0) top = y;
        bottom = y;
        if (!prev) ++runs;
      }
      prev = ink;
    }
    if (n == 0) {
      f[3] = f[4] = 0.5;
      empty[c] = 1;
    } else {
      const double cog = sum / n;
      double m2 = 0.0;
      for (int y = 0; y < h; ++y)
        if (img.at(c, y)) m2 += (y + 0.5 - cog) * (y + 0.5 - cog);
      f[0] = static_cast<double>(n) / h;
      f[1] = cog / h;
      f[2] = m2 / n / (static_cast<double>(h) * h);
      f[3] = (top + 0.5) / h;
      f[4] = (bottom + 0.5) / h;
      f[5] = runs;
      f[6] = static_cast<double>(n) / (bottom - top + 1);
    }
    seq.frames.push_back(std::move(f));
  }
  // Contour gradients against the previous column; zero when either is empty.
  for (int c = 1; c < w; ++c) {
    if (empty[c] || empty[c - 1]) continue;
    seq.frames[c][7] = seq.frames[c][3] - seq.frames[c - 1][3];
    seq.frames[c][8] = seq.frames[c][4] - seq.frames[c - 1][4];
  }
  return seq;
}

std::string to_string(Extractor e) { return e == Extractor::Phog ? "phog" : "marti_bunke"; }

Extractor parse_extractor(const std::string& s) {
  if (s == "phog") return Extractor::Phog;
  if (s == "marti_bunke" || s == "marti-bunke") return Extractor::MartiBunke;
  fail(ErrorKind::Parse, "unknown extractor '" + s + "'");
}

GrayImage normalize_height(const BilevelImage& img, int norm_h) {
  require(!img.empty(), ErrorKind::EmptyImage, "cannot normalise an empty image");
  require(norm_h > 0, ErrorKind::Precondition, "normalised height must be positive");
  const double scale = static_cast<double>(norm_h) / img.height();
  const int w = std::max(1, static_cast<int>(std::floor(img.width() * scale + 0.5)));
  return resize_gray(to_gray(img), w, norm_h);
}

FeatureSequence window_sequence(const BilevelImage& img, const WindowSpec& spec) {
  require(spec.win_w > 0 && spec.step > 0, ErrorKind::Precondition, "window width and step must be positive");
  const GrayImage g = normalize_height(img, spec.norm_h);
  if (g.width() < spec.win_w)
    fail(ErrorKind::ImageTooNarrow, "normalised width " + std::to_string(g.width()) + " is below window width " +
                                        std::to_string(spec.win_w));
  const int frames = (g.width() - spec.win_w) / spec.step + 1;
  FeatureSequence seq;
  seq.win_w = spec.win_w;
  seq.step = spec.step;
  seq.frames.reserve(frames);

  if (spec.extractor == Extractor::Phog) {
    const PhogSpec ps;
    seq.frame_dim = ps.length();
    for (int t = 0; t < frames; ++t) {
      GrayImage win(spec.win_w, g.height());
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < spec.win_w; ++x) win.set(x, y, g.at(t * spec.step + x, y));
      seq.frames.push_back(phog(win, ps));
    }
  } else {
    const FeatureSequence cols = marti_bunke(binarize(g, 128));
    seq.frame_dim = cols.frame_dim;
    for (int t = 0; t < frames; ++t) {
      Vector f(cols.frame_dim, 0.0);
      for (int x = 0; x < spec.win_w; ++x)
        for (int d = 0; d < cols.frame_dim; ++d) f[d] += cols.frames[t * spec.step + x][d] / spec.win_w;
      seq.frames.push_back(std::move(f));
    }
  }
  return seq;
}

void write_feature_record(std::ostream& os, const FeatureRecord& rec) {
  require(rec.values.size() == static_cast<std::size_t>(rec.frames) * rec.dim, ErrorKind::DimensionMismatch,
          "feature record size does not match frames x dim");
  os << rec.id << '\t' << rec.extractor << '\t' << rec.frames << 'x' << rec.dim << '\t';
  char buf[32];
  for (std::size_t i = 0; i < rec.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", rec.values[i]);
    if (i) os << ' ';
    os << buf;
  }
  os << '\n';
}

std::vector<FeatureRecord> read_feature_dump(std::istream& is) {
  std::vector<FeatureRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto bad = [&](const std::string& what) {
      fail(ErrorKind::Parse, "feature dump line " + std::to_string(lineno) + ": " + what);
    };
    std::istringstream ls(line);
    FeatureRecord rec;
    std::string shape, values;
    if (!std::getline(ls, rec.id, '\t') || !std::getline(ls, rec.extractor, '\t') || !std::getline(ls, shape, '\t'))
      bad("expected id, extractor and shape");
    std::getline(ls, values);
    if (std::sscanf(shape.c_str(), "%dx%d", &rec.frames, &rec.dim) != 2 || rec.frames < 0 || rec.dim < 0)
      bad("bad shape '" + shape + "'");
    const char* p = values.c_str();
    char* end = nullptr;
    const std::size_t n = static_cast<std::size_t>(rec.frames) * rec.dim;
    rec.values.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = std::strtod(p, &end);
      if (end == p) bad("expected " + std::to_string(n) + " values");
      rec.values.push_back(v);
      p = end;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<FeatureRecord> read_feature_dump(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::Io, "cannot open " + path.string());
  return read_feature_dump(is);
}

}  // namespace synthhw
