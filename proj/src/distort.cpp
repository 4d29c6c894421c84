#include "synthhw/distort.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "synthhw/error.hpp"
#include "synthhw/skeleton.hpp"

namespace synthhw {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

Point clamp_to(Point p, int w, int h) { return {std::clamp(p.x, 0, w - 1), std::clamp(p.y, 0, h - 1)}; }

void drop_repeats(std::vector<Point>& v) {
  if (v.size() <= 2) return;
  std::vector<Point> out{v.front()};
  for (std::size_t k = 1; k < v.size(); ++k)
    if (!(v[k] == out.back())) out.push_back(v[k]);
  if (out.size() == 1) out.push_back(out.front());
  v = std::move(out);
}

}  // namespace

std::string step_name(const DistortionStep& step) {
  return std::visit(Overloaded{[](const RandomShift&) { return "random_shift"; },
                               [](const GaussianShift&) { return "gaussian_shift"; },
                               [](const Curved&) { return "curved"; },
                               [](const Sinusoidal&) { return "sinusoidal"; },
                               [](const Elliptical&) { return "elliptical"; }},
                    step);
}

bool is_vector_step(const DistortionStep& step) {
  return std::holds_alternative<RandomShift>(step) || std::holds_alternative<GaussianShift>(step);
}

VectorModel perturb_vertices(const VectorModel& vm, bool share_junctions, const OffsetDraw& draw) {
  VectorModel out = vm;
  const int w = vm.width, h = vm.height;
  std::vector<std::vector<char>> fixed(out.polylines.size());
  for (std::size_t i = 0; i < out.polylines.size(); ++i) fixed[i].assign(out.polylines[i].vertices.size(), 0);

  if (share_junctions) {
    for (JunctionNode& j : out.junctions) {
      const Point d = draw();
      j.point = clamp_to({j.point.x + d.x, j.point.y + d.y}, w, h);
      for (const Incidence& inc : j.incident) {
        out.endpoint(inc) = j.point;
        auto& f = fixed[inc.polyline];
        f[inc.at_end ? f.size() - 1 : 0] = 1;
      }
    }
  }
  for (std::size_t i = 0; i < out.polylines.size(); ++i) {
    auto& v = out.polylines[i].vertices;
    const bool closed = v.size() >= 3 && v.front() == v.back();
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (fixed[i][k]) continue;
      if (closed && k + 1 == v.size()) {
        v[k] = v.front();
        continue;
      }
      const Point d = draw();
      v[k] = clamp_to({v[k].x + d.x, v[k].y + d.y}, w, h);
    }
  }
  for (Point& p : out.dots) {
    const Point d = draw();
    p = clamp_to({p.x + d.x, p.y + d.y}, w, h);
  }
  for (Polyline& pl : out.polylines) drop_repeats(pl.vertices);
  return out;
}

VectorModel random_shift(const VectorModel& vm, const RandomShift& spec, SeededRng& rng) {
  require(spec.amplitude_coeff >= 0.0, ErrorKind::Precondition, "random shift amplitude must be non-negative");
  return perturb_vertices(vm, spec.share_junctions, [&] {
    const double rx = rng.uniform(-1.0, 1.0);
    const double ry = rng.uniform(-1.0, 1.0);
    return random_shift_offset(spec, vm.width, vm.height, rx, ry);
  });
}

Point random_shift_offset(const RandomShift& spec, int width, int height, double rx, double ry) {
  return {round_half_up(spec.amplitude_coeff * width * rx), round_half_up(spec.amplitude_coeff * height * ry)};
}

double gaussian_offset(const GaussianShift& spec, int width, int height, SeededRng& rng) {
  const double sigma = spec.sigma_coeff * std::min(width, height);
  for (;;) {
    const double v = sigma * rng.normal();
    if (spec.clamp_sigmas <= 0.0 || std::abs(v) <= spec.clamp_sigmas * sigma) return v;
  }
}

VectorModel gaussian_shift(const VectorModel& vm, const GaussianShift& spec, SeededRng& rng) {
  require(spec.sigma_coeff >= 0.0, ErrorKind::Precondition, "gaussian sigma coefficient must be non-negative");
  return perturb_vertices(vm, spec.share_junctions, [&] {
    const double dx = gaussian_offset(spec, vm.width, vm.height, rng);
    const double dy = gaussian_offset(spec, vm.width, vm.height, rng);
    return Point{round_half_up(dx), round_half_up(dy)};
  });
}

VectorModel reconnect(const VectorModel& vm) {
  VectorModel out = vm;
  for (JunctionNode& j : out.junctions) {
    if (j.incident.empty()) continue;
    std::vector<Point> ends;
    for (const Incidence& inc : j.incident) ends.push_back(out.endpoint(inc));
    std::size_t best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < ends.size(); ++a) {
      double cost = 0.0;
      for (Point q : ends) cost += std::hypot(ends[a].x - q.x, ends[a].y - q.y);
      if (cost < best_cost) {
        best_cost = cost;
        best = a;
      }
    }
    const Point m = ends[best];
    for (const Incidence& inc : j.incident) {
      auto& v = out.polylines[inc.polyline].vertices;
      if (out.endpoint(inc) == m) continue;
      if (inc.at_end)
        v.push_back(m);
      else
        v.insert(v.begin(), m);
    }
    j.point = m;
  }
  return out;
}

std::vector<int> curved_band_offsets(const Curved& spec) {
  require(spec.segments >= 2, ErrorKind::Precondition, "curved deformation needs at least two segments");
  const int s = spec.segments;
  std::vector<int> out(s);
  for (int i = 0; i < s; ++i) {
    const double u = 2.0 * i / (s - 1) - 1.0;
    const int v = round_half_up(spec.max_offset * (1.0 - u * u));
    out[i] = spec.shape == CurveShape::Rainbow ? v : -v;
  }
  return out;
}

namespace {

double band_center(int i, int segments, int width) {
  const long long w = width;
  const double start = static_cast<double>(i * w / segments);
  const double end = static_cast<double>((i + 1) * w / segments);
  return (start + end) / 2.0;
}

BilevelImage deform_columns(const BilevelImage& img, const std::vector<int>& profile) {
  int pad_rows = 0;
  for (int v : profile) pad_rows = std::max(pad_rows, std::abs(v));
  const BilevelImage padded = pad(img, 0, pad_rows, 0, pad_rows);
  std::vector<int> down(profile.size());
  std::transform(profile.begin(), profile.end(), down.begin(), [](int v) { return -v; });
  return displace_columns(padded, down);
}

}  // namespace

std::vector<int> sinusoidal_band_offsets(const Sinusoidal& spec, int width) {
  require(spec.segments >= 2, ErrorKind::Precondition, "sinusoidal deformation needs at least two segments");
  require(spec.period > 0.0, ErrorKind::Precondition, "sinusoidal period must be positive");
  std::vector<int> out(spec.segments);
  for (int i = 0; i < spec.segments; ++i)
    out[i] = round_half_up(spec.amplitude * std::sin(2.0 * std::numbers::pi * band_center(i, spec.segments, width) /
                                                     spec.period));
  return out;
}

std::vector<int> band_profile(int width, std::span<const int> band_offsets) {
  const int s = static_cast<int>(band_offsets.size());
  require(s >= 1 && s <= width, ErrorKind::Precondition, "band count must be between 1 and the image width");
  std::vector<double> centers(s);
  for (int i = 0; i < s; ++i) centers[i] = band_center(i, s, width);
  std::vector<int> out(width);
  for (int x = 0; x < width; ++x) {
    const double c = x + 0.5;
    if (c <= centers.front()) {
      out[x] = band_offsets.front();
    } else if (c >= centers.back()) {
      out[x] = band_offsets.back();
    } else {
      int i = 0;
      while (c >= centers[i + 1]) ++i;
      const double slope = (band_offsets[i + 1] - band_offsets[i]) / (centers[i + 1] - centers[i]);
      out[x] = band_offsets[i] + round_symmetric(slope * (c - centers[i]));
    }
  }
  return out;
}

BilevelImage curved_deform(const BilevelImage& img, const Curved& spec) {
  require(spec.segments <= img.width(), ErrorKind::Precondition, "more segments than columns");
  return deform_columns(img, band_profile(img.width(), curved_band_offsets(spec)));
}

BilevelImage sinusoidal_deform(const BilevelImage& img, const Sinusoidal& spec) {
  require(spec.segments <= img.width(), ErrorKind::Precondition, "more segments than columns");
  return deform_columns(img, band_profile(img.width(), sinusoidal_band_offsets(spec, img.width())));
}

double elliptical_scale(const Elliptical& spec, int width, int x) {
  const double a = spec.a > 0.0 ? spec.a : width / 2.0;
  const double u = (x + 0.5 - width / 2.0) / a;
  const double s = 1.0 + (spec.peak_ratio - 1.0) * std::sqrt(std::max(0.0, 1.0 - u * u));
  return std::max(0.5, s);
}

BilevelImage elliptical_deform(const BilevelImage& img, const Elliptical& spec) {
  require(spec.peak_ratio > 0.0, ErrorKind::Precondition, "elliptical peak ratio must be positive");
  const int w = img.width(), h = img.height();
  const int pad_rows = static_cast<int>(std::ceil(std::max(0.0, spec.peak_ratio - 1.0) * h / 2.0));
  BilevelImage out(w, h + 2 * pad_rows);
  const double mid = h / 2.0;
  for (int x = 0; x < w; ++x) {
    const double s = elliptical_scale(spec, w, x);
    if (s >= 1.0) {
      // Inverse mapping so stretched columns have no holes.
      for (int y2 = 0; y2 < out.height(); ++y2) {
        const int y = round_half_up((y2 - pad_rows + 0.5 - mid) / s + mid - 0.5);
        if (img.get(x, y)) out.set(x, y2);
      }
    } else {
      for (int y = 0; y < h; ++y) {
        if (!img.at(x, y)) continue;
        const int y2 = round_half_up((y + 0.5 - mid) * s + mid - 0.5) + pad_rows;
        out.set(x, y2);
      }
    }
  }
  return out;
}

BilevelImage vector_distort(const BilevelImage& img, const DistortionStep& step, SeededRng& rng) {
  const VectorModel vm = vectorize(skeletonize(img));
  VectorModel moved;
  if (const auto* r = std::get_if<RandomShift>(&step))
    moved = random_shift(vm, *r, rng);
  else if (const auto* g = std::get_if<GaussianShift>(&step))
    moved = gaussian_shift(vm, *g, rng);
  else
    fail(ErrorKind::Precondition, "not a vector-space distortion: " + step_name(step));
  return rasterize_model(reconnect(moved));
}

BilevelImage apply_step(const BilevelImage& img, const DistortionStep& step, SeededRng& rng) {
  if (is_vector_step(step)) return vector_distort(img, step, rng);
  return std::visit(Overloaded{[&](const Curved& s) { return curved_deform(img, s); },
                               [&](const Sinusoidal& s) { return sinusoidal_deform(img, s); },
                               [&](const Elliptical& s) { return elliptical_deform(img, s); },
                               [&](const auto&) { return img; }},
                    step);
}

BilevelImage compose(const BilevelImage& img, const Composite& spec, SeededRng& rng) {
  require(!spec.steps.empty(), ErrorKind::Precondition, "composite distortion has no steps");
  BilevelImage cur = img;
  for (const DistortionStep& step : spec.steps) cur = apply_step(cur, step, rng);
  return cur;
}

BilevelImage apply(const BilevelImage& img, const DistortionSpec& spec, SeededRng& rng) {
  return std::visit(Overloaded{[&](const Composite& c) { return compose(img, c, rng); },
                               [&](const auto& s) { return apply_step(img, DistortionStep{s}, rng); }},
                    spec);
}

}  // namespace synthhw
