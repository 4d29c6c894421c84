#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "synthhw/image.hpp"
#include "synthhw/rng.hpp"
#include "synthhw/vectorize.hpp"

namespace synthhw {

// Uniform vertex perturbation: dx = amplitude_coeff * w * r, r ~ U[-1, 1].
struct RandomShift {
  double amplitude_coeff = 0.05;
  bool share_junctions = true;
};

// Normal vertex perturbation with sigma = sigma_coeff * min(w, h). Draws
// beyond clamp_sigmas * sigma are rejected; clamp_sigmas <= 0 disables it.
struct GaussianShift {
  double sigma_coeff = 0.02;
  double clamp_sigmas = 2.0;
  bool share_junctions = true;
};

enum class CurveShape { Rainbow, Inverted };

// Column bands lifted along a parabola (positive offsets move ink up).
struct Curved {
  CurveShape shape = CurveShape::Rainbow;
  double max_offset = 10.0;
  int segments = 8;
};

struct Sinusoidal {
  double amplitude = 6.0;
  double period = 100.0;
  int segments = 8;
};

// Vertical scaling about the mid-line following an elliptical profile
// centred on the image: s(x) = 1 + (peak_ratio - 1) * sqrt(1 - ((x - xc)/a)^2),
// never below 0.5. a <= 0 means half the image width.
struct Elliptical {
  double a = 0.0;
  double peak_ratio = 1.3;
};

using DistortionStep = std::variant<RandomShift, GaussianShift, Curved, Sinusoidal, Elliptical>;

struct Composite {
  std::vector<DistortionStep> steps;
};

using DistortionSpec = std::variant<RandomShift, GaussianShift, Curved, Sinusoidal, Elliptical, Composite>;

std::string step_name(const DistortionStep& step);
bool is_vector_step(const DistortionStep& step);

// Round half up, the rounding used for every fractional displacement.
inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

// Applies `draw` (returning an integer offset pair) to every vertex. Junction
// endpoints take one shared draw when `share_junctions`; the two ends of a
// closed polyline always share one. Results are clamped to the canvas.
using OffsetDraw = std::function<Point()>;
VectorModel perturb_vertices(const VectorModel& vm, bool share_junctions, const OffsetDraw& draw);

VectorModel random_shift(const VectorModel& vm, const RandomShift& spec, SeededRng& rng);
// Offset for the draws (rx, ry) in [-1, 1]^2 on a width x height canvas.
Point random_shift_offset(const RandomShift& spec, int width, int height, double rx, double ry);
VectorModel gaussian_shift(const VectorModel& vm, const GaussianShift& spec, SeededRng& rng);

// One Gaussian offset (before rounding) for a canvas of the given size.
double gaussian_offset(const GaussianShift& spec, int width, int height, SeededRng& rng);

// Joins displaced junction ends: every incident endpoint that differs from
// the medoid of the incident endpoints gets an extra edge to it, and the
// node moves to the medoid.
VectorModel reconnect(const VectorModel& vm);

// Per-band vertical offsets (positive = up) for the column deformations.
std::vector<int> curved_band_offsets(const Curved& spec);
std::vector<int> sinusoidal_band_offsets(const Sinusoidal& spec, int width);

// Column offset profile (positive = up): each band centre carries its band
// offset and columns between centres are sheared linearly.
std::vector<int> band_profile(int width, std::span<const int> band_offsets);

BilevelImage curved_deform(const BilevelImage& img, const Curved& spec);
BilevelImage sinusoidal_deform(const BilevelImage& img, const Sinusoidal& spec);
BilevelImage elliptical_deform(const BilevelImage& img, const Elliptical& spec);
double elliptical_scale(const Elliptical& spec, int width, int x);

// skeletonize -> vectorize -> shift -> reconnect -> rasterize.
BilevelImage vector_distort(const BilevelImage& img, const DistortionStep& step, SeededRng& rng);

BilevelImage apply_step(const BilevelImage& img, const DistortionStep& step, SeededRng& rng);
BilevelImage compose(const BilevelImage& img, const Composite& spec, SeededRng& rng);
BilevelImage apply(const BilevelImage& img, const DistortionSpec& spec, SeededRng& rng);

}  // namespace synthhw
