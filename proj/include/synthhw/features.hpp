#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "synthhw/image.hpp"

namespace synthhw {

using Vector = std::vector<double>;

struct PcaModel {
  int side = 0;                  // images are side x side before vectorisation
  Vector mean;                   // N = side * side
  std::vector<Vector> components;  // P unit vectors of length N
  Vector eigenvalues;            // descending
};

// Resizes to side x side (when needed) and scales samples to [0, 1].
Vector image_vector(const GrayImage& img, int side);

// Top-P eigenpairs of the sample covariance (divisor M - 1). P may reach N
// when M > N; otherwise only the M - 1 non-trivial directions exist and the
// Gram matrix is decomposed instead. Each component's largest-magnitude
// entry is positive.
PcaModel pca_fit(std::span<const GrayImage> images, int p, int side = 150);
PcaModel pca_fit_vectors(std::span<const Vector> samples, int p);

Vector pca_project(const PcaModel& model, const GrayImage& img);
Vector pca_project(const PcaModel& model, std::span<const double> x);
Vector pca_reconstruct(const PcaModel& model, std::span<const double> coeffs);

struct PhogSpec {
  int levels = 2;  // pyramid levels 0..levels
  int bins = 8;    // over 360 degrees

  int length() const;
};

// Central-difference gradients, magnitude-weighted orientation histograms on
// 1, 4, 16 ... cells, concatenated coarse to fine and L1-normalised.
Vector phog(const GrayImage& img, const PhogSpec& spec = {});

struct FeatureSequence {
  std::vector<Vector> frames;
  int frame_dim = 0;
  int win_w = 1;
  int step = 1;

  std::size_t size() const { return frames.size(); }
};

// Nine geometric features per column: ink fraction, centre of gravity,
// second moment, upper and lower contour, ink runs, ink fraction between the
// contours, upper and lower contour gradients.
FeatureSequence marti_bunke(const BilevelImage& img);

enum class Extractor { Phog, MartiBunke };
std::string to_string(Extractor e);
Extractor parse_extractor(const std::string& s);

struct WindowSpec {
  int win_w = 6;
  int step = 3;
  int norm_h = 40;
  Extractor extractor = Extractor::Phog;
};

// Height-normalised gray rendering of a bilevel image (aspect preserved).
GrayImage normalize_height(const BilevelImage& img, int norm_h);

// Sliding windows over the height-normalised image, one frame per window.
FeatureSequence window_sequence(const BilevelImage& img, const WindowSpec& spec = {});

// Frame t of a windowed sequence covers columns [t*step, t*step + win_w)
// of the height-normalised image.
inline std::pair<int, int> frame_columns(const FeatureSequence& seq, int t) {
  return {t * seq.step, t * seq.step + seq.win_w};
}

// Feature dump: one record per line, tab separated
//   <id> <extractor> <frames>x<dim> <v0> <v1> ...
// values written with 17 significant digits so they read back exactly.
struct FeatureRecord {
  std::string id;
  std::string extractor;
  int frames = 1;
  int dim = 0;
  Vector values;  // frames * dim, row-major
};

void write_feature_record(std::ostream& os, const FeatureRecord& rec);
std::vector<FeatureRecord> read_feature_dump(std::istream& is);
std::vector<FeatureRecord> read_feature_dump(const std::filesystem::path& path);

}  // namespace synthhw
