#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "synthhw/features.hpp"

namespace synthhw {

struct KernelSpec {
  enum class Type { Linear, Rbf };
  Type type = Type::Rbf;
  double sigma = 1.0;  // Rbf bandwidth; <= 0 asks training for the median heuristic

  static KernelSpec linear() { return {Type::Linear, 0.0}; }
  static KernelSpec rbf(double sigma) { return {Type::Rbf, sigma}; }
};

// Linear: x . x'. Rbf: exp(-|x - x'|^2 / (2 sigma^2)).
double kernel_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> xp);

// Median pairwise Euclidean distance over (at most the first 1000) samples.
double median_distance(std::span<const Vector> samples);

// Dual solution of a binary problem on a precomputed kernel matrix.
struct SmoSolution {
  Vector alpha;
  double bias = 0.0;
  long iterations = 0;
};

// SMO with maximal-violating-pair selection. `kernel` is the n x n Gram matrix
// in row-major order; labels are +1 / -1. Stops once the largest KKT gap is
// below tol.
SmoSolution smo_solve(std::span<const double> kernel, std::span<const int> y, double c, double tol = 1e-3,
                      long max_iter = 10'000'000);

struct BinarySvm {
  KernelSpec kernel;
  std::vector<Vector> support;
  Vector coef;  // alpha_j * y_j
  double bias = 0.0;
};

BinarySvm train_binary(std::span<const Vector> x, std::span<const int> y, const KernelSpec& kernel, double c,
                       double tol = 1e-3);
double decision_value(const BinarySvm& m, std::span<const double> x);

struct SvmOptions {
  KernelSpec kernel = KernelSpec::rbf(0.0);
  double c = 10.0;
  double tol = 1e-3;
  int jobs = 1;
};

// One-vs-rest machines over a shared support-vector pool. Classes are the
// sorted distinct labels; ties in prediction go to the lowest class index.
struct SvmModel {
  KernelSpec kernel;
  double c = 10.0;
  int dim = 0;
  std::vector<std::string> labels;
  std::vector<Vector> support;
  std::vector<Vector> coef;  // [class][support]
  Vector bias;               // [class]

  std::size_t classes() const { return labels.size(); }
};

SvmModel multiclass_train(std::span<const Vector> x, std::span<const std::string> labels, const SvmOptions& opt = {});
Vector decision_values(const SvmModel& m, std::span<const double> x);
// Class indices ordered by decreasing decision value.
std::vector<int> ranked_classes(const SvmModel& m, std::span<const double> x);
std::string multiclass_predict(const SvmModel& m, std::span<const double> x);

void save_svm(const SvmModel& m, const std::filesystem::path& path);
SvmModel load_svm(const std::filesystem::path& path);
std::string svm_to_text(const SvmModel& m);
SvmModel svm_from_text(const std::string& text);

}  // namespace synthhw
