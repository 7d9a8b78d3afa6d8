#pragma once

// Ridge, kernel ridge and k-fold cross-validation over a lambda grid.

#include "ilab/core.hpp"

#include <cstdint>
#include <variant>

namespace ilab::regress {

/// Thrown when a fit has no unique solution (lambda = 0 with rank-deficient
/// features, or a degenerate design).
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RidgeModel {
  Vector coefficients;
  double intercept = 0.0;
  double lambda = 0.0;
};

/// Solves (Xc'Xc + lambda I) beta = Xc'(y - ybar) on column-centred data and
/// sets intercept = ybar - xbar'beta. With fit_intercept = false no centring
/// is done and the intercept is 0.
RidgeModel ridge_fit(const Matrix& X, const Vector& y, double lambda, bool fit_intercept = true);

struct Kernel {
  enum class Kind { rbf, linear };
  Kind kind = Kind::rbf;
  double bandwidth = 1.0;  // rbf only: k(x,z) = exp(-|x-z|^2 / (2 h^2))
};

struct KernelRidgeModel {
  Vector dual_coefficients;
  Kernel kernel;
  double lambda = 1.0;
  Matrix train_inputs;
};

/// Median pairwise Euclidean distance between rows; 1.0 when undefined or 0.
double median_distance(const Matrix& X);

Matrix gram(const Kernel& k, const Matrix& A, const Matrix& B);

/// Solves (K + lambda I) alpha = y. `kernel.bandwidth <= 0` selects the
/// median-distance heuristic for rbf kernels.
KernelRidgeModel kernel_ridge_fit(const Matrix& X, const Vector& y, Kernel kernel, double lambda);

Vector predict(const RidgeModel& m, const Matrix& X);
Vector predict(const KernelRidgeModel& m, const Matrix& X);

/// Fold index per row: a seeded permutation dealt round-robin into k folds.
std::vector<int> fold_assignment(std::size_t n, int k_folds, std::uint64_t seed);

enum class LearnerKind { ridge, kernel_rbf, kernel_linear };

std::string to_string(LearnerKind k);
LearnerKind learner_from_string(const std::string& s);

/// Log-spaced 1e-6 .. 1e3, ten values.
std::vector<double> default_lambda_grid();

struct LearnerConfig {
  LearnerKind kind = LearnerKind::ridge;
  std::vector<double> lambda_grid = default_lambda_grid();
  int folds = 5;
  double bandwidth = 0.0;  // 0: median heuristic
};

/// Mean held-out squared error for each grid value.
std::vector<double> cv_errors(const Matrix& X, const Vector& y, const std::vector<double>& grid,
                              const std::vector<int>& folds, const LearnerConfig& learner);

/// Grid value with the smallest mean held-out squared error; exact ties go
/// to the larger lambda.
double cross_validate(const Matrix& X, const Vector& y, const std::vector<double>& grid,
                      const std::vector<int>& folds, const LearnerConfig& learner = {});
double cross_validate(const Matrix& X, const Vector& y, const std::vector<double>& grid, int k_folds,
                      std::uint64_t seed, const LearnerConfig& learner = {});

/// A fitted ridge or kernel ridge model.
class Fitted {
 public:
  Fitted() = default;
  explicit Fitted(RidgeModel m) : model_(std::move(m)) {}
  explicit Fitted(KernelRidgeModel m) : model_(std::move(m)) {}

  Vector predict(const Matrix& X) const;
  double lambda() const;
  Eigen::Index n_features() const;
  const RidgeModel* ridge() const { return std::get_if<RidgeModel>(&model_); }
  const KernelRidgeModel* kernel() const { return std::get_if<KernelRidgeModel>(&model_); }

 private:
  std::variant<RidgeModel, KernelRidgeModel> model_;
};

Fitted fit_with(const Matrix& X, const Vector& y, const LearnerConfig& learner, double lambda);

/// Chooses lambda by cross-validation (skipped for a one-value grid) and
/// refits on all rows. Falls back to the one-value path when there are
/// fewer rows than folds.
Fitted fit_learner(const Matrix& X, const Vector& y, const LearnerConfig& learner, std::uint64_t seed);

}  // namespace ilab::regress
