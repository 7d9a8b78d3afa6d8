#include "ilab/regress.hpp"

#include "ilab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ilab::regress {

RidgeModel ridge_fit(const Matrix& X, const Vector& y, double lambda, bool fit_intercept) {
  if (X.rows() < 1) throw std::invalid_argument("ridge_fit needs at least one row");
  if (X.rows() != y.size()) throw std::invalid_argument("ridge_fit: X and y row counts differ");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ridge_fit: lambda must be >= 0");

  RidgeModel m;
  m.lambda = lambda;
  const Eigen::Index d = X.cols();
  if (d == 0) {
    m.coefficients = Vector::Zero(0);
    m.intercept = fit_intercept ? y.mean() : 0.0;
    return m;
  }

  Vector xbar = Vector::Zero(d);
  double ybar = 0.0;
  if (fit_intercept) {
    xbar = X.colwise().mean().transpose();
    ybar = y.mean();
  }
  const Matrix Xc = X.rowwise() - xbar.transpose();
  const Vector yc = y.array() - ybar;

  Matrix A = Xc.transpose() * Xc;
  A.diagonal().array() += lambda;
  const Vector rhs = Xc.transpose() * yc;

  if (lambda == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    if (qr.rank() < d) {
      throw DegenerateError("ridge_fit: rank-deficient features at lambda = 0 (rank " + std::to_string(qr.rank()) +
                            " of " + std::to_string(d) + ")");
    }
    m.coefficients = qr.solve(rhs);
  } else {
    Eigen::LDLT<Matrix> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw DegenerateError("ridge_fit: factorisation failed");
    m.coefficients = ldlt.solve(rhs);
  }
  m.intercept = ybar - xbar.dot(m.coefficients);
  return m;
}

double median_distance(const Matrix& X) {
  const Eigen::Index n = X.rows();
  if (n < 2) return 1.0;
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((X.row(i) - X.row(j)).norm());
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) {
    med = 0.5 * (med + *std::max_element(d.begin(), mid));
  }
  return med > 0.0 && std::isfinite(med) ? med : 1.0;
}

Matrix gram(const Kernel& k, const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols()) throw std::invalid_argument("gram: feature dimensions differ");
  Matrix G = A * B.transpose();
  if (k.kind == Kernel::Kind::linear) return G;
  const Vector a2 = A.rowwise().squaredNorm();
  const Vector b2 = B.rowwise().squaredNorm();
  const double scale = -0.5 / (k.bandwidth * k.bandwidth);
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    for (Eigen::Index j = 0; j < G.cols(); ++j) {
      const double sq = std::max(0.0, a2(i) + b2(j) - 2.0 * G(i, j));
      G(i, j) = std::exp(scale * sq);
    }
  }
  return G;
}

KernelRidgeModel kernel_ridge_fit(const Matrix& X, const Vector& y, Kernel kernel, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("kernel_ridge_fit: lambda must be > 0");
  if (X.rows() < 1 || X.rows() != y.size()) throw std::invalid_argument("kernel_ridge_fit: bad shapes");
  if (kernel.kind == Kernel::Kind::rbf && !(kernel.bandwidth > 0.0)) kernel.bandwidth = median_distance(X);

  Matrix K = gram(kernel, X, X);
  if (!K.allFinite()) throw DegenerateError("kernel_ridge_fit: non-finite kernel values");
  K.diagonal().array() += lambda;
  Eigen::LLT<Matrix> llt(K);
  if (llt.info() != Eigen::Success) throw DegenerateError("kernel_ridge_fit: Gram system not positive definite");

  KernelRidgeModel m;
  m.dual_coefficients = llt.solve(y);
  m.kernel = kernel;
  m.lambda = lambda;
  m.train_inputs = X;
  return m;
}

Vector predict(const RidgeModel& m, const Matrix& X) {
  if (X.cols() != m.coefficients.size()) {
    throw std::invalid_argument("predict: model has " + std::to_string(m.coefficients.size()) +
                                " features, input has " + std::to_string(X.cols()));
  }
  return (X * m.coefficients).array() + m.intercept;
}

Vector predict(const KernelRidgeModel& m, const Matrix& X) {
  if (X.cols() != m.train_inputs.cols()) {
    throw std::invalid_argument("predict: model has " + std::to_string(m.train_inputs.cols()) +
                                " features, input has " + std::to_string(X.cols()));
  }
  return gram(m.kernel, X, m.train_inputs) * m.dual_coefficients;
}

std::vector<int> fold_assignment(std::size_t n, int k_folds, std::uint64_t seed) {
  if (k_folds < 2) throw std::invalid_argument("cross-validation needs k_folds >= 2");
  if (n < static_cast<std::size_t>(k_folds)) {
    throw std::invalid_argument("cross-validation: " + std::to_string(n) + " rows cannot fill " +
                                std::to_string(k_folds) + " folds");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(seed, "cv.folds");
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
  std::vector<int> folds(n);
  for (std::size_t i = 0; i < n; ++i) folds[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k_folds));
  return folds;
}

std::string to_string(LearnerKind k) {
  switch (k) {
    case LearnerKind::ridge: return "ridge";
    case LearnerKind::kernel_rbf: return "kernel_rbf";
    case LearnerKind::kernel_linear: return "kernel_linear";
  }
  return "ridge";
}

LearnerKind learner_from_string(const std::string& s) {
  if (s == "ridge") return LearnerKind::ridge;
  if (s == "kernel_rbf") return LearnerKind::kernel_rbf;
  if (s == "kernel_linear") return LearnerKind::kernel_linear;
  throw ValidationError("unknown learner '" + s + "'");
}

std::vector<double> default_lambda_grid() {
  std::vector<double> g;
  for (int e = -6; e <= 3; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

Fitted fit_with(const Matrix& X, const Vector& y, const LearnerConfig& learner, double lambda) {
  switch (learner.kind) {
    case LearnerKind::ridge: return Fitted(ridge_fit(X, y, lambda));
    case LearnerKind::kernel_rbf: return Fitted(kernel_ridge_fit(X, y, {Kernel::Kind::rbf, learner.bandwidth}, lambda));
    case LearnerKind::kernel_linear: return Fitted(kernel_ridge_fit(X, y, {Kernel::Kind::linear, 1.0}, lambda));
  }
  throw std::logic_error("unreachable");
}

std::vector<double> cv_errors(const Matrix& X, const Vector& y, const std::vector<double>& grid,
                              const std::vector<int>& folds, const LearnerConfig& learner) {
  if (grid.empty()) throw std::invalid_argument("cross-validation: empty lambda grid");
  if (folds.size() != static_cast<std::size_t>(X.rows())) throw std::invalid_argument("cross-validation: fold map size");
  const int k = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
  if (k < 2) throw std::invalid_argument("cross-validation needs k_folds >= 2");

  LearnerConfig fixed = learner;
  if (learner.kind == LearnerKind::kernel_rbf && !(fixed.bandwidth > 0.0)) fixed.bandwidth = median_distance(X);

  std::vector<double> errors(grid.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> test;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      (folds[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    }
    if (test.empty() || train.empty()) throw std::invalid_argument("cross-validation: empty fold");
    const Matrix Xtr = X(train, Eigen::all);
    const Vector ytr = y(train);
    const Matrix Xte = X(test, Eigen::all);
    const Vector yte = y(test);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double err = 0.0;
      try {
        err = (fit_with(Xtr, ytr, fixed, grid[g]).predict(Xte) - yte).squaredNorm();
      } catch (const DegenerateError&) {
        err = std::numeric_limits<double>::infinity();
      }
      errors[g] += err;
    }
  }
  for (auto& e : errors) e /= static_cast<double>(X.rows());
  return errors;
}

double cross_validate(const Matrix& X, const Vector& y, const std::vector<double>& grid,
                      const std::vector<int>& folds, const LearnerConfig& learner) {
  if (grid.size() == 1) return grid.front();
  const auto errors = cv_errors(X, y, grid, folds, learner);
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    const double tol = 1e-12 * std::max(std::abs(errors[best]), 1e-300);
    const bool better = errors[g] < errors[best] - tol;
    const bool tie = std::abs(errors[g] - errors[best]) <= tol;
    if (better || (tie && grid[g] > grid[best])) best = g;
  }
  if (!std::isfinite(errors[best])) throw DegenerateError("cross-validation: every grid value failed");
  return grid[best];
}

double cross_validate(const Matrix& X, const Vector& y, const std::vector<double>& grid, int k_folds,
                      std::uint64_t seed, const LearnerConfig& learner) {
  if (grid.empty()) throw std::invalid_argument("cross-validation: empty lambda grid");
  if (grid.size() == 1) return grid.front();
  return cross_validate(X, y, grid, fold_assignment(static_cast<std::size_t>(X.rows()), k_folds, seed), learner);
}

Vector Fitted::predict(const Matrix& X) const {
  return std::visit([&](const auto& m) { return regress::predict(m, X); }, model_);
}

double Fitted::lambda() const {
  return std::visit([](const auto& m) { return m.lambda; }, model_);
}

Eigen::Index Fitted::n_features() const {
  if (const auto* r = ridge()) return r->coefficients.size();
  return kernel()->train_inputs.cols();
}

Fitted fit_learner(const Matrix& X, const Vector& y, const LearnerConfig& learner, std::uint64_t seed) {
  if (learner.lambda_grid.empty()) throw std::invalid_argument("learner: empty lambda grid");
  double lambda = learner.lambda_grid.front();
  if (learner.lambda_grid.size() > 1) {
    const int k = std::min<int>(learner.folds, static_cast<int>(X.rows()));
    if (k >= 2) {
      lambda = cross_validate(X, y, learner.lambda_grid, k, seed, learner);
    } else {
      lambda = *std::max_element(learner.lambda_grid.begin(), learner.lambda_grid.end());
    }
  }
  return fit_with(X, y, learner, lambda);
}

}  // namespace ilab::regress
