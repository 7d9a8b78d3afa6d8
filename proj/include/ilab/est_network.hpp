#pragma once

// Network-aware bipartite estimator.
//
//   E^Dir_j = W_j |C_j|
//   E^Ind_j = sum_{c in C_j} sum_{k != j} W_k 1(k in T_c)
//   delta_j = Psi(E^Dir_j, E^Ind_j, X_j) + eps_j
//   PTTE    = mean_{j eligible} Psi(E^Dir_j(1), E^Ind_j(1), X_j) - Psi(0, 0, X_j)
//
// The all-treated exposures treat every eligible unit as treated and every
// ineligible unit as control.

#include "ilab/bootstrap.hpp"
#include "ilab/core.hpp"
#include "ilab/regress.hpp"

namespace ilab::network {

/// Per treatment unit (graph order) exposure values. With `weighted`, each
/// edge contributes its weight instead of 1.
std::vector<double> direct_exposure(const BipartiteGraph& g, std::span<const int> w, bool weighted = false);
std::vector<double> indirect_exposure(const BipartiteGraph& g, std::span<const int> w, bool weighted = false);

/// Exposures of the eligible units in panel (id) order.
struct ExposureVector {
  Vector direct;
  Vector indirect;
};

/// `w_eligible` is indexed by panel row; ineligible units are held at 0.
ExposureVector eligible_exposures(const BipartiteGraph& g, std::span<const int> w_eligible, bool weighted = false);

struct NetworkConfig {
  regress::LearnerConfig learner;
  bool weighted_exposures = false;
};

struct OutcomeModel {
  regress::Fitted psi;
  double residual_scale = 0.0;
  // Observed exposure range, for extrapolation warnings.
  double direct_min = 0.0;
  double direct_max = 0.0;
  double indirect_min = 0.0;
  double indirect_max = 0.0;

  /// Psi evaluated row-wise; covariates may be empty (0 columns).
  Vector predict(const Vector& direct, const Vector& indirect, const Matrix& covariates) const;
};

/// Throws regress::DegenerateError when every unit has the same exposure pair.
OutcomeModel fit_psi(const ExposureVector& exposures, const Matrix& covariates, const Vector& outcomes,
                     const regress::LearnerConfig& learner, std::uint64_t seed);

/// All-treated minus all-control contrast averaged over the given units.
double ptte_point(const OutcomeModel& model, const ExposureVector& all_treated, const Matrix& covariates);

/// Fits Psi on the observed final-period exposures and pre/post deltas,
/// evaluates the contrast, and bootstraps units (refitting Psi per resample).
EffectEstimate estimate_ptte(const ExperimentDataset& d, const NetworkConfig& cfg, const BootstrapConfig& boot);

}  // namespace ilab::network
