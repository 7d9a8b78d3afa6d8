#pragma once

// Causal message passing: learn how the population summary of outcomes
// moves from t to t+1 given the treated share at t+1, then roll that map
// forward under all-treated and all-control allocations.
//
//   m_{t+1} ~ f(m_t, p_{t+1}, [m_t p_{t+1}], mu2_t .. mu_k_t)
//   TTE     = CFE_T(1) - CFE_T(0)
//
// Nothing here reads the dataset's graph.

#include "ilab/bootstrap.hpp"
#include "ilab/core.hpp"
#include "ilab/regress.hpp"

namespace ilab::cmp {

/// One row per transition t -> t+1.
struct StateFeatures {
  Vector mean;          // m_t
  Vector treated_next;  // p_{t+1}
  Vector interaction;   // m_t * p_{t+1}
  Matrix moments;       // central moments 2..order of the outcome at t
  Vector target;        // m_{t+1}
  std::vector<int> period;  // t

  Eigen::Index rows() const { return mean.size(); }
  int moment_order() const { return static_cast<int>(moments.cols()) + 1; }

  /// [m, p, (m*p if interaction), moments...]
  Matrix design(bool interaction) const;

  /// Stacks `other` below this table.
  void append(const StateFeatures& other);
};

/// Per-period population summaries, t = 0..T: means and central moments
/// 2..order (one row per period).
struct PeriodSummary {
  Vector mean;
  Matrix moments;
  Vector treated;  // p_t; p_0 = 0
};

PeriodSummary summarize(const ExperimentDataset& d, int moment_order, bool center_baseline = false);

/// With `center_baseline`, summaries are computed on y_t - y_0.
/// Throws ValidationError for fewer than two transitions or moment_order < 1.
StateFeatures build_features(const ExperimentDataset& d, int moment_order, bool center_baseline = false);

struct FitOptions {
  regress::LearnerConfig learner;
  bool interaction = false;
  bool per_period = false;
};

struct StateEvolutionModel {
  // One map, or one per transition when !time_homogeneous.
  std::vector<regress::Fitted> maps;
  // Column scales applied before the learner sees a row.
  std::vector<Vector> scales;
  bool interaction = false;
  bool time_homogeneous = true;
  int moment_order = 2;

  /// m_{t+1} for transition t.
  double predict(int t, double m, double p, const Vector& moments) const;
  /// Raw-scale linear coefficients of the (first) map; ridge only.
  Vector coefficients(std::size_t map = 0) const;
  double intercept(std::size_t map = 0) const;
  double lambda(std::size_t map = 0) const { return maps.at(map).lambda(); }
};

/// Throws regress::DegenerateError with fewer than two training rows.
StateEvolutionModel fit_state_evolution(const StateFeatures& features, const FitOptions& opts, std::uint64_t seed);

struct CounterfactualTrajectory {
  AllocationScenario allocation = AllocationScenario::all_treated;
  Vector means;  // t = 0..T
};

/// Recursion starts at `start` (m_0 in the model's own coordinates) and
/// `offset` is added to every reported value; centred models start at 0
/// with offset m_0. Moments stay at `held_moments` (zeros when empty).
/// Throws std::runtime_error naming the period if a value is not finite.
CounterfactualTrajectory counterfactual_evolution(const StateEvolutionModel& model, double start,
                                                  AllocationScenario allocation, int T,
                                                  const Vector& held_moments = {}, double offset = 0.0);

/// Unit indices of each subpopulation. Units are stratified by baseline
/// quartile (rank based) and first treated period, shuffled within strata,
/// and dealt round-robin with a single counter.
/// Throws ValidationError unless k >= 2 and N >= 2k.
std::vector<std::vector<std::size_t>> network_partition(const ExperimentDataset& d, int k, std::uint64_t seed);

/// The partition materialised as datasets (no graph).
std::vector<ExperimentDataset> network_bootstrap(const ExperimentDataset& d, int k, std::uint64_t seed);

struct CmpConfig {
  regress::LearnerConfig learner;
  int moment_order = 2;
  bool interaction = false;
  bool per_period = false;
  int n_subpopulations = 10;
  bool center_baseline = true;
};

/// Point estimate only: partition, fit, recurse, difference.
double tte_point(const ExperimentDataset& d, const CmpConfig& cfg, std::uint64_t seed, double* lambda = nullptr);

EffectEstimate estimate_tte_cmp(const ExperimentDataset& d, const CmpConfig& cfg, const BootstrapConfig& boot);

}  // namespace ilab::cmp
