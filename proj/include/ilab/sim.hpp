#pragma once

// Synthetic bipartite experiments.
//
// Edge (j, c) evolves as
//
//   y_{jc,0} = b_c
//   y_{jc,t} = (1 - rho) b_c + rho y_{jc,t-1} + beta W_t^j + gamma tau_c(t) + eps
//
// where tau_c(t) is the fraction of c's treatment-side neighbours treated at t
// and eps ~ N(0, sigma^2). Unit outcomes sum weighted edge outcomes.

#include "ilab/core.hpp"

#include <cstdint>

namespace ilab::sim {

struct DgpParams {
  double beta = 1.0;
  double gamma = 0.0;
  double rho = 0.0;
  double sigma = 1.0;
  double baseline_mean = 10.0;
  double baseline_sd = 2.0;

  /// Empty when valid.
  std::vector<std::string> problems() const;
};

enum class WeightMode { unit, lognormal };

struct GraphParams {
  int n_eligible = 100;
  int n_ineligible = 0;
  int n_connected = 50;
  double avg_degree = 3.0;
  WeightMode weight_mode = WeightMode::unit;
  double weight_mu = 0.0;
  double weight_sd = 0.5;

  std::vector<std::string> problems() const;
};

struct RolloutParams {
  std::vector<int> stage_boundaries;       // first period of each stage
  std::vector<double> stage_probabilities;  // nondecreasing, in [0,1]

  /// `T` bounds the boundaries; pass 0 to skip that check.
  std::vector<std::string> problems(int T = 0) const;
};

BipartiteGraph generate_graph(const GraphParams& gp, std::uint64_t seed);

TreatmentPanel assign_staggered_rollout(int n_units, int T, const RolloutParams& rp, std::uint64_t seed);

/// Pads an eligible-unit panel with all-zero rows for the graph's
/// ineligible units, giving one row per graph.treatment_units entry.
TreatmentPanel expand_to_all_units(const BipartiteGraph& g, const TreatmentPanel& eligible);

/// `w` must have one row per treatment unit of `g` (graph order) with
/// ineligible rows all zero. Returns eligible rows in id order.
OutcomePanel simulate_outcomes(const BipartiteGraph& g, const TreatmentPanel& w, const DgpParams& p,
                               std::uint64_t seed);

/// Total treatment effect by simulation: mean over replicates of the eligible-unit
/// average Y_T under all-treated minus all-control, with common random
/// numbers inside each replicate.
double ground_truth_tte(const BipartiteGraph& g, const DgpParams& p, int T, std::uint64_t seed, int n_reps = 1);

}  // namespace ilab::sim
