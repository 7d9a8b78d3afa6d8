#pragma once

// Monte Carlo comparison of the three estimators against simulated ground
// truth.

#include "ilab/config.hpp"

#include <array>

namespace ilab::bench {

inline constexpr std::array<Method, 3> kMethods{Method::basic, Method::network_aware, Method::cmp};

/// Everything one replicate needs, built from the scenario and replicate
/// seed. `simulate` in the CLI writes exactly this dataset for replicate 0.
struct SimulatedExperiment {
  ExperimentDataset data;
  double truth = 0.0;
};

std::uint64_t replicate_seed(const ScenarioConfig& cfg, int replicate);
SimulatedExperiment simulate_experiment(const ScenarioConfig& cfg, std::uint64_t replicate_seed);

/// Runs one estimator with seeds derived from `seed`.
EffectEstimate run_method(Method m, const ExperimentDataset& d, const EstimatorConfig& cfg, std::uint64_t seed);

struct ReplicateRecord {
  int replicate = 0;
  std::uint64_t seed = 0;
  double truth = 0.0;
  std::array<std::optional<EffectEstimate>, 3> estimates;  // kMethods order
  std::vector<std::string> errors;
};

struct MethodSummary {
  Method method = Method::basic;
  int n_ok = 0;
  int failures = 0;
  double mean = 0.0;
  double sd = 0.0;
  double bias = 0.0;     // mean(estimate - truth)
  double bias_se = 0.0;  // Monte Carlo SE of `bias`
  double mean_abs_bias = 0.0;
  double positive_rate = 0.0;
  double significance_rate = 0.0;
  double coverage_rate = 0.0;
  double exceeds_truth_rate = 0.0;
  double sign_match_truth_rate = 0.0;
  std::optional<double> expected_bias_match_rate;
};

struct ScenarioReport {
  std::string name;
  Json config;
  int replicates = 0;
  double truth_mean = 0.0;
  double truth_sd = 0.0;
  std::vector<MethodSummary> methods;  // kMethods order
  Matrix sign_agreement;               // 3 x 3, kMethods order
  std::optional<BiasSign> expected_bias_sign;
  double basic_bias_match_rate = 0.0;
  std::string verdict;  // "matches", "does_not_match" or "not_applicable"
  std::vector<ReplicateRecord> log;
};

struct BenchReport {
  std::vector<ScenarioReport> scenarios;
};

/// Replicate failures are recorded in the log, never thrown.
ReplicateRecord run_replicate(const ScenarioConfig& cfg, int replicate);

/// Summaries and the sign-agreement matrix computed from a replicate log.
ScenarioReport summarize(const ScenarioConfig& cfg, std::vector<ReplicateRecord> log);

/// Replicates run on up to `jobs` threads; output does not depend on `jobs`.
ScenarioReport run_scenario(const ScenarioConfig& cfg, int jobs = 1);
BenchReport run_bench(const std::vector<ScenarioConfig>& scenarios, int jobs = 1);

/// -1, 0 or +1.
int sign_of(double v);

}  // namespace ilab::bench
