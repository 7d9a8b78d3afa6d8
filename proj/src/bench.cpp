#include "ilab/bench.hpp"

#include "ilab/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace ilab::bench {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

std::uint64_t replicate_seed(const ScenarioConfig& cfg, int replicate) {
  return derive_seed(cfg.seed, "replicate", static_cast<std::uint64_t>(replicate));
}

SimulatedExperiment simulate_experiment(const ScenarioConfig& cfg, std::uint64_t seed) {
  SimulatedExperiment out;
  BipartiteGraph g = sim::generate_graph(cfg.graph, derive_seed(seed, "graph"));
  TreatmentPanel w = sim::assign_staggered_rollout(cfg.graph.n_eligible, cfg.T, cfg.rollout, derive_seed(seed, "rollout"));
  out.data.outcomes = sim::simulate_outcomes(g, sim::expand_to_all_units(g, w), cfg.dgp, derive_seed(seed, "outcomes"));
  out.truth = sim::ground_truth_tte(g, cfg.dgp, cfg.T, derive_seed(seed, "truth"), cfg.truth_reps);
  out.data.treatments = std::move(w);
  out.data.graph = std::move(g);
  out.data.pre_period_end = cfg.effective_pre_period_end();
  return out;
}

EffectEstimate run_method(Method m, const ExperimentDataset& d, const EstimatorConfig& cfg, std::uint64_t seed) {
  BootstrapConfig boot{cfg.bootstrap_replicates, 0};
  switch (m) {
    case Method::basic:
      boot.seed = derive_seed(seed, "basic");
      return basic::estimate_basic(d, cfg.basic, boot);
    case Method::network_aware:
      boot.seed = derive_seed(seed, "network");
      return network::estimate_ptte(d, cfg.network, boot);
    case Method::cmp:
      boot.seed = derive_seed(seed, "cmp");
      return cmp::estimate_tte_cmp(d, cfg.cmp, boot);
  }
  throw std::logic_error("unknown method");
}

ReplicateRecord run_replicate(const ScenarioConfig& cfg, int replicate) {
  ReplicateRecord rec;
  rec.replicate = replicate;
  rec.seed = replicate_seed(cfg, replicate);
  SimulatedExperiment ex;
  try {
    ex = simulate_experiment(cfg, rec.seed);
  } catch (const std::exception& e) {
    rec.errors.push_back(std::string("simulate: ") + e.what());
    return rec;
  }
  rec.truth = ex.truth;
  for (std::size_t k = 0; k < kMethods.size(); ++k) {
    try {
      rec.estimates[k] = run_method(kMethods[k], ex.data, cfg.estimators, rec.seed);
    } catch (const std::exception& e) {
      rec.errors.push_back(to_string(kMethods[k]) + ": " + e.what());
    }
  }
  return rec;
}

namespace {

double rate(int hits, int n) { return n > 0 ? static_cast<double>(hits) / n : 0.0; }

}  // namespace

ScenarioReport summarize(const ScenarioConfig& cfg, std::vector<ReplicateRecord> log) {
  ScenarioReport rep;
  rep.name = cfg.name;
  rep.config = to_json(cfg);
  rep.replicates = static_cast<int>(log.size());
  rep.expected_bias_sign = cfg.expected_bias_sign;

  std::vector<double> truths;
  for (const auto& r : log) {
    if (r.estimates[0] || r.estimates[1] || r.estimates[2]) truths.push_back(r.truth);
  }
  rep.truth_mean = mean(truths);
  rep.truth_sd = stddev(truths);

  for (std::size_t k = 0; k < kMethods.size(); ++k) {
    MethodSummary s;
    s.method = kMethods[k];
    std::vector<double> est;
    std::vector<double> err;
    int positive = 0, significant = 0, covered = 0, exceeds = 0, sign_match = 0, expected = 0;
    for (const auto& r : log) {
      const auto& e = r.estimates[k];
      if (!e) {
        ++s.failures;
        continue;
      }
      est.push_back(e->point);
      err.push_back(e->point - r.truth);
      positive += e->point > 0.0;
      significant += e->significant_5pct;
      covered += e->ci_low <= r.truth && r.truth <= e->ci_high;
      exceeds += e->point > r.truth;
      sign_match += sign_of(e->point) == sign_of(r.truth);
      if (cfg.expected_bias_sign) {
        expected += *cfg.expected_bias_sign == BiasSign::positive ? e->point > r.truth : e->point < r.truth;
      }
    }
    s.n_ok = static_cast<int>(est.size());
    s.mean = mean(est);
    s.sd = stddev(est);
    s.bias = mean(err);
    s.bias_se = s.n_ok > 1 ? stddev(err) / std::sqrt(static_cast<double>(s.n_ok)) : 0.0;
    double abs_sum = 0.0;
    for (double x : err) abs_sum += std::abs(x);
    s.mean_abs_bias = s.n_ok > 0 ? abs_sum / s.n_ok : 0.0;
    s.positive_rate = rate(positive, s.n_ok);
    s.significance_rate = rate(significant, s.n_ok);
    s.coverage_rate = rate(covered, s.n_ok);
    s.exceeds_truth_rate = rate(exceeds, s.n_ok);
    s.sign_match_truth_rate = rate(sign_match, s.n_ok);
    if (cfg.expected_bias_sign) s.expected_bias_match_rate = rate(expected, s.n_ok);
    rep.methods.push_back(s);
  }

  const auto m = static_cast<Eigen::Index>(kMethods.size());
  rep.sign_agreement = Matrix::Identity(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a + 1; b < m; ++b) {
      int both = 0, agree = 0;
      for (const auto& r : log) {
        const auto& ea = r.estimates[static_cast<std::size_t>(a)];
        const auto& eb = r.estimates[static_cast<std::size_t>(b)];
        if (!ea || !eb) continue;
        ++both;
        agree += sign_of(ea->point) == sign_of(eb->point);
      }
      rep.sign_agreement(a, b) = rep.sign_agreement(b, a) = rate(agree, both);
    }
  }

  if (cfg.expected_bias_sign) {
    rep.basic_bias_match_rate = *rep.methods[0].expected_bias_match_rate;
    rep.verdict = rep.basic_bias_match_rate >= 0.95 ? "matches" : "does_not_match";
  } else {
    rep.verdict = "not_applicable";
  }
  rep.log = std::move(log);
  return rep;
}

ScenarioReport run_scenario(const ScenarioConfig& cfg, int jobs) {
  const auto bad = cfg.problems();
  if (!bad.empty()) throw ValidationError(cfg.name + ": " + bad.front());
  std::vector<ReplicateRecord> log(static_cast<std::size_t>(cfg.replicates));
  const int workers = std::clamp(jobs, 1, cfg.replicates);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int r = next++; r < cfg.replicates; r = next++) log[static_cast<std::size_t>(r)] = run_replicate(cfg, r);
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return summarize(cfg, std::move(log));
}

BenchReport run_bench(const std::vector<ScenarioConfig>& scenarios, int jobs) {
  BenchReport out;
  for (const auto& s : scenarios) out.scenarios.push_back(run_scenario(s, jobs));
  return out;
}

}  // namespace ilab::bench
