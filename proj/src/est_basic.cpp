#include "ilab/est_basic.hpp"

#include "ilab/rng.hpp"

namespace ilab::basic {

std::vector<PrePostRecord> aggregate_pre_post(const ExperimentDataset& d) {
  const int T = d.n_periods();
  const int pre = d.pre_period_end;
  if (pre < 0) throw ValidationError("empty pre-period window");
  if (pre >= T) throw ValidationError("empty post-period window");
  const auto& y = d.outcomes.outcomes;
  if (y.cols() != T + 1) throw ValidationError("outcome panel must have T+1 columns");

  const auto final_w = d.treatments.final_assignment();
  std::vector<PrePostRecord> out(static_cast<std::size_t>(d.n_units()));
  for (Eigen::Index i = 0; i < d.n_units(); ++i) {
    auto& r = out[static_cast<std::size_t>(i)];
    const double pre_mean = y.row(i).head(pre + 1).mean();
    const double post_mean = y.row(i).segment(pre + 1, T - pre).mean();
    r.delta = post_mean - pre_mean;
    r.treated = final_w[static_cast<std::size_t>(i)] == 1;
    r.covariates = d.covariates ? Vector(d.covariates->values.row(i).transpose()) : Vector(0);
  }
  return out;
}

Vector deltas(const std::vector<PrePostRecord>& records) {
  Vector v(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) v(static_cast<Eigen::Index>(i)) = records[i].delta;
  return v;
}

namespace {

Matrix design(const std::vector<PrePostRecord>& records, int treated_override = -1) {
  const Eigen::Index k = records.empty() ? 0 : records.front().covariates.size();
  Matrix X(static_cast<Eigen::Index>(records.size()), k + 1);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    X(row, 0) = treated_override >= 0 ? treated_override : (records[i].treated ? 1.0 : 0.0);
    if (k > 0) X.row(row).tail(k) = records[i].covariates.transpose();
  }
  return X;
}

}  // namespace

double basic_point(const std::vector<PrePostRecord>& records, const regress::LearnerConfig& learner,
                   std::uint64_t seed) {
  std::size_t n_treated = 0;
  for (const auto& r : records) n_treated += r.treated ? 1 : 0;
  if (n_treated == 0 || n_treated == records.size()) {
    throw ValidationError("basic estimator needs both treated and control units");
  }
  const auto model = regress::fit_learner(design(records), deltas(records), learner, seed);
  return (model.predict(design(records, 1)) - model.predict(design(records, 0))).mean();
}

EffectEstimate estimate_basic(const ExperimentDataset& d, const BasicConfig& cfg, const BootstrapConfig& boot) {
  const auto records = aggregate_pre_post(d);
  const double point = basic_point(records, cfg.learner, derive_seed(boot.seed, "basic.fit"));

  std::vector<PrePostRecord> sample(records.size());
  const auto dist = bootstrap_distribution(
      records.size(), boot, "basic.bootstrap", [&](const std::vector<std::size_t>& idx, std::uint64_t s) {
        for (std::size_t i = 0; i < idx.size(); ++i) sample[i] = records[idx[i]];
        return basic_point(sample, cfg.learner, derive_seed(s, "basic.fit"));
      });

  auto est = make_estimate(Method::basic, point, quantile(dist, 0.025), quantile(dist, 0.975), boot.replicates);
  est.metadata["treatment_indicator"] = "final_period_assignment";
  est.metadata["learner"] = regress::to_string(cfg.learner.kind);
  return est;
}

}  // namespace ilab::basic
