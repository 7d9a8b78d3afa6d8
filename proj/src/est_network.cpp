#include "ilab/est_network.hpp"

#include "ilab/est_basic.hpp"
#include "ilab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ilab::network {

namespace {

void check_cover(const BipartiteGraph& g, std::span<const int> w) {
  if (w.size() != g.treatment_units.size()) {
    throw std::invalid_argument("assignment covers " + std::to_string(w.size()) + " units, graph has " +
                                std::to_string(g.treatment_units.size()) + " treatment units");
  }
}

}  // namespace

std::vector<double> direct_exposure(const BipartiteGraph& g, std::span<const int> w, bool weighted) {
  check_cover(g, w);
  const auto adj = g.adjacency();
  std::vector<double> out(w.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    double size = 0.0;
    for (const auto& [c, weight] : adj.of_treatment[j]) size += weighted ? weight : 1.0;
    out[j] = w[j] * size;
  }
  return out;
}

std::vector<double> indirect_exposure(const BipartiteGraph& g, std::span<const int> w, bool weighted) {
  check_cover(g, w);
  const auto adj = g.adjacency();
  std::vector<double> treated_at(adj.of_connected.size(), 0.0);
  for (std::size_t c = 0; c < adj.of_connected.size(); ++c) {
    for (std::size_t k : adj.of_connected[c]) treated_at[c] += w[k];
  }
  std::vector<double> out(w.size(), 0.0);
  for (std::size_t j = 0; j < w.size(); ++j) {
    for (const auto& [c, weight] : adj.of_treatment[j]) {
      out[j] += (weighted ? weight : 1.0) * (treated_at[c] - w[j]);
    }
  }
  return out;
}

ExposureVector eligible_exposures(const BipartiteGraph& g, std::span<const int> w_eligible, bool weighted) {
  const auto n = static_cast<Eigen::Index>(w_eligible.size());
  std::vector<int> w(g.treatment_units.size(), 0);
  std::vector<Eigen::Index> row(g.treatment_units.size(), -1);
  for (std::size_t k = 0; k < g.treatment_units.size(); ++k) {
    const auto& u = g.treatment_units[k];
    if (!u.eligible) continue;
    if (u.id < 1 || u.id > n) throw std::invalid_argument("eligible unit " + std::to_string(u.id) + " has no panel row");
    row[k] = u.id - 1;
    w[k] = w_eligible[static_cast<std::size_t>(u.id - 1)];
  }
  const auto dir = direct_exposure(g, w, weighted);
  const auto ind = indirect_exposure(g, w, weighted);
  ExposureVector e{Vector::Zero(n), Vector::Zero(n)};
  for (std::size_t k = 0; k < row.size(); ++k) {
    if (row[k] < 0) continue;
    e.direct(row[k]) = dir[k];
    e.indirect(row[k]) = ind[k];
  }
  return e;
}

namespace {

Matrix psi_design(const Vector& direct, const Vector& indirect, const Matrix& covariates) {
  Matrix X(direct.size(), 2 + covariates.cols());
  X.col(0) = direct;
  X.col(1) = indirect;
  if (covariates.cols() > 0) X.rightCols(covariates.cols()) = covariates;
  return X;
}

}  // namespace

Vector OutcomeModel::predict(const Vector& direct, const Vector& indirect, const Matrix& covariates) const {
  return psi.predict(psi_design(direct, indirect, covariates));
}

OutcomeModel fit_psi(const ExposureVector& exposures, const Matrix& covariates, const Vector& outcomes,
                     const regress::LearnerConfig& learner, std::uint64_t seed) {
  const Eigen::Index n = exposures.direct.size();
  if (n != outcomes.size() || n != exposures.indirect.size() || (covariates.cols() > 0 && covariates.rows() != n)) {
    throw std::invalid_argument("fit_psi: inconsistent row counts");
  }
  bool distinct = false;
  for (Eigen::Index i = 1; i < n && !distinct; ++i) {
    distinct = exposures.direct(i) != exposures.direct(0) || exposures.indirect(i) != exposures.indirect(0);
  }
  if (!distinct) throw regress::DegenerateError("fit_psi: every unit has the same exposure pair");

  const Matrix cov = covariates.cols() > 0 ? covariates : Matrix(n, 0);
  OutcomeModel m;
  m.psi = regress::fit_learner(psi_design(exposures.direct, exposures.indirect, cov), outcomes, learner, seed);
  const Vector resid = outcomes - m.predict(exposures.direct, exposures.indirect, cov);
  m.residual_scale = std::sqrt(resid.squaredNorm() / static_cast<double>(n));
  m.direct_min = exposures.direct.minCoeff();
  m.direct_max = exposures.direct.maxCoeff();
  m.indirect_min = exposures.indirect.minCoeff();
  m.indirect_max = exposures.indirect.maxCoeff();
  return m;
}

double ptte_point(const OutcomeModel& model, const ExposureVector& all_treated, const Matrix& covariates) {
  const Eigen::Index n = all_treated.direct.size();
  const Matrix cov = covariates.cols() > 0 ? covariates : Matrix(n, 0);
  const Vector zero = Vector::Zero(n);
  return (model.predict(all_treated.direct, all_treated.indirect, cov) - model.predict(zero, zero, cov)).mean();
}

EffectEstimate estimate_ptte(const ExperimentDataset& d, const NetworkConfig& cfg, const BootstrapConfig& boot) {
  if (!d.graph) throw ValidationError("network-aware estimator needs a graph");
  const auto& g = *d.graph;
  const auto n = static_cast<std::size_t>(d.n_units());

  const auto records = basic::aggregate_pre_post(d);
  const Vector delta = basic::deltas(records);
  const Matrix cov = d.covariates ? d.covariates->values : Matrix(static_cast<Eigen::Index>(n), 0);

  const auto final_w = d.treatments.final_assignment();
  const ExposureVector observed = eligible_exposures(g, final_w, cfg.weighted_exposures);
  const std::vector<int> ones(n, 1);
  const ExposureVector treated = eligible_exposures(g, ones, cfg.weighted_exposures);

  const OutcomeModel model = fit_psi(observed, cov, delta, cfg.learner, derive_seed(boot.seed, "network.fit"));
  const double point = ptte_point(model, treated, cov);

  const auto dist = bootstrap_distribution(
      n, boot, "network.bootstrap", [&](const std::vector<std::size_t>& idx, std::uint64_t s) {
        const std::vector<Eigen::Index> rows(idx.begin(), idx.end());
        const ExposureVector obs{observed.direct(rows), observed.indirect(rows)};
        const ExposureVector all{treated.direct(rows), treated.indirect(rows)};
        const Matrix c = cov(rows, Eigen::all);
        const auto m = fit_psi(obs, c, delta(rows), cfg.learner, derive_seed(s, "network.fit"));
        return ptte_point(m, all, c);
      });

  auto est = make_estimate(Method::network_aware, point, quantile(dist, 0.025), quantile(dist, 0.975),
                           boot.replicates);
  est.metadata["all_treated_exposure"] = "eligible_treated_ineligible_control";
  est.metadata["weighted_exposures"] = cfg.weighted_exposures ? "true" : "false";
  est.metadata["learner"] = regress::to_string(cfg.learner.kind);
  if (model.direct_min > 0.0 || model.indirect_min > 0.0) {
    est.warnings.push_back("exposure (0,0) lies outside the observed exposure range; Psi(0,0,X) is extrapolated");
  }
  if (treated.direct.maxCoeff() > model.direct_max || treated.indirect.maxCoeff() > model.indirect_max) {
    std::ostringstream os;
    os << "all-treated exposures (max direct " << treated.direct.maxCoeff() << ", max indirect "
       << treated.indirect.maxCoeff() << ") exceed the observed range (" << model.direct_max << ", "
       << model.indirect_max << "); Psi is extrapolated";
    est.warnings.push_back(os.str());
  }
  return est;
}

}  // namespace ilab::network
