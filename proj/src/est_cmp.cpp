#include "ilab/est_cmp.hpp"

#include "ilab/dataset_io.hpp"
#include "ilab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace ilab::cmp {

Matrix StateFeatures::design(bool with_interaction) const {
  const Eigen::Index n = rows();
  const Eigen::Index extra = with_interaction ? 1 : 0;
  Matrix X(n, 2 + extra + moments.cols());
  X.col(0) = mean;
  X.col(1) = treated_next;
  if (with_interaction) X.col(2) = interaction;
  if (moments.cols() > 0) X.rightCols(moments.cols()) = moments;
  return X;
}

void StateFeatures::append(const StateFeatures& other) {
  if (rows() > 0 && other.moments.cols() != moments.cols()) {
    throw std::invalid_argument("cannot stack feature tables of different moment order");
  }
  auto stack = [](Vector& a, const Vector& b) {
    Vector out(a.size() + b.size());
    out << a, b;
    a = std::move(out);
  };
  stack(mean, other.mean);
  stack(treated_next, other.treated_next);
  stack(interaction, other.interaction);
  stack(target, other.target);
  Matrix m(moments.rows() + other.moments.rows(), other.moments.cols());
  if (moments.rows() > 0) m.topRows(moments.rows()) = moments;
  m.bottomRows(other.moments.rows()) = other.moments;
  moments = std::move(m);
  period.insert(period.end(), other.period.begin(), other.period.end());
}

PeriodSummary summarize(const ExperimentDataset& d, int moment_order, bool center_baseline) {
  if (moment_order < 1) throw ValidationError("moment order must be at least 1");
  const Matrix& y = d.outcomes.outcomes;
  const Eigen::Index n = y.rows();
  const Eigen::Index periods = y.cols();
  if (n == 0) throw ValidationError("no units");
  if (d.treatments.assignments.rows() != n || d.treatments.assignments.cols() + 1 != periods) {
    throw ValidationError("treatment and outcome panels disagree in shape");
  }

  PeriodSummary s;
  s.mean = Vector::Zero(periods);
  s.moments = Matrix::Zero(periods, moment_order - 1);
  s.treated = Vector::Zero(periods);
  for (Eigen::Index t = 0; t < periods; ++t) {
    Vector z = y.col(t);
    if (center_baseline) z -= y.col(0);
    const double m = z.mean();
    s.mean(t) = m;
    const Vector dev = z.array() - m;
    for (int k = 2; k <= moment_order; ++k) s.moments(t, k - 2) = dev.array().pow(k).mean();
    if (t > 0) s.treated(t) = d.treatments.assignments.col(t - 1).cast<double>().mean();
  }
  return s;
}

StateFeatures build_features(const ExperimentDataset& d, int moment_order, bool center_baseline) {
  const int T = d.n_periods();
  if (T < 2) throw ValidationError("need at least two transitions, have " + std::to_string(T));
  const PeriodSummary s = summarize(d, moment_order, center_baseline);

  StateFeatures f;
  f.mean = s.mean.head(T);
  f.treated_next = s.treated.tail(T);
  f.interaction = f.mean.cwiseProduct(f.treated_next);
  f.moments = s.moments.topRows(T);
  f.target = s.mean.tail(T);
  f.period.resize(static_cast<std::size_t>(T));
  std::iota(f.period.begin(), f.period.end(), 0);
  return f;
}

namespace {

Vector feature_row(const StateEvolutionModel& model, double m, double p, const Vector& moments) {
  const Eigen::Index extra = model.interaction ? 1 : 0;
  Vector r(2 + extra + moments.size());
  r(0) = m;
  r(1) = p;
  if (model.interaction) r(2) = m * p;
  r.tail(moments.size()) = moments;
  return r;
}

std::size_t map_index(const StateEvolutionModel& model, int t) {
  const std::size_t i = model.time_homogeneous ? 0 : static_cast<std::size_t>(t);
  if (t < 0 || i >= model.maps.size()) {
    throw std::out_of_range("no state-evolution map for transition " + std::to_string(t));
  }
  return i;
}

}  // namespace

double StateEvolutionModel::predict(int t, double m, double p, const Vector& moments) const {
  const std::size_t i = map_index(*this, t);
  const Vector r = feature_row(*this, m, p, moments).cwiseQuotient(scales[i]);
  return maps[i].predict(r.transpose())(0);
}

Vector StateEvolutionModel::coefficients(std::size_t map) const {
  const auto* r = maps.at(map).ridge();
  if (!r) throw std::logic_error("coefficients are only defined for linear ridge maps");
  return r->coefficients.cwiseQuotient(scales.at(map));
}

double StateEvolutionModel::intercept(std::size_t map) const {
  const auto* r = maps.at(map).ridge();
  if (!r) throw std::logic_error("intercept is only defined for linear ridge maps");
  return r->intercept;
}

StateEvolutionModel fit_state_evolution(const StateFeatures& features, const FitOptions& opts, std::uint64_t seed) {
  StateEvolutionModel model;
  model.interaction = opts.interaction;
  model.time_homogeneous = !opts.per_period;
  model.moment_order = features.moment_order();

  const Matrix X = features.design(opts.interaction);
  std::vector<std::vector<Eigen::Index>> groups;
  if (opts.per_period) {
    const int n_maps = features.period.empty() ? 0 : *std::max_element(features.period.begin(), features.period.end()) + 1;
    groups.resize(static_cast<std::size_t>(n_maps));
    for (Eigen::Index r = 0; r < features.rows(); ++r) groups[static_cast<std::size_t>(features.period[r])].push_back(r);
  } else {
    groups.emplace_back(static_cast<std::size_t>(features.rows()));
    std::iota(groups[0].begin(), groups[0].end(), Eigen::Index{0});
  }

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& rows = groups[g];
    if (rows.size() < 2) {
      throw regress::DegenerateError("state evolution needs at least two training rows, transition " +
                                     std::to_string(g) + " has " + std::to_string(rows.size()));
    }
    Matrix Xg = X(rows, Eigen::all);
    const Vector yg = features.target(rows);
    // Standardize so one lambda grid suits features on different scales.
    Vector scale(Xg.cols());
    for (Eigen::Index c = 0; c < Xg.cols(); ++c) {
      const double sd = std::sqrt((Xg.col(c).array() - Xg.col(c).mean()).square().mean());
      scale(c) = sd > 1e-12 ? sd : 1.0;
    }
    for (Eigen::Index c = 0; c < Xg.cols(); ++c) Xg.col(c) /= scale(c);
    model.maps.push_back(regress::fit_learner(Xg, yg, opts.learner, derive_seed(seed, "cmp.cv", g)));
    model.scales.push_back(std::move(scale));
  }
  return model;
}

CounterfactualTrajectory counterfactual_evolution(const StateEvolutionModel& model, double start,
                                                  AllocationScenario allocation, int T,
                                                  const Vector& held_moments, double offset) {
  if (T < 0) throw std::invalid_argument("negative horizon");
  const Vector moments = held_moments.size() > 0 ? held_moments : Vector::Zero(model.moment_order - 1);
  if (moments.size() != model.moment_order - 1) throw std::invalid_argument("held moments do not match the model order");
  const double p = allocation == AllocationScenario::all_treated ? 1.0 : 0.0;

  CounterfactualTrajectory out;
  out.allocation = allocation;
  out.means = Vector::Zero(T + 1);
  double m = start;
  out.means(0) = m + offset;
  for (int t = 0; t < T; ++t) {
    m = model.predict(t, m, p, moments);
    if (!std::isfinite(m)) {
      throw std::runtime_error("counterfactual recursion is not finite at period " + std::to_string(t + 1));
    }
    out.means(t + 1) = m + offset;
  }
  return out;
}

std::vector<std::vector<std::size_t>> network_partition(const ExperimentDataset& d, int k, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(d.n_units());
  if (k < 2) throw ValidationError("network bootstrap needs at least two subpopulations");
  if (n < 2 * static_cast<std::size_t>(k)) {
    throw ValidationError("network bootstrap with " + std::to_string(k) + " subpopulations needs at least " +
                          std::to_string(2 * k) + " units, have " + std::to_string(n));
  }
  const Matrix& y = d.outcomes.outcomes;
  const IntMatrix& w = d.treatments.assignments;

  std::vector<std::size_t> by_baseline(n);
  std::iota(by_baseline.begin(), by_baseline.end(), std::size_t{0});
  std::stable_sort(by_baseline.begin(), by_baseline.end(),
                   [&](std::size_t a, std::size_t b) { return y(static_cast<Eigen::Index>(a), 0) < y(static_cast<Eigen::Index>(b), 0); });
  std::vector<int> quartile(n);
  for (std::size_t r = 0; r < n; ++r) quartile[by_baseline[r]] = static_cast<int>(4 * r / n);

  std::vector<int> adopted(n);
  for (std::size_t i = 0; i < n; ++i) {
    int t = 0;
    while (t < w.cols() && w(static_cast<Eigen::Index>(i), t) == 0) ++t;
    adopted[i] = t;  // w.cols() means never treated
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed, "cmp.partition");
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(quartile[a], adopted[a]) < std::tie(quartile[b], adopted[b]);
  });

  std::vector<std::vector<std::size_t>> parts(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) parts[i % parts.size()].push_back(order[i]);
  return parts;
}

std::vector<ExperimentDataset> network_bootstrap(const ExperimentDataset& d, int k, std::uint64_t seed) {
  std::vector<ExperimentDataset> out;
  for (const auto& part : network_partition(d, k, seed)) out.push_back(d.subset(part));
  return out;
}

double tte_point(const ExperimentDataset& d, const CmpConfig& cfg, std::uint64_t seed, double* lambda) {
  const int T = d.n_periods();
  StateFeatures features;
  for (const auto& sub : network_bootstrap(d, cfg.n_subpopulations, derive_seed(seed, "cmp.subpopulations"))) {
    features.append(build_features(sub, cfg.moment_order, cfg.center_baseline));
  }
  const FitOptions opts{cfg.learner, cfg.interaction, cfg.per_period};
  const auto model = fit_state_evolution(features, opts, derive_seed(seed, "cmp.fit"));
  if (lambda) *lambda = model.lambda();

  const PeriodSummary full = summarize(d, cfg.moment_order, cfg.center_baseline);
  const double m0 = d.outcomes.outcomes.col(0).mean();
  const double start = cfg.center_baseline ? 0.0 : m0;
  const double offset = cfg.center_baseline ? m0 : 0.0;
  const Vector held = full.moments.row(T).transpose();
  const auto treated = counterfactual_evolution(model, start, AllocationScenario::all_treated, T, held, offset);
  const auto control = counterfactual_evolution(model, start, AllocationScenario::all_control, T, held, offset);
  return treated.means(T) - control.means(T);
}

EffectEstimate estimate_tte_cmp(const ExperimentDataset& d, const CmpConfig& cfg, const BootstrapConfig& boot) {
  // Validate without the graph so that the graph cannot influence the result.
  ExperimentDataset panels_only = d;
  panels_only.graph.reset();
  const auto errors = validate_dataset(panels_only);
  if (!errors.empty()) throw ValidationError("invalid dataset: " + errors.front().invariant + " at " + errors.front().where);

  double lambda = 0.0;
  const double point = tte_point(d, cfg, derive_seed(boot.seed, "cmp.point"), &lambda);
  const auto dist = bootstrap_distribution(
      static_cast<std::size_t>(d.n_units()), boot, "cmp.bootstrap",
      [&](const std::vector<std::size_t>& idx, std::uint64_t s) { return tte_point(d.subset(idx), cfg, s); });

  auto est = make_estimate(Method::cmp, point, quantile(dist, 0.025), quantile(dist, 0.975), boot.replicates);
  est.metadata["moment_order"] = std::to_string(cfg.moment_order);
  est.metadata["interaction"] = cfg.interaction ? "true" : "false";
  est.metadata["time_homogeneous"] = cfg.per_period ? "false" : "true";
  est.metadata["n_subpopulations"] = std::to_string(cfg.n_subpopulations);
  est.metadata["center_baseline"] = cfg.center_baseline ? "true" : "false";
  est.metadata["higher_moments"] = "held_at_final_observed";
  est.metadata["learner"] = regress::to_string(cfg.learner.kind);
  if (!cfg.per_period) est.metadata["lambda"] = format_real(lambda);
  return est;
}

}  // namespace ilab::cmp
