#include "ilab/sim.hpp"

#include "ilab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace ilab::sim {

std::vector<std::string> DgpParams::problems() const {
  std::vector<std::string> out;
  if (!(std::abs(rho) < 1.0)) out.emplace_back("dgp.rho must satisfy |rho| < 1");
  if (!(sigma >= 0.0)) out.emplace_back("dgp.sigma must be >= 0");
  if (!(baseline_sd >= 0.0)) out.emplace_back("dgp.baseline_sd must be >= 0");
  for (double v : {beta, gamma, rho, sigma, baseline_mean, baseline_sd}) {
    if (!std::isfinite(v)) {
      out.emplace_back("dgp parameters must be finite");
      break;
    }
  }
  return out;
}

std::vector<std::string> GraphParams::problems() const {
  std::vector<std::string> out;
  if (n_eligible < 1) out.emplace_back("graph.n_eligible must be >= 1");
  if (n_ineligible < 0) out.emplace_back("graph.n_ineligible must be >= 0");
  if (n_connected < 1) out.emplace_back("graph.n_connected must be >= 1");
  if (!(avg_degree > 0.0)) out.emplace_back("graph.avg_degree must be > 0");
  if (avg_degree > n_connected) out.emplace_back("graph.avg_degree must be <= n_connected");
  if (weight_mode == WeightMode::lognormal && !(weight_sd >= 0.0)) {
    out.emplace_back("graph.weight_sd must be >= 0");
  }
  return out;
}

std::vector<std::string> RolloutParams::problems(int T) const {
  std::vector<std::string> out;
  if (stage_boundaries.size() != stage_probabilities.size()) {
    out.emplace_back("rollout.stage_boundaries and stage_probabilities differ in length");
    return out;
  }
  for (std::size_t s = 0; s < stage_boundaries.size(); ++s) {
    if (stage_boundaries[s] < 1 || (T > 0 && stage_boundaries[s] > T)) {
      out.emplace_back("rollout.stage_boundaries must lie in 1..T");
    }
    if (s > 0 && stage_boundaries[s] <= stage_boundaries[s - 1]) {
      out.emplace_back("rollout.stage_boundaries must be increasing");
    }
    const double p = stage_probabilities[s];
    if (!(p >= 0.0 && p <= 1.0)) out.emplace_back("rollout.stage_probabilities must lie in [0,1]");
    if (s > 0 && p < stage_probabilities[s - 1]) {
      out.emplace_back("rollout.stage_probabilities must be nondecreasing");
    }
  }
  return out;
}

namespace {

void require_valid(const std::vector<std::string>& problems) {
  if (!problems.empty()) throw ValidationError(problems.front());
}

}  // namespace

BipartiteGraph generate_graph(const GraphParams& gp, std::uint64_t seed) {
  require_valid(gp.problems());
  Rng degree_rng = make_rng(seed, "graph.degree");
  Rng pick_rng = make_rng(seed, "graph.endpoints");
  Rng weight_rng = make_rng(seed, "graph.weight");

  BipartiteGraph g;
  const int n_treat = gp.n_eligible + gp.n_ineligible;
  for (int j = 1; j <= n_treat; ++j) g.treatment_units.push_back({j, j <= gp.n_eligible});
  for (int c = 1; c <= gp.n_connected; ++c) g.connected_units.push_back(c);

  std::vector<int> picked;
  std::unordered_set<int> chosen;
  for (int j = 1; j <= n_treat; ++j) {
    long deg = 0;
    do {
      deg = poisson(degree_rng, gp.avg_degree);
    } while (deg < 1 || deg > gp.n_connected);

    // Floyd's sampling of `deg` distinct connected ids.
    chosen.clear();
    picked.clear();
    for (long r = gp.n_connected - deg; r < gp.n_connected; ++r) {
      const int candidate = static_cast<int>(uniform_index(pick_rng, static_cast<std::size_t>(r) + 1)) + 1;
      const int id = chosen.count(candidate) ? static_cast<int>(r) + 1 : candidate;
      chosen.insert(id);
      picked.push_back(id);
    }
    std::sort(picked.begin(), picked.end());
    for (int c : picked) {
      double w = 1.0;
      if (gp.weight_mode == WeightMode::lognormal) {
        w = std::exp(gp.weight_mu + gp.weight_sd * standard_normal(weight_rng));
      }
      g.edges.push_back({j, c, w});
    }
  }
  return g;
}

TreatmentPanel assign_staggered_rollout(int n_units, int T, const RolloutParams& rp, std::uint64_t seed) {
  require_valid(rp.problems(T));
  if (n_units < 1 || T < 1) throw ValidationError("rollout needs n_units >= 1 and T >= 1");
  Rng rng = make_rng(seed, "rollout");
  TreatmentPanel panel;
  panel.design = DesignTag::staggered;
  panel.assignments = IntMatrix::Zero(n_units, T);
  for (int i = 0; i < n_units; ++i) {
    const double u = uniform01(rng);
    for (int t = 1; t <= T; ++t) {
      int stage = -1;
      for (std::size_t s = 0; s < rp.stage_boundaries.size(); ++s) {
        if (t >= rp.stage_boundaries[s]) stage = static_cast<int>(s);
      }
      if (stage >= 0 && u < rp.stage_probabilities[static_cast<std::size_t>(stage)]) panel.assignments(i, t - 1) = 1;
    }
  }
  return panel;
}

TreatmentPanel expand_to_all_units(const BipartiteGraph& g, const TreatmentPanel& eligible) {
  TreatmentPanel out;
  out.design = eligible.design;
  out.assignments = IntMatrix::Zero(static_cast<Eigen::Index>(g.treatment_units.size()), eligible.n_periods());
  for (std::size_t k = 0; k < g.treatment_units.size(); ++k) {
    const auto& u = g.treatment_units[k];
    if (!u.eligible) continue;
    if (u.id < 1 || u.id > eligible.n_units()) {
      throw ValidationError("eligible unit id " + std::to_string(u.id) + " has no panel row");
    }
    out.assignments.row(static_cast<Eigen::Index>(k)) = eligible.assignments.row(u.id - 1);
  }
  return out;
}

OutcomePanel simulate_outcomes(const BipartiteGraph& g, const TreatmentPanel& w, const DgpParams& p,
                               std::uint64_t seed) {
  require_valid(p.problems());
  const auto adj = g.adjacency();
  const std::size_t n_treat = g.treatment_units.size();
  const std::size_t n_conn = g.connected_units.size();
  if (static_cast<std::size_t>(w.n_units()) != n_treat) {
    throw ValidationError("treatment panel has " + std::to_string(w.n_units()) + " rows for " +
                          std::to_string(n_treat) + " treatment units");
  }
  const auto T = static_cast<int>(w.n_periods());
  const auto n_elig = static_cast<Eigen::Index>(g.n_eligible());

  std::vector<Eigen::Index> out_row(n_treat, -1);
  for (std::size_t k = 0; k < n_treat; ++k) {
    const auto& u = g.treatment_units[k];
    if (u.eligible) {
      if (u.id < 1 || u.id > n_elig) throw ValidationError("eligible ids must be 1..N");
      out_row[k] = u.id - 1;
    } else if ((w.assignments.row(static_cast<Eigen::Index>(k)).array() != 0).any()) {
      throw ValidationError("ineligible unit " + std::to_string(u.id) + " is treated");
    }
  }

  Rng baseline_rng = make_rng(seed, "sim.baseline");
  Rng noise_rng = make_rng(seed, "sim.noise");

  std::vector<double> b(n_conn);
  for (auto& v : b) v = p.baseline_mean + p.baseline_sd * standard_normal(baseline_rng);

  struct EdgeState {
    std::size_t treat;
    std::size_t conn;
    double weight;
    double y;
  };
  std::vector<EdgeState> edges;
  for (std::size_t j = 0; j < n_treat; ++j) {
    for (const auto& [c, weight] : adj.of_treatment[j]) edges.push_back({j, c, weight, b[c]});
  }

  OutcomePanel out;
  out.outcomes = Matrix::Zero(n_elig, T + 1);
  auto accumulate = [&](int t) {
    for (const auto& e : edges) {
      if (out_row[e.treat] >= 0) out.outcomes(out_row[e.treat], t) += e.weight * e.y;
    }
  };
  accumulate(0);

  std::vector<double> tau(n_conn);
  for (int t = 1; t <= T; ++t) {
    for (std::size_t c = 0; c < n_conn; ++c) {
      const auto& nb = adj.of_connected[c];
      int treated = 0;
      for (std::size_t k : nb) treated += w.assignments(static_cast<Eigen::Index>(k), t - 1);
      tau[c] = nb.empty() ? 0.0 : static_cast<double>(treated) / static_cast<double>(nb.size());
    }
    for (auto& e : edges) {
      const double eps = p.sigma > 0.0 ? p.sigma * standard_normal(noise_rng) : 0.0;
      e.y = (1.0 - p.rho) * b[e.conn] + p.rho * e.y +
            p.beta * w.assignments(static_cast<Eigen::Index>(e.treat), t - 1) + p.gamma * tau[e.conn] + eps;
    }
    accumulate(t);
  }
  return out;
}

double ground_truth_tte(const BipartiteGraph& g, const DgpParams& p, int T, std::uint64_t seed, int n_reps) {
  if (n_reps < 1) throw ValidationError("ground truth needs n_reps >= 1");
  const auto n_elig = static_cast<Eigen::Index>(g.n_eligible());
  const TreatmentPanel treated = expand_to_all_units(g, expand(AllocationScenario::all_treated, n_elig, T));
  const TreatmentPanel control = expand_to_all_units(g, expand(AllocationScenario::all_control, n_elig, T));
  double total = 0.0;
  for (int r = 0; r < n_reps; ++r) {
    const std::uint64_t s = derive_seed(seed, "truth.replicate", static_cast<std::uint64_t>(r));
    const OutcomePanel y1 = simulate_outcomes(g, treated, p, s);
    const OutcomePanel y0 = simulate_outcomes(g, control, p, s);
    total += (y1.outcomes.col(T) - y0.outcomes.col(T)).mean();
  }
  return total / n_reps;
}

}  // namespace ilab::sim
