#include "ilab/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <utility>

namespace ilab {

std::size_t BipartiteGraph::n_eligible() const {
  return static_cast<std::size_t>(std::count_if(treatment_units.begin(), treatment_units.end(),
                                                [](const TreatmentUnit& u) { return u.eligible; }));
}

BipartiteGraph::Adjacency BipartiteGraph::adjacency() const {
  std::unordered_map<int, std::size_t> tpos;
  std::unordered_map<int, std::size_t> cpos;
  for (std::size_t i = 0; i < treatment_units.size(); ++i) tpos.emplace(treatment_units[i].id, i);
  for (std::size_t i = 0; i < connected_units.size(); ++i) cpos.emplace(connected_units[i], i);

  Adjacency adj;
  adj.of_treatment.resize(treatment_units.size());
  adj.of_connected.resize(connected_units.size());
  for (const auto& e : edges) {
    auto t = tpos.find(e.treatment_id);
    auto c = cpos.find(e.connected_id);
    if (t == tpos.end() || c == cpos.end()) {
      throw std::invalid_argument("edge (" + std::to_string(e.treatment_id) + "," +
                                  std::to_string(e.connected_id) + ") references an unknown unit");
    }
    adj.of_treatment[t->second].emplace_back(c->second, e.weight);
    adj.of_connected[c->second].push_back(t->second);
  }
  return adj;
}

std::string to_string(DesignTag tag) {
  switch (tag) {
    case DesignTag::staggered: return "staggered";
    case DesignTag::fixed: return "fixed";
    case DesignTag::free: return "free";
  }
  return "free";
}

DesignTag design_from_string(const std::string& s) {
  if (s == "staggered") return DesignTag::staggered;
  if (s == "fixed") return DesignTag::fixed;
  if (s == "free") return DesignTag::free;
  throw ValidationError("unknown design tag '" + s + "'");
}

std::vector<int> TreatmentPanel::final_assignment() const {
  std::vector<int> w(static_cast<std::size_t>(n_units()), 0);
  if (n_periods() == 0) return w;
  for (Eigen::Index i = 0; i < n_units(); ++i) {
    w[static_cast<std::size_t>(i)] = assignments(i, n_periods() - 1);
  }
  return w;
}

ExperimentDataset ExperimentDataset::subset(const std::vector<std::size_t>& units) const {
  ExperimentDataset out;
  const auto n = static_cast<Eigen::Index>(units.size());
  out.outcomes.outcomes.resize(n, outcomes.n_periods());
  out.treatments.assignments.resize(n, treatments.n_periods());
  out.treatments.design = treatments.design;
  if (covariates) out.covariates = UnitCovariates{Matrix(n, covariates->values.cols())};
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto src = static_cast<Eigen::Index>(units[static_cast<std::size_t>(r)]);
    out.outcomes.outcomes.row(r) = outcomes.outcomes.row(src);
    out.treatments.assignments.row(r) = treatments.assignments.row(src);
    if (covariates) out.covariates->values.row(r) = covariates->values.row(src);
  }
  out.pre_period_end = pre_period_end;
  return out;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::basic: return "basic";
    case Method::network_aware: return "network_aware";
    case Method::cmp: return "cmp";
  }
  return "basic";
}

Method method_from_string(const std::string& s) {
  if (s == "basic") return Method::basic;
  if (s == "network_aware" || s == "network") return Method::network_aware;
  if (s == "cmp") return Method::cmp;
  throw ValidationError("unknown method '" + s + "'");
}

EffectEstimate make_estimate(Method m, double point, double lo, double hi, int n_bootstrap) {
  EffectEstimate e;
  e.method = m;
  e.point = point;
  e.ci_low = std::min(lo, point);
  e.ci_high = std::max(hi, point);
  e.significant_5pct = !(e.ci_low <= 0.0 && 0.0 <= e.ci_high);
  e.n_bootstrap = n_bootstrap;
  return e;
}

std::string to_string(AllocationScenario a) {
  return a == AllocationScenario::all_treated ? "all_treated" : "all_control";
}

TreatmentPanel expand(AllocationScenario a, Eigen::Index n_units, Eigen::Index n_periods) {
  TreatmentPanel p;
  p.design = DesignTag::fixed;
  p.assignments = IntMatrix::Constant(n_units, n_periods, a == AllocationScenario::all_treated ? 1 : 0);
  return p;
}

namespace {

std::string at(long i, long t) { return "(" + std::to_string(i) + "," + std::to_string(t) + ")"; }

}  // namespace

std::vector<Violation> validate_graph(const BipartiteGraph& g) {
  std::vector<Violation> out;
  std::set<int> tids;
  std::set<int> cids;
  for (const auto& u : g.treatment_units) {
    if (!tids.insert(u.id).second) {
      out.push_back({"graph.unique_treatment_ids", "treatment unit " + std::to_string(u.id)});
    }
  }
  for (int c : g.connected_units) {
    if (!cids.insert(c).second) {
      out.push_back({"graph.unique_connected_ids", "connected unit " + std::to_string(c)});
    }
  }
  std::set<std::pair<int, int>> seen;
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto& e = g.edges[k];
    const std::string where = "edge " + std::to_string(k) + " " + at(e.treatment_id, e.connected_id);
    if (!seen.insert({e.treatment_id, e.connected_id}).second) {
      out.push_back({"graph.unique_edges", where});
    }
    if (!tids.count(e.treatment_id)) out.push_back({"graph.edge_treatment_endpoint", where});
    if (!cids.count(e.connected_id)) out.push_back({"graph.edge_connected_endpoint", where});
    if (!(std::isfinite(e.weight) && e.weight >= 0.0)) out.push_back({"graph.edge_weight", where});
  }
  if (g.n_eligible() == 0) out.push_back({"graph.has_eligible", "treatment units"});
  return out;
}

std::vector<Violation> validate_dataset(const ExperimentDataset& d) {
  std::vector<Violation> out;
  const auto& w = d.treatments.assignments;
  const auto& y = d.outcomes.outcomes;
  const Eigen::Index n = w.rows();
  const Eigen::Index T = w.cols();

  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < T; ++t) {
      const int v = w(i, t);
      if (v != 0 && v != 1) out.push_back({"treatments.binary", at(i + 1, t + 1)});
      if (t == 0) continue;
      const int prev = w(i, t - 1);
      if (d.treatments.design == DesignTag::staggered && prev == 1 && v == 0) {
        out.push_back({"treatments.staggered_monotone", at(i + 1, t + 1)});
      }
      if (d.treatments.design == DesignTag::fixed && prev != v) {
        out.push_back({"treatments.fixed_constant", at(i + 1, t + 1)});
      }
    }
  }

  if (y.rows() != n || y.cols() != T + 1) {
    out.push_back({"panels.dimensions", "outcomes " + std::to_string(y.rows()) + "x" +
                                            std::to_string(y.cols()) + ", treatments " +
                                            std::to_string(n) + "x" + std::to_string(T)});
  }
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index t = 0; t < y.cols(); ++t) {
      if (!std::isfinite(y(i, t))) out.push_back({"outcomes.finite", at(i + 1, t)});
    }
  }

  if (d.pre_period_end < 0 || d.pre_period_end >= T) {
    out.push_back({"dataset.pre_period_end", "pre_period_end=" + std::to_string(d.pre_period_end) +
                                                 " T=" + std::to_string(T)});
  }

  if (d.covariates) {
    const auto& x = d.covariates->values;
    if (x.rows() != n) {
      out.push_back({"covariates.rows", std::to_string(x.rows()) + " rows for " + std::to_string(n) + " units"});
    }
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index k = 0; k < x.cols(); ++k) {
        if (!std::isfinite(x(i, k))) out.push_back({"covariates.finite", at(i + 1, k + 1)});
      }
    }
  }

  if (d.graph) {
    auto gv = validate_graph(*d.graph);
    out.insert(out.end(), gv.begin(), gv.end());
    std::vector<int> ids;
    for (const auto& u : d.graph->treatment_units) {
      if (u.eligible) ids.push_back(u.id);
    }
    std::sort(ids.begin(), ids.end());
    bool dense = static_cast<Eigen::Index>(ids.size()) == n;
    for (std::size_t k = 0; dense && k < ids.size(); ++k) dense = ids[k] == static_cast<int>(k) + 1;
    if (!dense) {
      out.push_back({"dataset.graph_eligible_ids",
                     std::to_string(ids.size()) + " eligible graph units vs " + std::to_string(n) + " panel rows"});
    }
  }
  return out;
}

}  // namespace ilab
