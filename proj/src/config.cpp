#include "ilab/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>

namespace ilab {

std::string to_string(BiasSign s) { return s == BiasSign::positive ? "positive" : "negative"; }

namespace {

// Reads fields of one JSON object, remembering which keys were consumed so
// leftovers can be reported.
class Fields {
 public:
  Fields(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw ValidationError(where_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ValidationError(where_ + "." + key + " has the wrong type");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }
  const Json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ValidationError("unknown key " + where_ + "." + k);
    }
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

regress::LearnerConfig learner_at(const Json& j, const std::string& where) {
  regress::LearnerConfig l;
  Fields f(j, where);
  std::string kind = regress::to_string(l.kind);
  f.get("kind", kind);
  try {
    l.kind = regress::learner_from_string(kind);
  } catch (const std::exception&) {
    throw ValidationError(where + ".kind must be ridge, kernel_rbf or kernel_linear");
  }
  f.get("lambda_grid", l.lambda_grid);
  f.get("folds", l.folds);
  f.get("bandwidth", l.bandwidth);
  f.finish();
  if (l.lambda_grid.empty()) throw ValidationError(where + ".lambda_grid must not be empty");
  for (double v : l.lambda_grid) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(where + ".lambda_grid values must be finite and >= 0");
  }
  if (l.folds < 2) throw ValidationError(where + ".folds must be >= 2");
  if (!std::isfinite(l.bandwidth) || l.bandwidth < 0.0) throw ValidationError(where + ".bandwidth must be >= 0");
  return l;
}

EstimatorConfig estimators_at(const Json& j, const std::string& where) {
  EstimatorConfig e;
  Fields f(j, where);
  if (f.has("basic")) {
    Fields b(f.at("basic"), where + ".basic");
    if (b.has("learner")) e.basic.learner = learner_at(b.at("learner"), where + ".basic.learner");
    b.finish();
  }
  if (f.has("network")) {
    Fields n(f.at("network"), where + ".network");
    if (n.has("learner")) e.network.learner = learner_at(n.at("learner"), where + ".network.learner");
    n.get("weighted_exposures", e.network.weighted_exposures);
    n.finish();
  }
  if (f.has("cmp")) {
    Fields c(f.at("cmp"), where + ".cmp");
    if (c.has("learner")) e.cmp.learner = learner_at(c.at("learner"), where + ".cmp.learner");
    c.get("moment_order", e.cmp.moment_order);
    c.get("interaction", e.cmp.interaction);
    c.get("per_period", e.cmp.per_period);
    c.get("n_subpopulations", e.cmp.n_subpopulations);
    c.get("center_baseline", e.cmp.center_baseline);
    c.finish();
    if (e.cmp.moment_order < 1) throw ValidationError(where + ".cmp.moment_order must be >= 1");
    if (e.cmp.n_subpopulations < 2) throw ValidationError(where + ".cmp.n_subpopulations must be >= 2");
  }
  if (f.has("bootstrap")) {
    Fields b(f.at("bootstrap"), where + ".bootstrap");
    b.get("replicates", e.bootstrap_replicates);
    b.finish();
    if (e.bootstrap_replicates < 1) throw ValidationError(where + ".bootstrap.replicates must be >= 1");
  }
  f.finish();
  return e;
}

}  // namespace

regress::LearnerConfig learner_from_json(const Json& j) { return learner_at(j, "learner"); }

EstimatorConfig estimators_from_json(const Json& j) { return estimators_at(j, "estimators"); }

int ScenarioConfig::effective_pre_period_end() const {
  if (pre_period_end) return *pre_period_end;
  return rollout.stage_boundaries.empty() ? 0 : rollout.stage_boundaries.front() - 1;
}

std::vector<std::string> ScenarioConfig::problems() const {
  std::vector<std::string> out;
  auto add = [&](const std::vector<std::string>& v) { out.insert(out.end(), v.begin(), v.end()); };
  add(graph.problems());
  add(dgp.problems());
  if (T < 1) out.emplace_back("T must be >= 1");
  add(rollout.problems(T));
  const int pre = effective_pre_period_end();
  if (pre < 0 || pre >= T) out.emplace_back("pre_period_end must lie in 0..T-1");
  if (replicates < 1) out.emplace_back("replicates must be >= 1");
  if (truth_reps < 1) out.emplace_back("truth_reps must be >= 1");
  return out;
}

ScenarioConfig scenario_from_json(const Json& j) {
  ScenarioConfig s;
  Fields f(j, "scenario");
  f.get("name", s.name);
  if (f.has("graph")) {
    Fields g(f.at("graph"), "graph");
    g.get("n_eligible", s.graph.n_eligible);
    g.get("n_ineligible", s.graph.n_ineligible);
    g.get("n_connected", s.graph.n_connected);
    g.get("avg_degree", s.graph.avg_degree);
    std::string mode = s.graph.weight_mode == sim::WeightMode::unit ? "unit" : "lognormal";
    g.get("weight_mode", mode);
    if (mode == "unit") {
      s.graph.weight_mode = sim::WeightMode::unit;
    } else if (mode == "lognormal") {
      s.graph.weight_mode = sim::WeightMode::lognormal;
    } else {
      throw ValidationError("graph.weight_mode must be unit or lognormal");
    }
    g.get("weight_mu", s.graph.weight_mu);
    g.get("weight_sd", s.graph.weight_sd);
    g.finish();
  }
  if (f.has("dgp")) {
    Fields d(f.at("dgp"), "dgp");
    d.get("beta", s.dgp.beta);
    d.get("gamma", s.dgp.gamma);
    d.get("rho", s.dgp.rho);
    d.get("sigma", s.dgp.sigma);
    d.get("baseline_mean", s.dgp.baseline_mean);
    d.get("baseline_sd", s.dgp.baseline_sd);
    d.finish();
  }
  if (f.has("rollout")) {
    Fields r(f.at("rollout"), "rollout");
    r.get("stage_boundaries", s.rollout.stage_boundaries);
    r.get("stage_probabilities", s.rollout.stage_probabilities);
    r.finish();
  }
  f.get("T", s.T);
  f.get("seed", s.seed);
  if (f.has("pre_period_end")) {
    int pre = 0;
    f.get("pre_period_end", pre);
    s.pre_period_end = pre;
  }
  if (f.has("estimators")) s.estimators = estimators_at(f.at("estimators"), "estimators");
  f.get("replicates", s.replicates);
  f.get("truth_reps", s.truth_reps);
  if (f.has("expected_bias_sign")) {
    std::string sign;
    f.get("expected_bias_sign", sign);
    if (sign == "positive") {
      s.expected_bias_sign = BiasSign::positive;
    } else if (sign == "negative") {
      s.expected_bias_sign = BiasSign::negative;
    } else {
      throw ValidationError("expected_bias_sign must be positive or negative");
    }
  }
  f.get("description", s.description);
  f.finish();

  const auto bad = s.problems();
  if (!bad.empty()) throw ValidationError(s.name + ": " + bad.front());
  return s;
}

Json to_json(const regress::LearnerConfig& l) {
  return Json{{"kind", regress::to_string(l.kind)},
              {"lambda_grid", l.lambda_grid},
              {"folds", l.folds},
              {"bandwidth", l.bandwidth}};
}

Json to_json(const EstimatorConfig& e) {
  return Json{{"basic", {{"learner", to_json(e.basic.learner)}}},
              {"network", {{"learner", to_json(e.network.learner)}, {"weighted_exposures", e.network.weighted_exposures}}},
              {"cmp",
               {{"learner", to_json(e.cmp.learner)},
                {"moment_order", e.cmp.moment_order},
                {"interaction", e.cmp.interaction},
                {"per_period", e.cmp.per_period},
                {"n_subpopulations", e.cmp.n_subpopulations},
                {"center_baseline", e.cmp.center_baseline}}},
              {"bootstrap", {{"replicates", e.bootstrap_replicates}}}};
}

Json to_json(const ScenarioConfig& s) {
  Json j;
  j["name"] = s.name;
  if (!s.description.empty()) j["description"] = s.description;
  j["graph"] = {{"n_eligible", s.graph.n_eligible},
                {"n_ineligible", s.graph.n_ineligible},
                {"n_connected", s.graph.n_connected},
                {"avg_degree", s.graph.avg_degree},
                {"weight_mode", s.graph.weight_mode == sim::WeightMode::unit ? "unit" : "lognormal"},
                {"weight_mu", s.graph.weight_mu},
                {"weight_sd", s.graph.weight_sd}};
  j["dgp"] = {{"beta", s.dgp.beta},
              {"gamma", s.dgp.gamma},
              {"rho", s.dgp.rho},
              {"sigma", s.dgp.sigma},
              {"baseline_mean", s.dgp.baseline_mean},
              {"baseline_sd", s.dgp.baseline_sd}};
  j["rollout"] = {{"stage_boundaries", s.rollout.stage_boundaries},
                  {"stage_probabilities", s.rollout.stage_probabilities}};
  j["T"] = s.T;
  j["seed"] = s.seed;
  j["pre_period_end"] = s.effective_pre_period_end();
  j["estimators"] = to_json(s.estimators);
  j["replicates"] = s.replicates;
  j["truth_reps"] = s.truth_reps;
  if (s.expected_bias_sign) j["expected_bias_sign"] = to_string(*s.expected_bias_sign);
  return j;
}

Json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot read " + p.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

std::vector<ScenarioConfig> load_scenarios(const std::filesystem::path& p) {
  const Json j = read_json_file(p);
  if (!j.is_object() || !j.contains("scenarios")) return {scenario_from_json(j)};
  if (j.size() != 1) throw ValidationError(p.string() + ": a scenario list takes no other keys");
  const Json& list = j.at("scenarios");
  if (!list.is_array()) throw ValidationError(p.string() + ": scenarios must be an array");
  std::vector<ScenarioConfig> out;
  for (const auto& entry : list) {
    if (entry.is_string()) {
      const auto sub = p.parent_path() / entry.get<std::string>();
      auto more = load_scenarios(sub);
      out.insert(out.end(), more.begin(), more.end());
    } else {
      out.push_back(scenario_from_json(entry));
    }
  }
  return out;
}

std::optional<std::uint64_t> seed_override_from_env() {
  const char* v = std::getenv("INTERFERENCE_LAB_SEED");
  if (!v || !*v) return std::nullopt;
  const std::string s(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError("INTERFERENCE_LAB_SEED must be an unsigned integer, got '" + s + "'");
  }
  return out;
}

}  // namespace ilab
