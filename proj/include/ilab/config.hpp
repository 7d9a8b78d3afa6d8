#pragma once

// JSON configuration for scenarios and estimators.

#include "ilab/est_basic.hpp"
#include "ilab/est_cmp.hpp"
#include "ilab/est_network.hpp"
#include "ilab/sim.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>

namespace ilab {

using Json = nlohmann::ordered_json;

enum class BiasSign { positive, negative };

std::string to_string(BiasSign s);

struct EstimatorConfig {
  basic::BasicConfig basic;
  network::NetworkConfig network;
  cmp::CmpConfig cmp;
  int bootstrap_replicates = 500;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::string description;
  sim::GraphParams graph;
  sim::DgpParams dgp;
  sim::RolloutParams rollout;
  int T = 20;
  std::uint64_t seed = 1;
  std::optional<int> pre_period_end;  // default: first stage boundary - 1
  EstimatorConfig estimators;
  int replicates = 1;
  int truth_reps = 1;
  std::optional<BiasSign> expected_bias_sign;

  int effective_pre_period_end() const;
  /// Empty when valid.
  std::vector<std::string> problems() const;
};

/// Unknown keys are rejected so typos do not silently fall back to
/// defaults. Throws ValidationError.
regress::LearnerConfig learner_from_json(const Json& j);
EstimatorConfig estimators_from_json(const Json& j);
ScenarioConfig scenario_from_json(const Json& j);

Json to_json(const regress::LearnerConfig& l);
Json to_json(const EstimatorConfig& e);
Json to_json(const ScenarioConfig& s);

/// Parses a file; ValidationError on unreadable or malformed JSON.
Json read_json_file(const std::filesystem::path& p);

/// A bench config is either one scenario or {"scenarios": [...]} whose
/// entries are scenario objects or paths relative to the config file.
std::vector<ScenarioConfig> load_scenarios(const std::filesystem::path& p);

/// Applies INTERFERENCE_LAB_SEED when set. Throws ValidationError if the
/// variable is not an unsigned integer.
std::optional<std::uint64_t> seed_override_from_env();

}  // namespace ilab
