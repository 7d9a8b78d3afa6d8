#pragma once

// Domain types shared by the simulator and the three estimators.
//
// Conventions:
//   * Eligible treatment units carry ids 1..N and map to panel rows 0..N-1.
//   * Ineligible treatment units carry ids N+1..N+M; they never appear in
//     panels.
//   * Connected units carry their own ids 1..C.
//   * Treatment columns cover periods 1..T, outcome columns periods 0..T.

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ilab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

struct TreatmentUnit {
  int id = 0;
  bool eligible = false;

  friend bool operator==(const TreatmentUnit&, const TreatmentUnit&) = default;
};

struct Edge {
  int treatment_id = 0;
  int connected_id = 0;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

class BipartiteGraph {
 public:
  std::vector<TreatmentUnit> treatment_units;
  std::vector<int> connected_units;
  std::vector<Edge> edges;

  std::size_t n_eligible() const;

  /// Adjacency views, built on demand. Index positions refer to
  /// treatment_units / connected_units order.
  struct Adjacency {
    // For each treatment unit: (connected position, edge weight).
    std::vector<std::vector<std::pair<std::size_t, double>>> of_treatment;
    // For each connected unit: treatment positions.
    std::vector<std::vector<std::size_t>> of_connected;
  };
  /// Throws std::invalid_argument if an edge references an unknown unit.
  Adjacency adjacency() const;

  friend bool operator==(const BipartiteGraph&, const BipartiteGraph&) = default;
};

enum class DesignTag { staggered, fixed, free };

std::string to_string(DesignTag tag);
DesignTag design_from_string(const std::string& s);

struct TreatmentPanel {
  IntMatrix assignments;  // N x T, column t-1 holds W_t
  DesignTag design = DesignTag::staggered;

  Eigen::Index n_units() const { return assignments.rows(); }
  Eigen::Index n_periods() const { return assignments.cols(); }
  /// Final-period assignment per unit.
  std::vector<int> final_assignment() const;

  friend bool operator==(const TreatmentPanel& a, const TreatmentPanel& b) {
    return a.design == b.design && a.assignments.rows() == b.assignments.rows() &&
           a.assignments.cols() == b.assignments.cols() && a.assignments == b.assignments;
  }
};

struct OutcomePanel {
  Matrix outcomes;  // N x (T+1), column t holds Y_t

  Eigen::Index n_units() const { return outcomes.rows(); }
  Eigen::Index n_periods() const { return outcomes.cols(); }

  friend bool operator==(const OutcomePanel& a, const OutcomePanel& b) {
    return a.outcomes.rows() == b.outcomes.rows() && a.outcomes.cols() == b.outcomes.cols() &&
           a.outcomes == b.outcomes;
  }
};

/// One covariate row per eligible unit, panel order.
struct UnitCovariates {
  Matrix values;  // N x k

  friend bool operator==(const UnitCovariates& a, const UnitCovariates& b) {
    return a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols() &&
           a.values == b.values;
  }
};

struct ExperimentDataset {
  OutcomePanel outcomes;
  TreatmentPanel treatments;
  std::optional<BipartiteGraph> graph;
  std::optional<UnitCovariates> covariates;
  int pre_period_end = 0;

  Eigen::Index n_units() const { return outcomes.n_units(); }
  /// T, the number of treatment periods.
  int n_periods() const { return static_cast<int>(treatments.n_periods()); }

  /// Rows `units` (with repetition allowed) as a new dataset without graph.
  ExperimentDataset subset(const std::vector<std::size_t>& units) const;

  friend bool operator==(const ExperimentDataset&, const ExperimentDataset&) = default;
};

enum class Method { basic, network_aware, cmp };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct EffectEstimate {
  Method method = Method::basic;
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool significant_5pct = false;
  int n_bootstrap = 0;
  std::map<std::string, std::string> metadata;
  std::vector<std::string> warnings;

  friend bool operator==(const EffectEstimate&, const EffectEstimate&) = default;
};

/// Builds an estimate from a point and percentile interval, widening the
/// interval to contain the point and setting the significance flag.
EffectEstimate make_estimate(Method m, double point, double lo, double hi, int n_bootstrap);

enum class AllocationScenario { all_treated, all_control };

std::string to_string(AllocationScenario a);

/// Constant panel of the given shape: all ones for all_treated, zeros
/// otherwise.
TreatmentPanel expand(AllocationScenario a, Eigen::Index n_units, Eigen::Index n_periods);

struct Violation {
  std::string invariant;
  std::string where;

  friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate_graph(const BipartiteGraph& g);
std::vector<Violation> validate_dataset(const ExperimentDataset& d);

/// Thrown when input files or configs cannot be used. `exit code 1` class.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ilab
