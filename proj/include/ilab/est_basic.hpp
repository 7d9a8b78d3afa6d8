#pragma once

// Basic method: collapse each unit's series to a post-minus-pre difference
// and run an ML-adjusted difference in differences that ignores
// interference.

#include "ilab/bootstrap.hpp"
#include "ilab/core.hpp"
#include "ilab/regress.hpp"

namespace ilab::basic {

struct PrePostRecord {
  double delta = 0.0;
  bool treated = false;
  Vector covariates;
};

/// delta_i = mean(Y_t, t > pre_period_end) - mean(Y_t, t <= pre_period_end);
/// treated = final-period assignment.
std::vector<PrePostRecord> aggregate_pre_post(const ExperimentDataset& d);

/// Deltas as a vector, panel order.
Vector deltas(const std::vector<PrePostRecord>& records);

struct BasicConfig {
  regress::LearnerConfig learner;
};

/// Point estimate on a record set: mean over units of
/// prediction(treated=1, X_j) - prediction(treated=0, X_j).
double basic_point(const std::vector<PrePostRecord>& records, const regress::LearnerConfig& learner,
                   std::uint64_t seed);

EffectEstimate estimate_basic(const ExperimentDataset& d, const BasicConfig& cfg, const BootstrapConfig& boot);

}  // namespace ilab::basic
