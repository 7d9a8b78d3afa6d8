#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace ilab {

struct BootstrapConfig {
  int replicates = 500;
  std::uint64_t seed = 0;
};

/// Type-7 (linear interpolation) sample quantile, q in [0,1].
double quantile(std::vector<double> values, double q);

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double stddev(std::span<const double> v);

/// Unit-level nonparametric bootstrap. For each replicate, draws n indices
/// with replacement and evaluates `statistic(indices, replicate_seed)`.
/// A replicate whose statistic throws is redrawn (bounded retries), so
/// resamples that land in a degenerate design do not abort the interval.
std::vector<double> bootstrap_distribution(
    std::size_t n, const BootstrapConfig& cfg, std::string_view stream,
    const std::function<double(const std::vector<std::size_t>&, std::uint64_t)>& statistic);

}  // namespace ilab
