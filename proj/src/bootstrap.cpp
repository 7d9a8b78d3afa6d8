#include "ilab/bootstrap.hpp"

#include "ilab/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ilab {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<double> bootstrap_distribution(
    std::size_t n, const BootstrapConfig& cfg, std::string_view stream,
    const std::function<double(const std::vector<std::size_t>&, std::uint64_t)>& statistic) {
  constexpr int kMaxAttempts = 20;
  if (cfg.replicates < 1) throw std::invalid_argument("bootstrap needs at least one replicate");
  if (n == 0) throw std::invalid_argument("bootstrap of an empty sample");

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(cfg.replicates));
  std::vector<std::size_t> idx(n);
  for (int b = 0; b < cfg.replicates; ++b) {
    for (int attempt = 0;; ++attempt) {
      const std::uint64_t s = derive_seed(cfg.seed, stream, static_cast<std::uint64_t>(b) * kMaxAttempts + attempt);
      Rng rng(s);
      for (auto& i : idx) i = uniform_index(rng, n);
      try {
        out.push_back(statistic(idx, s));
        break;
      } catch (const std::exception&) {
        if (attempt + 1 >= kMaxAttempts) throw;
      }
    }
  }
  return out;
}

}  // namespace ilab
