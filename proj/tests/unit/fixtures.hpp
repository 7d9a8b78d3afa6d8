#pragma once

#include "ilab/core.hpp"
#include "ilab/rng.hpp"
#include "ilab/sim.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

namespace fixtures {

using namespace ilab;

// Small valid dataset: 4 units, T = 3, units 1 and 2 treated from t = 2.
inline ExperimentDataset tiny_dataset() {
  ExperimentDataset d;
  d.treatments.design = DesignTag::staggered;
  d.treatments.assignments.resize(4, 3);
  d.treatments.assignments << 0, 1, 1,
                              0, 1, 1,
                              0, 0, 0,
                              0, 0, 0;
  d.outcomes.outcomes.resize(4, 4);
  d.outcomes.outcomes << 1, 1, 3, 3,
                         2, 2, 4, 4,
                         1, 1, 1, 1,
                         2, 2, 2, 2;
  d.pre_period_end = 1;
  BipartiteGraph g;
  g.treatment_units = {{1, true}, {2, true}, {3, true}, {4, true}, {5, false}};
  g.connected_units = {1, 2};
  g.edges = {{1, 1, 1.0}, {2, 1, 1.0}, {3, 2, 1.0}, {4, 2, 1.0}, {5, 2, 0.5}};
  d.graph = g;
  return d;
}

struct SimSetup {
  sim::GraphParams graph;
  sim::DgpParams dgp;
  sim::RolloutParams rollout;
  int T = 10;
  int pre = 4;
};

inline ExperimentDataset simulate(const SimSetup& s, std::uint64_t seed) {
  ExperimentDataset d;
  BipartiteGraph g = sim::generate_graph(s.graph, derive_seed(seed, "graph"));
  d.treatments = sim::assign_staggered_rollout(s.graph.n_eligible, s.T, s.rollout, derive_seed(seed, "rollout"));
  d.outcomes = sim::simulate_outcomes(g, sim::expand_to_all_units(g, d.treatments), s.dgp, derive_seed(seed, "y"));
  d.graph = std::move(g);
  d.pre_period_end = s.pre;
  return d;
}

inline BipartiteGraph random_graph(Rng& rng, int max_units) {
  BipartiteGraph g;
  const int n_elig = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_units / 2)));
  const int n_inel = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_units - n_elig) / 2 + 1));
  const int n_conn = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_units - n_elig - n_inel)));
  for (int j = 1; j <= n_elig + n_inel; ++j) g.treatment_units.push_back({j, j <= n_elig});
  for (int c = 1; c <= n_conn; ++c) g.connected_units.push_back(c);
  for (int j = 1; j <= n_elig + n_inel; ++j) {
    for (int c = 1; c <= n_conn; ++c) {
      if (uniform01(rng) < 0.3) g.edges.push_back({j, c, 0.25 + uniform01(rng)});
    }
  }
  return g;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ilab_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace fixtures
