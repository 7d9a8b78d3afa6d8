// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance <path to interference-lab> <presets dir>

#include "ilab/cli.hpp"
#include "ilab/est_cmp.hpp"
#include "ilab/est_network.hpp"
#include "ilab/regress.hpp"
#include "ilab/report.hpp"
#include "ilab/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <unistd.h>

using namespace ilab;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << ": " << what << " [" << detail << "]" << std::endl;
  failures += !ok;
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const bench::MethodSummary& summary(const bench::ScenarioReport& r, Method m) {
  for (const auto& s : r.methods) {
    if (s.method == m) return s;
  }
  throw std::logic_error("method missing from report");
}

// --- criteria 1-4 and 10: the shipped presets -------------------------------

void preset_criteria(const fs::path& presets) {
  std::map<std::string, bench::ScenarioReport> reports;
  double no_interference_seconds = 0.0;
  for (const auto& cfg : load_scenarios(presets / "all.json")) {
    const auto t0 = std::chrono::steady_clock::now();
    reports[cfg.name] = bench::run_scenario(cfg, 1);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.name == "no_interference") no_interference_seconds = secs;
    std::cout << "  ran " << cfg.name << " (" << cfg.replicates << " replicates) in " << num(secs) << " s"
              << std::endl;
  }

  {
    const auto& r = reports.at("no_interference");
    bool ok = no_interference_seconds < 600.0;
    std::string detail = "truth " + num(r.truth_mean) + ", " + num(no_interference_seconds) + " s";
    for (const auto& s : r.methods) {
      const double z = s.bias_se > 0 ? std::abs(s.bias) / s.bias_se : (s.bias == 0 ? 0.0 : INFINITY);
      ok = ok && s.n_ok > 0 && z <= 3.0;
      detail += "; " + to_string(s.method) + " bias " + num(s.bias) + " (" + num(z) + " SE)";
    }
    report(1, ok, "no_interference: every mean estimate within 3 Monte Carlo SEs of truth, under 10 minutes", detail);
  }

  {
    const auto& r = reports.at("upward_bias");
    const auto& b = summary(r, Method::basic);
    const auto& n = summary(r, Method::network_aware);
    const auto& c = summary(r, Method::cmp);
    const bool ok = b.exceeds_truth_rate >= 0.95 && n.mean_abs_bias < 0.5 * b.mean_abs_bias &&
                    c.mean_abs_bias < 0.5 * b.mean_abs_bias;
    report(2, ok, "upward_bias: Basic exceeds truth in >= 95%; Network and CMP |bias| below half of Basic's",
           "exceeds " + num(b.exceeds_truth_rate) + "; mean |bias| basic " + num(b.mean_abs_bias) + ", network " +
               num(n.mean_abs_bias) + ", cmp " + num(c.mean_abs_bias));
  }

  {
    const auto& r = reports.at("sign_reversal");
    const auto& b = summary(r, Method::basic);
    const auto& n = summary(r, Method::network_aware);
    const auto& c = summary(r, Method::cmp);
    const bool ok = bench::sign_of(b.mean) * bench::sign_of(r.truth_mean) == -1 && n.sign_match_truth_rate >= 0.9 &&
                    c.sign_match_truth_rate >= 0.9;
    report(3, ok, "sign_reversal: Basic mean opposes truth; Network and CMP match truth's sign in >= 90%",
           "truth " + num(r.truth_mean) + ", basic mean " + num(b.mean) + "; sign match network " +
               num(n.sign_match_truth_rate) + ", cmp " + num(c.sign_match_truth_rate));
  }

  {
    bool ok = true;
    std::string detail;
    for (const auto& [name, r] : reports) {
      const double a = r.sign_agreement(1, 2);
      ok = ok && a >= 0.9;
      detail += (detail.empty() ? "" : ", ") + name + " " + num(a);
    }
    report(4, ok, "CMP/Network per-replicate sign agreement >= 90% on every preset", detail);
  }

  {
    const auto& r = reports.at("no_interference");
    bool ok = true;
    std::string detail;
    for (const auto& s : r.methods) {
      ok = ok && s.n_ok > 0 && s.coverage_rate >= 0.88;
      detail += (detail.empty() ? "" : ", ") + to_string(s.method) + " " + num(s.coverage_rate);
    }
    report(10, ok, "no_interference: 95% intervals cover truth in >= 88% for every method", detail);
  }
}

// --- criterion 5 ------------------------------------------------------------

BipartiteGraph random_graph(Rng& rng, int max_units, double density) {
  BipartiteGraph g;
  const int n_elig = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_units / 2)));
  const int n_inel = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_units - n_elig) / 2 + 1));
  const int n_conn = 1 + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(max_units - n_elig - n_inel)));
  for (int j = 1; j <= n_elig + n_inel; ++j) g.treatment_units.push_back({j, j <= n_elig});
  for (int c = 1; c <= n_conn; ++c) g.connected_units.push_back(c);
  for (int j = 1; j <= n_elig + n_inel; ++j) {
    for (int c = 1; c <= n_conn; ++c) {
      if (uniform01(rng) < density) g.edges.push_back({j, c, 0.25 + 2 * uniform01(rng)});
    }
  }
  return g;
}

void graph_blindness(const fs::path& presets) {
  auto cfg = load_scenarios(presets / "no_interference.json").front();
  cfg.estimators.bootstrap_replicates = 50;
  const auto ex = bench::simulate_experiment(cfg, bench::replicate_seed(cfg, 0));
  auto absent = ex.data;
  absent.graph.reset();
  auto randomized = ex.data;
  Rng rng(2024);
  BipartiteGraph g;
  for (int j = 1; j <= ex.data.n_units(); ++j) g.treatment_units.push_back({j, true});
  for (int c = 1; c <= 40; ++c) g.connected_units.push_back(c);
  for (int j = 1; j <= ex.data.n_units(); ++j) g.edges.push_back({j, 1 + static_cast<int>(uniform_index(rng, 40)), 1.0});
  randomized.graph = g;

  const BootstrapConfig boot{cfg.estimators.bootstrap_replicates, 99};
  const auto present = to_json(cmp::estimate_tte_cmp(ex.data, cfg.estimators.cmp, boot)).dump();
  const auto none = to_json(cmp::estimate_tte_cmp(absent, cfg.estimators.cmp, boot)).dump();
  const auto other = to_json(cmp::estimate_tte_cmp(randomized, cfg.estimators.cmp, boot)).dump();
  report(5, present == none && present == other, "CMP output identical with graph present, absent or randomized",
         "serialised estimates compared byte for byte, " + std::to_string(present.size()) + " bytes");
}

// --- criterion 6 ------------------------------------------------------------

// Direct: own treatment times the (weighted) edge count. Indirect: for each
// of j's edges in edge-list order, the number of other treated units on the
// same connected unit, times the edge weight.
std::size_t index_of(const BipartiteGraph& g, int id) {
  for (std::size_t k = 0; k < g.treatment_units.size(); ++k) {
    if (g.treatment_units[k].id == id) return k;
  }
  throw std::logic_error("edge names an unknown unit");
}

std::vector<double> brute_direct(const BipartiteGraph& g, const std::vector<int>& w, bool weighted) {
  std::vector<double> size(g.treatment_units.size(), 0.0);
  for (const auto& e : g.edges) size[index_of(g, e.treatment_id)] += weighted ? e.weight : 1.0;
  std::vector<double> out(size.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = w[j] * size[j];
  return out;
}

std::vector<double> brute_indirect(const BipartiteGraph& g, const std::vector<int>& w, bool weighted) {
  std::vector<double> out(g.treatment_units.size(), 0.0);
  for (const auto& e : g.edges) {
    const std::size_t j = index_of(g, e.treatment_id);
    int others = 0;
    for (const auto& f : g.edges) {
      if (f.connected_id == e.connected_id && f.treatment_id != e.treatment_id) others += w[index_of(g, f.treatment_id)];
    }
    out[j] += (weighted ? e.weight : 1.0) * others;
  }
  return out;
}

void exposure_oracle() {
  Rng rng(606);
  int mismatches = 0;
  int graphs = 0;
  for (; graphs < 1000; ++graphs) {
    const auto g = random_graph(rng, 50, 0.05 + 0.3 * uniform01(rng));
    std::vector<int> w(g.treatment_units.size(), 0);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] = g.treatment_units[j].eligible && uniform01(rng) < 0.5;
    for (bool weighted : {false, true}) {
      mismatches += network::direct_exposure(g, w, weighted) != brute_direct(g, w, weighted);
      mismatches += network::indirect_exposure(g, w, weighted) != brute_indirect(g, w, weighted);
    }
  }
  report(6, mismatches == 0, "direct and indirect exposures equal brute-force loops exactly",
         std::to_string(graphs) + " graphs of <= 50 units, weighted and unweighted, " + std::to_string(mismatches) +
             " mismatches");
}

// --- criterion 7 ------------------------------------------------------------

void regression_oracles() {
  double ridge_gap = 0.0;
  double kernel_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Eigen::Index n = 30 + static_cast<Eigen::Index>(seed % 40);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(seed % 6);
    Matrix X(n, d);
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index c = 0; c < d; ++c) X(i, c) = standard_normal(rng);
      y(i) = 2.0 * X(i, 0) + standard_normal(rng);
    }
    const double lambda = seed % 4 == 0 ? 0.0 : std::pow(10.0, static_cast<double>(seed % 7) - 3.0);

    // Augmented normal equations with an unpenalised intercept.
    Matrix Z(n, d + 1);
    Z.col(0).setOnes();
    Z.rightCols(d) = X;
    Matrix P = Matrix::Identity(d + 1, d + 1) * lambda;
    P(0, 0) = 0.0;
    const Vector beta = Eigen::FullPivLU<Matrix>(Z.transpose() * Z + P).solve(Z.transpose() * y);
    const auto m = regress::ridge_fit(X, y, lambda);
    ridge_gap = std::max(ridge_gap, std::abs(m.intercept - beta(0)));
    ridge_gap = std::max(ridge_gap, (m.coefficients - beta.tail(d)).cwiseAbs().maxCoeff());

    const double kl = 0.01 + uniform01(rng);
    for (regress::Kernel k : {regress::Kernel{regress::Kernel::Kind::rbf, 0.5 + uniform01(rng)},
                              regress::Kernel{regress::Kernel::Kind::linear, 1.0}}) {
      Matrix K(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          K(i, j) = k.kind == regress::Kernel::Kind::linear
                        ? X.row(i).dot(X.row(j))
                        : std::exp(-(X.row(i) - X.row(j)).squaredNorm() / (2 * k.bandwidth * k.bandwidth));
        }
      }
      const Vector alpha = Eigen::FullPivLU<Matrix>(K + kl * Matrix::Identity(n, n)).solve(y);
      const auto km = regress::kernel_ridge_fit(X, y, k, kl);
      kernel_gap = std::max(kernel_gap, (regress::predict(km, X) - K * alpha).cwiseAbs().maxCoeff());
    }
  }
  report(7, ridge_gap <= 1e-8 && kernel_gap <= 1e-8, "ridge and kernel ridge match direct linear-algebra oracles",
         "max ridge gap " + num(ridge_gap) + ", max kernel gap " + num(kernel_gap) + " over 200 problems");
}

// --- criterion 8 ------------------------------------------------------------

void recursion_exactness() {
  // y_{t+1} = a y_t + b w_{t+1} for every unit, so TTE = b sum_{s<T} a^s.
  const double a = 0.8;
  const double b = 1.5;
  const int n = 400;
  const int T = 12;
  ExperimentDataset d;
  d.treatments = sim::assign_staggered_rollout(n, T, {{3, 6, 9}, {0.2, 0.45, 0.7}}, 808);
  d.outcomes.outcomes.resize(n, T + 1);
  for (int i = 0; i < n; ++i) {
    d.outcomes.outcomes(i, 0) = 10.0;
    for (int t = 0; t < T; ++t) {
      d.outcomes.outcomes(i, t + 1) = a * d.outcomes.outcomes(i, t) + b * d.treatments.assignments(i, t);
    }
  }
  d.pre_period_end = 2;
  double analytic = 0.0;
  for (int s = 0; s < T; ++s) analytic += b * std::pow(a, s);

  const auto e = cmp::estimate_tte_cmp(d, cmp::CmpConfig{}, {50, 8});
  const double gap = std::abs(e.point - analytic);
  report(8, gap <= 1e-3, "CMP recovers the analytic TTE of a noiseless linear state evolution",
         "estimate " + std::to_string(e.point) + ", analytic " + std::to_string(analytic) + ", gap " + num(gap));
}

// --- criterion 9 ------------------------------------------------------------

bool run(const std::string& cmd) { return std::system(cmd.c_str()) == 0; }

void cli_determinism(const fs::path& cli, const fs::path& presets) {
  const fs::path root = fs::temp_directory_path() / ("ilab_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);

  // A reduced copy of a preset keeps the bench step short.
  auto cfg = read_json_file(presets / "upward_bias.json");
  cfg["replicates"] = 3;
  cfg["estimators"]["bootstrap"]["replicates"] = 30;
  {
    std::ofstream out(root / "scenario.json");
    out << cfg.dump(2);
  }

  const std::string exe = "\"" + cli.string() + "\"";
  const std::string conf = "\"" + (root / "scenario.json").string() + "\"";
  bool ok = true;
  std::vector<std::string> compared;
  auto same = [&](const fs::path& x, const fs::path& y, const std::string& label) {
    const bool eq = fs::exists(x) && fs::exists(y) && slurp(x) == slurp(y);
    ok = ok && eq;
    compared.push_back(label + (eq ? "" : " (differs)"));
  };

  for (int pass : {1, 2}) {
    const fs::path dir = root / ("pass" + std::to_string(pass));
    fs::create_directories(dir);
    const std::string q = "\"" + dir.string();
    ok = ok && run(exe + " simulate --config " + conf + " --out " + q + "/data\"");
    for (const char* m : {"basic", "network", "cmp"}) {
      ok = ok && run(exe + " estimate --data " + q + "/data\" --method " + m + " --config " + conf + " --out " + q +
                     "/" + m + ".json\"");
    }
    ok = ok && run(exe + " bench --config " + conf + " --out " + q + "/bench.json\"");
    ok = ok && run(exe + " report --in " + q + "/bench.json\" --format markdown > " + q + "/report.md\"");
    ok = ok && run(exe + " report --in " + q + "/bench.json\" --format json > " + q + "/report.json\"");
  }
  const fs::path p1 = root / "pass1";
  const fs::path p2 = root / "pass2";
  for (const char* f : {"units.csv", "treatments.csv", "outcomes.csv", "graph.csv", "meta.json", "truth.json"}) {
    same(p1 / "data" / f, p2 / "data" / f, std::string("simulate:") + f);
  }
  for (const char* f : {"basic.json", "network.json", "cmp.json"}) same(p1 / f, p2 / f, std::string("estimate:") + f);
  same(p1 / "bench.json", p2 / "bench.json", "bench");
  same(p1 / "report.md", p2 / "report.md", "report:markdown");
  same(p1 / "report.json", p2 / "report.json", "report:json");
  fs::remove_all(root);

  std::string detail;
  for (const auto& c : compared) detail += (detail.empty() ? "" : ", ") + c;
  report(9, ok, "every CLI command gives byte-identical output on a second run", detail);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: acceptance <interference-lab binary> <presets dir>\n";
    return 2;
  }
  const fs::path cli = argv[1];
  const fs::path presets = argv[2];
  try {
    exposure_oracle();
    regression_oracles();
    recursion_exactness();
    graph_blindness(presets);
    cli_determinism(cli, presets);
    preset_criteria(presets);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance run aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
