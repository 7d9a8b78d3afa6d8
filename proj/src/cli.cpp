#include "ilab/cli.hpp"

#include "ilab/bench.hpp"
#include "ilab/dataset_io.hpp"
#include "ilab/report.hpp"
#include "ilab/rng.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

namespace ilab {

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

ScenarioConfig single_scenario(const std::filesystem::path& p) {
  auto list = load_scenarios(p);
  if (list.size() != 1) throw ValidationError(p.string() + ": expected one scenario, found " + std::to_string(list.size()));
  if (auto s = seed_override_from_env()) list[0].seed = *s;
  return list[0];
}

// An estimate config is a scenario config or {"estimators": {...}, "seed": n}.
std::pair<EstimatorConfig, std::uint64_t> estimate_config(const std::string& path) {
  std::pair<EstimatorConfig, std::uint64_t> out{EstimatorConfig{}, 1};
  if (!path.empty()) {
    const Json j = read_json_file(path);
    const bool scenario_like = j.is_object() && (j.contains("graph") || j.contains("dgp") || j.contains("rollout") ||
                                                 j.contains("T") || j.contains("name"));
    if (scenario_like) {
      const auto s = scenario_from_json(j);
      out = {s.estimators, s.seed};
    } else {
      if (!j.is_object()) throw ValidationError(path + ": estimate config must be an object");
      for (const auto& [k, v] : j.items()) {
        if (k != "estimators" && k != "seed") throw ValidationError(path + ": unknown key " + k);
      }
      if (j.contains("estimators")) out.first = estimators_from_json(j.at("estimators"));
      if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ValidationError(path + ": seed must be an unsigned integer");
        out.second = j.at("seed").get<std::uint64_t>();
      }
    }
  }
  if (auto s = seed_override_from_env()) out.second = *s;
  return out;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Estimate treatment effects under network interference and benchmark the estimators.",
               "interference-lab"};
  app.require_subcommand(1);

  std::string config, out_path, data_dir, method, in_path, format = "markdown";
  int jobs = 1;

  auto* simulate = app.add_subcommand("simulate", "Simulate one experiment and write a dataset directory");
  simulate->add_option("--config", config, "Scenario JSON")->required();
  simulate->add_option("--out", out_path, "Output directory")->required();

  auto* estimate = app.add_subcommand("estimate", "Run one estimator on a dataset directory");
  estimate->add_option("--data", data_dir, "Dataset directory")->required();
  estimate->add_option("--method", method, "basic, network or cmp")
      ->required()
      ->check(CLI::IsMember({"basic", "network", "network_aware", "cmp"}));
  estimate->add_option("--config", config, "Estimator or scenario JSON");
  estimate->add_option("--out", out_path, "Output JSON file")->required();

  auto* bench_cmd = app.add_subcommand("bench", "Run the Monte Carlo comparison");
  bench_cmd->add_option("--config", config, "Scenario JSON or scenario list")->required();
  bench_cmd->add_option("--out", out_path, "Report JSON file")->required();
  bench_cmd->add_option("--jobs", jobs, "Concurrent replicates")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Render a bench report");
  report->add_option("--in", in_path, "Report JSON file")->required();
  report->add_option("--format", format, "json or markdown")->check(CLI::IsMember({"json", "markdown"}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kInvalid;
  }

  try {
    if (simulate->parsed()) {
      const auto cfg = single_scenario(config);
      const auto seed = bench::replicate_seed(cfg, 0);
      const auto ex = bench::simulate_experiment(cfg, seed);
      save_dataset(ex.data, out_path);
      const Json truth{{"scenario", cfg.name}, {"seed", seed}, {"ground_truth_tte", ex.truth}};
      write_text(std::filesystem::path(out_path) / "truth.json", truth.dump(2) + "\n");
    } else if (estimate->parsed()) {
      const auto [est_cfg, seed] = estimate_config(config);
      const auto d = load_dataset(data_dir);
      const auto m = method_from_string(method);
      // Same seed path as replicate 0 of a bench run with this seed.
      const auto rep_seed = derive_seed(seed, "replicate", 0);
      const auto e = bench::run_method(m, d, est_cfg, rep_seed);
      write_text(out_path, to_json(e).dump(2) + "\n");
    } else if (bench_cmd->parsed()) {
      auto scenarios = load_scenarios(config);
      if (auto s = seed_override_from_env()) {
        for (auto& sc : scenarios) sc.seed = *s;
      }
      const auto r = bench::run_bench(scenarios, jobs);
      write_text(out_path, bench::render_report(r, bench::ReportFormat::json));
    } else if (report->parsed()) {
      const auto r = bench::report_from_json(read_json_file(in_path));
      out << bench::render_report(r, bench::format_from_string(format));
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}

}  // namespace ilab
