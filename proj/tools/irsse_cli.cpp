// Command-line driver: single trials, parameter sweeps and convergence traces.
//
//   irsse_cli run-single  --config F [--method M] [--trial I]
//   irsse_cli run-sweep   --config F --sweep VAR=v1,v2,... --trials T [--baselines LIST] --out DIR
//   irsse_cli convergence --config F --trials T --out DIR
//
// Shared flags: --seed, --jobs, --json-traces, --max-failures.
// Exit codes: 0 success, 2 bad arguments or config, 3 too many failed trials.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "irsse/config_file.hpp"
#include "irsse/experiments.hpp"

namespace fs = std::filesystem;
using namespace irsse;

namespace {

constexpr int kConfigError = 2;
constexpr int kTooManyFailures = 3;

struct Shared {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool json_traces = false;
  int max_failures = -1;
};

ScenarioConfig load(const Shared& s) {
  ScenarioConfig cfg = load_config(s.config_path);
  if (s.seed) cfg.seed = *s.seed;
  return cfg;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double to_number(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ConfigError("not a number: '" + text + "'");
  return v;
}

// "VAR=v1,v2,..."
void parse_sweep(const std::string& text, SweepSpec& spec) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("--sweep expects VAR=v1,v2,...");
  spec.variable = parse_sweep_var(text.substr(0, eq));
  for (const auto& item : split(text.substr(eq + 1), ','))
    if (!item.empty()) spec.values.push_back(to_number(item));
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  return out;
}

int failure_exit(const Shared& s, int failures) {
  if (failures > 0) std::cerr << failures << " trial(s) failed\n";
  if (s.max_failures >= 0 && failures > s.max_failures) return kTooManyFailures;
  return 0;
}

void print_table(const SweepSpec& spec, const std::vector<AggregateRow>& table) {
  std::printf("%-18s %12s %8s %6s %12s %12s %12s\n", "method", to_string(spec.variable).c_str(),
              "ok", "failed", "mean_mse_fc", "stderr", "mean_mse_ed");
  for (const auto& row : table)
    std::printf("%-18s %12g %8d %6d %12.6g %12.3g %12.6g\n", to_string(row.method).c_str(),
                row.swept_value, row.successes, row.failures, row.mean_mse_fc,
                row.stderr_mse_fc(), row.mean_mse_ed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS-aided secure estimation simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  Shared shared;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Override the config seed");
  app.add_option("--jobs", shared.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--json-traces", shared.json_traces, "Emit per-trial JSON traces");
  app.add_option("--max-failures", shared.max_failures,
                 "Exit with status 3 when more trials fail (negative: no limit)");

  auto* single = app.add_subcommand("run-single", "Run one trial and print its record");
  single->add_option("--config", shared.config_path, "Config file")->required();
  std::string method_name = "jtrb";
  std::uint64_t trial = 0;
  single->add_option("--method", method_name, "jtrb, no_irs, random_phase or brute_force_tiny");
  single->add_option("--trial", trial, "Trial index");

  auto* sweep = app.add_subcommand("run-sweep", "Monte Carlo sweep over N, P_T_dBm or eta");
  sweep->add_option("--config", shared.config_path, "Config file")->required();
  std::string sweep_text;
  std::string baselines_text;
  std::string out_dir;
  int trials = 1;
  sweep->add_option("--sweep", sweep_text, "VAR=v1,v2,...")->required();
  sweep->add_option("--trials", trials, "Trials per value")->required();
  sweep->add_option("--baselines", baselines_text, "Comma-separated baseline methods");
  sweep->add_option("--out", out_dir, "Output directory")->required();

  auto* conv = app.add_subcommand("convergence", "Per-iteration gamma traces of jtrb runs");
  conv->add_option("--config", shared.config_path, "Config file")->required();
  conv->add_option("--trials", trials, "Number of runs")->required();
  conv->add_option("--out", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  if (seed_opt->count() > 0) shared.seed = seed_value;

  try {
    if (*single) {
      const ScenarioConfig cfg = load(shared);
      const Method method = parse_method(method_name);
      if (method == Method::brute_force_tiny && cfg.N > 3)
        throw ConfigError("brute_force_tiny needs N <= 3");
      const TrialRecord rec = run_trial(cfg, trial, method);
      if (shared.json_traces) {
        std::cout << trace_json(rec) << '\n';
      } else {
        write_csv(std::cout, {rec});
      }
      return failure_exit(shared, rec.failed ? 1 : 0);
    }

    if (*sweep) {
      SweepSpec spec;
      spec.base = load(shared);
      spec.trials = trials;
      parse_sweep(sweep_text, spec);
      for (const auto& name : split(baselines_text, ','))
        if (!name.empty()) spec.baselines.push_back(parse_method(name));
      spec.validate();
      const SweepResult res = run_sweep(spec, shared.jobs);
      fs::create_directories(out_dir);
      {
        auto out = open_out(fs::path(out_dir) / "trials.csv");
        write_csv(out, res.records);
      }
      {
        auto out = open_out(fs::path(out_dir) / "summary.csv");
        write_summary_csv(out, spec, res.table);
      }
      if (shared.json_traces) {
        auto out = open_out(fs::path(out_dir) / "traces.jsonl");
        write_json_traces(out, res.records);
      }
      print_table(spec, res.table);
      return failure_exit(shared, res.failures());
    }

    if (*conv) {
      const ScenarioConfig cfg = load(shared);
      if (trials < 1) throw ConfigError("--trials must be at least 1");
      const auto records = run_trials(cfg, trials, Method::jtrb, shared.jobs);
      fs::create_directories(out_dir);
      {
        auto out = open_out(fs::path(out_dir) / "convergence.csv");
        write_convergence_csv(out, records);
      }
      {
        auto out = open_out(fs::path(out_dir) / "trials.csv");
        write_csv(out, records);
      }
      if (shared.json_traces) {
        auto out = open_out(fs::path(out_dir) / "traces.jsonl");
        write_json_traces(out, records);
      }
      int failures = 0;
      for (const auto& r : records) failures += r.failed ? 1 : 0;
      std::printf("%d runs, %d failed; traces in %s\n", trials, failures,
                  (fs::path(out_dir) / "convergence.csv").string().c_str());
      return failure_exit(shared, failures);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
