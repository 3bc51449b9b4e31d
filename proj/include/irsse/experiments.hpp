#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "irsse/model.hpp"
#include "irsse/optimizer.hpp"
#include "irsse/scenario.hpp"

namespace irsse {

/// jtrb: alternating joint design. no_irs: weight step alone with the
/// reflected path removed. random_phase: uniform random phases, then the
/// weight step. brute_force_tiny: best weight step over a quantized phase grid.
enum class Method { jtrb, no_irs, random_phase, brute_force_tiny };

std::string to_string(Method m);
/// Throws ConfigError for an unknown name.
Method parse_method(std::string_view name);

enum class SweepVar { N, P_T_dBm, eta };

std::string to_string(SweepVar v);
SweepVar parse_sweep_var(std::string_view name);

/// Copy of cfg with the swept variable set. N must be a non-negative integer.
ScenarioConfig apply_sweep_value(const ScenarioConfig& cfg, SweepVar var, double value);

struct TrialRecord {
  Method method = Method::jtrb;
  std::string swept_var;  // empty outside a sweep
  double swept_value = 0.0;
  std::uint64_t trial = 0;
  int K = 0;
  int N = 0;
  double p_t_dbm = 0.0;
  double eta = 0.0;
  LinkQuality quality;
  double gamma_final = 0.0;
  int iterations = 0;
  std::string status;
  double wall_ms = 0.0;

  bool failed = false;
  /// Initial gamma, then (phase, weight) per outer iteration. jtrb only.
  std::vector<double> gamma_trace;
  int sdp_solves = 0;
  int inconclusive = 0;
};

/// Everything in a record except the wall time.
bool same_outcome(const TrialRecord& a, const TrialRecord& b);

/// Phase profile with i.i.d. uniform angles.
CVector random_phase_profile(int n, RandomStream& rng);

struct BruteForceResult {
  BeamformerPair best;
  double snr_fc = 0.0;
  double gamma = 0.0;  // relaxed weight-step value at the best grid point
  int grid_points = 0;
  int feasible = 0;
};

/// Exhaustive search over phi_i in {exp(j 2 pi l / levels)}: each grid point
/// gets an exact weight step. Throws std::invalid_argument when N > 3,
/// levels > 16 or levels < 1.
BruteForceResult brute_force_tiny(const ChannelSet& ch, const ScenarioConfig& cfg,
                                  int phase_levels);

/// Draws the layout and channels from (cfg.seed, trial) and runs one method.
/// Failures are reported in the record, never thrown.
TrialRecord run_trial(const ScenarioConfig& cfg, std::uint64_t trial, Method method,
                      int phase_levels = 16);

struct SweepSpec {
  SweepVar variable = SweepVar::N;
  std::vector<double> values;
  int trials = 1;
  ScenarioConfig base;
  /// Methods run next to jtrb.
  std::vector<Method> baselines;
  int phase_levels = 16;

  /// Throws ConfigError.
  void validate() const;
};

struct AggregateRow {
  Method method = Method::jtrb;
  double swept_value = 0.0;
  int successes = 0;
  int failures = 0;
  double mean_mse_fc = 0.0;
  double std_mse_fc = 0.0;
  double mean_mse_ed = 0.0;
  double std_mse_ed = 0.0;
  double mean_snr_fc = 0.0;

  double stderr_mse_fc() const;
};

struct SweepResult {
  std::vector<TrialRecord> records;  // value-major, then method, then trial
  std::vector<AggregateRow> table;   // value-major, then method
  int failures() const;
};

/// Means and sample standard deviations over the non-failed records.
AggregateRow aggregate(const std::vector<TrialRecord>& records, Method method, double value);

/// Runs every (value, method, trial) on `jobs` worker threads. The result
/// does not depend on jobs.
SweepResult run_sweep(const SweepSpec& spec, int jobs = 1);

/// Runs `trials` jtrb trials of cfg on `jobs` workers.
std::vector<TrialRecord> run_trials(const ScenarioConfig& cfg, int trials, Method method,
                                    int jobs = 1);

inline constexpr std::string_view kCsvHeader =
    "method,swept_var,swept_value,trial,K,N,p_t_dbm,eta,mse_fc,mse_ed,snr_fc,snr_ed,gamma_final,"
    "iterations,status,wall_ms";

void write_csv(std::ostream& os, const std::vector<TrialRecord>& records);
void write_csv_row(std::ostream& os, const TrialRecord& r);
void write_summary_csv(std::ostream& os, const SweepSpec& spec,
                       const std::vector<AggregateRow>& table);
/// One row per gamma value: trial,index,iteration,step,gamma,gap_to_final.
void write_convergence_csv(std::ostream& os, const std::vector<TrialRecord>& records);
/// One JSON object per line.
void write_json_traces(std::ostream& os, const std::vector<TrialRecord>& records);
std::string trace_json(const TrialRecord& r);

}  // namespace irsse
