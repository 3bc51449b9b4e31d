#include "irsse/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace irsse {

std::string to_string(Method m) {
  switch (m) {
    case Method::jtrb: return "jtrb";
    case Method::no_irs: return "no_irs";
    case Method::random_phase: return "random_phase";
    case Method::brute_force_tiny: return "brute_force_tiny";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::jtrb, Method::no_irs, Method::random_phase, Method::brute_force_tiny})
    if (name == to_string(m)) return m;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string to_string(SweepVar v) {
  switch (v) {
    case SweepVar::N: return "N";
    case SweepVar::P_T_dBm: return "P_T_dBm";
    case SweepVar::eta: return "eta";
  }
  return "unknown";
}

SweepVar parse_sweep_var(std::string_view name) {
  for (SweepVar v : {SweepVar::N, SweepVar::P_T_dBm, SweepVar::eta})
    if (name == to_string(v)) return v;
  throw ConfigError("unknown sweep variable '" + std::string(name) + "' (N, P_T_dBm, eta)");
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& cfg, SweepVar var, double value) {
  ScenarioConfig out = cfg;
  switch (var) {
    case SweepVar::N:
      if (!(value >= 0.0) || value != std::floor(value) || value > 1e6)
        throw ConfigError("sweep value for N must be a non-negative integer");
      out.N = static_cast<int>(value);
      break;
    case SweepVar::P_T_dBm: out.p_t = dbm_to_watts(value); break;
    case SweepVar::eta: out.eta = value; break;
  }
  validate(out);
  return out;
}

bool same_outcome(const TrialRecord& a, const TrialRecord& b) {
  return a.method == b.method && a.swept_var == b.swept_var && a.swept_value == b.swept_value &&
         a.trial == b.trial && a.K == b.K && a.N == b.N && a.p_t_dbm == b.p_t_dbm &&
         a.eta == b.eta && a.quality.snr_fc == b.quality.snr_fc &&
         a.quality.snr_ed == b.quality.snr_ed && a.quality.mse_fc == b.quality.mse_fc &&
         a.quality.mse_ed == b.quality.mse_ed && a.quality.power == b.quality.power &&
         a.gamma_final == b.gamma_final && a.iterations == b.iterations &&
         a.status == b.status && a.failed == b.failed && a.gamma_trace == b.gamma_trace &&
         a.sdp_solves == b.sdp_solves && a.inconclusive == b.inconclusive;
}

CVector random_phase_profile(int n, RandomStream& rng) {
  CVector phi(n);
  for (int i = 0; i < n; ++i) phi(i) = std::polar(1.0, rng.uniform(0.0, 2.0 * kPi));
  return phi;
}

BruteForceResult brute_force_tiny(const ChannelSet& ch, const ScenarioConfig& cfg,
                                  int phase_levels) {
  const int n = ch.elements();
  if (n > 3) throw std::invalid_argument("brute_force_tiny: N must be at most 3");
  if (phase_levels < 1 || phase_levels > 16)
    throw std::invalid_argument("brute_force_tiny: phase levels must be in [1, 16]");
  ch.check();

  BruteForceResult res;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= phase_levels;
  RandomStream rng = RandomStream::derive(cfg.seed, 0, StreamTag::baseline);
  std::vector<int> digits(static_cast<std::size_t>(n), 0);
  for (int index = 0; index < total; ++index) {
    int rest = index;
    CVector phi(n);
    for (int i = 0; i < n; ++i) {
      phi(i) = std::polar(1.0, 2.0 * kPi * (rest % phase_levels) / phase_levels);
      rest /= phase_levels;
    }
    ++res.grid_points;
    const WeightSolve ws = solve_weights(ch, cfg, phi, rng);
    if (ws.status != StepStatus::ok || !ws.extracted) continue;
    ++res.feasible;
    const double snr = link_quality(ch, {ws.beta, phi}, cfg).snr_fc;
    if (res.feasible == 1 || snr > res.snr_fc) {
      res.snr_fc = snr;
      res.gamma = ws.gamma;
      res.best = {ws.beta, phi};
    }
  }
  return res;
}

namespace {

void fill_from_weights(TrialRecord& rec, const ChannelSet& ch, const ScenarioConfig& cfg,
                       const CVector& phi, const WeightSolve& ws) {
  rec.gamma_final = ws.gamma;
  rec.sdp_solves = ws.probes;
  rec.inconclusive = ws.inconclusive;
  if (ws.status != StepStatus::ok) {
    rec.failed = true;
    rec.status = to_string(ws.status);
    return;
  }
  if (!ws.extracted) {
    rec.failed = true;
    rec.status = "extraction_failed";
    return;
  }
  rec.status = "ok";
  rec.quality = link_quality(ch, {ws.beta, phi}, cfg);
}

}  // namespace

TrialRecord run_trial(const ScenarioConfig& cfg, std::uint64_t trial, Method method,
                      int phase_levels) {
  validate(cfg);
  const auto start = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.method = method;
  rec.trial = trial;
  rec.K = cfg.K;
  rec.N = cfg.N;
  rec.p_t_dbm = watts_to_dbm(cfg.p_t);
  rec.eta = cfg.eta;

  const ChannelSet ch = draw_trial_channels(cfg, trial);
  RandomStream draws = RandomStream::derive(cfg.seed, trial, StreamTag::randomization);
  switch (method) {
    case Method::jtrb: {
      const OptimizationTrace tr = alternate(ch, cfg, draws);
      rec.gamma_final = tr.gamma_final;
      rec.iterations = static_cast<int>(tr.iterations.size());
      rec.status = to_string(tr.termination);
      rec.failed = tr.failed();
      rec.gamma_trace = tr.gamma_sequence();
      rec.sdp_solves = tr.sdp_solves;
      rec.inconclusive = tr.inconclusive;
      if (!rec.failed) rec.quality = tr.quality;
      break;
    }
    case Method::no_irs: {
      const ChannelSet direct = ch.without_irs();
      const CVector none(0);
      fill_from_weights(rec, direct, cfg, none, solve_weights(direct, cfg, none, draws));
      break;
    }
    case Method::random_phase: {
      RandomStream phases = RandomStream::derive(cfg.seed, trial, StreamTag::baseline);
      const CVector phi = random_phase_profile(ch.elements(), phases);
      fill_from_weights(rec, ch, cfg, phi, solve_weights(ch, cfg, phi, draws));
      break;
    }
    case Method::brute_force_tiny: {
      const BruteForceResult bf = brute_force_tiny(ch, cfg, phase_levels);
      rec.gamma_final = bf.gamma;
      rec.sdp_solves = 0;
      if (bf.feasible == 0) {
        rec.failed = true;
        rec.status = "infeasible_at_floor";
      } else {
        rec.status = "ok";
        rec.quality = link_quality(ch, bf.best, cfg);
      }
      break;
    }
  }
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (trials < 1) throw ConfigError("sweep needs at least one trial");
  for (double v : values) {
    const ScenarioConfig cfg = apply_sweep_value(base, variable, v);
    for (Method m : baselines) {
      if (m == Method::jtrb) throw ConfigError("jtrb always runs; it is not a baseline");
      if (m == Method::brute_force_tiny && cfg.N > 3)
        throw ConfigError("brute_force_tiny needs N <= 3");
    }
  }
  if (phase_levels < 1 || phase_levels > 16) throw ConfigError("phase levels must be in [1, 16]");
}

double AggregateRow::stderr_mse_fc() const {
  return successes > 0 ? std_mse_fc / std::sqrt(static_cast<double>(successes)) : 0.0;
}

int SweepResult::failures() const {
  int n = 0;
  for (const auto& r : records) n += r.failed ? 1 : 0;
  return n;
}

AggregateRow aggregate(const std::vector<TrialRecord>& records, Method method, double value) {
  AggregateRow row;
  row.method = method;
  row.swept_value = value;
  double sf = 0.0, sf2 = 0.0, se = 0.0, se2 = 0.0, snr = 0.0;
  for (const auto& r : records) {
    if (r.method != method || r.swept_value != value) continue;
    if (r.failed) {
      ++row.failures;
      continue;
    }
    ++row.successes;
    sf += r.quality.mse_fc;
    se += r.quality.mse_ed;
    snr += r.quality.snr_fc;
  }
  if (row.successes == 0) return row;
  const double n = row.successes;
  row.mean_mse_fc = sf / n;
  row.mean_mse_ed = se / n;
  row.mean_snr_fc = snr / n;
  for (const auto& r : records) {
    if (r.method != method || r.swept_value != value || r.failed) continue;
    sf2 += std::pow(r.quality.mse_fc - row.mean_mse_fc, 2);
    se2 += std::pow(r.quality.mse_ed - row.mean_mse_ed, 2);
  }
  if (row.successes > 1) {
    row.std_mse_fc = std::sqrt(sf2 / (n - 1.0));
    row.std_mse_ed = std::sqrt(se2 / (n - 1.0));
  }
  return row;
}

namespace {

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec, int jobs) {
  spec.validate();
  std::vector<Method> methods{Method::jtrb};
  for (Method m : spec.baselines)
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) methods.push_back(m);

  struct Task {
    ScenarioConfig cfg;
    Method method;
    double value;
    std::uint64_t trial;
  };
  std::vector<Task> tasks;
  for (double v : spec.values) {
    const ScenarioConfig cfg = apply_sweep_value(spec.base, spec.variable, v);
    for (Method m : methods)
      for (int t = 0; t < spec.trials; ++t) tasks.push_back({cfg, m, v, static_cast<std::uint64_t>(t)});
  }

  SweepResult result;
  result.records.resize(tasks.size());
  const std::string var = to_string(spec.variable);
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    TrialRecord rec = run_trial(task.cfg, task.trial, task.method, spec.phase_levels);
    rec.swept_var = var;
    rec.swept_value = task.value;
    result.records[i] = std::move(rec);
  });
  for (double v : spec.values)
    for (Method m : methods) result.table.push_back(aggregate(result.records, m, v));
  return result;
}

std::vector<TrialRecord> run_trials(const ScenarioConfig& cfg, int trials, Method method,
                                    int jobs) {
  validate(cfg);
  std::vector<TrialRecord> out(static_cast<std::size_t>(std::max(trials, 0)));
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    out[i] = run_trial(cfg, static_cast<std::uint64_t>(i), method);
  });
  return out;
}

void write_csv_row(std::ostream& os, const TrialRecord& r) {
  const auto old = os.precision(17);
  os << to_string(r.method) << ',' << r.swept_var << ',' << r.swept_value << ',' << r.trial << ','
     << r.K << ',' << r.N << ',' << r.p_t_dbm << ',' << r.eta << ',' << r.quality.mse_fc << ','
     << r.quality.mse_ed << ',' << r.quality.snr_fc << ',' << r.quality.snr_ed << ','
     << r.gamma_final << ',' << r.iterations << ',' << r.status << ',';
  os.precision(6);
  os << r.wall_ms << '\n';
  os.precision(old);
}

void write_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) write_csv_row(os, r);
}

void write_summary_csv(std::ostream& os, const SweepSpec& spec,
                       const std::vector<AggregateRow>& table) {
  const auto old = os.precision(10);
  os << "method,swept_var,swept_value,successes,failures,mean_mse_fc,std_mse_fc,stderr_mse_fc,"
        "mean_mse_ed,std_mse_ed,mean_snr_fc\n";
  for (const auto& row : table)
    os << to_string(row.method) << ',' << to_string(spec.variable) << ',' << row.swept_value << ','
       << row.successes << ',' << row.failures << ',' << row.mean_mse_fc << ',' << row.std_mse_fc
       << ',' << row.stderr_mse_fc() << ',' << row.mean_mse_ed << ',' << row.std_mse_ed << ','
       << row.mean_snr_fc << '\n';
  os.precision(old);
}

void write_convergence_csv(std::ostream& os, const std::vector<TrialRecord>& records) {
  const auto old = os.precision(17);
  os << "trial,index,iteration,step,gamma,gap_to_final\n";
  for (const auto& r : records) {
    if (r.gamma_trace.empty()) continue;
    const double last = r.gamma_trace.back();
    for (std::size_t i = 0; i < r.gamma_trace.size(); ++i) {
      const std::size_t iteration = (i + 1) / 2;
      const char* step = i == 0 ? "initial" : (i % 2 == 1 ? "phase" : "weight");
      const double gap = last > 0.0 ? (last - r.gamma_trace[i]) / last : 0.0;
      os << r.trial << ',' << i << ',' << iteration << ',' << step << ',' << r.gamma_trace[i] << ','
         << gap << '\n';
    }
  }
  os.precision(old);
}

std::string trace_json(const TrialRecord& r) {
  nlohmann::json j;
  j["method"] = to_string(r.method);
  j["trial"] = r.trial;
  if (!r.swept_var.empty()) {
    j["swept_var"] = r.swept_var;
    j["swept_value"] = r.swept_value;
  }
  j["K"] = r.K;
  j["N"] = r.N;
  j["p_t_dbm"] = r.p_t_dbm;
  j["eta"] = r.eta;
  j["status"] = r.status;
  j["failed"] = r.failed;
  j["iterations"] = r.iterations;
  j["gamma_final"] = r.gamma_final;
  j["gamma_trace"] = r.gamma_trace;
  j["snr_fc"] = r.quality.snr_fc;
  j["snr_ed"] = r.quality.snr_ed;
  j["mse_fc"] = r.quality.mse_fc;
  j["mse_ed"] = r.quality.mse_ed;
  j["power"] = r.quality.power;
  j["sdp_solves"] = r.sdp_solves;
  j["inconclusive"] = r.inconclusive;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

void write_json_traces(std::ostream& os, const std::vector<TrialRecord>& records) {
  for (const auto& r : records) os << trace_json(r) << '\n';
}

}  // namespace irsse
