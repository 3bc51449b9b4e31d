#include "irsse/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irsse {

namespace {

// Margin weight of the rows other than the SNR target. Keeping it small makes
// a feasible probe return a point that pushes the FC SNR as far as the other
// constraints allow.
constexpr double kSideRowWeight = 0.01;

}  // namespace

double gamma_upper_bound(const ChannelSet& ch, const ScenarioConfig& cfg) {
  double cascade = 0.0;
  if (ch.H_I.size() > 0) {
    Eigen::JacobiSVD<CMatrix> svd(ch.H_I);
    cascade = ch.h_IF.norm() * svd.singularValues()(0);
  }
  const double gain = cascade + ch.h_f.norm();
  double alpha_factor = 0.0;
  for (Eigen::Index k = 0; k < ch.alpha.size(); ++k) {
    const double a2 = std::norm(ch.alpha(k));
    alpha_factor = std::max(alpha_factor, a2 / (a2 + cfg.sigma2_o));
  }
  return gain * gain * cfg.p_t * alpha_factor / cfg.sigma2_f;
}

SdpFeasibilityProblem phase_problem(const PhaseStepForms& f, const ScenarioConfig& cfg,
                                    double gamma) {
  const int n = static_cast<int>(f.P.rows());
  SdpFeasibilityProblem p{n, {}};
  p.constraints.reserve(n + 2);
  for (int i = 0; i < n; ++i)
    p.constraints.push_back(TraceConstraint::sparse({{i, i, 1.0}}, Sense::equal, 1.0));
  p.constraints.push_back(TraceConstraint::dense(f.P - gamma * cfg.sigma2_o * f.R,
                                                 Sense::greater_equal,
                                                 gamma * (cfg.sigma2_o * f.r3 + cfg.sigma2_f) - f.p3));
  if (cfg.ed_constraint)
    p.constraints.push_back(
        TraceConstraint::dense(f.P_tilde - cfg.eta * cfg.sigma2_o * f.R_tilde, Sense::less_equal,
                               cfg.eta * (cfg.sigma2_o * f.r3_tilde + cfg.sigma2_e) - f.p3_tilde)
            .set_margin_weight(kSideRowWeight));
  return p;
}

namespace {

CMatrix leak_adjusted(const CMatrix& signal, const RVector& leak, double weight) {
  CMatrix m = signal;
  m.diagonal() -= (weight * leak).cast<cplx>();
  return m;
}

}  // namespace

SdpFeasibilityProblem weight_problem(const WeightStepForms& f, const ScenarioConfig& cfg,
                                     double gamma) {
  const int k = static_cast<int>(f.signal.rows());
  SdpFeasibilityProblem p{k, {}};
  std::vector<HermitianEntry> power;
  for (int i = 0; i < k; ++i) power.push_back({i, i, f.Lambda(i) + cfg.sigma2_o});
  p.constraints.push_back(TraceConstraint::sparse(std::move(power), Sense::less_equal, cfg.p_t)
                              .set_margin_weight(kSideRowWeight));
  p.constraints.push_back(TraceConstraint::dense(
      leak_adjusted(f.signal, f.leak, gamma * cfg.sigma2_o), Sense::greater_equal,
      gamma * cfg.sigma2_f));
  if (cfg.ed_constraint)
    p.constraints.push_back(
        TraceConstraint::dense(leak_adjusted(f.signal_tilde, f.leak_tilde, cfg.eta * cfg.sigma2_o),
                               Sense::less_equal, cfg.eta * cfg.sigma2_e)
            .set_margin_weight(kSideRowWeight));
  return p;
}

std::string to_string(StepStatus status) {
  return status == StepStatus::ok ? "ok" : "infeasible_at_floor";
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::iteration_cap: return "iteration_cap";
    case Termination::infeasible_at_floor: return "infeasible_at_floor";
    case Termination::extraction_failed: return "extraction_failed";
  }
  return "unknown";
}

BisectionResult bisect_step(const ProblemBuilder& build, double lo, double hi,
                            const BisectionOptions& options,
                            const std::optional<CMatrix>& floor_point,
                            const AchievedRatio& ratio) {
  if (!(options.epsilon > 0.0)) throw std::invalid_argument("bisect_step: epsilon must be positive");
  if (!(lo <= hi)) throw std::invalid_argument("bisect_step: lo > hi");

  BisectionResult res;
  res.gamma_infeasible = hi;
  auto probe = [&](double gamma) -> std::optional<CMatrix> {
    ++res.probes;
    SdpOutcome out = check_feasibility(build(gamma), options.sdp_tol, options.sdp);
    if (out.status == SdpStatus::inconclusive) ++res.inconclusive;
    if (out.status == SdpStatus::feasible) return std::move(out.X);
    return std::nullopt;
  };
  // Returns how far the achieved ratio moved lo beyond the probe level.
  auto lift = [&](const CMatrix& X) {
    const double before = lo;
    if (ratio) lo = std::max(lo, std::min(ratio(X), hi));
    return lo - before;
  };

  if (floor_point) {
    res.X = *floor_point;
  } else {
    auto x = probe(lo);
    if (!x) {
      res.status = StepStatus::infeasible_at_floor;
      res.gamma = lo;
      res.gamma_infeasible = lo;
      return res;
    }
    res.X = std::move(*x);
    lift(res.X);
  }

  bool bracketed = false;
  double step = options.epsilon;
  while (hi - lo > options.epsilon) {
    double mid = 0.5 * (lo + hi);
    if (options.gallop && !bracketed) mid = std::min(mid, lo + step);
    if (auto x = probe(mid)) {
      res.X = std::move(*x);
      lo = mid;
      // A large jump means the probe point is near the step optimum; probe
      // just above it next. Otherwise keep growing the step.
      step = lift(res.X) > step ? options.epsilon : 4.0 * step;
    } else {
      hi = mid;
      bracketed = true;
      res.gamma_infeasible = mid;
    }
  }
  res.gamma = lo;
  return res;
}

std::vector<double> OptimizationTrace::gamma_sequence() const {
  std::vector<double> seq{gamma_initial};
  for (const auto& it : iterations) {
    seq.push_back(it.gamma_phase);
    seq.push_back(it.gamma_weight);
  }
  return seq;
}

namespace {

BisectionOptions bisection_options(const ScenarioConfig& cfg) {
  BisectionOptions o;
  o.epsilon = cfg.epsilon;
  o.sdp_tol = cfg.sdp_tol;
  return o;
}

CMatrix lifted_outer(const CVector& phi) {
  const CVector v = lift_phase(phi);
  return v * v.adjoint();
}

// Direct check that X satisfies every constraint within the solver tolerance.
bool satisfies(const SdpFeasibilityProblem& p, const CMatrix& X, double tol) {
  if (min_eigenvalue(X) < -tol * std::max(1.0, X.cwiseAbs().maxCoeff())) return false;
  for (const auto& c : p.constraints)
    if (c.violation(X) > tol * std::max(c.norm(), std::abs(c.rhs()))) return false;
  return true;
}

}  // namespace

WeightSolve solve_weights(const ChannelSet& ch, const ScenarioConfig& cfg, const CVector& phi,
                          RandomStream& rng) {
  WeightSolve out;
  const WeightStepForms wf = build_weight_forms(ch, lifted_outer(phi));
  const BisectionResult br = bisect_step(
      [&](double g) { return weight_problem(wf, cfg, g); }, 0.0, gamma_upper_bound(ch, cfg),
      bisection_options(cfg), std::nullopt,
      [&](const CMatrix& B) { return weight_step_snr(B, wf, cfg.sigma2_o, cfg.sigma2_f); });
  out.status = br.status;
  out.probes = br.probes;
  out.inconclusive = br.inconclusive;
  if (br.status != StepStatus::ok) return out;
  out.gamma = br.gamma;
  out.B = br.X;

  ExtractionContext ctx;
  ctx.ch = &ch;
  ctx.cfg = &cfg;
  ctx.partner_phi = phi;
  ctx.gamma = br.gamma;
  const ExtractionResult ex = rank_one_extract(br.X, ExtractionKind::weight, ctx, rng);
  out.extracted = ex.ok;
  out.beta = ex.vector;
  return out;
}

OptimizationTrace alternate(const ChannelSet& ch, const ScenarioConfig& cfg, RandomStream& rng) {
  validate(cfg);
  ch.check();
  OptimizationTrace trace;
  trace.gamma_bound = gamma_upper_bound(ch, cfg);
  const int n = ch.elements();
  RandomStream phase_rng = rng.split(1);
  RandomStream draw_rng = rng.split(2);

  CMatrix final_B;
  auto finish = [&](const CVector& phi, RandomStream& r) {
    const WeightSolve ws = solve_weights(ch, cfg, phi, r);
    trace.sdp_solves += ws.probes;
    trace.inconclusive += ws.inconclusive;
    trace.gamma_extracted = ws.gamma;
    final_B = ws.B;
    if (ws.status != StepStatus::ok) {
      trace.termination = Termination::infeasible_at_floor;
      return;
    }
    if (!ws.extracted) {
      trace.termination = Termination::extraction_failed;
      return;
    }
    trace.solution = {ws.beta, phi};
    trace.quality = link_quality(ch, trace.solution, cfg);
  };

  if (n == 0) {
    trace.termination = Termination::converged;
    finish(CVector(0), draw_rng);
    trace.gamma_initial = trace.gamma_final = trace.gamma_extracted;
    return trace;
  }

  CVector phi0 = CVector::Ones(n);
  if (cfg.random_initial_phase)
    for (int i = 0; i < n; ++i) phi0(i) = std::polar(1.0, phase_rng.uniform(0.0, 2.0 * kPi));

  const BisectionOptions opts = bisection_options(cfg);
  const double bound = trace.gamma_bound;
  CMatrix Q = lifted_outer(phi0);

  WeightStepForms wf = build_weight_forms(ch, Q);
  auto weight_ratio = [&](const CMatrix& B) {
    return weight_step_snr(B, wf, cfg.sigma2_o, cfg.sigma2_f);
  };
  BisectionResult boot = bisect_step([&](double g) { return weight_problem(wf, cfg, g); }, 0.0,
                                     bound, opts, std::nullopt, weight_ratio);
  trace.sdp_solves += boot.probes;
  trace.inconclusive += boot.inconclusive;
  if (boot.status != StepStatus::ok) {
    trace.termination = Termination::infeasible_at_floor;
    return trace;
  }
  CMatrix B = boot.X;
  double gamma = boot.gamma;
  trace.gamma_initial = gamma;

  trace.termination = Termination::iteration_cap;
  for (int it = 1; it <= cfg.n_iter; ++it) {
    IterationRecord rec;
    rec.iteration = it;

    const PhaseStepForms pf = build_phase_forms(ch, B);
    auto phase_build = [&](double g) { return phase_problem(pf, cfg, g); };
    if (cfg.verify_iterates) rec.carried_feasible = satisfies(phase_build(gamma), Q, 10 * cfg.sdp_tol);
    const BisectionResult ph = bisect_step(
        phase_build, cfg.warm_start ? gamma : 0.0, bound, opts,
        cfg.warm_start ? std::optional<CMatrix>(Q) : std::nullopt,
        [&](const CMatrix& X) { return phase_step_snr(X, pf, cfg.sigma2_o, cfg.sigma2_f); });
    rec.phase_status = ph.status;
    rec.phase_probes = ph.probes;
    rec.inconclusive += ph.inconclusive;
    if (ph.status != StepStatus::ok) {
      trace.iterations.push_back(rec);
      trace.termination = Termination::infeasible_at_floor;
      break;
    }
    // A restarted search may land below the carried iterate; keep the better one.
    if (ph.gamma >= gamma) {
      Q = ph.X;
      gamma = ph.gamma;
    }
    rec.gamma_phase = gamma;

    wf = build_weight_forms(ch, Q);
    auto weight_build = [&](double g) { return weight_problem(wf, cfg, g); };
    if (cfg.verify_iterates)
      rec.carried_feasible =
          *rec.carried_feasible && satisfies(weight_build(gamma), B, 10 * cfg.sdp_tol);
    const BisectionResult wt = bisect_step(
        weight_build, cfg.warm_start ? gamma : 0.0, bound, opts,
        cfg.warm_start ? std::optional<CMatrix>(B) : std::nullopt, weight_ratio);
    rec.weight_status = wt.status;
    rec.weight_probes = wt.probes;
    rec.inconclusive += wt.inconclusive;
    if (wt.status != StepStatus::ok) {
      trace.iterations.push_back(rec);
      trace.termination = Termination::infeasible_at_floor;
      break;
    }
    const double previous = trace.iterations.empty() ? trace.gamma_initial
                                                     : trace.iterations.back().gamma_weight;
    if (wt.gamma >= gamma) {
      B = wt.X;
      gamma = wt.gamma;
    }
    rec.gamma_weight = gamma;
    rec.rank_Q = rank_ratio(Q);
    rec.rank_B = rank_ratio(B);
    trace.iterations.push_back(rec);

    if (gamma - previous < cfg.delta * std::max(previous, 1e-300)) {
      trace.termination = Termination::converged;
      break;
    }
  }
  for (const auto& r : trace.iterations) {
    trace.sdp_solves += r.phase_probes + r.weight_probes;
    trace.inconclusive += r.inconclusive;
  }
  trace.Q = Q;
  trace.B = B;
  trace.gamma_final = gamma;
  if (trace.termination == Termination::infeasible_at_floor) return trace;

  ExtractionContext ctx;
  ctx.ch = &ch;
  ctx.cfg = &cfg;
  ctx.partner_B = B;
  const ExtractionResult ex = rank_one_extract(Q, ExtractionKind::phase, ctx, draw_rng);
  if (!ex.ok) {
    trace.termination = Termination::extraction_failed;
    return trace;
  }
  const Termination reason = trace.termination;
  finish(ex.vector, draw_rng);
  if (trace.failed()) return trace;
  trace.termination = reason;
  // The re-solve is one more weight step on the lift of the extracted phases;
  // when it does better, that pair is the final lifted point.
  if (trace.gamma_extracted > trace.gamma_final) {
    trace.gamma_final = trace.gamma_extracted;
    trace.Q = lifted_outer(ex.vector);
    trace.B = final_B;
  }
  return trace;
}

}  // namespace irsse
