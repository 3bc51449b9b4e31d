#include <cmath>

#include "doctest.h"
#include "irsse/optimizer.hpp"
#include "oracles.hpp"

using namespace irsse;

namespace {

ScenarioConfig physical(int K, int N, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.K = K;
  cfg.N = N;
  cfg.seed = seed;
  return cfg;
}

// 1 x 1 problem: X = 1 and X >= gamma, feasible exactly for gamma <= 1.
SdpFeasibilityProblem unit_problem(double gamma) {
  SdpFeasibilityProblem p;
  p.dim = 1;
  p.constraints.push_back(TraceConstraint::dense(CMatrix::Ones(1, 1), Sense::equal, 1.0));
  p.constraints.push_back(TraceConstraint::dense(CMatrix::Ones(1, 1), Sense::greater_equal, gamma));
  return p;
}

bool nondecreasing(const std::vector<double>& seq, double slack) {
  for (std::size_t i = 1; i < seq.size(); ++i)
    if (seq[i] < seq[i - 1] - slack) return false;
  return true;
}

}  // namespace

TEST_CASE("gamma upper bound") {
  ScenarioConfig cfg;
  cfg.sigma2_o = 0.5;
  cfg.sigma2_f = 0.25;
  cfg.p_t = 2.0;
  RandomStream rng(1);
  ChannelSet ch = oracle::random_instance(3, 4, rng);
  double alpha_factor = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double a2 = std::norm(ch.alpha(k));
    alpha_factor = std::max(alpha_factor, a2 / (a2 + 0.5));
  }

  SUBCASE("direct links only") {
    ch.H_I.setZero();
    CHECK(gamma_upper_bound(ch, cfg) ==
          doctest::Approx(ch.h_f.squaredNorm() * 2.0 * alpha_factor / 0.25).epsilon(1e-12));
    CHECK(gamma_upper_bound(ch.without_irs(), cfg) == doctest::Approx(gamma_upper_bound(ch, cfg)));
  }
  SUBCASE("zero channels") {
    ch.H_I.setZero();
    ch.h_IF.setZero();
    ch.h_f.setZero();
    CHECK(gamma_upper_bound(ch, cfg) == 0.0);
  }
  SUBCASE("dominates every random pair at full power") {
    cfg.K = 3;
    cfg.N = 4;
    const double bound = gamma_upper_bound(ch, cfg);
    for (int i = 0; i < 200; ++i) {
      CVector beta = oracle::random_vector(3, rng);
      beta *= std::sqrt(cfg.p_t / transmit_power(ch.alpha, beta, cfg.sigma2_o));
      const LinkQuality q = link_quality(ch, {beta, oracle::random_phases(4, rng)}, cfg);
      CHECK(q.snr_fc <= bound);
    }
  }
}

TEST_CASE("bisection on a known threshold") {
  BisectionOptions opt;
  opt.epsilon = 0.01;
  const BisectionResult r = bisect_step(unit_problem, 0.0, 5.0, opt);
  CHECK(r.status == StepStatus::ok);
  CHECK(r.gamma <= 1.0 + 1e-9);
  CHECK(r.gamma >= 1.0 - opt.epsilon);
  CHECK(r.gamma_infeasible > 1.0);
  CHECK(r.gamma_infeasible - r.gamma <= opt.epsilon + 1e-12);
  REQUIRE(r.X.rows() == 1);
  CHECK(std::abs(r.X(0, 0) - 1.0) < 1e-6);

  SUBCASE("plain halving agrees") {
    BisectionOptions halve = opt;
    halve.gallop = false;
    const BisectionResult h = bisect_step(unit_problem, 0.0, 5.0, halve);
    CHECK(h.gamma >= 1.0 - opt.epsilon);
    CHECK(h.gamma <= 1.0 + 1e-9);
  }
  SUBCASE("achieved ratio jumps to the threshold") {
    const BisectionResult j =
        bisect_step(unit_problem, 0.0, 5.0, opt, std::nullopt, [](const CMatrix&) { return 1.0; });
    CHECK(j.gamma == doctest::Approx(1.0));
    CHECK(j.probes < r.probes);
  }
  SUBCASE("floor point skips the floor probe") {
    const BisectionResult f = bisect_step(unit_problem, 0.5, 0.5, opt, CMatrix::Ones(1, 1));
    CHECK(f.probes == 0);
    CHECK(f.gamma == 0.5);
  }
  SUBCASE("empty bracket probes once") {
    const BisectionResult e = bisect_step(unit_problem, 0.5, 0.5, opt);
    CHECK(e.probes == 1);
    CHECK(e.status == StepStatus::ok);
    CHECK(e.gamma == 0.5);
  }
  SUBCASE("infeasible floor") {
    const BisectionResult e = bisect_step(unit_problem, 2.0, 5.0, opt);
    CHECK(e.status == StepStatus::infeasible_at_floor);
    CHECK(e.X.size() == 0);
    CHECK(e.gamma_infeasible == 2.0);
  }
  SUBCASE("argument errors") {
    CHECK_THROWS_AS(bisect_step(unit_problem, 2.0, 1.0, opt), std::invalid_argument);
    BisectionOptions bad = opt;
    bad.epsilon = 0.0;
    CHECK_THROWS_AS(bisect_step(unit_problem, 0.0, 1.0, bad), std::invalid_argument);
  }
  CHECK(to_string(StepStatus::infeasible_at_floor) == "infeasible_at_floor");
}

TEST_CASE("single sensor without IRS matches the closed form") {
  ChannelSet ch;
  ch.H_I.resize(0, 1);
  ch.h_IF.resize(0);
  ch.h_IE.resize(0);
  ch.h_f = CRowVector::Constant(1, cplx(0.8, -0.6));
  ch.h_e = CRowVector::Constant(1, cplx(0.3, 0.4));
  ch.alpha = CVector::Constant(1, cplx(1.2, 0.0));
  ScenarioConfig cfg;
  cfg.K = 1;
  cfg.N = 0;
  cfg.sigma2_o = 0.1;
  cfg.sigma2_f = 0.05;
  cfg.sigma2_e = 0.05;
  cfg.p_t = 1.0;
  cfg.epsilon = 1e-3;
  const double a2 = std::norm(ch.alpha(0));
  auto snr_at = [&](double p, const CRowVector& h, double s2) {
    return std::norm(h(0)) * a2 * p / (cfg.sigma2_o * std::norm(h(0)) * p + s2);
  };
  const double p_max = cfg.p_t / (a2 + cfg.sigma2_o);

  SUBCASE("ceiling inactive") {
    cfg.eta = 1e6;
    RandomStream rng(2);
    const OptimizationTrace t = alternate(ch, cfg, rng);
    REQUIRE_FALSE(t.failed());
    const double expected = snr_at(p_max, ch.h_f, cfg.sigma2_f);
    CHECK(t.gamma_final <= expected + 1e-9);
    CHECK(t.gamma_final >= expected - cfg.epsilon);
    CHECK(t.quality.snr_fc == doctest::Approx(expected).epsilon(1e-9));
    CHECK(t.quality.power == doctest::Approx(cfg.p_t).epsilon(1e-9));
  }
  SUBCASE("ceiling active") {
    cfg.eta = 0.5 * snr_at(p_max, ch.h_e, cfg.sigma2_e);
    const double e2 = std::norm(ch.h_e(0));
    const double p_ed = cfg.eta * cfg.sigma2_e / (e2 * a2 - cfg.eta * cfg.sigma2_o * e2);
    REQUIRE(p_ed < p_max);
    RandomStream rng(3);
    const OptimizationTrace t = alternate(ch, cfg, rng);
    REQUIRE_FALSE(t.failed());
    const double expected = snr_at(p_ed, ch.h_f, cfg.sigma2_f);
    CHECK(t.gamma_final <= expected * (1.0 + 1e-6));
    CHECK(t.gamma_final >= expected - cfg.epsilon);
    CHECK(t.quality.snr_fc == doctest::Approx(expected).epsilon(1e-6));
    CHECK(t.quality.snr_ed <= cfg.eta * (1.0 + 1e-6));
  }
}

TEST_CASE("alternation is monotone and its iterates stay feasible") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    ScenarioConfig cfg = physical(3, 8, seed);
    cfg.verify_iterates = true;
    const ChannelSet ch = draw_trial_channels(cfg, 0);
    RandomStream rng = RandomStream::derive(cfg.seed, 0, StreamTag::randomization);
    const OptimizationTrace t = alternate(ch, cfg, rng);
    REQUIRE_FALSE(t.failed());
    CHECK(nondecreasing(t.gamma_sequence(), 1e-6));
    for (const auto& it : t.iterations) {
      REQUIRE(it.carried_feasible.has_value());
      CHECK(*it.carried_feasible);
      CHECK(it.gamma_weight >= it.gamma_phase - 1e-6);
    }
    CHECK(t.gamma_final <= t.gamma_bound);
    CHECK(t.gamma_extracted <= t.gamma_final + 1e-12);
    CHECK(t.quality.snr_fc <= t.gamma_final + cfg.epsilon);
    CHECK(check_feasible(ch, t.solution, cfg, 1e-6, 1e-3, 1e-12).ok());
    CHECK(t.solution.phi.size() == 8);
    CHECK(t.sdp_solves > 0);
  }
}

TEST_CASE("a very loose ceiling matches the unconstrained problem") {
  int close = 0;
  const int runs = 6;
  for (std::uint64_t seed = 1; seed <= runs; ++seed) {
    ScenarioConfig loose = physical(3, 6, seed);
    loose.eta = 1e12;
    ScenarioConfig open = loose;
    open.ed_constraint = false;
    const ChannelSet ch = draw_trial_channels(loose, 0);
    RandomStream r1 = RandomStream::derive(seed, 0, StreamTag::randomization);
    RandomStream r2 = RandomStream::derive(seed, 0, StreamTag::randomization);
    const OptimizationTrace a = alternate(ch, loose, r1);
    const OptimizationTrace b = alternate(ch, open, r2);
    REQUIRE_FALSE(a.failed());
    REQUIRE_FALSE(b.failed());
    if (relative_difference(a.quality.snr_fc, b.quality.snr_fc) <= 0.02) ++close;
  }
  CHECK(close == runs);
}

TEST_CASE("purification keeps the functionals") {
  RandomStream rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    CMatrix G(n, 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 3; ++j) G(i, j) = rng.complex_normal();
    const CMatrix X = G * G.adjoint();
    std::vector<CMatrix> fs;
    for (int f = 0; f < 3; ++f) {
      CMatrix A(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = rng.complex_normal();
      fs.push_back(0.5 * (A + A.adjoint()));
    }
    const CVector x = purify_rank_one(X, fs);
    const CMatrix Xp = x * x.adjoint();
    for (const CMatrix& A : fs) {
      const double before = trace_product(A, X);
      const double after = trace_product(A, Xp);
      CHECK(std::abs(before - after) <= 1e-8 * std::max(1.0, (A * X).norm()));
    }
  }
  // Already rank one: returned factor reproduces X.
  const CVector v = oracle::random_vector(4, rng);
  const CVector w = purify_rank_one(v * v.adjoint(), {});
  CHECK(((w * w.adjoint()) - v * v.adjoint()).norm() < 1e-10 * v.squaredNorm());
}

TEST_CASE("rank ratio") {
  RandomStream rng(5);
  const CVector v = oracle::random_vector(4, rng);
  CHECK(rank_ratio(v * v.adjoint()) < 1e-12);
  CHECK(rank_ratio(CMatrix::Identity(3, 3)) == doctest::Approx(1.0));
  CHECK(rank_ratio(CMatrix::Ones(1, 1)) == 0.0);
}

TEST_CASE("rank-one extraction") {
  ScenarioConfig cfg = physical(3, 6, 11);
  const ChannelSet ch = draw_trial_channels(cfg, 0);
  RandomStream rng(6);

  SUBCASE("rank-one phase input returns its phases") {
    const CVector phi = oracle::random_phases(6, rng);
    const CVector v = lift_phase(phi);
    ExtractionContext ctx{&ch, &cfg, CMatrix::Identity(3, 3), CVector(), 0.0};
    cfg.ed_constraint = false;
    const ExtractionResult r = rank_one_extract(v * v.adjoint(), ExtractionKind::phase, ctx, rng);
    REQUIRE(r.ok);
    CHECK(r.candidates == 1);
    CHECK((r.vector - phi).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("phase kind falls back to the candidate closest to the ceiling") {
    const CVector phi = oracle::random_phases(6, rng);
    const CVector v = lift_phase(phi);
    const CMatrix B = CMatrix::Identity(3, 3);
    cfg.eta = 1e-6 * lifted_weight_snr(effective_channel(ch, phi).h_E, ch.alpha, B, cfg.sigma2_o,
                                       cfg.sigma2_e);
    ExtractionContext ctx{&ch, &cfg, B, CVector(), 0.0};
    const ExtractionResult r = rank_one_extract(v * v.adjoint(), ExtractionKind::phase, ctx, rng);
    REQUIRE(r.ok);
    CHECK(r.rejected == r.candidates);
    CHECK((r.vector - phi).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("weight kind without a ceiling spends the whole budget") {
    cfg.ed_constraint = false;
    const CVector phi = oracle::random_phases(6, rng);
    const CMatrix G = oracle::random_vector(3, rng) * oracle::random_vector(3, rng).adjoint();
    const CMatrix B = G * G.adjoint() + 0.1 * CMatrix::Identity(3, 3);
    ExtractionContext ctx{&ch, &cfg, CMatrix(), phi, 0.0};
    const ExtractionResult r = rank_one_extract(B, ExtractionKind::weight, ctx, rng);
    REQUIRE(r.ok);
    CHECK(transmit_power(ch.alpha, r.vector, cfg.sigma2_o) == doctest::Approx(cfg.p_t).epsilon(1e-8));
    CHECK(r.rank_ratio > 0.0);
  }
  SUBCASE("input errors") {
    ExtractionContext ctx{&ch, &cfg, CMatrix::Identity(3, 3), CVector(), 0.0};
    CHECK_THROWS_AS(rank_one_extract(CMatrix::Identity(3, 3), ExtractionKind::phase, ctx, rng),
                    std::invalid_argument);
    CMatrix skew = CMatrix::Identity(7, 7);
    skew(0, 3) = 1.0;
    CHECK_THROWS_AS(rank_one_extract(skew, ExtractionKind::phase, ctx, rng), std::invalid_argument);
    CHECK_THROWS_AS(rank_one_extract(CMatrix::Identity(3, 3), ExtractionKind::weight, ctx, rng),
                    std::invalid_argument);
    ExtractionContext empty;
    CHECK_THROWS_AS(rank_one_extract(CMatrix::Identity(3, 3), ExtractionKind::weight, empty, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("phase extraction beats random phases for a fixed weight matrix") {
  const int seeds = 40;
  int wins = 0;
  for (int s = 1; s <= seeds; ++s) {
    ScenarioConfig cfg = physical(3, 6, static_cast<std::uint64_t>(s));
    const ChannelSet ch = draw_trial_channels(cfg, 0);
    RandomStream rng = RandomStream::derive(cfg.seed, 0, StreamTag::randomization);
    const WeightSolve ws = solve_weights(ch, cfg, CVector::Ones(6), rng);
    REQUIRE(ws.status == StepStatus::ok);
    const PhaseStepForms pf = build_phase_forms(ch, ws.B);
    BisectionOptions opt;
    opt.epsilon = cfg.epsilon;
    const BisectionResult br = bisect_step([&](double g) { return phase_problem(pf, cfg, g); }, 0.0,
                                           gamma_upper_bound(ch, cfg), opt);
    REQUIRE(br.status == StepStatus::ok);
    ExtractionContext ctx{&ch, &cfg, ws.B, CVector(), 0.0};
    const ExtractionResult ex = rank_one_extract(br.X, ExtractionKind::phase, ctx, rng);
    REQUIRE(ex.ok);

    double best_random = 0.0;
    for (int d = 0; d < 100; ++d) {
      const EffectiveChannels eff = effective_channel(ch, oracle::random_phases(6, rng));
      if (lifted_weight_snr(eff.h_E, ch.alpha, ws.B, cfg.sigma2_o, cfg.sigma2_e) > cfg.eta) continue;
      best_random =
          std::max(best_random, lifted_weight_snr(eff.h_F, ch.alpha, ws.B, cfg.sigma2_o, cfg.sigma2_f));
    }
    if (ex.snr_fc >= best_random) ++wins;
  }
  CHECK(wins >= 38);
}

TEST_CASE("no-IRS alternation runs a single weight step") {
  const ScenarioConfig cfg = physical(4, 0, 3);
  const ChannelSet ch = draw_trial_channels(cfg, 0);
  RandomStream rng(7);
  const OptimizationTrace t = alternate(ch, cfg, rng);
  REQUIRE_FALSE(t.failed());
  CHECK(t.iterations.empty());
  CHECK(t.gamma_final >= t.gamma_initial);
  CHECK(t.solution.phi.size() == 0);
  CHECK(check_feasible(ch, t.solution, cfg, 1e-6, 1e-3, 1e-12).ok());
}

TEST_CASE("termination names") {
  CHECK(to_string(Termination::converged) == "converged");
  CHECK(to_string(Termination::iteration_cap) == "iteration_cap");
  CHECK(to_string(Termination::infeasible_at_floor) == "infeasible_at_floor");
  CHECK(to_string(Termination::extraction_failed) == "extraction_failed");
}
