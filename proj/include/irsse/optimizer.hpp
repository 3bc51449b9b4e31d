#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "irsse/model.hpp"
#include "irsse/sdp.hpp"
#include "irsse/sdr_forms.hpp"

namespace irsse {

/// Phi-independent bound on the FC SNR of any feasible pair:
/// (||h_IF|| ||H_I||_2 + ||h_f||)^2 P_T max_k(|a_k|^2 / (|a_k|^2 + sigma2_o)) / sigma2_f.
double gamma_upper_bound(const ChannelSet& ch, const ScenarioConfig& cfg);

/// Feasibility problem in Q for a fixed B at target gamma: unit diagonal,
/// S(Q|B) >= 0 and (unless disabled) T(Q|B) <= 0.
SdpFeasibilityProblem phase_problem(const PhaseStepForms& forms, const ScenarioConfig& cfg,
                                    double gamma);

/// Feasibility problem in B for a fixed Q at target gamma: power budget,
/// S(B|Q) >= 0 and (unless disabled) T(B|Q) <= 0.
SdpFeasibilityProblem weight_problem(const WeightStepForms& forms, const ScenarioConfig& cfg,
                                     double gamma);

enum class StepStatus { ok, infeasible_at_floor };

std::string to_string(StepStatus status);

struct BisectionResult {
  StepStatus status = StepStatus::ok;
  double gamma = 0.0;
  /// Feasible lifted matrix at gamma (empty when infeasible at the floor).
  CMatrix X;
  int probes = 0;
  int inconclusive = 0;
  /// Smallest probe found infeasible (or the original upper end if none).
  double gamma_infeasible = 0.0;
};

struct BisectionOptions {
  double epsilon = 0.01;
  double sdp_tol = 1e-7;
  /// Grow the probe step geometrically from the floor instead of halving the
  /// whole bracket; pays off when the floor is already close to the optimum.
  bool gallop = true;
  SdpOptions sdp;
};

using ProblemBuilder = std::function<SdpFeasibilityProblem(double gamma)>;
/// SNR actually attained by a feasible lifted matrix; lets the search jump
/// past the probe level.
using AchievedRatio = std::function<double(const CMatrix&)>;

/// Largest gamma in [lo, hi] (to within epsilon) for which the problem is
/// feasible. When `floor_point` is given it must be feasible at lo and the
/// floor probe is skipped. Inconclusive solves count as infeasible.
/// Throws std::invalid_argument when lo > hi or epsilon <= 0.
BisectionResult bisect_step(const ProblemBuilder& build, double lo, double hi,
                            const BisectionOptions& options,
                            const std::optional<CMatrix>& floor_point = std::nullopt,
                            const AchievedRatio& ratio = {});

/// Relaxed FC / ED SNR of a phase vector against a lifted weight matrix B:
/// h D(alpha) B D(alpha^H) h^H / (sigma2_o sum_k B_kk |h_k|^2 + sigma2_rx).
double lifted_weight_snr(const CRowVector& h, const CVector& alpha, const CMatrix& B,
                         double sigma2_o, double sigma2_rx);

/// Largest c^2 such that c * beta meets the power budget and (when enabled)
/// the ED ceiling.
double max_weight_scale(const ChannelSet& ch, const CVector& phi, const CVector& beta,
                        const ScenarioConfig& cfg);

/// Reduces a PSD matrix to rank one while keeping Re Tr[A_i X] fixed for every
/// given Hermitian A_i. Needs rank^2 > count of A_i at each step, so three
/// functionals always reach rank one. Returns the factor x with X' = x x^H.
CVector purify_rank_one(const CMatrix& X, const std::vector<CMatrix>& functionals);

enum class ExtractionKind { phase, weight };

struct ExtractionContext {
  const ChannelSet* ch = nullptr;
  const ScenarioConfig* cfg = nullptr;
  /// Phase kind: the lifted weight matrix B. Weight kind: the phase vector.
  CMatrix partner_B;
  CVector partner_phi;
  /// Weight kind only: level used for the rank-preserving purification.
  double gamma = 0.0;
};

struct ExtractionResult {
  bool ok = false;
  CVector vector;
  double snr_fc = 0.0;
  int candidates = 0;
  int rejected = 0;
  double rank_ratio = 0.0;  // lambda_2 / lambda_1 of the input
};

/// Rank-one recovery from a relaxed solution. Phase kind returns phi (unit
/// modulus); weight kind returns beta (within the power budget and ED ceiling).
/// Phase candidates that break the ED ceiling under partner_B are skipped
/// unless all of them do, in which case the one closest to the ceiling is
/// returned (the weight step that follows restores it).
ExtractionResult rank_one_extract(const CMatrix& X, ExtractionKind kind,
                                  const ExtractionContext& ctx, RandomStream& rng);

/// lambda_2 / lambda_1 of a Hermitian PSD matrix (0 for rank one or 1x1).
double rank_ratio(const CMatrix& X);

enum class Termination { converged, iteration_cap, infeasible_at_floor, extraction_failed };

std::string to_string(Termination t);

struct IterationRecord {
  int iteration = 0;
  double gamma_phase = 0.0;
  double gamma_weight = 0.0;
  StepStatus phase_status = StepStatus::ok;
  StepStatus weight_status = StepStatus::ok;
  int phase_probes = 0;
  int weight_probes = 0;
  int inconclusive = 0;
  double rank_Q = 0.0;
  double rank_B = 0.0;
  /// Debug mode: did the previous iterate satisfy this iteration's problems
  /// at the previous gamma when evaluated directly?
  std::optional<bool> carried_feasible;
};

struct OptimizationTrace {
  /// Gamma from the bootstrap weight step (Q fixed at the initial phase).
  double gamma_initial = 0.0;
  std::vector<IterationRecord> iterations;
  Termination termination = Termination::iteration_cap;
  /// Gamma of the final lifted pair: the alternation's last value, or the
  /// re-solve for the extracted phases when that is higher.
  double gamma_final = 0.0;
  double gamma_bound = 0.0;
  CMatrix Q;
  CMatrix B;
  BeamformerPair solution;
  LinkQuality quality;
  /// Gamma of the weight re-solve for the extracted phases.
  double gamma_extracted = 0.0;
  int sdp_solves = 0;
  int inconclusive = 0;

  bool failed() const {
    return termination == Termination::infeasible_at_floor ||
           termination == Termination::extraction_failed;
  }
  /// gamma_initial followed by (phase, weight) for every iteration.
  std::vector<double> gamma_sequence() const;
};

/// Best weights for a fixed phase profile: weight-step bisection with the
/// rank-one lift of phi, then rank-one extraction.
struct WeightSolve {
  StepStatus status = StepStatus::ok;
  bool extracted = false;
  double gamma = 0.0;
  CMatrix B;
  CVector beta;
  int probes = 0;
  int inconclusive = 0;
};

WeightSolve solve_weights(const ChannelSet& ch, const ScenarioConfig& cfg, const CVector& phi,
                          RandomStream& rng);

/// Alternating SDR optimization of (beta, phi). For N = 0 a single weight
/// step is run.
OptimizationTrace alternate(const ChannelSet& ch, const ScenarioConfig& cfg, RandomStream& rng);

}  // namespace irsse
