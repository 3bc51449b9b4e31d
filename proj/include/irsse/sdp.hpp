#pragma once

#include <optional>
#include <string>
#include <vector>

#include "irsse/types.hpp"

namespace irsse {

enum class Sense { less_equal, equal, greater_equal };

/// One upper-triangle entry (row <= col) of a Hermitian coefficient matrix;
/// the mirrored entry is implied.
struct HermitianEntry {
  int row = 0;
  int col = 0;
  cplx value;
};

/// Re Tr[A X] (sense) rhs, with A Hermitian. A is stored densely or as a list
/// of upper-triangle entries; the solver exploits the sparse form.
class TraceConstraint {
 public:
  static TraceConstraint dense(CMatrix a, Sense sense, double rhs);
  static TraceConstraint sparse(std::vector<HermitianEntry> entries, Sense sense, double rhs);

  bool is_sparse() const { return sparse_; }
  const CMatrix& dense_matrix() const { return dense_; }
  const std::vector<HermitianEntry>& entries() const { return entries_; }
  Sense sense() const { return sense_; }
  double rhs() const { return rhs_; }

  /// Relative weight of this row's slack in the max-margin objective
  /// (inequalities only, default 1). Positive weights never change whether
  /// the problem is feasible; they steer which interior point is returned.
  double margin_weight() const { return margin_weight_; }
  TraceConstraint& set_margin_weight(double w);

  /// Frobenius norm of A.
  double norm() const;
  CMatrix matrix(int n) const;
  double evaluate(const CMatrix& X) const;
  /// Signed violation: positive when X breaks the constraint.
  double violation(const CMatrix& X) const;

 private:
  bool sparse_ = false;
  CMatrix dense_;
  std::vector<HermitianEntry> entries_;
  Sense sense_ = Sense::equal;
  double rhs_ = 0.0;
  double margin_weight_ = 1.0;
};

/// Does some Hermitian X >= 0 (dim x dim) satisfy every constraint?
struct SdpFeasibilityProblem {
  int dim = 0;
  std::vector<TraceConstraint> constraints;

  /// Throws std::invalid_argument for dim < 1, wrong sizes, out-of-range
  /// entries or non-Hermitian coefficient matrices.
  void validate() const;
};

enum class SdpStatus { feasible, infeasible, inconclusive };

std::string to_string(SdpStatus status);

/// margin is the achieved (feasible) or certified upper bound (infeasible) of
/// the max-slack value t, measured on constraints normalized by
/// max(||A_i||_F, |b_i|).
struct SdpOutcome {
  SdpStatus status = SdpStatus::inconclusive;
  std::optional<CMatrix> X;
  double margin = 0.0;
  int iterations = 0;
};

struct SdpOptions {
  int max_iterations = 200;
  /// Stop as soon as a verified point with at least half the attainable
  /// margin (or an infeasibility bound) is available.
  bool early_exit = true;
  /// Fraction of the attainable margin that counts as good enough for the
  /// early exit.
  double target_fraction = 0.5;
};

/// Decides feasibility through the max-slack program
///   maximize t  s.t.  b_i - Tr[A_i X] >= w_i t (<= rows), Tr[A_i X] - b_i >= w_i t
///   (>= rows), Tr[A_i X] = b_i (= rows), t <= dim, X >= 0, with w_i the margin
/// weights, solved by a primal-dual interior-point method (HKM direction,
/// Mehrotra predictor-corrector) on the Hermitian cone. A feasible answer is
/// re-verified by direct constraint evaluation before it is returned.
SdpOutcome check_feasibility(const SdpFeasibilityProblem& problem, double tol = 1e-7,
                             const SdpOptions& options = {});

/// Smallest eigenvalue of a Hermitian matrix.
double min_eigenvalue(const CMatrix& X);

}  // namespace irsse
