#include "irsse/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace irsse {

TraceConstraint TraceConstraint::dense(CMatrix a, Sense sense, double rhs) {
  TraceConstraint c;
  c.sparse_ = false;
  c.dense_ = std::move(a);
  c.sense_ = sense;
  c.rhs_ = rhs;
  return c;
}

TraceConstraint TraceConstraint::sparse(std::vector<HermitianEntry> entries, Sense sense,
                                        double rhs) {
  TraceConstraint c;
  c.sparse_ = true;
  c.entries_ = std::move(entries);
  c.sense_ = sense;
  c.rhs_ = rhs;
  return c;
}

TraceConstraint& TraceConstraint::set_margin_weight(double w) {
  if (!(w > 0.0) || !std::isfinite(w))
    throw std::invalid_argument("TraceConstraint: margin weight must be positive");
  margin_weight_ = w;
  return *this;
}

double TraceConstraint::norm() const {
  if (!sparse_) return dense_.norm();
  double sq = 0.0;
  for (const auto& e : entries_) sq += (e.row == e.col ? 1.0 : 2.0) * std::norm(e.value);
  return std::sqrt(sq);
}

CMatrix TraceConstraint::matrix(int n) const {
  if (!sparse_) return dense_;
  CMatrix a = CMatrix::Zero(n, n);
  for (const auto& e : entries_) {
    a(e.row, e.col) += e.value;
    if (e.row != e.col) a(e.col, e.row) += std::conj(e.value);
  }
  return a;
}

double TraceConstraint::evaluate(const CMatrix& X) const {
  if (!sparse_) return dense_.cwiseProduct(X.transpose()).sum().real();
  double acc = 0.0;
  for (const auto& e : entries_) {
    if (e.row == e.col)
      acc += e.value.real() * X(e.row, e.row).real();
    else
      acc += 2.0 * (e.value * X(e.col, e.row)).real();
  }
  return acc;
}

double TraceConstraint::violation(const CMatrix& X) const {
  const double v = evaluate(X);
  switch (sense_) {
    case Sense::less_equal: return v - rhs_;
    case Sense::greater_equal: return rhs_ - v;
    case Sense::equal: return std::abs(v - rhs_);
  }
  return 0.0;
}

void SdpFeasibilityProblem::validate() const {
  if (dim < 1) throw std::invalid_argument("SdpFeasibilityProblem: dim must be >= 1");
  for (const auto& c : constraints) {
    if (c.is_sparse()) {
      for (const auto& e : c.entries()) {
        if (e.row < 0 || e.col < 0 || e.row >= dim || e.col >= dim || e.row > e.col)
          throw std::invalid_argument("SdpFeasibilityProblem: bad sparse entry index");
        if (e.row == e.col && std::abs(e.value.imag()) > 1e-12 * std::max(1.0, std::abs(e.value)))
          throw std::invalid_argument("SdpFeasibilityProblem: non-Hermitian diagonal entry");
      }
    } else {
      const CMatrix& a = c.dense_matrix();
      if (a.rows() != dim || a.cols() != dim)
        throw std::invalid_argument("SdpFeasibilityProblem: constraint has wrong dimensions");
      const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
      if (hermitian_defect(a) > 1e-12 * scale)
        throw std::invalid_argument("SdpFeasibilityProblem: constraint matrix is not Hermitian");
    }
    if (!std::isfinite(c.rhs()))
      throw std::invalid_argument("SdpFeasibilityProblem: non-finite right-hand side");
  }
}

std::string to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::feasible: return "feasible";
    case SdpStatus::infeasible: return "infeasible";
    case SdpStatus::inconclusive: return "inconclusive";
  }
  return "unknown";
}

double min_eigenvalue(const CMatrix& X) {
  if (X.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(X, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

namespace {

// A(r, c) = v, full Hermitian storage.
struct Triplet {
  int r;
  int c;
  cplx v;
};

// One row of the linear system
//   Re Tr[A X] + s_slack + t_coef * t = b.
struct Row {
  enum class Kind { dense, sparse, none } kind = Kind::none;
  CMatrix dense;
  std::vector<Triplet> triplets;
  int slack = -1;
  double t_coef = 0.0;
  double b = 0.0;
};

CMatrix herm(const CMatrix& a) { return 0.5 * (a + a.adjoint()); }

// Re Tr[A B] for Hermitian A, B.
double inner(const CMatrix& a, const CMatrix& b) { return a.cwiseProduct(b.conjugate()).sum().real(); }

double row_apply(const Row& row, const CMatrix& X) {
  switch (row.kind) {
    case Row::Kind::dense: return inner(row.dense, X);
    case Row::Kind::sparse: {
      double acc = 0.0;
      for (const auto& e : row.triplets) acc += (e.v * X(e.c, e.r)).real();
      return acc;
    }
    case Row::Kind::none: return 0.0;
  }
  return 0.0;
}

void row_accumulate(const Row& row, double coef, CMatrix& out) {
  if (coef == 0.0) return;
  switch (row.kind) {
    case Row::Kind::dense: out.noalias() += coef * row.dense; break;
    case Row::Kind::sparse:
      for (const auto& e : row.triplets) out(e.r, e.c) += coef * e.v;
      break;
    case Row::Kind::none: break;
  }
}

Row make_row(const TraceConstraint& c, double factor) {
  Row row;
  if (c.is_sparse()) {
    row.kind = Row::Kind::sparse;
    for (const auto& e : c.entries()) {
      if (e.row == e.col) {
        row.triplets.push_back({e.row, e.row, cplx(factor * e.value.real(), 0.0)});
      } else {
        row.triplets.push_back({e.row, e.col, factor * e.value});
        row.triplets.push_back({e.col, e.row, factor * std::conj(e.value)});
      }
    }
  } else {
    row.kind = Row::Kind::dense;
    row.dense = herm(factor * c.dense_matrix());
  }
  return row;
}

// Largest step a with X + a dX >= 0, given L^{-1} for the Cholesky factor of X.
double max_psd_step(const CMatrix& Linv, const CMatrix& dX) {
  const CMatrix w = Linv * dX * Linv.adjoint();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(herm(w), Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_lp_step(const RVector& x, const RVector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  return a;
}

class MaxMarginSolver {
 public:
  MaxMarginSolver(const SdpFeasibilityProblem& problem, double tol, const SdpOptions& options)
      : problem_(problem), tol_(tol), options_(options), n_(problem.dim),
        cap_(static_cast<double>(problem.dim)) {
    for (const auto& c : problem.constraints) {
      const double scale = std::max({c.norm(), std::abs(c.rhs()), 1e-300});
      norms_.push_back(scale);
      const double f = 1.0 / scale;
      if (c.sense() == Sense::equal && c.is_sparse() && c.entries().size() == 1 &&
          c.entries()[0].row == c.entries()[0].col && c.entries()[0].value.real() != 0.0)
        diagonal_targets_.emplace_back(c.entries()[0].row, c.rhs() / c.entries()[0].value.real());
      Row row;
      switch (c.sense()) {
        case Sense::equal:
          row = make_row(c, f);
          row.b = f * c.rhs();
          break;
        case Sense::less_equal:
          row = make_row(c, f);
          row.b = f * c.rhs();
          row.slack = slacks_++;
          row.t_coef = c.margin_weight();
          break;
        case Sense::greater_equal:
          row = make_row(c, -f);
          row.b = -f * c.rhs();
          row.slack = slacks_++;
          row.t_coef = c.margin_weight();
          break;
      }
      rows_.push_back(std::move(row));
    }
    Row cap;
    cap.kind = Row::Kind::none;
    cap.slack = slacks_++;
    cap.t_coef = 1.0;
    cap.b = cap_;
    rows_.push_back(std::move(cap));
    m_ = static_cast<int>(rows_.size());
    b_.resize(m_);
    c_.resize(m_);
    for (int i = 0; i < m_; ++i) {
      b_(i) = rows_[static_cast<std::size_t>(i)].b;
      c_(i) = rows_[static_cast<std::size_t>(i)].t_coef;
      const auto kind = rows_[static_cast<std::size_t>(i)].kind;
      if (kind == Row::Kind::dense) dense_rows_.push_back(i);
      if (kind == Row::Kind::sparse) sparse_rows_.push_back(i);
    }
  }

  SdpOutcome solve();

 private:
  struct Direction {
    CMatrix dX;
    CMatrix dZ;
    RVector ds;
    RVector dw;
    RVector dy;
    double dt = 0.0;
  };

  RVector apply_rows(const CMatrix& X) const {
    RVector out(m_);
    for (int i = 0; i < m_; ++i) out(i) = row_apply(rows_[static_cast<std::size_t>(i)], X);
    return out;
  }

  CMatrix adjoint_rows(const RVector& y) const {
    CMatrix out = CMatrix::Zero(n_, n_);
    for (int i = 0; i < m_; ++i) row_accumulate(rows_[static_cast<std::size_t>(i)], y(i), out);
    return out;
  }

  // G s: slack contribution to each row. G^T y: row multiplier for each slack.
  RVector slack_rows(const RVector& s) const {
    RVector out = RVector::Zero(m_);
    for (int i = 0; i < m_; ++i) {
      const int k = rows_[static_cast<std::size_t>(i)].slack;
      if (k >= 0) out(i) = s(k);
    }
    return out;
  }
  RVector slack_multipliers(const RVector& y) const {
    RVector out(slacks_);
    for (int i = 0; i < m_; ++i) {
      const int k = rows_[static_cast<std::size_t>(i)].slack;
      if (k >= 0) out(k) = y(i);
    }
    return out;
  }

  RMatrix schur(const CMatrix& X, const CMatrix& Zinv) const;
  Direction newton(const CMatrix& X, const CMatrix& Zinv, const RVector& s, const RVector& w,
                   const CMatrix& F, const RVector& lp_rc, const RVector& r_p,
                   const CMatrix& R_d, const RVector& r_w, double r_t) const;

  std::optional<CMatrix> certify(const CMatrix& X) const;
  bool passes(const CMatrix& X) const;
  std::optional<CMatrix> rebalance(const CMatrix& X) const;

  const SdpFeasibilityProblem& problem_;
  double tol_;
  SdpOptions options_;
  int n_;
  int m_ = 0;
  int slacks_ = 0;
  // Upper limit on t. A normalized row can have slack up to about the trace
  // of X, so the cap grows with the dimension to leave that range usable.
  double cap_ = 1.0;
  std::vector<Row> rows_;
  std::vector<int> dense_rows_;
  std::vector<int> sparse_rows_;
  std::vector<double> norms_;
  // Equality rows of the form a X_rr = b: (r, b / a).
  std::vector<std::pair<int, double>> diagonal_targets_;
  RVector b_;
  RVector c_;
  Eigen::LDLT<RMatrix> factor_;
  RVector v_;  // M^{-1} c
  double cv_ = 0.0;
};

RMatrix MaxMarginSolver::schur(const CMatrix& X, const CMatrix& Zinv) const {
  // M_ij = Re Tr[A_i X A_j Z^{-1}]
  RMatrix M = RMatrix::Zero(m_, m_);
  for (int j : dense_rows_) {
    const CMatrix W = X * rows_[static_cast<std::size_t>(j)].dense * Zinv;
    for (int i = 0; i < m_; ++i) {
      const Row& ri = rows_[static_cast<std::size_t>(i)];
      double v = 0.0;
      if (ri.kind == Row::Kind::dense) {
        v = ri.dense.cwiseProduct(W.transpose()).sum().real();
      } else if (ri.kind == Row::Kind::sparse) {
        for (const auto& e : ri.triplets) v += (e.v * W(e.c, e.r)).real();
      }
      M(i, j) = v;
      M(j, i) = v;
    }
  }
  for (std::size_t a = 0; a < sparse_rows_.size(); ++a) {
    const Row& ri = rows_[static_cast<std::size_t>(sparse_rows_[a])];
    for (std::size_t bidx = a; bidx < sparse_rows_.size(); ++bidx) {
      const Row& rj = rows_[static_cast<std::size_t>(sparse_rows_[bidx])];
      cplx v = 0.0;
      for (const auto& p : ri.triplets)
        for (const auto& q : rj.triplets) v += p.v * q.v * X(p.c, q.r) * Zinv(q.c, p.r);
      M(sparse_rows_[a], sparse_rows_[bidx]) = v.real();
      M(sparse_rows_[bidx], sparse_rows_[a]) = v.real();
    }
  }
  return M;
}

MaxMarginSolver::Direction MaxMarginSolver::newton(const CMatrix& X, const CMatrix& Zinv,
                                                   const RVector& s, const RVector& w,
                                                   const CMatrix& F, const RVector& lp_rc,
                                                   const RVector& r_p, const CMatrix& R_d,
                                                   const RVector& r_w, double r_t) const {
  // dX = F + herm(X A*(dy) Z^{-1}),  dZ = R_d - A*(dy),  dw = r_w - G^T dy,
  // ds = lp_rc / w - (s / w) .* dw.
  const RVector ratio = s.cwiseQuotient(w);
  const RVector ds0 = lp_rc.cwiseQuotient(w) - ratio.cwiseProduct(r_w);
  const RVector rhs = r_p - apply_rows(F) - slack_rows(ds0);

  const RVector u = factor_.solve(rhs);
  Direction dir;
  dir.dt = (c_.dot(u) - r_t) / cv_;
  dir.dy = u - v_ * dir.dt;
  const CMatrix Ady = adjoint_rows(dir.dy);
  dir.dZ = R_d - Ady;
  dir.dX = F + herm(X * Ady * Zinv);
  dir.dw = r_w - slack_multipliers(dir.dy);
  dir.ds = ds0 + ratio.cwiseProduct(slack_multipliers(dir.dy));

  // The Schur matrix loses accuracy as X approaches low rank; refine against
  // the primal equations actually attained by the assembled direction.
  for (int pass = 0; pass < 2; ++pass) {
    const RVector e = r_p - apply_rows(dir.dX) - slack_rows(dir.ds) - c_ * dir.dt;
    if (e.cwiseAbs().maxCoeff() <= 1e-3 * tol_) break;
    const RVector du = factor_.solve(e);
    const double ddt = c_.dot(du) / cv_;
    const RVector ddy = du - v_ * ddt;
    const CMatrix Addy = adjoint_rows(ddy);
    const RVector shift = slack_multipliers(ddy);
    dir.dt += ddt;
    dir.dy += ddy;
    dir.dZ -= Addy;
    dir.dX += herm(X * Addy * Zinv);
    dir.dw -= shift;
    dir.ds += ratio.cwiseProduct(shift);
  }
  return dir;
}

bool MaxMarginSolver::passes(const CMatrix& X) const {
  for (std::size_t i = 0; i < problem_.constraints.size(); ++i) {
    if (problem_.constraints[i].violation(X) > tol_ * norms_[i]) return false;
  }
  return min_eigenvalue(X) >= -tol_;
}

// D X D with D diagonal, chosen so every diagonal equality row holds exactly.
// A congruence keeps X positive semidefinite.
std::optional<CMatrix> MaxMarginSolver::rebalance(const CMatrix& X) const {
  if (diagonal_targets_.empty()) return std::nullopt;
  RVector d = RVector::Ones(n_);
  for (const auto& [r, target] : diagonal_targets_) {
    const double x = X(r, r).real();
    if (!(x > 0.0) || !(target > 0.0)) return std::nullopt;
    d(r) = std::sqrt(target / x);
  }
  return herm(d.asDiagonal() * X * d.asDiagonal());
}

std::optional<CMatrix> MaxMarginSolver::certify(const CMatrix& X) const {
  if (passes(X)) return X;
  if (auto R = rebalance(X); R && passes(*R)) return R;
  return std::nullopt;
}

SdpOutcome MaxMarginSolver::solve() {
  const int p = slacks_;
  const double order = static_cast<double>(n_ + p);
  CMatrix X = CMatrix::Identity(n_, n_);
  CMatrix Z = CMatrix::Identity(n_, n_);
  RVector s = RVector::Ones(p);
  RVector w = RVector::Ones(p);
  RVector y = RVector::Zero(m_);
  double t = 0.0;

  SdpOutcome out;
  std::optional<CMatrix> best;
  double best_t = -std::numeric_limits<double>::infinity();
  auto accept = [&]() {
    out.status = SdpStatus::feasible;
    out.X = std::move(best);
    out.margin = best_t;
    return out;
  };
  const double inner_tol = 0.1 * tol_;
  const CMatrix I = CMatrix::Identity(n_, n_);
  for (int it = 0; it < options_.max_iterations; ++it) {
    out.iterations = it;
    const RVector r_p = b_ - apply_rows(X) - slack_rows(s) - c_ * t;
    const CMatrix R_d = -adjoint_rows(y) - Z;
    const RVector r_w = -slack_multipliers(y) - w;
    const double r_t = -1.0 - c_.dot(y);
    const double mu = (inner(X, Z) + s.dot(w)) / order;

    const double pinf = r_p.cwiseAbs().maxCoeff();
    const double dinf = std::max({R_d.cwiseAbs().maxCoeff(),
                                  p ? r_w.cwiseAbs().maxCoeff() : 0.0, std::abs(r_t)});
    const double upper = -b_.dot(y);  // bound on t when the dual is feasible
    const bool primal_ok = pinf <= inner_tol;
    const bool dual_ok = dinf <= inner_tol;

    if (dual_ok && upper < -tol_) {
      out.status = SdpStatus::infeasible;
      out.margin = upper;
      return out;
    }
    // The direct check decides; the gate only skips hopeless candidates. The
    // last row (the cap on t) does not involve X.
    const double pinf_x = r_p.head(m_ - 1).cwiseAbs().maxCoeff();
    if (pinf_x <= 1e3 * tol_ && t >= 0.0 && t > best_t) {
      // Any iterate that passes the direct check is a valid answer; keep the
      // best one in case the iteration later stalls.
      if (auto V = certify(X)) {
        best = std::move(V);
        best_t = t;
      }
    }
    if (best && best_t == t) {
      // t never exceeds the cap, so a fraction of it is near-optimal even when
      // the dual cannot converge (unbounded optimal face).
      const double bound = dual_ok ? std::min(upper, cap_) : cap_;
      const bool near_optimal = t >= options_.target_fraction * bound;
      const bool converged = primal_ok && dual_ok && mu <= inner_tol;
      if ((options_.early_exit && near_optimal) || converged) return accept();
    }
    if (primal_ok && dual_ok && mu <= 1e-3 * inner_tol) {
      // Optimal to working precision: t is the max-slack value.
      if (t >= -tol_) {
        if (!best) {
          best = certify(X);
          best_t = t;
        }
        if (best) return accept();
        out.status = SdpStatus::inconclusive;
        out.margin = t;
        return out;
      }
      out.status = SdpStatus::infeasible;
      out.margin = t;
      return out;
    }

    const Eigen::LLT<CMatrix> cholX(X);
    const Eigen::LLT<CMatrix> cholZ(Z);
    if (cholX.info() != Eigen::Success || cholZ.info() != Eigen::Success) break;
    const CMatrix LXinv = cholX.matrixL().solve(I);
    const CMatrix LZinv = cholZ.matrixL().solve(I);
    const CMatrix Zinv = LZinv.adjoint() * LZinv;

    RMatrix M = schur(X, Zinv);
    for (int i = 0; i < m_; ++i) {
      const int k = rows_[static_cast<std::size_t>(i)].slack;
      if (k >= 0) M(i, i) += s(k) / w(k);
    }
    const double reg = 1e-14 * std::max(1.0, M.diagonal().cwiseAbs().maxCoeff());
    M.diagonal().array() += reg;
    factor_.compute(M);
    if (factor_.info() != Eigen::Success) break;
    v_ = factor_.solve(c_);
    cv_ = c_.dot(v_);
    if (!(std::abs(cv_) > 0.0) || !std::isfinite(cv_)) break;

    const CMatrix E = herm(X * R_d * Zinv);

    // Predictor (affine scaling).
    const CMatrix F_aff = -X - E;
    const RVector rc_aff = -s.cwiseProduct(w);
    const Direction aff = newton(X, Zinv, s, w, F_aff, rc_aff, r_p, R_d, r_w, r_t);
    const double ap_aff =
        std::min({1.0, max_psd_step(LXinv, aff.dX), p ? max_lp_step(s, aff.ds) : 1.0});
    const double ad_aff =
        std::min({1.0, max_psd_step(LZinv, aff.dZ), p ? max_lp_step(w, aff.dw) : 1.0});
    const double mu_aff = (inner(X + ap_aff * aff.dX, Z + ad_aff * aff.dZ) +
                           (s + ap_aff * aff.ds).dot(w + ad_aff * aff.dw)) /
                          order;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    // Corrector.
    const CMatrix F = sigma * mu * Zinv - X - herm(aff.dX * aff.dZ * Zinv) - E;
    const RVector rc = RVector::Constant(p, sigma * mu) - s.cwiseProduct(w) -
                       aff.ds.cwiseProduct(aff.dw);
    const Direction dir = newton(X, Zinv, s, w, F, rc, r_p, R_d, r_w, r_t);

    const double tau = std::max(0.9, std::min(0.995, 1.0 - 10.0 * mu));
    const double ap =
        std::min({1.0, tau * max_psd_step(LXinv, dir.dX), p ? tau * max_lp_step(s, dir.ds) : 1.0});
    const double ad =
        std::min({1.0, tau * max_psd_step(LZinv, dir.dZ), p ? tau * max_lp_step(w, dir.dw) : 1.0});
    if (!(ap > 0.0) || !(ad > 0.0) || !std::isfinite(ap) || !std::isfinite(ad)) break;

    X = herm(X + ap * dir.dX);
    s += ap * dir.ds;
    t += ap * dir.dt;
    Z = herm(Z + ad * dir.dZ);
    w += ad * dir.dw;
    y += ad * dir.dy;
  }
  if (best) return accept();
  out.status = SdpStatus::inconclusive;
  out.margin = t;
  return out;
}

}  // namespace

SdpOutcome check_feasibility(const SdpFeasibilityProblem& problem, double tol,
                             const SdpOptions& options) {
  problem.validate();
  if (!(tol > 0.0)) throw std::invalid_argument("check_feasibility: tol must be positive");
  MaxMarginSolver solver(problem, tol, options);
  return solver.solve();
}

}  // namespace irsse
