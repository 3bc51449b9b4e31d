#include "irsse/sdr_forms.hpp"

#include <stdexcept>

#include "irsse/model.hpp"

namespace irsse {

namespace {

void require_hermitian(const CMatrix& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n)
    throw std::invalid_argument(std::string(what) + ": wrong dimensions");
  const double scale = m.size() ? std::max(1.0, m.cwiseAbs().maxCoeff()) : 1.0;
  if (hermitian_defect(m) > 1e-10 * scale)
    throw std::invalid_argument(std::string(what) + ": matrix is not Hermitian");
}

CMatrix bordered(const CMatrix& block, const CVector& column) {
  const Eigen::Index n = block.rows();
  CMatrix out = CMatrix::Zero(n + 1, n + 1);
  out.topLeftCorner(n, n) = block;
  out.topRightCorner(n, 1) = column;
  out.bottomLeftCorner(1, n) = column.adjoint();
  return out;
}

struct PhaseBlocks {
  CMatrix P;
  CMatrix R;
  double p3;
  double r3;
};

// Blocks for one receiver given its IRS link h_irs and direct link h_direct.
PhaseBlocks phase_blocks(const CMatrix& H_I, const CRowVector& h_irs, const CRowVector& h_direct,
                         const CVector& alpha, const CMatrix& B) {
  // U = D(h_irs) H_I D(alpha), V = D(h_irs) H_I, w = D(alpha^H) h_direct^H
  const CMatrix V = h_irs.transpose().asDiagonal() * H_I;
  const CMatrix U = V * alpha.asDiagonal();
  const CVector w = alpha.conjugate().cwiseProduct(h_direct.adjoint());
  const CVector b_diag = B.diagonal().real().cast<cplx>();
  const CVector h_dir_h = h_direct.adjoint();

  const CMatrix UB = U * B;
  PhaseBlocks out;
  out.P = bordered(UB * U.adjoint(), UB * w);
  out.p3 = (w.adjoint() * B * w)(0, 0).real();
  const CMatrix VD = V * b_diag.asDiagonal();
  out.R = bordered(VD * V.adjoint(), VD * h_dir_h);
  out.r3 = (b_diag.real().array() * h_direct.transpose().cwiseAbs2().array()).sum();
  // Clean rounding asymmetry so downstream Hermitian checks are exact.
  out.P = 0.5 * (out.P + out.P.adjoint()).eval();
  out.R = 0.5 * (out.R + out.R.adjoint()).eval();
  return out;
}

}  // namespace

CVector lift_phase(const CVector& phi) {
  CVector v(phi.size() + 1);
  v.head(phi.size()) = phi.conjugate();
  v(phi.size()) = 1.0;
  return v;
}

CVector phase_from_lifted(const CVector& v) {
  if (v.size() < 1) throw std::invalid_argument("phase_from_lifted: empty vector");
  const Eigen::Index n = v.size() - 1;
  const cplx last = v(n);
  const cplx rot = std::abs(last) > 0.0 ? std::conj(last) / std::abs(last) : cplx(1.0);
  CVector phi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx z = std::conj(v(i) * rot);
    const double mag = std::abs(z);
    phi(i) = mag > 0.0 ? z / mag : cplx(1.0);
  }
  return phi;
}

double trace_product(const CMatrix& a, const CMatrix& b) {
  return a.cwiseProduct(b.transpose()).sum().real();
}

PhaseStepForms build_phase_forms(const ChannelSet& ch, const CMatrix& B) {
  require_hermitian(B, ch.h_f.size(), "build_phase_forms");
  const PhaseBlocks fc = phase_blocks(ch.H_I, ch.h_IF, ch.h_f, ch.alpha, B);
  const PhaseBlocks ed = phase_blocks(ch.H_I, ch.h_IE, ch.h_e, ch.alpha, B);
  PhaseStepForms f;
  f.P = fc.P;
  f.R = fc.R;
  f.p3 = fc.p3;
  f.r3 = fc.r3;
  f.P_tilde = ed.P;
  f.R_tilde = ed.R;
  f.p3_tilde = ed.p3;
  f.r3_tilde = ed.r3;
  return f;
}

double eval_S_phase(const CMatrix& Q, const PhaseStepForms& f, double gamma, double sigma2_o,
                    double sigma2_f) {
  return trace_product(Q, f.P) + f.p3 - gamma * (sigma2_o * (trace_product(Q, f.R) + f.r3) + sigma2_f);
}

double eval_T_phase(const CMatrix& Q, const PhaseStepForms& f, double eta, double sigma2_o,
                    double sigma2_e) {
  return trace_product(Q, f.P_tilde) + f.p3_tilde -
         eta * (sigma2_o * (trace_product(Q, f.R_tilde) + f.r3_tilde) + sigma2_e);
}

double phase_step_snr(const CMatrix& Q, const PhaseStepForms& f, double sigma2_o, double sigma2_f) {
  return (trace_product(Q, f.P) + f.p3) / (sigma2_o * (trace_product(Q, f.R) + f.r3) + sigma2_f);
}

double phase_step_snr_ed(const CMatrix& Q, const PhaseStepForms& f, double sigma2_o,
                         double sigma2_e) {
  return (trace_product(Q, f.P_tilde) + f.p3_tilde) /
         (sigma2_o * (trace_product(Q, f.R_tilde) + f.r3_tilde) + sigma2_e);
}

WeightStepForms build_weight_forms(const ChannelSet& ch, const CMatrix& Q) {
  const Eigen::Index n = ch.h_IF.size();
  require_hermitian(Q, n + 1, "build_weight_forms");
  const Eigen::Index k = ch.h_f.size();

  auto assemble = [&](const CRowVector& h_irs, const CRowVector& h_direct, CMatrix& kmat,
                      CMatrix& lmat) {
    // L1 = H_I^H D(h_irs^H), K1 = D(alpha^H) L1
    kmat.resize(k, n + 1);
    lmat.resize(k, n + 1);
    if (n > 0) lmat.leftCols(n) = ch.H_I.adjoint() * h_irs.adjoint().asDiagonal();
    lmat.col(n) = h_direct.adjoint();
    kmat = ch.alpha.conjugate().asDiagonal() * lmat;
  };

  WeightStepForms f;
  assemble(ch.h_IF, ch.h_f, f.Kmat, f.Lmat);
  assemble(ch.h_IE, ch.h_e, f.K_tilde, f.L_tilde);
  f.Lambda = ch.alpha.cwiseAbs2();

  auto fold = [&Q](const CMatrix& kmat, const CMatrix& lmat, CMatrix& signal, RVector& leak) {
    signal = kmat * Q * kmat.adjoint();
    signal = 0.5 * (signal + signal.adjoint()).eval();
    const CMatrix lq = lmat * Q;
    leak.resize(lmat.rows());
    for (Eigen::Index i = 0; i < lmat.rows(); ++i) leak(i) = lq.row(i).dot(lmat.row(i)).real();
  };
  fold(f.Kmat, f.Lmat, f.signal, f.leak);
  fold(f.K_tilde, f.L_tilde, f.signal_tilde, f.leak_tilde);
  return f;
}

namespace {

double leak_term(const CMatrix& B, const RVector& leak) {
  return (B.diagonal().real().array() * leak.array()).sum();
}

}  // namespace

double eval_S_weight(const CMatrix& B, const WeightStepForms& f, double gamma, double sigma2_o,
                     double sigma2_f) {
  return trace_product(f.signal, B) - gamma * (sigma2_o * leak_term(B, f.leak) + sigma2_f);
}

double eval_T_weight(const CMatrix& B, const WeightStepForms& f, double eta, double sigma2_o,
                     double sigma2_e) {
  return trace_product(f.signal_tilde, B) - eta * (sigma2_o * leak_term(B, f.leak_tilde) + sigma2_e);
}

double weight_step_snr(const CMatrix& B, const WeightStepForms& f, double sigma2_o, double sigma2_f) {
  return trace_product(f.signal, B) / (sigma2_o * leak_term(B, f.leak) + sigma2_f);
}

double weight_step_snr_ed(const CMatrix& B, const WeightStepForms& f, double sigma2_o,
                          double sigma2_e) {
  return trace_product(f.signal_tilde, B) / (sigma2_o * leak_term(B, f.leak_tilde) + sigma2_e);
}

double direct_S(const ChannelSet& ch, const CVector& phi, const CVector& beta, double gamma,
                double sigma2_o, double sigma2_f) {
  const EffectiveChannels eff = effective_channel(ch, phi);
  const cplx signal = (eff.h_F.transpose().array() * ch.alpha.array() * beta.array()).sum();
  const double leak = (beta.cwiseAbs2().array() * eff.h_F.transpose().cwiseAbs2().array()).sum();
  return std::norm(signal) - gamma * (sigma2_o * leak + sigma2_f);
}

double direct_T(const ChannelSet& ch, const CVector& phi, const CVector& beta, double eta,
                double sigma2_o, double sigma2_e) {
  const EffectiveChannels eff = effective_channel(ch, phi);
  const cplx signal = (eff.h_E.transpose().array() * ch.alpha.array() * beta.array()).sum();
  const double leak = (beta.cwiseAbs2().array() * eff.h_E.transpose().cwiseAbs2().array()).sum();
  return std::norm(signal) - eta * (sigma2_o * leak + sigma2_e);
}

}  // namespace irsse
