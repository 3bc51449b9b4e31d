#pragma once

#include "irsse/scenario.hpp"

namespace irsse {

// Lifted representations of the SNR constraints
//
//   S = |h_F (alpha .* beta)|^2 - gamma (sigma2_o sum_k |beta_k|^2 |h_F,k|^2 + sigma2_f) >= 0
//   T = |h_E (alpha .* beta)|^2 - eta   (sigma2_o sum_k |beta_k|^2 |h_E,k|^2 + sigma2_e) <= 0
//
// in terms of B = beta beta^H (K x K) and Q = v v^H ((N+1) x (N+1)), where the
// lifted phase vector is v = [conj(phi); 1]. With that convention every block
// below is linear in B (phase step) or Q (weight step) and the lifted forms
// agree exactly with S and T evaluated on (phi, beta).

/// v = [conj(phi); 1].
CVector lift_phase(const CVector& phi);

/// Inverse of lift_phase for a rank-one direction: de-rotates by the last
/// entry, conjugates and projects each entry onto the unit circle. Entries of
/// zero magnitude map to 1.
CVector phase_from_lifted(const CVector& v);

/// Re Tr[A B] for square matrices of equal size.
double trace_product(const CMatrix& a, const CMatrix& b);

/// Phase-step blocks for a fixed B. P = [[P1, p2], [p2^H, 0]] and
/// R = [[R1, r2], [r2^H, 0]]; the tilde members are the ED counterparts.
struct PhaseStepForms {
  CMatrix P;
  CMatrix R;
  double p3 = 0.0;
  double r3 = 0.0;
  CMatrix P_tilde;
  CMatrix R_tilde;
  double p3_tilde = 0.0;
  double r3_tilde = 0.0;
};

/// Weight-step matrices for a fixed Q. Kmat = [K1 k2], Lmat = [L1 h_f^H] (and
/// tilde versions). The Q-dependent products are folded in at build time:
/// signal = Kmat Q Kmat^H and leak = diag(Lmat Q Lmat^H).
struct WeightStepForms {
  CMatrix Kmat;
  CMatrix Lmat;
  CMatrix K_tilde;
  CMatrix L_tilde;
  RVector Lambda;  // diagonal of D(alpha^H) D(alpha)

  CMatrix signal;
  RVector leak;
  CMatrix signal_tilde;
  RVector leak_tilde;
};

/// Throws std::invalid_argument if B is not K x K Hermitian.
PhaseStepForms build_phase_forms(const ChannelSet& ch, const CMatrix& B);

double eval_S_phase(const CMatrix& Q, const PhaseStepForms& forms, double gamma, double sigma2_o,
                    double sigma2_f);
double eval_T_phase(const CMatrix& Q, const PhaseStepForms& forms, double eta, double sigma2_o,
                    double sigma2_e);

/// Throws std::invalid_argument if Q is not (N+1) x (N+1) Hermitian.
WeightStepForms build_weight_forms(const ChannelSet& ch, const CMatrix& Q);

double eval_S_weight(const CMatrix& B, const WeightStepForms& forms, double gamma, double sigma2_o,
                     double sigma2_f);
double eval_T_weight(const CMatrix& B, const WeightStepForms& forms, double eta, double sigma2_o,
                     double sigma2_e);

/// Direct S(phi, beta) and T(phi, beta) from the effective channels.
double direct_S(const ChannelSet& ch, const CVector& phi, const CVector& beta, double gamma,
                double sigma2_o, double sigma2_f);
double direct_T(const ChannelSet& ch, const CVector& phi, const CVector& beta, double eta,
                double sigma2_o, double sigma2_e);

/// SNR ratio implied by the phase-step forms: numerator / denominator of S.
double phase_step_snr(const CMatrix& Q, const PhaseStepForms& forms, double sigma2_o,
                      double sigma2_f);
double phase_step_snr_ed(const CMatrix& Q, const PhaseStepForms& forms, double sigma2_o,
                         double sigma2_e);
double weight_step_snr(const CMatrix& B, const WeightStepForms& forms, double sigma2_o,
                       double sigma2_f);
double weight_step_snr_ed(const CMatrix& B, const WeightStepForms& forms, double sigma2_o,
                          double sigma2_e);

}  // namespace irsse
