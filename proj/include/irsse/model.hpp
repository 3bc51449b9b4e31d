#pragma once

#include "irsse/scenario.hpp"

namespace irsse {

/// Sensor transmit weights and IRS reflection coefficients (|phi_i| = 1).
struct BeamformerPair {
  CVector beta;
  CVector phi;
};

/// Cascaded-plus-direct channels seen by the FC and ED for a fixed phase profile.
struct EffectiveChannels {
  CRowVector h_F;
  CRowVector h_E;
};

struct LinkQuality {
  double snr_fc = 0.0;
  double snr_ed = 0.0;
  double mse_fc = 1.0;
  double mse_ed = 1.0;
  double power = 0.0;
};

struct FeasibilityReport {
  bool power_ok = true;
  bool ed_ok = true;
  bool modulus_ok = true;
  double power_margin = 0.0;    // P_T - power
  double ed_margin = 0.0;       // eta - SNR_ED
  double modulus_margin = 0.0;  // -max_i ||phi_i| - 1|

  bool ok() const { return power_ok && ed_ok && modulus_ok; }
};

/// h_F = h_IF D(phi) H_I + h_f and the ED counterpart. Throws
/// std::invalid_argument when phi does not have N entries.
EffectiveChannels effective_channel(const ChannelSet& ch, const CVector& phi);

/// LMMSE error of a unit-power scalar parameter at the given SNR.
inline double mse_from_snr(double snr) { return 1.0 / (1.0 + snr); }

/// |h (alpha .* beta)|^2 / (sigma2_o sum_k |beta_k|^2 |h_k|^2 + sigma2_rx)
double receiver_snr(const CRowVector& h, const CVector& alpha, const CVector& beta, double sigma2_o,
                    double sigma2_rx);

/// sum_k (|alpha_k|^2 + sigma2_o) |beta_k|^2
double transmit_power(const CVector& alpha, const CVector& beta, double sigma2_o);

LinkQuality link_quality(const ChannelSet& ch, const BeamformerPair& bf, const ScenarioConfig& cfg);

FeasibilityReport check_feasible(const ChannelSet& ch, const BeamformerPair& bf,
                                 const ScenarioConfig& cfg, double tol);

/// Separate relative tolerances for the power budget, the ED ceiling and the
/// unit-modulus deviation.
FeasibilityReport check_feasible(const ChannelSet& ch, const BeamformerPair& bf,
                                 const ScenarioConfig& cfg, double power_tol, double ed_tol,
                                 double modulus_tol);

}  // namespace irsse
