#include "irsse/model.hpp"

#include <stdexcept>

namespace irsse {

EffectiveChannels effective_channel(const ChannelSet& ch, const CVector& phi) {
  const Eigen::Index n = ch.h_IF.size();
  if (phi.size() != n) throw std::invalid_argument("effective_channel: phi must have N entries");
  EffectiveChannels eff{ch.h_f, ch.h_e};
  if (n > 0) {
    if (ch.H_I.rows() != n || ch.H_I.cols() != ch.h_f.size())
      throw std::invalid_argument("effective_channel: H_I shape mismatch");
    eff.h_F += ch.h_IF.cwiseProduct(phi.transpose()) * ch.H_I;
    eff.h_E += ch.h_IE.cwiseProduct(phi.transpose()) * ch.H_I;
  }
  return eff;
}

double receiver_snr(const CRowVector& h, const CVector& alpha, const CVector& beta, double sigma2_o,
                    double sigma2_rx) {
  const cplx signal = (h.transpose().array() * alpha.array() * beta.array()).sum();
  const double leaked = (beta.cwiseAbs2().array() * h.transpose().cwiseAbs2().array()).sum();
  return std::norm(signal) / (sigma2_o * leaked + sigma2_rx);
}

double transmit_power(const CVector& alpha, const CVector& beta, double sigma2_o) {
  return ((alpha.cwiseAbs2().array() + sigma2_o) * beta.cwiseAbs2().array()).sum();
}

LinkQuality link_quality(const ChannelSet& ch, const BeamformerPair& bf, const ScenarioConfig& cfg) {
  if (bf.beta.size() != ch.h_f.size())
    throw std::invalid_argument("link_quality: beta must have K entries");
  const EffectiveChannels eff = effective_channel(ch, bf.phi);
  LinkQuality q;
  q.snr_fc = receiver_snr(eff.h_F, ch.alpha, bf.beta, cfg.sigma2_o, cfg.sigma2_f);
  q.snr_ed = receiver_snr(eff.h_E, ch.alpha, bf.beta, cfg.sigma2_o, cfg.sigma2_e);
  q.mse_fc = mse_from_snr(q.snr_fc);
  q.mse_ed = mse_from_snr(q.snr_ed);
  q.power = transmit_power(ch.alpha, bf.beta, cfg.sigma2_o);
  return q;
}

FeasibilityReport check_feasible(const ChannelSet& ch, const BeamformerPair& bf,
                                 const ScenarioConfig& cfg, double tol) {
  return check_feasible(ch, bf, cfg, tol, tol, tol);
}

FeasibilityReport check_feasible(const ChannelSet& ch, const BeamformerPair& bf,
                                 const ScenarioConfig& cfg, double power_tol, double ed_tol,
                                 double modulus_tol) {
  const LinkQuality q = link_quality(ch, bf, cfg);
  FeasibilityReport r;
  r.power_margin = cfg.p_t - q.power;
  r.ed_margin = cfg.eta - q.snr_ed;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < bf.phi.size(); ++i)
    worst = std::max(worst, std::abs(std::abs(bf.phi(i)) - 1.0));
  r.modulus_margin = -worst;
  r.power_ok = q.power <= cfg.p_t * (1.0 + power_tol);
  r.ed_ok = q.snr_ed <= cfg.eta * (1.0 + ed_tol);
  r.modulus_ok = worst <= modulus_tol;
  return r;
}

}  // namespace irsse
