#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "irsse/optimizer.hpp"

namespace irsse {

double lifted_weight_snr(const CRowVector& h, const CVector& alpha, const CMatrix& B,
                         double sigma2_o, double sigma2_rx) {
  const CRowVector g = h.cwiseProduct(alpha.transpose());
  const double signal = (g * B * g.adjoint())(0, 0).real();
  const double leak = (B.diagonal().real().array() * h.transpose().cwiseAbs2().array()).sum();
  return signal / (sigma2_o * leak + sigma2_rx);
}

double max_weight_scale(const ChannelSet& ch, const CVector& phi, const CVector& beta,
                        const ScenarioConfig& cfg) {
  const double power = transmit_power(ch.alpha, beta, cfg.sigma2_o);
  if (!(power > 0.0)) return 0.0;
  double c2 = cfg.p_t / power;
  if (cfg.ed_constraint) {
    const CRowVector h_E = effective_channel(ch, phi).h_E;
    const double a = std::norm((h_E.transpose().array() * ch.alpha.array() * beta.array()).sum());
    const double b = (beta.cwiseAbs2().array() * h_E.transpose().cwiseAbs2().array()).sum();
    const double excess = a - cfg.eta * cfg.sigma2_o * b;
    if (excess > 0.0) c2 = std::min(c2, cfg.eta * cfg.sigma2_e / excess);
  }
  return c2;
}

double rank_ratio(const CMatrix& X) {
  if (X.rows() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(X, Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();
  const double top = ev(ev.size() - 1);
  if (!(top > 0.0)) return 0.0;
  return std::max(ev(ev.size() - 2), 0.0) / top;
}

namespace {

// Columns V * sqrt(lambda) for eigenvalues above a relative threshold.
CMatrix psd_factor(const CMatrix& X) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(X);
  const RVector& ev = es.eigenvalues();
  const double cut = 1e-10 * std::max(ev.maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i)
    if (ev(i) > cut) keep.push_back(i);
  CMatrix F(X.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    F.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) * std::sqrt(ev(keep[j]));
  return F;
}

// Hermitian r x r matrix from r^2 real coordinates: diagonal, then real and
// imaginary parts of the strict upper triangle.
CMatrix hermitian_from_coords(const RVector& c, Eigen::Index r) {
  CMatrix U = CMatrix::Zero(r, r);
  Eigen::Index idx = 0;
  for (Eigen::Index i = 0; i < r; ++i) U(i, i) = c(idx++);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = i + 1; j < r; ++j) {
      U(i, j) = cplx(c(idx), c(idx + 1));
      U(j, i) = std::conj(U(i, j));
      idx += 2;
    }
  return U;
}

}  // namespace

CVector purify_rank_one(const CMatrix& X, const std::vector<CMatrix>& functionals) {
  CMatrix F = psd_factor(X);
  if (F.cols() == 0) return CVector::Zero(X.rows());
  const Eigen::Index m = static_cast<Eigen::Index>(functionals.size());
  while (F.cols() > 1 && F.cols() * F.cols() > m) {
    const Eigen::Index r = F.cols();
    // Row i: coordinates of U -> Re Tr[F^H A_i F U].
    RMatrix M(std::max<Eigen::Index>(m, 1), r * r);
    M.setZero();
    for (Eigen::Index i = 0; i < m; ++i) {
      const CMatrix G = F.adjoint() * functionals[static_cast<std::size_t>(i)] * F;
      Eigen::Index idx = 0;
      for (Eigen::Index a = 0; a < r; ++a) M(i, idx++) = G(a, a).real();
      for (Eigen::Index a = 0; a < r; ++a)
        for (Eigen::Index b = a + 1; b < r; ++b) {
          // Re Tr[G U] picks 2 Re(G_ba U_ab).
          M(i, idx++) = 2.0 * G(b, a).real();
          M(i, idx++) = -2.0 * G(b, a).imag();
        }
    }
    Eigen::JacobiSVD<RMatrix> svd(M, Eigen::ComputeFullV);
    const RVector coords = svd.matrixV().col(r * r - 1);
    const CMatrix U = hermitian_from_coords(coords, r);
    Eigen::SelfAdjointEigenSolver<CMatrix> eu(U, Eigen::EigenvaluesOnly);
    const RVector& mu = eu.eigenvalues();
    const double pivot = std::abs(mu(0)) > std::abs(mu(r - 1)) ? mu(0) : mu(r - 1);
    if (pivot == 0.0) break;
    const CMatrix W = CMatrix::Identity(r, r) - U / pivot;
    const CMatrix next = F * W * F.adjoint();
    F = psd_factor(0.5 * (next + next.adjoint()));
    if (F.cols() >= r) break;
  }
  return F.col(0);
}

ExtractionResult rank_one_extract(const CMatrix& X, ExtractionKind kind,
                                  const ExtractionContext& ctx, RandomStream& rng) {
  if (ctx.ch == nullptr || ctx.cfg == nullptr)
    throw std::invalid_argument("rank_one_extract: missing channel or config");
  const ChannelSet& ch = *ctx.ch;
  const ScenarioConfig& cfg = *ctx.cfg;
  const Eigen::Index expected = kind == ExtractionKind::phase ? ch.elements() + 1 : ch.sensors();
  if (X.rows() != expected || X.cols() != expected)
    throw std::invalid_argument("rank_one_extract: matrix has the wrong size");
  if (hermitian_defect(X) > 1e-8 * std::max(1.0, X.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("rank_one_extract: matrix is not Hermitian");

  ExtractionResult res;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(X);
  const RVector& ev = es.eigenvalues();
  const Eigen::Index n = ev.size();
  const double top = std::max(ev(n - 1), 0.0);
  res.rank_ratio = n > 1 && top > 0.0 ? std::max(ev(n - 2), 0.0) / top : 0.0;
  const bool rank_one = res.rank_ratio <= 1e-6;

  CMatrix sampler(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    sampler.col(i) = es.eigenvectors().col(i) * std::sqrt(std::max(ev(i), 0.0));
  auto gaussian_draw = [&]() {
    CVector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.complex_normal();
    return CVector(sampler * z);
  };
  const CVector dominant = es.eigenvectors().col(n - 1) * std::sqrt(top);
  const int draws = rank_one ? 0 : cfg.randomization_count;

  if (kind == ExtractionKind::phase) {
    CVector closest;
    double closest_ed = std::numeric_limits<double>::infinity();
    double closest_snr = 0.0;
    auto consider = [&](const CVector& lifted) {
      ++res.candidates;
      const CVector phi = phase_from_lifted(lifted);
      const EffectiveChannels eff = effective_channel(ch, phi);
      const double snr = lifted_weight_snr(eff.h_F, ch.alpha, ctx.partner_B, cfg.sigma2_o, cfg.sigma2_f);
      if (cfg.ed_constraint) {
        const double ed = lifted_weight_snr(eff.h_E, ch.alpha, ctx.partner_B, cfg.sigma2_o, cfg.sigma2_e);
        if (ed > cfg.eta * (1.0 + 1e-9)) {
          ++res.rejected;
          if (ed < closest_ed) {
            closest_ed = ed;
            closest = phi;
            closest_snr = snr;
          }
          return;
        }
      }
      if (!res.ok || snr > res.snr_fc) {
        res.ok = true;
        res.snr_fc = snr;
        res.vector = phi;
      }
    };
    consider(dominant);
    for (int d = 0; d < draws; ++d) consider(gaussian_draw());
    if (!res.ok && std::isfinite(closest_ed)) {
      res.ok = true;
      res.snr_fc = closest_snr;
      res.vector = closest;
    }
    return res;
  }

  const CVector& phi = ctx.partner_phi;
  if (phi.size() != ch.elements())
    throw std::invalid_argument("rank_one_extract: partner phase has the wrong size");
  const CRowVector h_F = effective_channel(ch, phi).h_F;
  auto consider = [&](const CVector& raw) {
    ++res.candidates;
    const double c2 = max_weight_scale(ch, phi, raw, cfg);
    if (!(c2 > 0.0) || !std::isfinite(c2)) {
      ++res.rejected;
      return;
    }
    const CVector beta = raw * std::sqrt(c2);
    const double snr = receiver_snr(h_F, ch.alpha, beta, cfg.sigma2_o, cfg.sigma2_f);
    if (!res.ok || snr > res.snr_fc) {
      res.ok = true;
      res.snr_fc = snr;
      res.vector = beta;
    }
  };

  if (!rank_one) {
    const CVector v = lift_phase(phi);
    const WeightStepForms wf = build_weight_forms(ch, v * v.adjoint());
    std::vector<CMatrix> functionals;
    CMatrix power = CMatrix::Zero(n, n);
    power.diagonal() = (ch.alpha.cwiseAbs2().array() + cfg.sigma2_o).matrix().cast<cplx>();
    functionals.push_back(power);
    CMatrix s = wf.signal;
    s.diagonal() -= (ctx.gamma * cfg.sigma2_o * wf.leak).cast<cplx>();
    functionals.push_back(s);
    if (cfg.ed_constraint) {
      CMatrix t = wf.signal_tilde;
      t.diagonal() -= (cfg.eta * cfg.sigma2_o * wf.leak_tilde).cast<cplx>();
      functionals.push_back(t);
    }
    consider(purify_rank_one(X, functionals));
  }
  consider(dominant);
  for (int d = 0; d < draws; ++d) consider(gaussian_draw());
  return res;
}

}  // namespace irsse
