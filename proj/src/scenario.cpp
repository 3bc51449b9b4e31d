#include "irsse/scenario.hpp"

#include <cmath>
#include <sstream>

namespace irsse {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

void validate(const ScenarioConfig& cfg) {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (cfg.K < 1) fail("K must be >= 1");
  if (cfg.N < 0) fail("N must be >= 0");
  if (!(cfg.region >= 0.0)) fail("region must be >= 0");
  if (!(cfg.d0 > 0.0)) fail("d0 must be > 0");
  if (!(cfg.sigma2_o > 0.0) || !(cfg.sigma2_f > 0.0) || !(cfg.sigma2_e > 0.0))
    fail("noise powers must be > 0");
  if (!(cfg.p_t > 0.0)) fail("p_t must be > 0");
  if (!(cfg.eta > 0.0)) fail("eta must be > 0");
  if (!(cfg.epsilon > 0.0)) fail("epsilon must be > 0");
  if (cfg.n_iter < 1) fail("n_iter must be >= 1");
  if (!cfg.alpha_spec.empty() && static_cast<int>(cfg.alpha_spec.size()) != cfg.K)
    fail("alpha_spec must have exactly K entries");
  if (cfg.randomization_count < 1) fail("randomization_count must be >= 1");
  if (!(cfg.delta >= 0.0)) fail("delta must be >= 0");
  if (!(cfg.sdp_tol > 0.0)) fail("sdp_tol must be > 0");
}

void ChannelSet::check() const {
  const Eigen::Index k = h_f.size();
  const Eigen::Index n = h_IF.size();
  auto bad = [](const std::string& what) { throw std::invalid_argument("ChannelSet: " + what); };
  if (k < 1) bad("no sensors");
  if (h_e.size() != k || alpha.size() != k) bad("sensor dimension mismatch");
  if (h_IE.size() != n) bad("IRS dimension mismatch");
  if (H_I.rows() != n || (n > 0 && H_I.cols() != k)) bad("H_I shape mismatch");
  const bool finite = H_I.allFinite() && h_IF.allFinite() && h_IE.allFinite() && h_f.allFinite() &&
                      h_e.allFinite() && alpha.allFinite();
  if (!finite) bad("non-finite entry");
}

ChannelSet ChannelSet::without_irs() const {
  ChannelSet out = *this;
  out.H_I.resize(0, h_f.size());
  out.h_IF.resize(0);
  out.h_IE.resize(0);
  return out;
}

NodeLayout place_sensors(const ScenarioConfig& cfg, RandomStream& rng) {
  validate(cfg);
  NodeLayout layout;
  layout.sensor_positions.reserve(static_cast<std::size_t>(cfg.K));
  for (int k = 0; k < cfg.K; ++k) {
    const double x = cfg.region * rng.uniform();
    const double y = cfg.region * rng.uniform();
    layout.sensor_positions.push_back({x, y});
  }
  layout.irs_pos = cfg.irs_pos;
  layout.fc_pos = cfg.fc_pos;
  layout.ed_pos = cfg.ed_pos;
  return layout;
}

double path_loss(double d, double mu_db, double d0, double nu) {
  if (!(d > 0.0) || !(d0 > 0.0)) {
    std::ostringstream msg;
    msg << "path_loss: distances must be positive (d=" << d << ", d0=" << d0 << ")";
    throw std::domain_error(msg.str());
  }
  return std::pow(10.0, mu_db / 10.0) * std::pow(d / d0, -nu);
}

ChannelSet draw_channels(const NodeLayout& layout, const ScenarioConfig& cfg, RandomStream& rng) {
  const int K = cfg.K;
  const int N = cfg.N;
  if (static_cast<int>(layout.sensor_positions.size()) != K)
    throw std::invalid_argument("draw_channels: layout has wrong sensor count");

  auto gain = [&](const Point2& a, const Point2& b, double nu) {
    return std::sqrt(path_loss(distance(a, b), cfg.mu_db, cfg.d0, nu));
  };

  ChannelSet ch;
  // Direct links come first so they are identical for every N.
  ch.h_f.resize(K);
  ch.h_e.resize(K);
  for (int k = 0; k < K; ++k) {
    const Point2& s = layout.sensor_positions[static_cast<std::size_t>(k)];
    ch.h_f(k) = gain(s, layout.fc_pos, cfg.nu_direct_links) * rng.complex_normal();
    ch.h_e(k) = gain(s, layout.ed_pos, cfg.nu_direct_links) * rng.complex_normal();
  }

  ch.H_I.resize(N, K);
  ch.h_IF.resize(N);
  ch.h_IE.resize(N);
  if (N > 0) {
    const double g_if = gain(layout.irs_pos, layout.fc_pos, cfg.nu_irs_links);
    const double g_ie = gain(layout.irs_pos, layout.ed_pos, cfg.nu_irs_links);
    for (int i = 0; i < N; ++i) ch.h_IF(i) = g_if * rng.complex_normal();
    for (int i = 0; i < N; ++i) ch.h_IE(i) = g_ie * rng.complex_normal();
    for (int k = 0; k < K; ++k) {
      const double g = gain(layout.sensor_positions[static_cast<std::size_t>(k)], layout.irs_pos,
                            cfg.nu_irs_links);
      for (int i = 0; i < N; ++i) ch.H_I(i, k) = g * rng.complex_normal();
    }
  }

  ch.alpha = CVector::Ones(K);
  if (!cfg.alpha_spec.empty()) {
    for (int k = 0; k < K; ++k) ch.alpha(k) = cfg.alpha_spec[static_cast<std::size_t>(k)];
  }
  return ch;
}

ChannelSet draw_trial_channels(const ScenarioConfig& cfg, std::uint64_t trial) {
  RandomStream layout_rng = RandomStream::derive(cfg.seed, trial, StreamTag::layout);
  RandomStream channel_rng = RandomStream::derive(cfg.seed, trial, StreamTag::direct_channels);
  const NodeLayout layout = place_sensors(cfg, layout_rng);
  return draw_channels(layout, cfg, channel_rng);
}

}  // namespace irsse
