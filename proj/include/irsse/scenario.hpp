#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "irsse/random.hpp"
#include "irsse/types.hpp"

namespace irsse {

using CRowVector = Eigen::RowVectorXcd;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

double distance(const Point2& a, const Point2& b);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

/// Every physical and algorithmic knob of one simulated network. Powers are
/// held in linear watts; the config file may give them in dBm.
struct ScenarioConfig {
  int K = 5;
  int N = 10;
  double region = 40.0;
  Point2 irs_pos{60.0, 20.0};
  Point2 fc_pos{65.0, 25.0};
  Point2 ed_pos{70.0, 15.0};

  double mu_db = -30.0;
  double d0 = 1.0;
  double nu_irs_links = 2.0;
  double nu_direct_links = 3.0;

  double sigma2_o = 1e-10;
  double sigma2_f = 1e-10;
  double sigma2_e = 1e-10;
  double p_t = 1.0;
  double eta = 1.0;

  /// Empty means all-ones observation gains.
  std::vector<cplx> alpha_spec;

  double epsilon = 0.01;
  int n_iter = 10;
  std::uint64_t seed = 1;

  // Algorithm switches.
  bool random_initial_phase = false;
  bool warm_start = true;
  bool ed_constraint = true;
  int randomization_count = 1000;
  double delta = 1e-3;
  double sdp_tol = 1e-7;
  bool verify_iterates = false;
};

/// Throws ConfigError when an invariant is violated.
void validate(const ScenarioConfig& cfg);

struct NodeLayout {
  std::vector<Point2> sensor_positions;
  Point2 irs_pos;
  Point2 fc_pos;
  Point2 ed_pos;
};

/// One realization of every channel in the network.
///   H_I  : N x K, sensors -> IRS
///   h_IF : 1 x N, IRS -> FC        h_IE : 1 x N, IRS -> ED
///   h_f  : 1 x K, sensors -> FC    h_e  : 1 x K, sensors -> ED
struct ChannelSet {
  CMatrix H_I;
  CRowVector h_IF;
  CRowVector h_IE;
  CRowVector h_f;
  CRowVector h_e;
  CVector alpha;

  int sensors() const { return static_cast<int>(h_f.size()); }
  int elements() const { return static_cast<int>(h_IF.size()); }

  /// Throws std::invalid_argument on inconsistent shapes or non-finite entries.
  void check() const;

  /// Same direct links with the reflected path removed (N = 0).
  ChannelSet without_irs() const;
};

NodeLayout place_sensors(const ScenarioConfig& cfg, RandomStream& rng);

/// Linear power gain 10^(mu_db/10) (d/d0)^-nu. Throws std::domain_error for
/// d <= 0 or d0 <= 0.
double path_loss(double d, double mu_db, double d0, double nu);

ChannelSet draw_channels(const NodeLayout& layout, const ScenarioConfig& cfg, RandomStream& rng);

/// Layout and channels for one Monte Carlo trial, drawn from streams derived
/// from (cfg.seed, trial).
ChannelSet draw_trial_channels(const ScenarioConfig& cfg, std::uint64_t trial);

}  // namespace irsse
