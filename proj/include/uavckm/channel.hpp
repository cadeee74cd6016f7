#pragma once

// Air-to-ground loss model: free-space loss plus an elevation-dependent
// LoS/NLoS excess, and the geometric "ground truth" used to synthesize data.
// All powers and losses are dB / dBm; linear units appear only in rate_bps.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "uavckm/geometry.hpp"
#include "uavckm/rng.hpp"

namespace uavckm {

struct ChannelParams {
  double carrier_hz{2.0e9};
  double light_speed{3.0e8};
  double a{9.61};
  double b{0.16};
  double eps_los_db{1.0};
  double eps_nlos_db{20.0};
  double shadow_sigma_los_db{2.0};
  double shadow_sigma_nlos_db{5.0};

  void validate() const {
    if (!(carrier_hz > 0.0) || !(light_speed > 0.0)) throw std::invalid_argument("channel: f_c and c must be positive");
    if (!(b > 0.0)) throw std::invalid_argument("channel: sigmoid slope b must be positive");
    if (eps_nlos_db < eps_los_db) throw std::invalid_argument("channel: eps_nlos must be >= eps_los");
    if (shadow_sigma_los_db < 0.0 || shadow_sigma_nlos_db < 0.0) {
      throw std::invalid_argument("channel: shadowing sigmas must be >= 0");
    }
  }
  bool operator==(const ChannelParams&) const = default;

  /// Sigmoid amplitude of the compact form A * P_los(theta) + FSPL' + B.
  double amplitude_db() const { return eps_los_db - eps_nlos_db; }
  /// Constant offset of the compact form (FSPL at 1 m plus the NLoS excess).
  double offset_db() const {
    return 20.0 * std::log10(4.0 * std::numbers::pi * carrier_hz / light_speed) + eps_nlos_db;
  }
};

struct LinkBudget {
  double p_max_dbm{33.0};
  double p_min_dbm{-70.0};
  double bandwidth_hz{1.0e6};
  double noise_dbm{-100.0};

  void validate() const {
    if (!(p_max_dbm > p_min_dbm)) throw std::invalid_argument("link: p_max must exceed p_min");
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("link: bandwidth must be positive");
  }
};

inline constexpr double kDistanceFloor = 1.0;

inline double distance(const Position& q, const Position& q_n) { return (q - q_n).norm(); }

/// 20 log10(4 pi f_c d / c), with d clamped to the 1 m floor.
inline double fspl_db(double d, const ChannelParams& params) {
  const double dd = std::max(d, kDistanceFloor);
  return 20.0 * std::log10(4.0 * std::numbers::pi * params.carrier_hz * dd / params.light_speed);
}

/// LoS probability as a function of the elevation angle in degrees.
inline double los_probability(double elevation_deg, const ChannelParams& params) {
  return 1.0 / (1.0 + params.a * std::exp(-params.b * (elevation_deg - params.a)));
}

/// Expected (LoS-probability weighted) loss between UAV q and ground user q_n.
inline double expected_loss_db(const Position& q, const Position& q_n, const ChannelParams& params) {
  const double theta = elevation_angle_deg(q, q_n);
  return params.amplitude_db() * los_probability(theta, params) + fspl_db(distance(q, q_n), params) +
         params.eps_nlos_db;
}

/// Geometric LoS decides the branch; shadowing is zero-mean Gaussian in dB.
inline double ground_truth_loss_db(const Position& q, const Position& q_n, const Environment& env,
                                  const ChannelParams& params, Rng& rng) {
  const double base = fspl_db(distance(q, q_n), params);
  if (segment_blocked(q, q_n, env)) {
    return base + params.eps_nlos_db + params.shadow_sigma_nlos_db * rng.normal();
  }
  return base + params.eps_los_db + params.shadow_sigma_los_db * rng.normal();
}

inline double received_power_dbm(double p_t_dbm, double loss_db) { return p_t_dbm - loss_db; }

/// Shannon rate for a given bandwidth; SNR is formed in the linear domain.
inline double shannon_rate_bps(double p_r_dbm, double bandwidth_hz, double noise_dbm) {
  const double snr = std::pow(10.0, (p_r_dbm - noise_dbm) / 10.0);
  return bandwidth_hz * std::log2(1.0 + snr);
}

inline double rate_bps(double p_r_dbm, const LinkBudget& budget) {
  return shannon_rate_bps(p_r_dbm, budget.bandwidth_hz, budget.noise_dbm);
}

inline void to_json(nlohmann::json& j, const ChannelParams& p) {
  j = {{"carrier_hz", p.carrier_hz},
       {"light_speed", p.light_speed},
       {"a", p.a},
       {"b", p.b},
       {"eps_los_db", p.eps_los_db},
       {"eps_nlos_db", p.eps_nlos_db},
       {"shadow_sigma_los_db", p.shadow_sigma_los_db},
       {"shadow_sigma_nlos_db", p.shadow_sigma_nlos_db}};
}
inline void from_json(const nlohmann::json& j, ChannelParams& p) {
  const ChannelParams d;
  p.carrier_hz = j.value("carrier_hz", d.carrier_hz);
  p.light_speed = j.value("light_speed", d.light_speed);
  p.a = j.value("a", d.a);
  p.b = j.value("b", d.b);
  p.eps_los_db = j.value("eps_los_db", d.eps_los_db);
  p.eps_nlos_db = j.value("eps_nlos_db", d.eps_nlos_db);
  p.shadow_sigma_los_db = j.value("shadow_sigma_los_db", d.shadow_sigma_los_db);
  p.shadow_sigma_nlos_db = j.value("shadow_sigma_nlos_db", d.shadow_sigma_nlos_db);
  p.validate();
}

inline void to_json(nlohmann::json& j, const LinkBudget& l) {
  j = {{"p_max_dbm", l.p_max_dbm},
       {"p_min_dbm", l.p_min_dbm},
       {"bandwidth_hz", l.bandwidth_hz},
       {"noise_dbm", l.noise_dbm}};
}
inline void from_json(const nlohmann::json& j, LinkBudget& l) {
  const LinkBudget d;
  l.p_max_dbm = j.value("p_max_dbm", d.p_max_dbm);
  l.p_min_dbm = j.value("p_min_dbm", d.p_min_dbm);
  l.bandwidth_hz = j.value("bandwidth_hz", d.bandwidth_hz);
  l.noise_dbm = j.value("noise_dbm", d.noise_dbm);
  l.validate();
}

}  // namespace uavckm
