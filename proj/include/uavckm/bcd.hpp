#pragma once

// Block-coordinate-descent trajectory baseline on the analytic channel.
// A K-waypoint plan (one waypoint per time step) is improved by cycling
// through three blocks: transmit power, threshold association and a
// projected gradient step on the waypoints. The objective is a smooth proxy
// for mission time: the outstanding payload fractions summed over steps plus,
// once payloads are delivered, the distance back to the start as a fraction
// of the world diagonal. The result is scored only by replaying it through UavMdp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavckm/channel.hpp"
#include "uavckm/geometry.hpp"
#include "uavckm/mdp.hpp"
#include "uavckm/rng.hpp"

namespace uavckm {

enum class BcdVariant { fixed_start, loose_start };

inline std::string to_string(BcdVariant v) { return v == BcdVariant::fixed_start ? "fixed" : "loose"; }

struct BcdConfig {
  std::size_t waypoints{60};
  std::size_t max_iterations{300};
  double tolerance{1e-7};
  /// Largest waypoint move per gradient step, meters.
  double step_m{20.0};
  BcdVariant variant{BcdVariant::fixed_start};
  std::uint64_t seed{0};
  /// Soft association width around P_min, dB.
  double association_width_db{1.0};
  /// Softplus width on outstanding payload, as a fraction of the payload.
  double payload_width{0.02};
  double return_weight{1.0};

  void validate() const {
    if (waypoints < 2) throw std::invalid_argument("bcd: need at least 2 waypoints");
    if (!(tolerance > 0.0)) throw std::invalid_argument("bcd: tolerance must be positive");
    if (!(step_m > 0.0) || !(association_width_db > 0.0) || !(payload_width > 0.0)) {
      throw std::invalid_argument("bcd: step and widths must be positive");
    }
  }
};

/// Gradient of expected_loss_db with respect to the UAV position.
inline Position expected_loss_gradient(const Position& q, const Position& g, const ChannelParams& params) {
  const Position diff = q - g;
  const double d = diff.norm();
  Position grad{0.0, 0.0, 0.0};
  if (d > kDistanceFloor) grad = (20.0 / (std::log(10.0) * d * d)) * diff;
  const double r = diff.horizontal_norm();
  const double h = std::abs(diff.z);
  const double rr = r * r + h * h;
  if (r > 0.0 && rr > 0.0) {
    const double p = los_probability(elevation_angle_deg(q, g), params);
    const double dp_dtheta = params.b * p * (1.0 - p);
    const double k = params.amplitude_db() * dp_dtheta * 180.0 / std::numbers::pi;
    // theta = atan(h / r): dtheta/dr = -h / rr, dtheta/dh = r / rr
    const double dr = -h / rr * k, dh = r / rr * k;
    grad.x += dr * diff.x / r;
    grad.y += dr * diff.y / r;
    grad.z += dh * (diff.z >= 0.0 ? 1.0 : -1.0);
  }
  return grad;
}

struct BcdPlan {
  std::vector<Position> waypoints;  // index 0 is the start
  std::vector<double> power_dbm;    // per waypoint, index 0 unused
  std::vector<std::vector<int>> alpha;
  std::vector<double> objective_log;
  std::size_t iterations{0};
  bool converged{false};
  bool planned_payload_met{false};
};

struct BcdResult {
  BcdPlan plan;
  TrajectoryResult trajectory;
  bool feasible{false};
  std::vector<Violation> violations;
};

namespace detail {

struct BcdProblem {
  const Environment& env;
  const EpisodeConfig& episode;
  const ChannelParams& params;
  const BcdConfig& cfg;
};

inline double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }
inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

/// Hard association and delivered-payload check for the current plan.
inline bool associate(const BcdProblem& pb, BcdPlan& plan) {
  const std::size_t K = plan.waypoints.size() - 1, N = pb.env.gus.size();
  const LinkBudget& link = pb.episode.link;
  std::vector<double> remaining(N, pb.episode.payload_bits);
  plan.alpha.assign(K + 1, std::vector<int>(N, 0));
  for (std::size_t k = 1; k <= K; ++k) {
    std::size_t n = 0;
    std::vector<double> pr(N);
    for (std::size_t i = 0; i < N; ++i) {
      pr[i] = plan.power_dbm[k] - expected_loss_db(plan.waypoints[k], pb.env.gus[i], pb.params);
      if (remaining[i] > 0.0 && pr[i] >= link.p_min_dbm) {
        plan.alpha[k][i] = 1;
        ++n;
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (!plan.alpha[k][i]) continue;
      remaining[i] -= shannon_rate_bps(pr[i], link.bandwidth_hz / static_cast<double>(n), link.noise_dbm) *
                      pb.episode.dt;
    }
  }
  return std::all_of(remaining.begin(), remaining.end(), [](double r) { return r <= 0.0; });
}

/// Full power wherever some user can close the link, otherwise silence.
inline void assign_power(const BcdProblem& pb, BcdPlan& plan) {
  const LinkBudget& link = pb.episode.link;
  plan.power_dbm.assign(plan.waypoints.size(), 0.0);
  for (std::size_t k = 1; k < plan.waypoints.size(); ++k) {
    for (const auto& g : pb.env.gus) {
      if (link.p_max_dbm - expected_loss_db(plan.waypoints[k], g, pb.params) >= link.p_min_dbm) {
        plan.power_dbm[k] = link.p_max_dbm;
        break;
      }
    }
  }
}

/// Surrogate objective; fills `grad` (one entry per waypoint) when given.
/// Rates follow the stored association, cut wherever the link no longer
/// closes. Users with outstanding payload add a smooth link-deficit term
/// that pulls waypoints toward closing their links.
inline double objective(const BcdProblem& pb, const BcdPlan& plan, std::vector<Position>* grad) {
  const std::size_t K = plan.waypoints.size() - 1, N = pb.env.gus.size();
  const LinkBudget& link = pb.episode.link;
  const double eta = pb.episode.payload_bits, tau = pb.cfg.payload_width * eta;
  const double w = pb.cfg.association_width_db, dt = pb.episode.dt;
  const double span = std::hypot(pb.env.side, pb.env.side, pb.env.h_max - pb.env.h_min);
  constexpr double kDeficitScale = 10.0;  // dB of missing margin that costs one step
  const Position& s = plan.waypoints[0];
  std::vector<std::vector<double>> dR_dpr(K + 1, std::vector<double>(N, 0.0));
  std::vector<std::vector<double>> dpull_dpr(K + 1, std::vector<double>(N, 0.0));
  std::vector<std::vector<double>> pull(K + 1, std::vector<double>(N, 0.0));
  std::vector<std::vector<double>> outstanding(K + 1, std::vector<double>(N, 0.0));
  std::vector<std::vector<double>> sig(K + 1, std::vector<double>(N, 0.0));
  std::vector<double> dJ_dM(K + 1, 0.0), h(K + 1, 0.0), M(K + 1, 0.0);
  std::vector<double> delivered(N, 0.0);
  double J = 0.0;
  for (std::size_t k = 1; k <= K; ++k) {
    std::vector<double> pr(N);
    std::vector<int> on(N, 0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < N; ++i) {
      pr[i] = plan.power_dbm[k] - expected_loss_db(plan.waypoints[k], pb.env.gus[i], pb.params);
      on[i] = plan.alpha[k][i] && pr[i] >= link.p_min_dbm;
      n += static_cast<std::size_t>(on[i]);
    }
    const double bw = link.bandwidth_hz / static_cast<double>(std::max<std::size_t>(1, n));
    for (std::size_t i = 0; i < N; ++i) {
      if (on[i]) {
        const double snr = std::pow(10.0, (pr[i] - link.noise_dbm) / 10.0);
        delivered[i] += bw * std::log2(1.0 + snr) * dt;
        dR_dpr[k][i] = bw * snr / ((1.0 + snr) * std::numbers::ln2) * std::log(10.0) / 10.0;
      }
      const double u = (eta - delivered[i]) / tau;
      outstanding[k][i] = tau * softplus(u) / eta;
      sig[k][i] = sigmoid(u);
      M[k] += outstanding[k][i];
      const double z = (link.p_min_dbm - pr[i]) / w;
      pull[k][i] = w * softplus(z) / kDeficitScale;
      dpull_dpr[k][i] = -sigmoid(z) / kDeficitScale;
      J += outstanding[k][i] * pull[k][i];
    }
    h[k] = (plan.waypoints[k] - s).norm() / span;
    const double done = std::max(0.0, 1.0 - M[k]);
    J += M[k] + pb.cfg.return_weight * done * h[k];
    dJ_dM[k] = 1.0 - (done > 0.0 ? pb.cfg.return_weight * h[k] : 0.0);
  }
  // payload still outstanding at the horizon is charged as a timeout
  const double tail = std::max(1.0, pb.episode.t_max / dt - static_cast<double>(K));
  J += tail * M[K];
  dJ_dM[K] += tail;
  if (grad) {
    grad->assign(K + 1, Position{0.0, 0.0, 0.0});
    std::vector<double> acc(N, 0.0);  // d J / d delivered_i, summed over this and later steps
    for (std::size_t k = K; k >= 1; --k) {
      for (std::size_t i = 0; i < N; ++i) {
        acc[i] += (dJ_dM[k] + pull[k][i]) * (-sig[k][i] / eta);
        const double dJ_dpr = acc[i] * dt * dR_dpr[k][i] + outstanding[k][i] * dpull_dpr[k][i];
        const Position gl = expected_loss_gradient(plan.waypoints[k], pb.env.gus[i], pb.params);
        (*grad)[k] = (*grad)[k] + (-dJ_dpr) * gl;
      }
      const Position off = plan.waypoints[k] - s;
      const double dist = off.norm();
      if (dist > 1e-12) {
        const double done = std::max(0.0, 1.0 - M[k]);
        const Position gh = (pb.cfg.return_weight * done / (dist * span)) * off;
        (*grad)[k] = (*grad)[k] + gh;
        (*grad)[0] = (*grad)[0] + (-1.0) * gh;
      }
    }
  }
  return J;
}

/// Box, speed and acceleration limits, applied forward from the start;
/// the fixed variant also pins the final waypoint to the start and limits
/// the approach backward from it.
inline void project(const BcdProblem& pb, std::vector<Position>& q, bool pin_end) {
  const double hop = pb.episode.v_max * pb.episode.dt;
  const double dv = pb.episode.a_max * pb.episode.dt * pb.episode.dt;
  for (auto& p : q) p = pb.env.clamp_uav(p);
  const std::size_t K = q.size() - 1;
  auto limit = [](const Position& from, Position& to, double max_len) {
    const Position d = to - from;
    const double len = d.norm();
    if (len > max_len) to = from + (max_len / len) * d;
  };
  if (pin_end) {
    q[K] = q[0];
    for (std::size_t k = K; k-- > 1;) limit(q[k + 1], q[k], hop);
  }
  double prev = 0.0;
  for (std::size_t k = 1; k <= K; ++k) {
    limit(q[k - 1], q[k], std::min(hop, prev + dv));
    prev = (q[k] - q[k - 1]).norm();
  }
}

}  // namespace detail

/// Initial plan: out along the straight line toward the ground-user centroid
/// and back, with a little seeded jitter.
inline std::vector<Position> initial_waypoints(const Environment& env, const EpisodeConfig& episode,
                                               const BcdConfig& cfg) {
  Position c{0.0, 0.0, env.h_min};
  for (const auto& g : env.gus) {
    c.x += g.x / static_cast<double>(env.gus.size());
    c.y += g.y / static_cast<double>(env.gus.size());
  }
  const Position start = episode.start.value_or(env.home());
  Rng rng(fork_seed(cfg.seed, Stream::bcd, 0));
  std::vector<Position> q(cfg.waypoints + 1);
  const double half = static_cast<double>(cfg.waypoints) / 2.0;
  for (std::size_t k = 0; k <= cfg.waypoints; ++k) {
    const double f = 1.0 - std::abs(static_cast<double>(k) - half) / half;
    q[k] = start + f * (c - start);
    if (k > 0 && k < cfg.waypoints) q[k] = q[k] + Position{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1)};
  }
  return q;
}

namespace detail {

/// Block iterations from `plan`, appending to its objective log.
inline void refine(const BcdProblem& pb, BcdPlan& plan, bool loose) {
  const BcdConfig& cfg = pb.cfg;
  double J = plan.objective_log.back();
  const std::size_t done_iterations = plan.iterations;
  double step = cfg.step_m;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    // power and association blocks are kept only when they do not raise the objective
    BcdPlan trial = plan;
    assign_power(pb, trial);
    associate(pb, trial);
    const double Jt = objective(pb, trial, nullptr);
    if (Jt <= J) {
      plan = std::move(trial);
      J = Jt;
    }
    // gradient step on all waypoints; if the projection blocks it, a rigid
    // shift of the whole plan (loose start only), then one waypoint at a time
    constexpr std::size_t kShift = static_cast<std::size_t>(-1);
    auto descend = [&](std::size_t only) {
      std::vector<Position> grad;
      objective(pb, plan, &grad);
      if (!loose) grad[0] = {0.0, 0.0, 0.0};
      if (only == kShift) {
        Position total{0.0, 0.0, 0.0};
        for (const auto& g : grad) total = total + g;
        std::fill(grad.begin(), grad.end(), total);
      } else if (only < grad.size()) {
        for (std::size_t k = 0; k < grad.size(); ++k) {
          if (k != only) grad[k] = {0.0, 0.0, 0.0};
        }
      }
      double gmax = 0.0;
      for (const auto& g : grad) gmax = std::max({gmax, std::abs(g.x), std::abs(g.y), std::abs(g.z)});
      if (!(gmax > 0.0)) return false;
      for (double s = step; s > 1e-3 * cfg.step_m; s *= 0.5) {
        BcdPlan cand = plan;
        for (std::size_t k = 0; k < grad.size(); ++k) cand.waypoints[k] = cand.waypoints[k] + (-s / gmax) * grad[k];
        project(pb, cand.waypoints, !loose);
        assign_power(pb, cand);
        associate(pb, cand);
        const double Jc = objective(pb, cand, nullptr);
        if (Jc < J) {
          plan = std::move(cand);
          J = Jc;
          step = std::min(cfg.step_m, 2.0 * s);
          return true;
        }
      }
      return false;
    };
    bool moved = descend(plan.waypoints.size());
    if (!moved && loose) moved = descend(kShift);
    if (!moved) {
      for (std::size_t k = loose ? 0 : 1; k < plan.waypoints.size(); ++k) {
        step = cfg.step_m;
        moved = descend(k) || moved;
      }
    }
    const double prev = plan.objective_log.back();
    J = objective(pb, plan, nullptr);
    plan.objective_log.push_back(J);
    plan.iterations = done_iterations + it + 1;
    if (!moved || std::abs(prev - J) <= cfg.tolerance * std::max(1.0, std::abs(prev))) {
      plan.converged = true;
      break;
    }
  }
  plan.planned_payload_met = associate(pb, plan);
}

inline BcdPlan line_start_plan(const BcdProblem& pb, bool loose) {
  BcdPlan plan;
  plan.waypoints = initial_waypoints(pb.env, pb.episode, pb.cfg);
  project(pb, plan.waypoints, !loose);
  assign_power(pb, plan);
  associate(pb, plan);
  plan.objective_log.push_back(objective(pb, plan, nullptr));
  refine(pb, plan, loose);
  return plan;
}

}  // namespace detail

/// Runs the block iterations and returns the plan (not yet replayed). The
/// loose variant is refined both from the straight-line start and from the
/// converged fixed-start plan; the lower objective wins.
inline BcdPlan plan_bcd(const Environment& env, const EpisodeConfig& episode, const ChannelParams& params,
                        const BcdConfig& cfg) {
  cfg.validate();
  env.validate();
  episode.validate();
  const detail::BcdProblem pb{env, episode, params, cfg};
  if (cfg.variant == BcdVariant::fixed_start) return detail::line_start_plan(pb, false);
  BcdPlan line = detail::line_start_plan(pb, true);
  BcdPlan warm = detail::line_start_plan(pb, false);
  warm.converged = false;
  detail::refine(pb, warm, true);
  return warm.objective_log.back() < line.objective_log.back() ? warm : line;
}

/// Flies the plan through the environment with a waypoint-tracking
/// controller; after the last waypoint it keeps heading for the start.
inline TrajectoryResult replay_plan(const BcdPlan& plan, const Environment& env, EpisodeConfig episode,
                                    std::shared_ptr<ChannelOracle> oracle, std::uint64_t seed) {
  const Position start = plan.waypoints.front();
  if ((start - env.home()).norm() > 1e-9) episode.start = start;
  UavMdp mdp(env, episode, std::move(oracle));
  mdp.reset(seed);
  const std::size_t K = plan.waypoints.size() - 1;
  while (!mdp.done()) {
    const std::size_t k = std::min(mdp.t() + 1, K);
    const Position target = mdp.t() + 1 <= K ? plan.waypoints[k] : start;
    const UavState& s = mdp.state();
    const Position d = target - s.q;
    const double len = d.norm();
    Action a;
    a.power_dbm = mdp.t() + 1 <= K ? plan.power_dbm[k] : episode.link.p_max_dbm;
    a.yaw = s.yaw;
    a.pitch = 0.0;
    if (len > 1e-9) {
      a.yaw = std::atan2(d.y, d.x);
      a.pitch = std::atan2(-d.z, d.horizontal_norm());
    }
    a.accel = std::clamp(std::min(len / episode.dt, episode.v_max) - s.speed, -episode.a_max * episode.dt,
                         episode.a_max * episode.dt) / episode.dt;
    mdp.step(a);
  }
  return mdp.trajectory();
}

/// Mission-scope violations, ignoring the start relocation the loose
/// variant is allowed.
inline std::vector<Violation> bcd_violations(const TrajectoryResult& traj, const EpisodeConfig& episode,
                                             const Environment& env, BcdVariant variant) {
  auto v = check_feasibility(traj, episode, env);
  if (variant == BcdVariant::loose_start) {
    std::erase_if(v, [](const Violation& x) { return x.constraint == "start_position"; });
  }
  return v;
}

/// Plans on the analytic model, then replays against `oracle`.
inline BcdResult solve_bcd(const Environment& env, const EpisodeConfig& episode, const ChannelParams& params,
                           const BcdConfig& cfg, std::shared_ptr<ChannelOracle> oracle, std::uint64_t replay_seed = 0) {
  BcdResult r;
  r.plan = plan_bcd(env, episode, params, cfg);
  r.trajectory = replay_plan(r.plan, env, episode, std::move(oracle), replay_seed);
  r.violations = bcd_violations(r.trajectory, episode, env, cfg.variant);
  r.feasible = r.trajectory.success && r.violations.empty();
  return r;
}

inline BcdResult solve_bcd(const Environment& env, const EpisodeConfig& episode, const ChannelParams& params,
                           const BcdConfig& cfg) {
  return solve_bcd(env, episode, params, cfg, std::make_shared<AnalyticOracle>(env.gus, params));
}

inline void to_json(nlohmann::json& j, const BcdConfig& c) {
  j = {{"waypoints", c.waypoints},
       {"max_iterations", c.max_iterations},
       {"tolerance", c.tolerance},
       {"step_m", c.step_m},
       {"variant", to_string(c.variant)},
       {"seed", c.seed},
       {"association_width_db", c.association_width_db},
       {"payload_width", c.payload_width},
       {"return_weight", c.return_weight}};
}
inline void from_json(const nlohmann::json& j, BcdConfig& c) {
  const BcdConfig d;
  c.waypoints = j.value("waypoints", d.waypoints);
  c.max_iterations = j.value("max_iterations", d.max_iterations);
  c.tolerance = j.value("tolerance", d.tolerance);
  c.step_m = j.value("step_m", d.step_m);
  const std::string v = j.value("variant", std::string("fixed"));
  if (v != "fixed" && v != "loose") throw std::invalid_argument("bcd: unknown variant " + v);
  c.variant = v == "loose" ? BcdVariant::loose_start : BcdVariant::fixed_start;
  c.seed = j.value("seed", d.seed);
  c.association_width_db = j.value("association_width_db", d.association_width_db);
  c.payload_width = j.value("payload_width", d.payload_width);
  c.return_weight = j.value("return_weight", d.return_weight);
  c.validate();
}

}  // namespace uavckm
