#pragma once

// Episodic UAV service environment: point-mass kinematics driven by speed
// and attitude commands, threshold association, equal bandwidth split,
// payload bookkeeping and a shaped reward. Channel loss comes from a
// pluggable oracle so the same dynamics serve the analytic model, the
// geometric ground truth and a trained CKM.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavckm/channel.hpp"
#include "uavckm/ckm.hpp"
#include "uavckm/geometry.hpp"
#include "uavckm/io.hpp"
#include "uavckm/rng.hpp"

namespace uavckm {

// ---------------------------------------------------------------- kinematics

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Body-to-inertial rotation Rz(yaw) * Ry(pitch) * Rx(roll).
inline Mat3 dcm(double roll, double pitch, double yaw) {
  const double cf = std::cos(roll), sf = std::sin(roll);
  const double ct = std::cos(pitch), st = std::sin(pitch);
  const double cp = std::cos(yaw), sp = std::sin(yaw);
  return {{{cp * ct, cp * st * sf - sp * cf, cp * st * cf + sp * sf},
           {sp * ct, sp * st * sf + cp * cf, sp * st * cf - cp * sf},
           {-st, ct * sf, ct * cf}}};
}

inline Position rotate(const Mat3& m, const Position& v) {
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z, m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

struct UavState {
  Position q;
  double speed{0.0};
  double roll{0.0};
  double pitch{0.0};
  double yaw{0.0};
};

struct Action {
  double accel{0.0};  // m/s^2
  double roll{0.0};
  double pitch{0.0};
  double yaw{0.0};
  double power_dbm{0.0};

  static constexpr std::size_t kDim = 5;
  std::array<double, kDim> to_array() const { return {accel, roll, pitch, yaw, power_dbm}; }
  static Action from_array(std::span<const double> a) {
    if (a.size() != kDim) throw std::invalid_argument("action: expected 5 components");
    return {a[0], a[1], a[2], a[3], a[4]};
  }
};

// ------------------------------------------------------------------ config

struct RewardWeights {
  double movement{1.0};
  double data{1.0};
  double early{1.0};
  double timeout{1.0};
  double elevation{1.0};
  /// Potential-based shaping on distance to the current target; off by default.
  double progress{0.0};
};

struct EpisodeConfig {
  double dt{1.0};
  std::size_t t_max{200};
  double a_max{20.0};
  double v_max{50.0};
  LinkBudget link;
  /// Minimum payload per ground user, bits.
  double payload_bits{40e6};
  RewardWeights weights;
  double home_tolerance{20.0};
  /// Elevation below which the low-elevation penalty applies, degrees.
  double critical_elevation_deg{15.0};
  /// When false the episode ends as soon as every payload is met.
  bool require_return{true};
  /// Overrides the standard start (0, 0, H_min); used by relaxed planners.
  std::optional<Position> start;

  void validate() const {
    if (!(dt > 0.0) || t_max == 0 || !(a_max > 0.0) || !(v_max > 0.0) || !(payload_bits > 0.0) ||
        !(home_tolerance > 0.0)) {
      throw std::invalid_argument("episode: dt, t_max, a_max, v_max, payload and tolerance must be positive");
    }
    link.validate();
  }

  /// Lower and upper bound of each action component.
  std::array<std::pair<double, double>, Action::kDim> action_bounds() const {
    return {{{-a_max, a_max},
             {-std::numbers::pi, std::numbers::pi},
             {-std::numbers::pi / 2.0, std::numbers::pi / 2.0},
             {-std::numbers::pi, std::numbers::pi},
             {0.0, link.p_max_dbm}}};
  }
};

// ----------------------------------------------------------------- oracles

/// Source of channel loss for every ground user at a UAV position.
class ChannelOracle {
 public:
  virtual ~ChannelOracle() = default;
  virtual void losses_db(const Position& uav, std::span<double> out) = 0;
  /// Re-seeds any internal randomness; deterministic oracles ignore it.
  virtual void reseed(std::uint64_t) {}
  virtual std::string name() const = 0;
};

class AnalyticOracle : public ChannelOracle {
 public:
  AnalyticOracle(std::vector<Position> gus, ChannelParams params) : gus_(std::move(gus)), params_(params) {}
  void losses_db(const Position& uav, std::span<double> out) override {
    for (std::size_t i = 0; i < gus_.size(); ++i) out[i] = expected_loss_db(uav, gus_[i], params_);
  }
  std::string name() const override { return "los"; }

 private:
  std::vector<Position> gus_;
  ChannelParams params_;
};

class TruthOracle : public ChannelOracle {
 public:
  TruthOracle(Environment env, ChannelParams params) : env_(std::move(env)), params_(params), rng_(0) {}
  void losses_db(const Position& uav, std::span<double> out) override {
    for (std::size_t i = 0; i < env_.gus.size(); ++i) out[i] = ground_truth_loss_db(uav, env_.gus[i], env_, params_, rng_);
  }
  void reseed(std::uint64_t seed) override { rng_ = Rng(seed); }
  std::string name() const override { return "truth"; }

 private:
  Environment env_;
  ChannelParams params_;
  Rng rng_;
};

class CkmOracle : public ChannelOracle {
 public:
  CkmOracle(std::shared_ptr<const CkmModel> model, std::vector<Position> gus)
      : model_(std::move(model)), gus_(std::move(gus)) {}
  void losses_db(const Position& uav, std::span<double> out) override {
    std::vector<Sample> rows;
    rows.reserve(gus_.size());
    for (const auto& g : gus_) rows.push_back(Sample::make(g, uav, 0.0));
    const auto l = predict_loss_db(*model_, rows);
    std::copy(l.begin(), l.end(), out.begin());
  }
  std::string name() const override { return "ckm"; }

 private:
  std::shared_ptr<const CkmModel> model_;
  std::vector<Position> gus_;
};

/// Wraps a callable (uav, gu index) -> loss; convenient for fixed test channels.
class FunctionOracle : public ChannelOracle {
 public:
  using Fn = std::function<double(const Position&, std::size_t)>;
  FunctionOracle(Fn fn, std::size_t gu_count, std::string label = "function")
      : fn_(std::move(fn)), n_(gu_count), label_(std::move(label)) {}
  void losses_db(const Position& uav, std::span<double> out) override {
    for (std::size_t i = 0; i < n_; ++i) out[i] = fn_(uav, i);
  }
  std::string name() const override { return label_; }

 private:
  Fn fn_;
  std::size_t n_;
  std::string label_;
};

struct GridSpec {
  std::size_t nx{41}, ny{41}, nz{11};
};

/// A deterministic oracle sampled on a regular lattice over the flight box
/// and evaluated by trilinear interpolation. Used to make a CKM cheap enough
/// to query inside RL rollouts.
class GridOracle : public ChannelOracle {
 public:
  GridOracle(ChannelOracle& source, const Environment& env, GridSpec spec, std::string label)
      : spec_(spec), n_gu_(env.gus.size()), label_(std::move(label)) {
    if (spec.nx < 2 || spec.ny < 2 || spec.nz < 2) throw std::invalid_argument("grid oracle: need >= 2 nodes per axis");
    lo_ = {0.0, 0.0, env.h_min};
    hi_ = {env.side, env.side, env.h_max};
    table_.assign(spec.nx * spec.ny * spec.nz * n_gu_, 0.0);
    std::vector<double> buf(n_gu_);
    for (std::size_t i = 0; i < spec.nx; ++i) {
      for (std::size_t j = 0; j < spec.ny; ++j) {
        for (std::size_t k = 0; k < spec.nz; ++k) {
          source.losses_db(node(i, j, k), buf);
          std::copy(buf.begin(), buf.end(), table_.begin() + static_cast<std::ptrdiff_t>(index(i, j, k)));
        }
      }
    }
  }

  void losses_db(const Position& uav, std::span<double> out) override {
    auto locate = [](double v, double lo, double hi, std::size_t n, std::size_t& i0, double& f) {
      const double u = std::clamp((v - lo) / (hi - lo), 0.0, 1.0) * static_cast<double>(n - 1);
      i0 = std::min(static_cast<std::size_t>(u), n - 2);
      f = u - static_cast<double>(i0);
    };
    std::size_t i, j, k;
    double fx, fy, fz;
    locate(uav.x, lo_.x, hi_.x, spec_.nx, i, fx);
    locate(uav.y, lo_.y, hi_.y, spec_.ny, j, fy);
    locate(uav.z, lo_.z, hi_.z, spec_.nz, k, fz);
    for (std::size_t g = 0; g < n_gu_; ++g) {
      double acc = 0.0;
      for (int c = 0; c < 8; ++c) {
        const std::size_t di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
        const double w = (di ? fx : 1 - fx) * (dj ? fy : 1 - fy) * (dk ? fz : 1 - fz);
        acc += w * table_[index(i + di, j + dj, k + dk) + g];
      }
      out[g] = acc;
    }
  }
  std::string name() const override { return label_; }
  Position node(std::size_t i, std::size_t j, std::size_t k) const {
    return {lo_.x + (hi_.x - lo_.x) * static_cast<double>(i) / static_cast<double>(spec_.nx - 1),
            lo_.y + (hi_.y - lo_.y) * static_cast<double>(j) / static_cast<double>(spec_.ny - 1),
            lo_.z + (hi_.z - lo_.z) * static_cast<double>(k) / static_cast<double>(spec_.nz - 1)};
  }

 private:
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return ((i * spec_.ny + j) * spec_.nz + k) * n_gu_;
  }
  GridSpec spec_;
  std::size_t n_gu_;
  std::string label_;
  Position lo_, hi_;
  std::vector<double> table_;
};

// ------------------------------------------------------------- trajectories

struct RewardTerms {
  double movement{0.0};
  double data{0.0};
  double early{0.0};
  double timeout{0.0};
  double elevation{0.0};
  double progress{0.0};

  double total(const RewardWeights& w) const {
    return w.movement * movement + w.data * data + w.early * early + w.timeout * timeout + w.elevation * elevation +
           w.progress * progress;
  }
};

struct TrajectoryStep {
  std::size_t t{0};  // 1-based step index
  UavState state;    // after the step
  Action action;     // as applied (clamped)
  std::vector<double> loss_db;
  std::vector<double> received_dbm;
  std::vector<int> alpha;
  std::vector<double> rate_bps;
  RewardTerms terms;
  double reward{0.0};
};

struct TrajectoryResult {
  UavState initial;
  std::vector<TrajectoryStep> steps;
  std::vector<double> required_bits;
  std::vector<double> delivered_bits;
  bool success{false};
  double t_end{0.0};  // seconds
  double dt{1.0};

  /// Average delivered bits per second over the flight.
  double throughput_bps() const {
    double total = 0.0;
    for (double d : delivered_bits) total += d;
    return t_end > 0.0 ? total / t_end : 0.0;
  }
  double total_reward() const {
    double r = 0.0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }
};

struct StepResult {
  double reward{0.0};
  RewardTerms terms;
  bool done{false};
  bool success{false};
};

// -------------------------------------------------------------- environment

class UavMdp {
 public:
  UavMdp(Environment env, EpisodeConfig cfg, std::shared_ptr<ChannelOracle> oracle)
      : env_(std::move(env)), cfg_(std::move(cfg)), oracle_(std::move(oracle)) {
    env_.validate();
    cfg_.validate();
    if (!oracle_) throw std::invalid_argument("mdp: null channel oracle");
    losses_.assign(env_.gus.size(), 0.0);
  }

  const Environment& environment() const { return env_; }
  const EpisodeConfig& config() const { return cfg_; }
  ChannelOracle& oracle() { return *oracle_; }
  std::size_t gu_count() const { return env_.gus.size(); }
  Position home() const { return cfg_.start.value_or(env_.home()); }

  void reset(std::uint64_t seed) {
    oracle_->reseed(seed);
    state_ = UavState{env_.clamp_uav(home()), 0.0, 0.0, 0.0, 0.0};
    remaining_.assign(env_.gus.size(), cfg_.payload_bits);
    traj_ = TrajectoryResult{};
    traj_.initial = state_;
    traj_.required_bits = remaining_;
    traj_.delivered_bits.assign(env_.gus.size(), 0.0);
    traj_.dt = cfg_.dt;
    t_ = 0;
    done_ = false;
    oracle_->losses_db(state_.q, losses_);
  }

  const UavState& state() const { return state_; }
  std::size_t t() const { return t_; }
  bool done() const { return done_; }
  const std::vector<double>& remaining_bits() const { return remaining_; }
  const std::vector<double>& current_losses_db() const { return losses_; }
  const TrajectoryResult& trajectory() const { return traj_; }

  bool all_served() const {
    return std::all_of(remaining_.begin(), remaining_.end(), [](double r) { return r <= 0.0; });
  }

  std::size_t observation_dim() const { return 8 + 5 * env_.gus.size(); }

  /// Normalized observation of the current state.
  std::vector<double> observation() const {
    std::vector<double> o;
    o.reserve(observation_dim());
    const double span_z = std::max(1.0, env_.h_max - env_.h_min);
    o.push_back(state_.q.x / env_.side);
    o.push_back(state_.q.y / env_.side);
    o.push_back((state_.q.z - env_.h_min) / span_z);
    o.push_back(state_.speed / cfg_.v_max);
    o.push_back(state_.roll / std::numbers::pi);
    o.push_back(state_.pitch / (std::numbers::pi / 2.0));
    o.push_back(state_.yaw / std::numbers::pi);
    o.push_back(static_cast<double>(t_) / static_cast<double>(cfg_.t_max));
    for (std::size_t i = 0; i < env_.gus.size(); ++i) {
      const Position& g = env_.gus[i];
      o.push_back((g.x - state_.q.x) / env_.side);
      o.push_back((g.y - state_.q.y) / env_.side);
      o.push_back((state_.q.z - g.z) / std::max(1.0, env_.h_max));
      o.push_back(remaining_[i] / cfg_.payload_bits);
      const double margin = cfg_.link.p_max_dbm - losses_[i] - cfg_.link.p_min_dbm;
      o.push_back(std::clamp(margin / 20.0, -2.0, 2.0));
    }
    return o;
  }

  StepResult step(const Action& requested) {
    if (done_) throw std::logic_error("mdp: step after episode end");
    for (double v : requested.to_array()) {
      if (!std::isfinite(v)) throw std::invalid_argument("mdp: non-finite action");
    }
    const auto bounds = cfg_.action_bounds();
    auto arr = requested.to_array();
    for (std::size_t d = 0; d < Action::kDim; ++d) arr[d] = std::clamp(arr[d], bounds[d].first, bounds[d].second);
    Action a = Action::from_array(arr);

    const Position before = state_.q;
    const Position target = current_target(before);
    const double new_speed = std::clamp(state_.speed + a.accel * cfg_.dt, 0.0, cfg_.v_max);
    a.accel = (new_speed - state_.speed) / cfg_.dt;
    state_.speed = new_speed;
    state_.roll = a.roll;
    state_.pitch = a.pitch;
    state_.yaw = a.yaw;
    const Position v = rotate(dcm(a.roll, a.pitch, a.yaw), {state_.speed, 0.0, 0.0});
    state_.q = env_.clamp_uav(state_.q + cfg_.dt * v);
    ++t_;

    oracle_->losses_db(state_.q, losses_);
    const std::size_t n = env_.gus.size();
    TrajectoryStep rec;
    rec.t = t_;
    rec.action = a;
    rec.loss_db = losses_;
    rec.received_dbm.resize(n);
    rec.alpha.assign(n, 0);
    rec.rate_bps.assign(n, 0.0);
    std::size_t associated = 0;
    for (std::size_t i = 0; i < n; ++i) {
      rec.received_dbm[i] = received_power_dbm(a.power_dbm, losses_[i]);
      if (remaining_[i] > 0.0 && rec.received_dbm[i] >= cfg_.link.p_min_dbm) {
        rec.alpha[i] = 1;
        ++associated;
      }
    }
    RewardTerms terms;
    std::size_t newly_served = 0;
    double delivered_mbit = 0.0;
    if (associated > 0) {
      const double share = cfg_.link.bandwidth_hz / static_cast<double>(associated);
      for (std::size_t i = 0; i < n; ++i) {
        if (!rec.alpha[i]) continue;
        rec.rate_bps[i] = shannon_rate_bps(rec.received_dbm[i], share, cfg_.link.noise_dbm);
        const double bits = rec.rate_bps[i] * cfg_.dt;
        const double useful = std::min(bits, remaining_[i]);
        traj_.delivered_bits[i] += bits;
        remaining_[i] -= useful;
        delivered_mbit += useful / 1e6;
        if (remaining_[i] <= 0.0) {
          remaining_[i] = 0.0;
          ++newly_served;
        }
      }
    }

    const double moved = (state_.q - before).norm();
    const double closer = target_gap(before, target) - target_gap(state_.q, target);
    terms.movement = -1.0 - 0.01 * std::max(0.0, moved - std::max(0.0, closer));
    terms.progress = closer / (cfg_.v_max * cfg_.dt);
    terms.data = delivered_mbit + 5.0 * static_cast<double>(newly_served);
    if (max_unserved_elevation_deg() < cfg_.critical_elevation_deg) terms.elevation = -1.0;

    const bool served = all_served();
    const bool home_reached = (state_.q - home()).norm() <= cfg_.home_tolerance;
    StepResult res;
    if (served && (home_reached || !cfg_.require_return)) {
      res.success = true;
      terms.early = 50.0 * static_cast<double>(cfg_.t_max - t_) / static_cast<double>(cfg_.t_max);
    } else if (t_ >= cfg_.t_max) {
      terms.timeout = -50.0;
    }
    res.done = res.success || t_ >= cfg_.t_max;
    res.terms = terms;
    res.reward = terms.total(cfg_.weights);

    rec.state = state_;
    rec.terms = terms;
    rec.reward = res.reward;
    traj_.steps.push_back(std::move(rec));
    if (res.done) {
      done_ = true;
      traj_.success = res.success;
      traj_.t_end = static_cast<double>(t_) * cfg_.dt;
    }
    return res;
  }

 private:
  /// Nearest unserved user (compared horizontally), or home once everyone
  /// is served. Returned with z = NaN for a user so gaps stay horizontal.
  Position current_target(const Position& q) const {
    double best = -1.0;
    Position target = home();
    for (std::size_t i = 0; i < env_.gus.size(); ++i) {
      if (remaining_[i] <= 0.0) continue;
      const double d = (env_.gus[i] - q).horizontal_norm();
      if (best < 0.0 || d < best) {
        best = d;
        target = {env_.gus[i].x, env_.gus[i].y, std::numeric_limits<double>::quiet_NaN()};
      }
    }
    return target;
  }
  static double target_gap(const Position& q, const Position& target) {
    return std::isnan(target.z) ? (target - q).horizontal_norm() : (target - q).norm();
  }

  double max_unserved_elevation_deg() const {
    double best = 90.0;
    bool any = false;
    for (std::size_t i = 0; i < env_.gus.size(); ++i) {
      if (remaining_[i] <= 0.0) continue;
      const double e = elevation_angle_deg(state_.q, env_.gus[i]);
      best = any ? std::max(best, e) : e;
      any = true;
    }
    return best;
  }

  Environment env_;
  EpisodeConfig cfg_;
  std::shared_ptr<ChannelOracle> oracle_;
  UavState state_;
  std::vector<double> remaining_;
  std::vector<double> losses_;
  TrajectoryResult traj_;
  std::size_t t_{0};
  bool done_{false};
};

// ------------------------------------------------------------- feasibility

enum class FeasibilityScope { kinematic, mission };

struct Violation {
  std::string constraint;
  std::size_t step{0};
  double magnitude{0.0};
};

/// Checks every recorded step against the problem's constraints. The
/// kinematic scope covers attitude, speed, acceleration, power, altitude
/// and association; the mission scope adds flight-time, start/return and
/// payload requirements. A start away from (0, 0, H_min) is reported once;
/// the return is judged against the trajectory's own start.
inline std::vector<Violation> check_feasibility(const TrajectoryResult& traj, const EpisodeConfig& cfg,
                                                const Environment& env,
                                                FeasibilityScope scope = FeasibilityScope::mission) {
  std::vector<Violation> out;
  constexpr double tol = 1e-9;
  auto over = [&](const char* name, std::size_t step, double v, double lo, double hi) {
    if (v < lo - tol) out.push_back({name, step, lo - v});
    if (v > hi + tol) out.push_back({name, step, v - hi});
  };
  const std::size_t n = traj.required_bits.size();
  std::vector<double> served(n, 0.0);
  double prev_speed = traj.initial.speed;
  for (const auto& s : traj.steps) {
    over("pitch_bounds", s.t, s.state.pitch, -std::numbers::pi / 2.0, std::numbers::pi / 2.0);
    over("roll_bounds", s.t, s.state.roll, -std::numbers::pi, std::numbers::pi);
    over("yaw_bounds", s.t, s.state.yaw, -std::numbers::pi, std::numbers::pi);
    over("speed_bounds", s.t, s.state.speed, 0.0, cfg.v_max);
    over("acceleration_bounds", s.t, (s.state.speed - prev_speed) / traj.dt, -cfg.a_max, cfg.a_max);
    over("power_bounds", s.t, s.action.power_dbm, 0.0, cfg.link.p_max_dbm);
    over("altitude_bounds", s.t, s.state.q.z, env.h_min, env.h_max);
    over("area_bounds", s.t, s.state.q.x, 0.0, env.side);
    over("area_bounds", s.t, s.state.q.y, 0.0, env.side);
    prev_speed = s.state.speed;
    for (std::size_t i = 0; i < s.alpha.size(); ++i) {
      if (s.alpha[i] != 0 && s.alpha[i] != 1) out.push_back({"association_binary", s.t, std::abs(s.alpha[i] - 0.5)});
      const double slack = s.alpha[i] * (s.received_dbm[i] - cfg.link.p_min_dbm);
      if (slack < -tol) out.push_back({"association_threshold", s.t, -slack});
      if (i < n) served[i] += s.alpha[i] * s.rate_bps[i] * traj.dt;
    }
  }
  if (scope == FeasibilityScope::mission) {
    const std::size_t last = traj.steps.empty() ? 0 : traj.steps.back().t;
    if (last > cfg.t_max) out.push_back({"mission_time", last, static_cast<double>(last - cfg.t_max)});
    const Position start = env.home();
    const double d0 = (traj.initial.q - start).norm();
    if (d0 > tol) out.push_back({"start_position", 0, d0});
    const Position end = traj.steps.empty() ? traj.initial.q : traj.steps.back().state.q;
    const double d1 = (end - traj.initial.q).norm();
    if (d1 > cfg.home_tolerance) out.push_back({"return_position", last, d1 - cfg.home_tolerance});
    for (std::size_t i = 0; i < n; ++i) {
      if (served[i] < traj.required_bits[i] * (1.0 - 1e-12)) {
        out.push_back({"payload", last, traj.required_bits[i] - served[i]});
      }
    }
  }
  return out;
}

// ----------------------------------------------------------- serialization

inline std::string trajectory_csv(const TrajectoryResult& traj) {
  const std::size_t n = traj.required_bits.size();
  std::string out = "step,x,y,z,speed,roll,pitch,yaw,power_dbm";
  for (std::size_t i = 0; i < n; ++i) out += ",alpha" + std::to_string(i) + ",rate" + std::to_string(i);
  out += ",reward\n";
  auto row = [&](std::size_t t, const UavState& s, double p, const std::vector<int>& alpha,
                 const std::vector<double>& rate, double reward) {
    out += std::to_string(t);
    for (double v : {s.q.x, s.q.y, s.q.z, s.speed, s.roll, s.pitch, s.yaw, p}) out += "," + format_double(v);
    for (std::size_t i = 0; i < n; ++i) {
      out += "," + std::to_string(alpha.empty() ? 0 : alpha[i]);
      out += "," + format_double(rate.empty() ? 0.0 : rate[i]);
    }
    out += "," + format_double(reward) + "\n";
  };
  row(0, traj.initial, 0.0, {}, {}, 0.0);
  for (const auto& s : traj.steps) row(s.t, s.state, s.action.power_dbm, s.alpha, s.rate_bps, s.reward);
  return out;
}

inline nlohmann::json trajectory_summary(const TrajectoryResult& traj) {
  return {{"t_end", traj.t_end},
          {"success", traj.success},
          {"throughput_bps", traj.throughput_bps()},
          {"delivered_bits", traj.delivered_bits},
          {"required_bits", traj.required_bits},
          {"total_reward", traj.total_reward()}};
}

inline void to_json(nlohmann::json& j, const RewardWeights& w) {
  j = {{"movement", w.movement}, {"data", w.data},           {"early", w.early},
       {"timeout", w.timeout},   {"elevation", w.elevation}, {"progress", w.progress}};
}
inline void from_json(const nlohmann::json& j, RewardWeights& w) {
  const RewardWeights d;
  w.movement = j.value("movement", d.movement);
  w.data = j.value("data", d.data);
  w.early = j.value("early", d.early);
  w.timeout = j.value("timeout", d.timeout);
  w.elevation = j.value("elevation", d.elevation);
  w.progress = j.value("progress", d.progress);
}

inline void to_json(nlohmann::json& j, const EpisodeConfig& c) {
  j = {{"dt", c.dt},
       {"t_max", c.t_max},
       {"a_max", c.a_max},
       {"v_max", c.v_max},
       {"link", c.link},
       {"payload_bits", c.payload_bits},
       {"weights", c.weights},
       {"home_tolerance", c.home_tolerance},
       {"critical_elevation_deg", c.critical_elevation_deg},
       {"require_return", c.require_return}};
}
inline void from_json(const nlohmann::json& j, EpisodeConfig& c) {
  const EpisodeConfig d;
  c.dt = j.value("dt", d.dt);
  c.t_max = j.value("t_max", d.t_max);
  c.a_max = j.value("a_max", d.a_max);
  c.v_max = j.value("v_max", d.v_max);
  c.link = j.value("link", d.link);
  c.payload_bits = j.value("payload_bits", d.payload_bits);
  c.weights = j.value("weights", d.weights);
  c.home_tolerance = j.value("home_tolerance", d.home_tolerance);
  c.critical_elevation_deg = j.value("critical_elevation_deg", d.critical_elevation_deg);
  c.require_return = j.value("require_return", d.require_return);
  c.validate();
}

}  // namespace uavckm
