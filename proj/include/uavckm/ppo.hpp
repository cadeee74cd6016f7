#pragma once

// Gaussian-policy PPO with GAE and the clipped surrogate. The policy acts in
// an unbounded pre-squash space; a tanh map scaled per dimension turns the
// sample into an in-bounds action, and the log-density carries the
// change-of-variables correction.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavckm/mdp.hpp"
#include "uavckm/nn.hpp"
#include "uavckm/rng.hpp"

namespace uavckm {

struct PpoConfig {
  double gamma{0.99};
  double lambda{1.0};
  double clip_epsilon{0.2};
  std::size_t rollout_steps{2048};
  std::size_t minibatch{256};
  std::size_t update_epochs{10};
  double lr{3e-4};
  std::size_t iterations{100};
  std::vector<std::size_t> hidden{64, 64};
  double init_log_std{0.0};
  bool normalize_advantages{true};
  double max_grad_norm{0.5};
  /// Rewards are multiplied by this before advantage estimation.
  double reward_scale{0.1};
  /// Weight of the Gaussian entropy bonus (pre-squash) in the policy loss.
  double entropy_coef{0.0};
  /// Decay the learning rate linearly to zero over the iterations.
  bool anneal_lr{false};
  std::uint64_t seed{0};

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo: gamma must be in (0, 1]");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("ppo: lambda must be in [0, 1]");
    if (!(clip_epsilon > 0.0)) throw std::invalid_argument("ppo: clip epsilon must be positive");
    if (rollout_steps == 0 || minibatch == 0 || update_epochs == 0) {
      throw std::invalid_argument("ppo: rollout, minibatch and epochs must be positive");
    }
    if (!(lr > 0.0) || !(reward_scale > 0.0)) throw std::invalid_argument("ppo: lr and reward scale must be positive");
    if (!(entropy_coef >= 0.0)) throw std::invalid_argument("ppo: entropy coefficient must be non-negative");
    if (!std::isfinite(init_log_std)) throw std::invalid_argument("ppo: initial log-std must be finite");
  }
};

// ------------------------------------------------------------------ policy

struct PolicyNet {
  Network mean;
  Matrix log_std;  // 1 x action dim
  std::vector<std::pair<double, double>> bounds;

  std::size_t action_dim() const { return bounds.size(); }

  /// Pre-squash point to bounded action, per dimension.
  std::vector<double> squash(std::span<const double> u) const {
    std::vector<double> a(u.size());
    for (std::size_t d = 0; d < u.size(); ++d) {
      const auto [lo, hi] = bounds[d];
      a[d] = std::clamp(lo + (hi - lo) * 0.5 * (std::tanh(u[d]) + 1.0), lo, hi);
    }
    return a;
  }

  /// log |d squash / d u| summed over dimensions.
  double squash_log_det(std::span<const double> u) const {
    double s = 0.0;
    for (std::size_t d = 0; d < u.size(); ++d) {
      const auto [lo, hi] = bounds[d];
      // log(1 - tanh^2 u) = 2 (log 2 - u - softplus(-2u))
      const double x = -2.0 * u[d];
      const double softplus = x > 30.0 ? x : std::log1p(std::exp(x));
      s += std::log(0.5 * (hi - lo)) + 2.0 * (std::numbers::ln2 - u[d] - softplus);
    }
    return s;
  }

  std::vector<Matrix*> parameters() {
    auto p = mean.parameters();
    p.push_back(&log_std);
    return p;
  }
  bool operator==(const PolicyNet& o) const { return mean == o.mean && log_std == o.log_std && bounds == o.bounds; }
};

inline PolicyNet build_policy(std::size_t obs_dim, std::vector<std::pair<double, double>> bounds,
                              const std::vector<std::size_t>& hidden, double init_log_std, Rng& rng) {
  std::vector<LayerSpec> specs;
  for (auto h : hidden) specs.push_back({h, Activation::tanh, false});
  specs.push_back({bounds.size(), Activation::identity, false});
  PolicyNet p;
  p.mean = Network::build(obs_dim, specs, rng);
  p.mean.layers().back().weight *= 0.01;
  p.log_std = Matrix::Constant(1, static_cast<Eigen::Index>(bounds.size()), init_log_std);
  p.bounds = std::move(bounds);
  return p;
}

inline Network build_value(std::size_t obs_dim, const std::vector<std::size_t>& hidden, Rng& rng) {
  std::vector<LayerSpec> specs;
  for (auto h : hidden) specs.push_back({h, Activation::tanh, false});
  specs.push_back({1, Activation::identity, false});
  return Network::build(obs_dim, specs, rng);
}

/// Diagonal Gaussian log-density of `u` around `mean` (no squash term).
inline double gaussian_log_prob(std::span<const double> mean, const Matrix& log_std, std::span<const double> u) {
  double s = 0.0;
  for (std::size_t d = 0; d < u.size(); ++d) {
    const double ls = log_std(0, static_cast<Eigen::Index>(d));
    const double z = (u[d] - mean[d]) * std::exp(-ls);
    s += -0.5 * z * z - ls - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  return s;
}

struct PolicySample {
  std::vector<double> action;
  std::vector<double> pre_squash;
  double log_prob{0.0};
};

inline std::vector<double> row_vector(const Matrix& m, Eigen::Index r = 0) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) v[static_cast<std::size_t>(c)] = m(r, c);
  return v;
}

inline Matrix obs_matrix(const std::vector<double>& obs) {
  Matrix m(1, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = obs[i];
  return m;
}

inline PolicySample sample_action(const PolicyNet& p, const std::vector<double>& obs, Rng& rng) {
  const auto mu = row_vector(p.mean.forward(obs_matrix(obs)));
  PolicySample s;
  s.pre_squash.resize(mu.size());
  for (std::size_t d = 0; d < mu.size(); ++d) {
    s.pre_squash[d] = mu[d] + std::exp(p.log_std(0, static_cast<Eigen::Index>(d))) * rng.normal();
  }
  s.action = p.squash(s.pre_squash);
  s.log_prob = gaussian_log_prob(mu, p.log_std, s.pre_squash) - p.squash_log_det(s.pre_squash);
  return s;
}

inline std::vector<double> mean_action(const PolicyNet& p, const std::vector<double>& obs) {
  return p.squash(row_vector(p.mean.forward(obs_matrix(obs))));
}

// --------------------------------------------------------------- estimators

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Generalized advantage estimation. `dones[t]` marks that the episode
/// ended after step t, so no value is bootstrapped across it.
inline AdvantageEstimate gae(const std::vector<double>& rewards, const std::vector<double>& values,
                             const std::vector<bool>& dones, double bootstrap_value, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw std::invalid_argument("gae: length mismatch");
  AdvantageEstimate e;
  e.advantages.assign(n, 0.0);
  e.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_value = k + 1 < n ? values[k + 1] : bootstrap_value;
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    running = delta + gamma * lambda * live * running;
    e.advantages[k] = running;
    e.returns[k] = running + values[k];
  }
  return e;
}

inline std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values,
                               double bootstrap_value, double gamma, double lambda) {
  return gae(rewards, values, std::vector<bool>(rewards.size(), false), bootstrap_value, gamma, lambda).advantages;
}

inline double clipped_objective(double ratio, double advantage, double epsilon) {
  return std::min(ratio * advantage, std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon) * advantage);
}

// ----------------------------------------------------------------- rollouts

struct Rollout {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<double>> pre_squash;
  std::vector<double> rewards;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<bool> dones;

  std::size_t size() const { return rewards.size(); }
  bool consistent() const {
    const std::size_t n = rewards.size();
    return states.size() == n && pre_squash.size() == n && log_probs.size() == n && values.size() == n &&
           dones.size() == n;
  }
};

struct SurrogateResult {
  double loss{0.0};  // negated mean clipped objective
  double max_ratio_deviation{0.0};
  double approx_kl{0.0};
  std::vector<Matrix> grads;  // policy parameter order: mean network tensors then log_std
};

/// Clipped surrogate over the rows `idx` of a rollout, with analytic
/// gradients for the mean network and the log-std vector. A positive
/// `entropy_coef` subtracts that multiple of the Gaussian entropy.
inline SurrogateResult surrogate(const PolicyNet& p, const Rollout& ro, const std::vector<double>& adv,
                                 const std::vector<std::size_t>& idx, double epsilon, double entropy_coef = 0.0) {
  const auto B = static_cast<Eigen::Index>(idx.size());
  const auto obs_dim = static_cast<Eigen::Index>(ro.states.front().size());
  const auto adim = static_cast<Eigen::Index>(p.action_dim());
  Matrix x(B, obs_dim);
  for (Eigen::Index r = 0; r < B; ++r) {
    const auto& s = ro.states[idx[static_cast<std::size_t>(r)]];
    for (Eigen::Index c = 0; c < obs_dim; ++c) x(r, c) = s[static_cast<std::size_t>(c)];
  }
  ForwardCache cache;
  const Matrix mu = p.mean.forward(x, Mode::train, &cache);
  Matrix g_mu = Matrix::Zero(B, adim);
  Matrix g_ls = Matrix::Zero(1, adim);
  SurrogateResult res;
  const double inv_b = 1.0 / static_cast<double>(B);
  for (Eigen::Index r = 0; r < B; ++r) {
    const std::size_t i = idx[static_cast<std::size_t>(r)];
    const auto& u = ro.pre_squash[i];
    const auto mrow = row_vector(mu, r);
    const double logp = gaussian_log_prob(mrow, p.log_std, u) - p.squash_log_det(u);
    const double diff = logp - ro.log_probs[i];
    const double ratio = std::exp(diff);
    const double a = adv[i];
    res.loss -= clipped_objective(ratio, a, epsilon) * inv_b;
    res.max_ratio_deviation = std::max(res.max_ratio_deviation, std::abs(ratio - 1.0));
    res.approx_kl += ((ratio - 1.0) - diff) * inv_b;
    const bool active = a >= 0.0 ? ratio < 1.0 + epsilon : ratio > 1.0 - epsilon;
    if (!active) continue;
    const double dlogp = -a * ratio * inv_b;  // d loss / d logp
    for (Eigen::Index d = 0; d < adim; ++d) {
      const double ls = p.log_std(0, d);
      const double inv_var = std::exp(-2.0 * ls);
      const double dev = u[static_cast<std::size_t>(d)] - mrow[static_cast<std::size_t>(d)];
      g_mu(r, d) += dlogp * dev * inv_var;
      g_ls(0, d) += dlogp * (dev * dev * inv_var - 1.0);
    }
  }
  if (entropy_coef > 0.0) {
    const double half_log_2pie = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
    res.loss -= entropy_coef * (p.log_std.sum() + half_log_2pie * static_cast<double>(adim));
    g_ls.array() -= entropy_coef;
  }
  const Gradients g = p.mean.backward(cache, g_mu);
  for (const Matrix* t : g.tensors()) res.grads.push_back(*t);
  res.grads.push_back(g_ls);
  return res;
}

inline double clip_grad_norm(std::vector<Matrix>& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    for (auto& g : grads) g *= max_norm / norm;
  }
  return norm;
}

// ----------------------------------------------------------------- training

struct PpoAgent {
  PolicyNet policy;
  Network value;
};

struct PpoIteration {
  std::size_t iteration{0};
  std::size_t env_steps{0};
  std::size_t episodes{0};
  double mean_return{0.0};  // raw reward, completed episodes only
  double success_rate{0.0};
  double mean_length{0.0};
  double policy_loss{0.0};
  double value_loss{0.0};
  double approx_kl{0.0};
  double first_ratio_deviation{0.0};
};

struct PpoResult {
  PpoAgent agent;
  std::vector<PpoIteration> curve;
  double train_seconds{0.0};
};

class PpoTrainingError : public std::runtime_error {
 public:
  PpoTrainingError(const std::string& what, PpoAgent last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const PpoAgent& last_good() const { return last_good_; }

 private:
  PpoAgent last_good_;
};

inline std::vector<std::pair<double, double>> policy_bounds(const EpisodeConfig& cfg) {
  const auto b = cfg.action_bounds();
  return {b.begin(), b.end()};
}

inline PpoAgent make_agent(const UavMdp& env, const PpoConfig& cfg) {
  Rng rng(fork_seed(cfg.seed, Stream::ppo, 0));
  PpoAgent a;
  a.policy = build_policy(env.observation_dim(), policy_bounds(env.config()), cfg.hidden, cfg.init_log_std, rng);
  a.value = build_value(env.observation_dim(), cfg.hidden, rng);
  return a;
}

/// Alternates rollout collection on `env` with minibatched clipped-surrogate
/// and value-regression updates. Starts from `init` when given.
inline PpoResult train_ppo(UavMdp& env, const PpoConfig& cfg, const PpoAgent* init = nullptr) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  PpoResult out;
  out.agent = init ? *init : make_agent(env, cfg);
  PolicyNet& pol = out.agent.policy;
  Network& val = out.agent.value;
  if (pol.mean.input_dim() != env.observation_dim() || pol.action_dim() != Action::kDim) {
    throw std::invalid_argument("ppo: agent does not match the environment");
  }
  Rng rng(fork_seed(cfg.seed, Stream::ppo, 1));
  AdamState adam_pi(cfg.lr), adam_v(cfg.lr);
  std::uint64_t episode_counter = 0;
  env.reset(fork_seed(cfg.seed, Stream::ppo, 1000 + episode_counter++));
  std::vector<double> obs = env.observation();
  double ep_return = 0.0;
  std::size_t total_steps = 0;

  auto value_of = [&](const std::vector<double>& s) { return val.forward(obs_matrix(s))(0, 0); };

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    if (cfg.anneal_lr) {
      adam_pi.lr = adam_v.lr = cfg.lr * (1.0 - static_cast<double>(it) / static_cast<double>(cfg.iterations));
    }
    const PpoAgent snapshot = out.agent;
    Rollout ro;
    PpoIteration rec;
    rec.iteration = it;
    double ret_sum = 0.0, len_sum = 0.0;
    std::size_t successes = 0;
    for (std::size_t k = 0; k < cfg.rollout_steps; ++k) {
      const PolicySample s = sample_action(pol, obs, rng);
      ro.states.push_back(obs);
      ro.pre_squash.push_back(s.pre_squash);
      ro.log_probs.push_back(s.log_prob);
      ro.values.push_back(value_of(obs));
      const StepResult r = env.step(Action::from_array(s.action));
      ro.rewards.push_back(r.reward * cfg.reward_scale);
      ro.dones.push_back(r.done);
      ep_return += r.reward;
      ++total_steps;
      if (r.done) {
        ++rec.episodes;
        ret_sum += ep_return;
        len_sum += static_cast<double>(env.t());
        successes += r.success ? 1 : 0;
        ep_return = 0.0;
        env.reset(fork_seed(cfg.seed, Stream::ppo, 1000 + episode_counter++));
      }
      obs = env.observation();
    }
    const double bootstrap = value_of(obs);
    AdvantageEstimate est = gae(ro.rewards, ro.values, ro.dones, bootstrap, cfg.gamma, cfg.lambda);
    std::vector<double> adv = est.advantages;
    if (cfg.normalize_advantages && adv.size() > 1) {
      const double m = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
      double v = 0.0;
      for (double a : adv) v += (a - m) * (a - m);
      const double sd = std::sqrt(v / static_cast<double>(adv.size())) + 1e-8;
      for (double& a : adv) a = (a - m) / sd;
    }

    std::vector<std::size_t> order(ro.size());
    std::iota(order.begin(), order.end(), 0);
    {
      const SurrogateResult first = surrogate(pol, ro, adv, order, cfg.clip_epsilon, cfg.entropy_coef);
      rec.first_ratio_deviation = first.max_ratio_deviation;
    }
    double pl = 0.0, vl = 0.0, kl = 0.0;
    std::size_t batches = 0;
    const std::size_t obs_dim = obs.size();
    for (std::size_t ep = 0; ep < cfg.update_epochs; ++ep) {
      rng.shuffle(order);
      for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.minibatch) {
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(b0),
                                           order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b0 + cfg.minibatch)));
        SurrogateResult sr = surrogate(pol, ro, adv, idx, cfg.clip_epsilon, cfg.entropy_coef);
        Matrix x(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(obs_dim));
        Matrix target(static_cast<Eigen::Index>(idx.size()), 1);
        for (std::size_t r = 0; r < idx.size(); ++r) {
          for (std::size_t c = 0; c < obs_dim; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = ro.states[idx[r]][c];
          target(static_cast<Eigen::Index>(r), 0) = est.returns[idx[r]];
        }
        ForwardCache vc;
        const Matrix pred = val.forward(x, Mode::train, &vc);
        const double vloss = mse(pred, target);
        if (!std::isfinite(sr.loss) || !std::isfinite(vloss)) {
          out.agent = snapshot;
          throw PpoTrainingError("ppo: non-finite loss at iteration " + std::to_string(it), snapshot);
        }
        Gradients vg = val.backward(vc, mse_gradient(pred, target));
        std::vector<Matrix> vgrads;
        for (const Matrix* t : vg.tensors()) vgrads.push_back(*t);
        clip_grad_norm(sr.grads, cfg.max_grad_norm);
        clip_grad_norm(vgrads, cfg.max_grad_norm);
        std::vector<const Matrix*> pg_ptr, vg_ptr;
        for (const auto& g : sr.grads) pg_ptr.push_back(&g);
        for (const auto& g : vgrads) vg_ptr.push_back(&g);
        try {
          adam_step(pol.parameters(), pg_ptr, adam_pi, 0.0, std::vector<bool>(pg_ptr.size(), false));
          adam_step(val.parameters(), vg_ptr, adam_v, 0.0, std::vector<bool>(vg_ptr.size(), false));
        } catch (const std::domain_error&) {
          out.agent = snapshot;
          throw PpoTrainingError("ppo: non-finite gradient at iteration " + std::to_string(it), snapshot);
        }
        pol.log_std = pol.log_std.cwiseMax(-5.0).cwiseMin(2.0);
        pl += sr.loss;
        vl += vloss;
        kl += sr.approx_kl;
        ++batches;
      }
    }
    rec.env_steps = total_steps;
    rec.policy_loss = pl / static_cast<double>(batches);
    rec.value_loss = vl / static_cast<double>(batches);
    rec.approx_kl = kl / static_cast<double>(batches);
    if (rec.episodes > 0) {
      rec.mean_return = ret_sum / static_cast<double>(rec.episodes);
      rec.mean_length = len_sum / static_cast<double>(rec.episodes);
      rec.success_rate = static_cast<double>(successes) / static_cast<double>(rec.episodes);
    }
    out.curve.push_back(rec);
  }
  out.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// --------------------------------------------------------------- evaluation

struct EvaluationReport {
  double mean_flight_time{0.0};
  double mean_throughput_bps{0.0};
  double success_rate{0.0};
  double mean_return{0.0};
  std::vector<TrajectoryResult> trajectories;
};

/// Episode driver shared by policy and baseline evaluation: `act` maps an
/// observation to an action. Success additionally requires a clean
/// mission-scope feasibility check.
template <typename ActFn>
EvaluationReport evaluate_with(UavMdp& env, std::size_t n_episodes, std::uint64_t seed, ActFn&& act) {
  if (n_episodes == 0) throw std::invalid_argument("evaluate: need at least one episode");
  EvaluationReport rep;
  for (std::size_t e = 0; e < n_episodes; ++e) {
    env.reset(fork_seed(seed, Stream::evaluation, e));
    while (!env.done()) env.step(Action::from_array(act(env.observation())));
    TrajectoryResult traj = env.trajectory();
    traj.success = traj.success && check_feasibility(traj, env.config(), env.environment()).empty();
    rep.mean_flight_time += traj.t_end;
    rep.mean_throughput_bps += traj.throughput_bps();
    rep.success_rate += traj.success ? 1.0 : 0.0;
    rep.mean_return += traj.total_reward();
    rep.trajectories.push_back(std::move(traj));
  }
  const double n = static_cast<double>(n_episodes);
  rep.mean_flight_time /= n;
  rep.mean_throughput_bps /= n;
  rep.success_rate /= n;
  rep.mean_return /= n;
  return rep;
}

inline EvaluationReport evaluate_policy(const PolicyNet& p, UavMdp& env, std::size_t n_episodes, std::uint64_t seed) {
  return evaluate_with(env, n_episodes, seed, [&](const std::vector<double>& obs) { return mean_action(p, obs); });
}

/// Uniformly random in-bounds actions.
inline EvaluationReport evaluate_random_policy(UavMdp& env, std::size_t n_episodes, std::uint64_t seed) {
  Rng rng(fork_seed(seed, Stream::evaluation, 1u << 20));
  const auto bounds = env.config().action_bounds();
  return evaluate_with(env, n_episodes, seed, [&](const std::vector<double>&) {
    std::vector<double> a(Action::kDim);
    for (std::size_t d = 0; d < a.size(); ++d) a[d] = rng.uniform(bounds[d].first, bounds[d].second);
    return a;
  });
}

// ----------------------------------------------------------- serialization

inline void to_json(nlohmann::json& j, const PpoConfig& c) {
  j = {{"gamma", c.gamma},
       {"lambda", c.lambda},
       {"clip_epsilon", c.clip_epsilon},
       {"rollout_steps", c.rollout_steps},
       {"minibatch", c.minibatch},
       {"update_epochs", c.update_epochs},
       {"lr", c.lr},
       {"iterations", c.iterations},
       {"hidden", c.hidden},
       {"init_log_std", c.init_log_std},
       {"normalize_advantages", c.normalize_advantages},
       {"max_grad_norm", c.max_grad_norm},
       {"reward_scale", c.reward_scale},
       {"entropy_coef", c.entropy_coef},
       {"anneal_lr", c.anneal_lr},
       {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, PpoConfig& c) {
  const PpoConfig d;
  c.gamma = j.value("gamma", d.gamma);
  c.lambda = j.value("lambda", d.lambda);
  c.clip_epsilon = j.value("clip_epsilon", d.clip_epsilon);
  c.rollout_steps = j.value("rollout_steps", d.rollout_steps);
  c.minibatch = j.value("minibatch", d.minibatch);
  c.update_epochs = j.value("update_epochs", d.update_epochs);
  c.lr = j.value("lr", d.lr);
  c.iterations = j.value("iterations", d.iterations);
  c.hidden = j.value("hidden", d.hidden);
  c.init_log_std = j.value("init_log_std", d.init_log_std);
  c.normalize_advantages = j.value("normalize_advantages", d.normalize_advantages);
  c.max_grad_norm = j.value("max_grad_norm", d.max_grad_norm);
  c.reward_scale = j.value("reward_scale", d.reward_scale);
  c.entropy_coef = j.value("entropy_coef", d.entropy_coef);
  c.anneal_lr = j.value("anneal_lr", d.anneal_lr);
  c.seed = j.value("seed", d.seed);
  c.validate();
}

inline nlohmann::json agent_to_json(const PpoAgent& a) {
  nlohmann::json bounds = nlohmann::json::array();
  for (const auto& [lo, hi] : a.policy.bounds) bounds.push_back({lo, hi});
  return {{"format", "uavckm-ppo"},
          {"version", 1},
          {"policy_mean", network_to_json(a.policy.mean)},
          {"log_std", matrix_to_json(a.policy.log_std)},
          {"bounds", bounds},
          {"value", network_to_json(a.value)}};
}

inline PpoAgent agent_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "uavckm-ppo") throw std::invalid_argument("checkpoint: not a PPO agent");
  if (j.at("version").get<int>() != 1) throw std::invalid_argument("checkpoint: unsupported version");
  PpoAgent a;
  a.policy.mean = network_from_json(j.at("policy_mean"));
  a.policy.log_std = matrix_from_json(j.at("log_std"));
  for (const auto& b : j.at("bounds")) a.policy.bounds.emplace_back(b.at(0).get<double>(), b.at(1).get<double>());
  a.value = network_from_json(j.at("value"));
  if (static_cast<std::size_t>(a.policy.log_std.cols()) != a.policy.bounds.size() ||
      a.policy.mean.output_dim() != a.policy.bounds.size()) {
    throw std::invalid_argument("checkpoint: policy dimensions disagree");
  }
  return a;
}

}  // namespace uavckm
