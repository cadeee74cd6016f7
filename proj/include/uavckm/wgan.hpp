#pragma once

// Weight-clipped Wasserstein GAN over normalized feature rows, sample
// synthesis with a distance-consistency filter, and distribution checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavckm/dataset.hpp"
#include "uavckm/nn.hpp"
#include "uavckm/rng.hpp"

namespace uavckm {

struct WganConfig {
  std::size_t latent_dim{32};
  std::size_t batch_size{256};
  std::size_t n_critic{3};
  double clip_value{0.01};
  double lr{1e-4};
  double beta1{0.5};  // Adam first-moment decay for both networks
  std::size_t iterations{6000};
  std::uint64_t seed{0};
  std::vector<std::size_t> hidden{128, 128};

  void validate() const {
    if (latent_dim == 0 || batch_size == 0 || n_critic == 0 || iterations == 0 || hidden.empty()) {
      throw std::invalid_argument("wgan: sizes and counts must be positive");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("wgan: beta1 must lie in [0, 1)");
    if (!(clip_value > 0.0) || !(lr > 0.0)) throw std::invalid_argument("wgan: clip value and lr must be positive");
  }
};

/// Minimized by the critic: mean(fake) - mean(real).
inline double critic_loss(std::span<const double> real_scores, std::span<const double> fake_scores) {
  if (real_scores.size() != fake_scores.size() || real_scores.empty()) {
    throw std::invalid_argument("critic_loss: need equal, non-empty batches");
  }
  double r = 0.0, f = 0.0;
  for (double v : real_scores) r += v;
  for (double v : fake_scores) f += v;
  return (f - r) / static_cast<double>(real_scores.size());
}

inline double generator_loss(std::span<const double> fake_scores) {
  if (fake_scores.empty()) throw std::invalid_argument("generator_loss: empty batch");
  double f = 0.0;
  for (double v : fake_scores) f += v;
  return -f / static_cast<double>(fake_scores.size());
}

/// Clamps every weight and bias into [-c, c].
inline void clip_weights(Network& net, double c) {
  for (auto* p : net.parameters()) *p = p->cwiseMax(-c).cwiseMin(c);
}

inline double max_abs_parameter(const Network& net) {
  double m = 0.0;
  for (const auto* p : net.parameters()) {
    if (p->size() > 0) m = std::max(m, p->cwiseAbs().maxCoeff());
  }
  return m;
}

struct WganLogEntry {
  std::size_t iteration{0};
  double critic_loss{0.0};
  double generator_loss{0.0};
  /// mean over features of |mean(real batch) - mean(fake batch)|.
  double mean_gap{0.0};
};

struct WganResult {
  Network generator;
  Network critic;
  std::vector<WganLogEntry> history;
};

namespace detail {

inline Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  return z;
}

inline Matrix sample_rows(const Matrix& data, std::size_t m, Rng& rng) {
  Matrix out(static_cast<Eigen::Index>(m), data.cols());
  for (std::size_t i = 0; i < m; ++i) {
    out.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(data.rows()))));
  }
  return out;
}

inline std::span<const double> column_span(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

}  // namespace detail

inline Matrix dataset_matrix(const Dataset& ds) {
  Matrix m(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(kFeatureCount));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = ds.rows[i].values[f];
    }
  }
  return m;
}

/// Trains on rows of `real` (already scaled to [0, 1]). The critic takes
/// n_critic steps per generator step and is clipped after each of them.
inline WganResult train_wgan(const Matrix& real, const WganConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(real.rows()) < cfg.batch_size) {
    throw std::invalid_argument("train_wgan: need at least batch_size real rows");
  }
  const auto dim = static_cast<std::size_t>(real.cols());
  Rng rng(cfg.seed);
  std::vector<LayerSpec> gen_specs, critic_specs;
  for (auto h : cfg.hidden) {
    gen_specs.push_back({h, Activation::relu, false});
    critic_specs.push_back({h, Activation::relu, false});
  }
  gen_specs.push_back({dim, Activation::sigmoid, false});
  critic_specs.push_back({1, Activation::identity, false});

  WganResult result;
  result.generator = Network::build(cfg.latent_dim, gen_specs, rng);
  result.critic = Network::build(dim, critic_specs, rng);
  clip_weights(result.critic, cfg.clip_value);
  Network& gen = result.generator;
  Network& critic = result.critic;
  AdamState gen_opt(cfg.lr), critic_opt(cfg.lr);
  gen_opt.beta1 = critic_opt.beta1 = cfg.beta1;
  const std::size_t m = cfg.batch_size;
  const double inv_m = 1.0 / static_cast<double>(m);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    WganLogEntry entry;
    entry.iteration = it;
    for (std::size_t t = 0; t < cfg.n_critic; ++t) {
      const Matrix fake = gen.forward(detail::gaussian_matrix(rng, m, cfg.latent_dim));
      const Matrix batch = detail::sample_rows(real, m, rng);
      ForwardCache real_cache, fake_cache;
      const Matrix real_scores = critic.forward(batch, Mode::train, &real_cache);
      const Matrix fake_scores = critic.forward(fake, Mode::train, &fake_cache);
      entry.critic_loss = critic_loss(detail::column_span(real_scores), detail::column_span(fake_scores));
      if (!std::isfinite(entry.critic_loss)) {
        throw std::runtime_error("train_wgan: non-finite critic loss at iteration " + std::to_string(it));
      }
      Gradients g = critic.backward(real_cache, Matrix::Constant(static_cast<Eigen::Index>(m), 1, -inv_m));
      g.accumulate(critic.backward(fake_cache, Matrix::Constant(static_cast<Eigen::Index>(m), 1, inv_m)));
      adam_step(critic, g, critic_opt);
      clip_weights(critic, cfg.clip_value);
      if (t + 1 == cfg.n_critic) {
        entry.mean_gap = (batch.colwise().mean() - fake.colwise().mean()).cwiseAbs().mean();
      }
    }
    ForwardCache gen_cache, critic_cache;
    const Matrix fake = gen.forward(detail::gaussian_matrix(rng, m, cfg.latent_dim), Mode::train, &gen_cache);
    const Matrix scores = critic.forward(fake, Mode::train, &critic_cache);
    entry.generator_loss = generator_loss(detail::column_span(scores));
    if (!std::isfinite(entry.generator_loss)) {
      throw std::runtime_error("train_wgan: non-finite generator loss at iteration " + std::to_string(it));
    }
    // The critic is only differentiated through here, never updated.
    const Gradients through_critic =
        critic.backward(critic_cache, Matrix::Constant(static_cast<Eigen::Index>(m), 1, -inv_m));
    adam_step(gen, gen.backward(gen_cache, through_critic.input), gen_opt);
    result.history.push_back(entry);
  }
  return result;
}

inline WganResult train_wgan(const Dataset& real, const WganConfig& cfg) {
  if (!real.normalized) throw std::invalid_argument("train_wgan: dataset must be normalized");
  return train_wgan(dataset_matrix(real), cfg);
}

struct SynthesisReport {
  std::size_t requested{0};
  std::size_t produced{0};
  std::size_t rejected{0};
  /// Rows missing because the retry cap was hit.
  std::size_t shortfall{0};
};

inline constexpr double kDistanceConsistency = 0.10;
inline constexpr std::size_t kSynthesisRetryFactor = 20;

/// Draws rows from the generator, clamps them to the training range,
/// denormalizes, and rejects rows whose generated distance disagrees with
/// the generated positions by more than 10 %. Accepted rows carry the
/// recomputed distance.
inline Dataset generate_samples(const Network& gen, std::size_t n, const NormStats& stats, std::uint64_t seed,
                                SynthesisReport* report = nullptr) {
  Dataset out;
  SynthesisReport rep;
  rep.requested = n;
  Rng rng(seed);
  const std::size_t cap = n * kSynthesisRetryFactor;
  std::size_t drawn = 0;
  const std::size_t chunk = 512;
  while (out.size() < n && drawn < cap) {
    const std::size_t k = std::min(chunk, cap - drawn);
    const Matrix rows = gen.forward(detail::gaussian_matrix(rng, k, gen.input_dim()));
    drawn += k;
    for (Eigen::Index r = 0; r < rows.rows() && out.size() < n; ++r) {
      Sample s;
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        s.values[f] = stats.denormalize(f, std::clamp(rows(r, static_cast<Eigen::Index>(f)), 0.0, 1.0));
      }
      const double d = distance(s.uav(), s.gu());
      if (std::abs(d - s.d()) > kDistanceConsistency * std::max(d, kDistanceFloor)) {
        ++rep.rejected;
        continue;
      }
      s.values[kDist] = d;
      out.rows.push_back(s);
    }
  }
  rep.produced = out.size();
  rep.shortfall = n - out.size();
  if (report) *report = rep;
  return out;
}

namespace detail {

inline double sorted_quantile(const std::vector<double>& sorted, std::size_t i, std::size_t n) {
  const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  auto idx = static_cast<std::size_t>(q * static_cast<double>(sorted.size()));
  return sorted[std::min(idx, sorted.size() - 1)];
}

}  // namespace detail

/// 1-D Wasserstein-1 per feature: mean absolute difference of matched
/// quantiles, using max(|a|, |b|) quantile levels.
inline std::array<double, kFeatureCount> feature_wasserstein1(const Dataset& a, const Dataset& b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("feature_wasserstein1: empty dataset");
  std::array<double, kFeatureCount> out{};
  const std::size_t n = std::max(a.size(), b.size());
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::vector<double> va, vb;
    va.reserve(a.size());
    vb.reserve(b.size());
    for (const auto& r : a.rows) va.push_back(r.values[f]);
    for (const auto& r : b.rows) vb.push_back(r.values[f]);
    std::sort(va.begin(), va.end());
    std::sort(vb.begin(), vb.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += std::abs(detail::sorted_quantile(va, i, n) - detail::sorted_quantile(vb, i, n));
    }
    out[f] = sum / static_cast<double>(n);
  }
  return out;
}

struct QualityReport {
  std::array<double, kFeatureCount> wasserstein1{};  // on the real data's normalized scale
  std::array<double, kFeatureCount> real_mean{}, real_std{}, synth_mean{}, synth_std{};
  double real_corr_dg{0.0};
  double synth_corr_dg{0.0};
  SynthesisReport synthesis;

  std::size_t features_below(double threshold) const {
    return static_cast<std::size_t>(
        std::count_if(wasserstein1.begin(), wasserstein1.end(), [&](double w) { return w < threshold; }));
  }
  bool corr_sign_matches() const { return (real_corr_dg < 0.0) == (synth_corr_dg < 0.0); }
};

/// Compares raw (denormalized) real and synthetic data; distances are
/// measured after normalizing both with `stats`.
inline QualityReport assess_quality(const Dataset& real_raw, const Dataset& synth_raw, const NormStats& stats) {
  QualityReport q;
  q.wasserstein1 = feature_wasserstein1(apply_normalization(real_raw, stats), apply_normalization(synth_raw, stats));
  auto moments = [](const Dataset& ds, std::array<double, kFeatureCount>& mean, std::array<double, kFeatureCount>& sd) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      double s = 0.0, s2 = 0.0;
      for (const auto& r : ds.rows) s += r.values[f];
      mean[f] = s / static_cast<double>(ds.size());
      for (const auto& r : ds.rows) s2 += (r.values[f] - mean[f]) * (r.values[f] - mean[f]);
      sd[f] = std::sqrt(s2 / static_cast<double>(ds.size()));
    }
  };
  moments(real_raw, q.real_mean, q.real_std);
  moments(synth_raw, q.synth_mean, q.synth_std);
  q.real_corr_dg = feature_correlation(real_raw, kDist, kGain);
  q.synth_corr_dg = feature_correlation(synth_raw, kDist, kGain);
  return q;
}

inline void to_json(nlohmann::json& j, const QualityReport& q) {
  nlohmann::json features = nlohmann::json::object();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    features[std::string(kFeatureNames[f])] = {{"wasserstein1", q.wasserstein1[f]},
                                               {"real_mean", q.real_mean[f]},
                                               {"real_std", q.real_std[f]},
                                               {"synth_mean", q.synth_mean[f]},
                                               {"synth_std", q.synth_std[f]}};
  }
  j = {{"features", features},
       {"corr_d_g", {{"real", q.real_corr_dg}, {"synthetic", q.synth_corr_dg}, {"sign_match", q.corr_sign_matches()}}},
       {"features_below_0_1", q.features_below(0.1)},
       {"synthesis",
        {{"requested", q.synthesis.requested},
         {"produced", q.synthesis.produced},
         {"rejected", q.synthesis.rejected},
         {"shortfall", q.synthesis.shortfall}}}};
}

inline void to_json(nlohmann::json& j, const WganConfig& c) {
  j = {{"latent_dim", c.latent_dim}, {"batch_size", c.batch_size}, {"n_critic", c.n_critic},
       {"clip_value", c.clip_value}, {"lr", c.lr},                 {"beta1", c.beta1},
       {"iterations", c.iterations},
       {"seed", c.seed},             {"hidden", c.hidden}};
}
inline void from_json(const nlohmann::json& j, WganConfig& c) {
  const WganConfig d;
  c.latent_dim = j.value("latent_dim", d.latent_dim);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.n_critic = j.value("n_critic", d.n_critic);
  c.clip_value = j.value("clip_value", d.clip_value);
  c.lr = j.value("lr", d.lr);
  c.beta1 = j.value("beta1", d.beta1);
  c.iterations = j.value("iterations", d.iterations);
  c.seed = j.value("seed", d.seed);
  c.hidden = j.value("hidden", d.hidden);
  c.validate();
}

}  // namespace uavckm
