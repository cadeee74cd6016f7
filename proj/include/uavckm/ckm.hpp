#pragma once

// Channel knowledge map predictors: an environment encoder and a residual
// fully connected trunk mapping (positions, environment features) to loss.
//
//   plain               trunk([positions, F_env])
//   knowledge_featured  trunk([positions, L_hat, F_env])
//   knowledge_driven    L_hat + trunk([positions, F_env])
//
// All targets live on the normalized loss scale of the training stats
// (NormStats::normalize_loss); metrics are reported in dB.

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavckm/channel.hpp"
#include "uavckm/dataset.hpp"
#include "uavckm/geometry.hpp"
#include "uavckm/nn.hpp"
#include "uavckm/rng.hpp"

namespace uavckm {

enum class CkmVariant { plain, knowledge_featured, knowledge_driven };

inline std::string to_string(CkmVariant v) {
  switch (v) {
    case CkmVariant::plain: return "plain";
    case CkmVariant::knowledge_featured: return "knowledge-featured";
    case CkmVariant::knowledge_driven: return "knowledge-driven";
  }
  return "plain";
}

inline CkmVariant ckm_variant_from_string(const std::string& s) {
  if (s == "plain") return CkmVariant::plain;
  if (s == "knowledge-featured" || s == "kf") return CkmVariant::knowledge_featured;
  if (s == "knowledge-driven" || s == "kd") return CkmVariant::knowledge_driven;
  throw std::invalid_argument("unknown CKM variant: " + s);
}

/// Normalized xG, yG, zG, xU, yU, zU, d.
inline constexpr std::size_t kPositionFeatures = 7;

struct CkmArchitecture {
  std::vector<std::size_t> trunk_widths{512, 256, 128, 64};
  std::vector<std::size_t> encoder_widths{256, 64};
  /// Cells per side of the height grid fed to the encoder.
  std::size_t grid_cells{20};

  void validate() const {
    if (trunk_widths.empty() || encoder_widths.empty() || grid_cells == 0) {
      throw std::invalid_argument("ckm: empty architecture");
    }
    for (auto w : trunk_widths) {
      if (w == 0) throw std::invalid_argument("ckm: zero-width trunk block");
    }
    for (auto w : encoder_widths) {
      if (w == 0) throw std::invalid_argument("ckm: zero-width encoder layer");
    }
  }
};

struct CkmTrainConfig {
  std::size_t max_epochs{500};
  std::size_t patience{10};
  std::size_t batch_size{64};
  double lr{1e-3};
  /// Learning rate is multiplied by lr_factor after lr_patience epochs without improvement.
  std::size_t lr_patience{5};
  double lr_factor{0.5};
  double min_lr{1e-6};
  double l2{1e-6};
  std::uint64_t seed{0};

  void validate() const {
    if (max_epochs == 0 || batch_size == 0) throw std::invalid_argument("ckm train: counts must be positive");
    if (!(patience < max_epochs)) throw std::invalid_argument("ckm train: patience must be < max_epochs");
    if (!(lr > 0.0) || !(lr_factor > 0.0 && lr_factor <= 1.0) || l2 < 0.0) {
      throw std::invalid_argument("ckm train: bad learning-rate settings");
    }
  }
};

/// Two dense layers with a linear projection skip: relu(main(x) + skip(x)).
struct ResidualBlock {
  Network main;
  Network skip;
  bool operator==(const ResidualBlock&) const = default;
};

struct CkmModel {
  CkmVariant variant{CkmVariant::plain};
  CkmArchitecture arch;
  ChannelParams params;
  NormStats stats;
  /// Encoder input: the scene's height grid divided by height_scale, row-major.
  Matrix grid_input;
  double height_scale{1.0};
  Network encoder;
  std::vector<ResidualBlock> blocks;
  Network head;

  std::size_t trunk_input_dim() const {
    return kPositionFeatures + (variant == CkmVariant::knowledge_featured ? 1 : 0) + encoder.output_dim();
  }
  std::size_t parameter_count() const {
    std::size_t n = encoder.parameter_count() + head.parameter_count();
    for (const auto& b : blocks) n += b.main.parameter_count() + b.skip.parameter_count();
    return n;
  }
  std::vector<Matrix*> parameters() {
    auto out = encoder.parameters();
    for (auto& b : blocks) {
      for (auto* p : b.main.parameters()) out.push_back(p);
      for (auto* p : b.skip.parameters()) out.push_back(p);
    }
    for (auto* p : head.parameters()) out.push_back(p);
    return out;
  }
  std::vector<bool> decay_mask() const {
    auto out = encoder.decay_mask();
    for (const auto& b : blocks) {
      for (bool m : b.main.decay_mask()) out.push_back(m);
      for (bool m : b.skip.decay_mask()) out.push_back(m);
    }
    for (bool m : head.decay_mask()) out.push_back(m);
    return out;
  }
  void set_trunk_zero() {
    for (auto& b : blocks) b.main.set_zero(), b.skip.set_zero();
    head.set_zero();
  }
  bool operator==(const CkmModel& o) const {
    return variant == o.variant && params == o.params && stats == o.stats &&
           grid_input == o.grid_input && encoder == o.encoder && blocks == o.blocks && head == o.head;
  }
};

inline double knowledge_loss_db(const Sample& raw, const ChannelParams& params) {
  return expected_loss_db(raw.uav(), raw.gu(), params);
}

inline Matrix grid_matrix(const HeightGrid& grid, double scale) {
  Matrix m(1, static_cast<Eigen::Index>(grid.cell_heights.size()));
  for (std::size_t i = 0; i < grid.cell_heights.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = grid.cell_heights[i] / scale;
  return m;
}

/// Encoder layers run with fixed (running) batch-norm statistics: every
/// training batch shares the single scene grid, so batch statistics over it
/// would be degenerate.
inline Matrix encode_environment(const Matrix& grid_input, const Network& encoder) {
  if (static_cast<std::size_t>(grid_input.cols()) != encoder.input_dim()) {
    throw std::invalid_argument("encode_environment: grid has " + std::to_string(grid_input.cols()) +
                                " cells, encoder expects " + std::to_string(encoder.input_dim()));
  }
  return encoder.forward(grid_input, Mode::infer);
}

inline Matrix encode_environment(const HeightGrid& grid, const Network& encoder, double height_scale = 1.0) {
  return encode_environment(grid_matrix(grid, height_scale), encoder);
}

inline Network build_encoder(std::size_t cells, const std::vector<std::size_t>& widths, Rng& rng) {
  std::vector<LayerSpec> specs;
  for (auto w : widths) specs.push_back({w, Activation::relu, true});
  return Network::build(cells, specs, rng);
}

inline CkmModel build_ckm(CkmVariant variant, const CkmArchitecture& arch, const Environment& env,
                          const ChannelParams& params, const NormStats& stats, std::uint64_t seed) {
  arch.validate();
  params.validate();
  CkmModel m;
  m.variant = variant;
  m.arch = arch;
  m.params = params;
  m.stats = stats;
  const HeightGrid grid = rasterize_heights(env, arch.grid_cells, arch.grid_cells);
  m.height_scale = std::max(1.0, env.h_min);
  m.grid_input = grid_matrix(grid, m.height_scale);
  Rng rng(seed);
  m.encoder = build_encoder(static_cast<std::size_t>(m.grid_input.cols()), arch.encoder_widths, rng);
  std::size_t in = m.trunk_input_dim();
  for (auto w : arch.trunk_widths) {
    ResidualBlock b;
    b.main = Network::build(in, {{w, Activation::relu, false}, {w, Activation::identity, false}}, rng);
    b.skip = Network::build(in, {{w, Activation::identity, false}}, rng);
    m.blocks.push_back(std::move(b));
    in = w;
  }
  m.head = Network::build(in, {{1, Activation::identity, false}}, rng);
  if (variant == CkmVariant::knowledge_driven) {
    // Start close to the analytic model: a small residual head.
    m.head.layers()[0].weight *= 0.1;
  }
  return m;
}

/// Model inputs for a batch of normalized samples.
struct CkmBatch {
  Matrix positions;  // n x 7
  Matrix knowledge;  // n x 1, normalized analytic loss
  Matrix target;     // n x 1, normalized true loss
};

inline CkmBatch make_batch(const CkmModel& m, const std::vector<Sample>& normalized_rows) {
  const auto n = static_cast<Eigen::Index>(normalized_rows.size());
  CkmBatch b{Matrix(n, kPositionFeatures), Matrix(n, 1), Matrix(n, 1)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const Sample& s = normalized_rows[static_cast<std::size_t>(i)];
    for (std::size_t f = 0; f < kPositionFeatures; ++f) b.positions(i, static_cast<Eigen::Index>(f)) = s.values[f];
    Sample raw;
    for (std::size_t f = 0; f < kFeatureCount; ++f) raw.values[f] = m.stats.denormalize(f, s.values[f]);
    b.knowledge(i, 0) = m.stats.normalize_loss(knowledge_loss_db(raw, m.params));
    b.target(i, 0) = 1.0 - s.values[kGain];
  }
  return b;
}

inline CkmBatch make_raw_batch(const CkmModel& m, const std::vector<Sample>& raw_rows) {
  std::vector<Sample> norm;
  norm.reserve(raw_rows.size());
  for (const auto& r : raw_rows) {
    Sample s;
    for (std::size_t f = 0; f < kFeatureCount; ++f) s.values[f] = m.stats.normalize(f, r.values[f]);
    norm.push_back(s);
  }
  return make_batch(m, norm);
}

struct CkmForwardCache {
  ForwardCache encoder;
  std::vector<ForwardCache> main, skip;
  std::vector<Matrix> pre;  // block pre-activations
  ForwardCache head;
};

inline Matrix trunk_input(const CkmModel& m, const CkmBatch& b, const Matrix& env_features) {
  const Eigen::Index n = b.positions.rows();
  const bool kf = m.variant == CkmVariant::knowledge_featured;
  const Eigen::Index k = static_cast<Eigen::Index>(kPositionFeatures);
  Matrix x(n, static_cast<Eigen::Index>(m.trunk_input_dim()));
  x.leftCols(k) = b.positions;
  if (kf) x.col(k) = b.knowledge.col(0);
  x.rightCols(env_features.cols()) = env_features.replicate(n, 1);
  return x;
}

/// Normalized loss prediction, n x 1.
inline Matrix ckm_forward(const CkmModel& m, const CkmBatch& b, Mode mode = Mode::infer,
                          CkmForwardCache* cache = nullptr) {
  const Matrix env = m.encoder.forward(m.grid_input, Mode::infer, cache ? &cache->encoder : nullptr);
  Matrix h = trunk_input(m, b, env);
  if (cache) {
    cache->main.assign(m.blocks.size(), {});
    cache->skip.assign(m.blocks.size(), {});
    cache->pre.assign(m.blocks.size(), {});
  }
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    Matrix pre = m.blocks[i].main.forward(h, mode, cache ? &cache->main[i] : nullptr) +
                 m.blocks[i].skip.forward(h, mode, cache ? &cache->skip[i] : nullptr);
    h = pre.cwiseMax(0.0);
    if (cache) cache->pre[i] = std::move(pre);
  }
  Matrix out = m.head.forward(h, mode, cache ? &cache->head : nullptr);
  if (m.variant == CkmVariant::knowledge_driven) out += b.knowledge;
  return out;
}

/// Gradients in CkmModel::parameters() order for d loss / d output = grad_out.
inline std::vector<Matrix> ckm_backward(const CkmModel& m, const CkmForwardCache& cache, const Matrix& grad_out) {
  std::vector<Matrix> head_and_blocks;
  const Gradients gh = m.head.backward(cache.head, grad_out);
  Matrix dh = gh.input;
  std::vector<Gradients> gm(m.blocks.size()), gs(m.blocks.size());
  for (std::size_t i = m.blocks.size(); i-- > 0;) {
    const Matrix dpre = (dh.array() * (cache.pre[i].array() > 0.0).cast<double>()).matrix();
    gm[i] = m.blocks[i].main.backward(cache.main[i], dpre);
    gs[i] = m.blocks[i].skip.backward(cache.skip[i], dpre);
    dh = gm[i].input + gs[i].input;
  }
  const Eigen::Index env_dim = static_cast<Eigen::Index>(m.encoder.output_dim());
  const Matrix d_env = dh.rightCols(env_dim).colwise().sum();
  const Gradients ge = m.encoder.backward(cache.encoder, d_env);

  std::vector<Matrix> out;
  for (const auto* t : ge.tensors()) out.push_back(*t);
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    for (const auto* t : gm[i].tensors()) out.push_back(*t);
    for (const auto* t : gs[i].tensors()) out.push_back(*t);
  }
  for (const auto* t : gh.tensors()) out.push_back(*t);
  return out;
}

/// Loss in dB for raw (denormalized) samples; gains are ignored.
inline std::vector<double> predict_loss_db(const CkmModel& m, const std::vector<Sample>& raw_rows) {
  if (raw_rows.empty()) return {};
  const Matrix out = ckm_forward(m, make_raw_batch(m, raw_rows));
  std::vector<double> loss(raw_rows.size());
  for (std::size_t i = 0; i < loss.size(); ++i) loss[i] = m.stats.denormalize_loss(out(static_cast<Eigen::Index>(i), 0));
  return loss;
}

inline double predict_loss_db(const CkmModel& m, const Position& uav, const Position& gu) {
  return predict_loss_db(m, {Sample::make(gu, uav, 0.0)}).front();
}

struct CkmMetrics {
  double mse{0.0};   // dB^2
  double mape{0.0};  // percent
};

/// Metrics on denormalized losses.
inline CkmMetrics loss_metrics(const std::vector<double>& predicted, const std::vector<double>& truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw std::invalid_argument("loss_metrics: need equal, non-empty vectors");
  }
  CkmMetrics r;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = predicted[i] - truth[i];
    r.mse += e * e;
    r.mape += std::abs(e) / std::abs(truth[i]);
  }
  r.mse /= static_cast<double>(predicted.size());
  r.mape *= 100.0 / static_cast<double>(predicted.size());
  return r;
}

/// `test` in raw or normalized form; normalized data must carry the model's stats.
inline CkmMetrics evaluate_ckm(const CkmModel& m, const Dataset& test) {
  if (test.empty()) throw std::invalid_argument("evaluate_ckm: empty dataset");
  const Dataset raw = test.normalized ? denormalize(test, m.stats) : test;
  std::vector<double> truth;
  truth.reserve(raw.size());
  for (const auto& r : raw.rows) truth.push_back(r.loss_db());
  return loss_metrics(predict_loss_db(m, raw.rows), truth);
}

inline double mse_reduction(double mse_without_aug, double mse_with_aug) {
  if (!(mse_without_aug > 0.0)) throw std::invalid_argument("mse_reduction: baseline MSE must be positive");
  return 100.0 * (mse_without_aug - mse_with_aug) / mse_without_aug;
}

struct CkmEpoch {
  std::size_t epoch{0};
  double train_mse{0.0};  // dB^2, running average over the epoch's batches
  double val_mse{0.0};    // dB^2
  double lr{0.0};
};

struct CkmTrainResult {
  std::vector<CkmEpoch> history;
  std::size_t best_epoch{0};
  double best_val_mse{std::numeric_limits<double>::infinity()};
  bool early_stopped{false};
  double train_seconds{0.0};
};

class CkmTrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Minibatch Adam on normalized-scale MSE with L2 on weights, early stopping
/// on validation MSE, and best-epoch weights restored on return. On a
/// non-finite loss the best weights so far are restored before throwing.
inline CkmTrainResult train_ckm(CkmModel& m, const Dataset& train, const Dataset& val, const CkmTrainConfig& cfg) {
  cfg.validate();
  if (!train.normalized || !val.normalized) throw std::invalid_argument("train_ckm: datasets must be normalized");
  if ((train.stats && !(*train.stats == m.stats)) || (val.stats && !(*val.stats == m.stats))) {
    throw std::invalid_argument("train_ckm: dataset stats differ from the model's stats");
  }
  if (train.empty() || val.empty()) throw std::invalid_argument("train_ckm: empty dataset");
  const auto started = std::chrono::steady_clock::now();
  const double scale2 = m.stats.loss_scale_db() * m.stats.loss_scale_db();
  const CkmBatch all = make_batch(m, train.rows);
  const Dataset val_raw = denormalize(val, m.stats);

  CkmTrainResult result;
  CkmModel best = m;
  AdamState opt(cfg.lr);
  const auto params = m.parameters();
  const auto mask = m.decay_mask();
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t since_best = 0, since_lr_cut = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double sum_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto n = static_cast<Eigen::Index>(end - start);
      CkmBatch b{Matrix(n, all.positions.cols()), Matrix(n, 1), Matrix(n, 1)};
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto src = static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(i)]);
        b.positions.row(i) = all.positions.row(src);
        b.knowledge(i, 0) = all.knowledge(src, 0);
        b.target(i, 0) = all.target(src, 0);
      }
      CkmForwardCache cache;
      const Matrix pred = ckm_forward(m, b, Mode::train, &cache);
      const double loss = mse(pred, b.target);
      if (!std::isfinite(loss)) {
        m = best;
        throw CkmTrainingError("train_ckm: non-finite loss at epoch " + std::to_string(epoch) +
                               "; best weights restored");
      }
      const auto grads = ckm_backward(m, cache, mse_gradient(pred, b.target));
      std::vector<const Matrix*> gp;
      for (const auto& g : grads) gp.push_back(&g);
      adam_step(params, gp, opt, cfg.l2, mask);
      sum_loss += loss;
      ++batches;
    }
    CkmEpoch e;
    e.epoch = epoch;
    e.train_mse = sum_loss / static_cast<double>(batches) * scale2;
    e.val_mse = evaluate_ckm(m, val_raw).mse;
    e.lr = opt.lr;
    if (!std::isfinite(e.val_mse)) {
      m = best;
      throw CkmTrainingError("train_ckm: non-finite validation loss at epoch " + std::to_string(epoch) +
                             "; best weights restored");
    }
    result.history.push_back(e);
    if (e.val_mse < result.best_val_mse) {
      result.best_val_mse = e.val_mse;
      result.best_epoch = epoch;
      best = m;
      since_best = since_lr_cut = 0;
    } else {
      ++since_best;
      ++since_lr_cut;
      if (since_best >= cfg.patience) {
        result.early_stopped = true;
        break;
      }
      if (since_lr_cut >= cfg.lr_patience) {
        opt.lr = std::max(cfg.min_lr, opt.lr * cfg.lr_factor);
        since_lr_cut = 0;
      }
    }
  }
  m = best;
  result.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

inline constexpr int kCkmCheckpointVersion = 1;

inline void to_json(nlohmann::json& j, const CkmArchitecture& a) {
  j = {{"trunk_widths", a.trunk_widths}, {"encoder_widths", a.encoder_widths}, {"grid_cells", a.grid_cells}};
}
inline void from_json(const nlohmann::json& j, CkmArchitecture& a) {
  const CkmArchitecture d;
  a.trunk_widths = j.value("trunk_widths", d.trunk_widths);
  a.encoder_widths = j.value("encoder_widths", d.encoder_widths);
  a.grid_cells = j.value("grid_cells", d.grid_cells);
  a.validate();
}

inline void to_json(nlohmann::json& j, const CkmTrainConfig& c) {
  j = {{"max_epochs", c.max_epochs}, {"patience", c.patience},     {"batch_size", c.batch_size},
       {"lr", c.lr},                 {"lr_patience", c.lr_patience}, {"lr_factor", c.lr_factor},
       {"min_lr", c.min_lr},         {"l2", c.l2},                   {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, CkmTrainConfig& c) {
  const CkmTrainConfig d;
  c.max_epochs = j.value("max_epochs", d.max_epochs);
  c.patience = j.value("patience", d.patience);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.lr = j.value("lr", d.lr);
  c.lr_patience = j.value("lr_patience", d.lr_patience);
  c.lr_factor = j.value("lr_factor", d.lr_factor);
  c.min_lr = j.value("min_lr", d.min_lr);
  c.l2 = j.value("l2", d.l2);
  c.seed = j.value("seed", d.seed);
  c.validate();
}

inline nlohmann::json ckm_to_json(const CkmModel& m) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : m.blocks) blocks.push_back({{"main", network_to_json(b.main)}, {"skip", network_to_json(b.skip)}});
  return {{"format", "uavckm-ckm"},
          {"version", kCkmCheckpointVersion},
          {"variant", to_string(m.variant)},
          {"architecture", m.arch},
          {"channel", m.params},
          {"stats", m.stats},
          {"height_scale", m.height_scale},
          {"grid_input", matrix_to_json(m.grid_input)},
          {"encoder", network_to_json(m.encoder)},
          {"blocks", blocks},
          {"head", network_to_json(m.head)}};
}

inline CkmModel ckm_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "uavckm-ckm") throw std::invalid_argument("checkpoint: not a CKM model");
  if (j.value("version", 0) != kCkmCheckpointVersion) {
    throw std::invalid_argument("checkpoint: unsupported CKM version " + std::to_string(j.value("version", 0)));
  }
  CkmModel m;
  m.variant = ckm_variant_from_string(j.at("variant").get<std::string>());
  m.arch = j.at("architecture").get<CkmArchitecture>();
  m.params = j.at("channel").get<ChannelParams>();
  m.stats = j.at("stats").get<NormStats>();
  m.height_scale = j.at("height_scale").get<double>();
  m.grid_input = matrix_from_json(j.at("grid_input"));
  m.encoder = network_from_json(j.at("encoder"));
  for (const auto& b : j.at("blocks")) m.blocks.push_back({network_from_json(b.at("main")), network_from_json(b.at("skip"))});
  m.head = network_from_json(j.at("head"));
  if (m.encoder.input_dim() != static_cast<std::size_t>(m.grid_input.cols()) || m.blocks.empty() ||
      m.blocks.front().main.input_dim() != m.trunk_input_dim() || m.head.output_dim() != 1) {
    throw std::invalid_argument("checkpoint: inconsistent CKM dimensions");
  }
  return m;
}

}  // namespace uavckm
