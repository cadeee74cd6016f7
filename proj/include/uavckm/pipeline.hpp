#pragma once

// Pipeline stages shared by the command-line tool and the acceptance suite.
// A run is described by one RunConfig; every stage reads and writes named
// files under the run's output directory and derives its seeds from the run
// seed. Wall-clock measurements live under a "timing" key so that all other
// output bytes are reproducible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavckm/bcd.hpp"
#include "uavckm/channel.hpp"
#include "uavckm/ckm.hpp"
#include "uavckm/dataset.hpp"
#include "uavckm/geometry.hpp"
#include "uavckm/io.hpp"
#include "uavckm/mdp.hpp"
#include "uavckm/ppo.hpp"
#include "uavckm/rng.hpp"
#include "uavckm/wgan.hpp"

namespace uavckm {

namespace fs = std::filesystem;

struct DatasetPlan {
  std::size_t real_rows{5000};
  double train_fraction{0.7};
  /// Synthetic rows per real training row.
  std::size_t synthetic_factor{3};

  void validate() const {
    if (real_rows < 2) throw std::invalid_argument("dataset: need at least 2 real rows");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
      throw std::invalid_argument("dataset: train fraction must lie in (0, 1)");
    }
  }
};

struct CkmPlan {
  CkmArchitecture arch;
  CkmTrainConfig train;
};

struct EvaluationPlan {
  std::size_t episodes{5};
  /// Independent training / planning replicates used by compare.
  std::size_t seeds{5};
  /// Lattice on which a CKM oracle is tabulated for rollouts.
  GridSpec ckm_grid{41, 41, 6};

  void validate() const {
    if (episodes == 0 || seeds == 0) throw std::invalid_argument("evaluation: counts must be positive");
  }
};

struct RunConfig {
  EnvGenConfig environment;
  /// Scene seed; derived from the run seed when absent.
  std::optional<std::uint64_t> environment_seed;
  ChannelParams channel;
  LinkBudget link;
  DatasetPlan dataset;
  WganConfig wgan;
  CkmPlan ckm;
  EpisodeConfig episode;
  PpoConfig ppo;
  BcdConfig bcd;
  EvaluationPlan evaluation;
  std::string out{"out"};
  std::uint64_t seed{0};

  void validate() const {
    environment.validate();
    channel.validate();
    link.validate();
    dataset.validate();
    wgan.validate();
    ckm.arch.validate();
    ckm.train.validate();
    episode_config().validate();
    ppo.validate();
    bcd.validate();
    evaluation.validate();
    if (out.empty()) throw std::invalid_argument("config: empty output directory");
  }
  /// The episode settings with the run's link budget.
  EpisodeConfig episode_config() const {
    EpisodeConfig e = episode;
    e.link = link;
    return e;
  }
  std::uint64_t scene_seed() const { return environment_seed.value_or(fork_seed(seed, Stream::environment, 0)); }
};

inline void to_json(nlohmann::json& j, const GridSpec& g) { j = nlohmann::json::array({g.nx, g.ny, g.nz}); }
inline void from_json(const nlohmann::json& j, GridSpec& g) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("config: grid must be [nx, ny, nz]");
  g = {j[0].get<std::size_t>(), j[1].get<std::size_t>(), j[2].get<std::size_t>()};
}

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"environment", c.environment},
       {"channel", c.channel},
       {"link", c.link},
       {"dataset",
        {{"real_rows", c.dataset.real_rows},
         {"train_fraction", c.dataset.train_fraction},
         {"synthetic_factor", c.dataset.synthetic_factor}}},
       {"wgan", c.wgan},
       {"ckm", {{"architecture", c.ckm.arch}, {"train", c.ckm.train}}},
       {"episode", c.episode},
       {"ppo", c.ppo},
       {"bcd", c.bcd},
       {"evaluation",
        {{"episodes", c.evaluation.episodes}, {"seeds", c.evaluation.seeds}, {"ckm_grid", c.evaluation.ckm_grid}}},
       {"out", c.out},
       {"seed", c.seed}};
  if (c.environment_seed) j["environment_seed"] = *c.environment_seed;
}

inline void from_json(const nlohmann::json& j, RunConfig& c) {
  static const std::set<std::string> kKeys = {"environment", "environment_seed", "channel", "link", "dataset",
                                              "wgan", "ckm", "episode", "ppo", "bcd", "evaluation", "out", "seed"};
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.count(key)) throw std::invalid_argument("config: unknown key '" + key + "'");
  }
  const RunConfig d;
  c.environment = j.value("environment", d.environment);
  c.environment_seed = j.contains("environment_seed") ? std::optional(j["environment_seed"].get<std::uint64_t>())
                                                      : std::nullopt;
  c.channel = j.value("channel", d.channel);
  c.link = j.value("link", d.link);
  const nlohmann::json ds = j.value("dataset", nlohmann::json::object());
  c.dataset.real_rows = ds.value("real_rows", d.dataset.real_rows);
  c.dataset.train_fraction = ds.value("train_fraction", d.dataset.train_fraction);
  c.dataset.synthetic_factor = ds.value("synthetic_factor", d.dataset.synthetic_factor);
  c.wgan = j.value("wgan", d.wgan);
  const nlohmann::json ck = j.value("ckm", nlohmann::json::object());
  c.ckm.arch = ck.value("architecture", d.ckm.arch);
  c.ckm.train = ck.value("train", d.ckm.train);
  c.episode = j.value("episode", d.episode);
  c.ppo = j.value("ppo", d.ppo);
  c.bcd = j.value("bcd", d.bcd);
  const nlohmann::json ev = j.value("evaluation", nlohmann::json::object());
  c.evaluation.episodes = ev.value("episodes", d.evaluation.episodes);
  c.evaluation.seeds = ev.value("seeds", d.evaluation.seeds);
  c.evaluation.ckm_grid = ev.value("ckm_grid", d.evaluation.ckm_grid);
  c.out = j.value("out", d.out);
  c.seed = j.value("seed", d.seed);
  c.validate();
}

inline RunConfig load_run_config(const std::string& path) { return read_json_file(path).get<RunConfig>(); }

/// Missing input artifact for a stage.
class MissingArtifact : public std::runtime_error {
 public:
  explicit MissingArtifact(const fs::path& p) : std::runtime_error("missing input: " + p.string()) {}
};

/// File layout of a run directory.
struct RunPaths {
  fs::path root;

  fs::path env() const { return root / "env.json"; }
  fs::path real() const { return root / "data" / "real.csv"; }
  fs::path train() const { return root / "data" / "train.csv"; }
  fs::path val() const { return root / "data" / "val.csv"; }
  fs::path stats() const { return root / "data" / "stats.json"; }
  fs::path synthetic() const { return root / "data" / "synthetic.csv"; }
  fs::path wgan_dir() const { return root / "wgan"; }
  fs::path ckm_dir() const { return root / "ckm"; }
  fs::path ckm_checkpoint(const std::string& name) const { return ckm_dir() / (name + ".json"); }
  fs::path ckm_metrics(const std::string& name) const { return ckm_dir() / (name + ".metrics.json"); }
  fs::path ppo_dir() const { return root / "ppo"; }
  fs::path bcd_dir() const { return root / "bcd"; }
  fs::path compare_csv() const { return root / "compare.csv"; }
  fs::path compare_json() const { return root / "compare.json"; }
  fs::path report_dir() const { return root / "report"; }
};

namespace detail {

inline void require(const fs::path& p) {
  if (!fs::exists(p)) throw MissingArtifact(p);
}

inline void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

inline void write_json(const fs::path& p, const nlohmann::json& doc) {
  require_finite(doc, p.string());
  ensure_parent(p);
  write_json_file(p.string(), doc);
}

inline void write_text(const fs::path& p, const std::string& text) {
  ensure_parent(p);
  write_text_file(p.string(), text);
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::string short_name(CkmVariant v) {
  switch (v) {
    case CkmVariant::plain: return "plain";
    case CkmVariant::knowledge_featured: return "kf";
    case CkmVariant::knowledge_driven: return "kd";
  }
  return "plain";
}

inline std::uint64_t variant_index(CkmVariant v) { return static_cast<std::uint64_t>(v); }

}  // namespace detail

inline std::string ckm_run_name(CkmVariant v, bool augmented) {
  return detail::short_name(v) + (augmented ? "-aug" : "");
}

// ---------------------------------------------------------------- gen-env

inline Environment run_gen_env(const RunConfig& cfg) {
  const Environment env = sample_environment(cfg.scene_seed(), cfg.environment);
  detail::write_json(RunPaths{cfg.out}.env(), environment_document(env, cfg.ckm.arch.grid_cells));
  return env;
}

inline Environment load_environment(const RunConfig& cfg) {
  const fs::path p = RunPaths{cfg.out}.env();
  detail::require(p);
  nlohmann::json doc = read_json_file(p.string());
  doc.erase("height_grid");
  Environment env = doc.get<Environment>();
  env.validate();
  return env;
}

// ---------------------------------------------------------------- gen-data

struct DataSplit {
  Dataset train;  // raw
  Dataset val;    // raw
  NormStats stats;
};

inline DataSplit run_gen_data(const RunConfig& cfg) {
  const Environment env = load_environment(cfg);
  const RunPaths paths{cfg.out};
  const Dataset real = generate_dataset(env, cfg.channel, cfg.dataset.real_rows, fork_seed(cfg.seed, Stream::dataset, 0));
  auto [train, val] = split(real, cfg.dataset.train_fraction, fork_seed(cfg.seed, Stream::split, 0));
  if (train.empty() || val.empty()) throw std::invalid_argument("gen-data: split left an empty part");
  DataSplit out{train, val, compute_stats(train)};
  detail::write_text(paths.real(), dataset_csv(real));
  detail::write_text(paths.train(), dataset_csv(train));
  detail::write_text(paths.val(), dataset_csv(val));
  detail::write_json(paths.stats(), out.stats);
  return out;
}

inline DataSplit load_split(const RunConfig& cfg) {
  const RunPaths paths{cfg.out};
  for (const auto& p : {paths.train(), paths.val(), paths.stats()}) detail::require(p);
  DataSplit s;
  s.train = parse_dataset_csv(read_text_file(paths.train().string()));
  s.val = parse_dataset_csv(read_text_file(paths.val().string()));
  s.stats = read_json_file(paths.stats().string()).get<NormStats>();
  return s;
}

// ---------------------------------------------------------------- augment

struct AugmentOutcome {
  Dataset synthetic;  // raw
  QualityReport quality;
};

inline AugmentOutcome run_augment(const RunConfig& cfg) {
  const DataSplit data = load_split(cfg);
  const RunPaths paths{cfg.out};
  WganConfig wc = cfg.wgan;
  wc.seed = fork_seed(cfg.seed, Stream::wgan, 0);
  const auto t0 = std::chrono::steady_clock::now();
  const WganResult w = train_wgan(apply_normalization(data.train, data.stats), wc);
  const double train_seconds = detail::seconds_since(t0);
  AugmentOutcome out;
  SynthesisReport rep;
  out.synthetic = generate_samples(w.generator, cfg.dataset.synthetic_factor * data.train.size(), data.stats,
                                   fork_seed(cfg.seed, Stream::synthesis, 0), &rep);
  if (out.synthetic.empty()) throw std::runtime_error("augment: generator produced no consistent rows");
  out.quality = assess_quality(data.train, out.synthetic, data.stats);
  out.quality.synthesis = rep;

  detail::write_text(paths.synthetic(), dataset_csv(out.synthetic));
  detail::write_json(paths.wgan_dir() / "generator.json", network_to_json(w.generator));
  nlohmann::json quality = out.quality;
  quality["timing"] = {{"train_seconds", train_seconds}};
  detail::write_json(paths.wgan_dir() / "quality.json", quality);
  std::ostringstream hist;
  hist << "iteration,critic_loss,generator_loss,mean_gap\n";
  for (const auto& e : w.history) {
    hist << e.iteration << ',' << format_double(e.critic_loss) << ',' << format_double(e.generator_loss) << ','
         << format_double(e.mean_gap) << '\n';
  }
  detail::write_text(paths.wgan_dir() / "history.csv", hist.str());
  auto scatter = [](const Dataset& ds, const std::string& label) {
    SvgSeries s{label, {}, {}, true};
    const std::size_t stride = std::max<std::size_t>(1, ds.size() / 800);
    for (std::size_t i = 0; i < ds.size(); i += stride) {
      s.x.push_back(ds.rows[i].d());
      s.y.push_back(ds.rows[i].g());
    }
    return s;
  };
  detail::write_text(paths.wgan_dir() / "distance_gain.svg",
                     render_svg("gain vs distance", {scatter(data.train, "real"), scatter(out.synthetic, "synthetic")}));
  return out;
}

// ---------------------------------------------------------------- train-ckm / eval-ckm

struct CkmOutcome {
  std::string name;
  CkmModel model;
  CkmTrainResult train;
  CkmMetrics val;
  nlohmann::json metrics;
};

inline double inference_seconds_per_1k(const CkmModel& m, const Dataset& raw) {
  const auto t0 = std::chrono::steady_clock::now();
  predict_loss_db(m, raw.rows);
  return detail::seconds_since(t0) * 1000.0 / static_cast<double>(std::max<std::size_t>(1, raw.size()));
}

inline CkmOutcome run_train_ckm(const RunConfig& cfg, CkmVariant variant, bool augmented) {
  const Environment env = load_environment(cfg);
  const DataSplit data = load_split(cfg);
  const RunPaths paths{cfg.out};
  Dataset train = data.train;
  if (augmented) {
    detail::require(paths.synthetic());
    train = concat(train, parse_dataset_csv(read_text_file(paths.synthetic().string())));
  }
  CkmOutcome out;
  out.name = ckm_run_name(variant, augmented);
  const std::uint64_t run = detail::variant_index(variant) * 2 + (augmented ? 1 : 0);
  out.model = build_ckm(variant, cfg.ckm.arch, env, cfg.channel, data.stats, fork_seed(cfg.seed, Stream::ckm, run));
  CkmTrainConfig tc = cfg.ckm.train;
  tc.seed = fork_seed(cfg.seed, Stream::ckm, 100 + run);
  out.train = train_ckm(out.model, apply_normalization(train, data.stats), apply_normalization(data.val, data.stats), tc);
  out.val = evaluate_ckm(out.model, data.val);
  const double infer = inference_seconds_per_1k(out.model, data.val);
  out.metrics = {{"name", out.name},
                 {"variant", to_string(variant)},
                 {"augmented", augmented},
                 {"train_rows", train.size()},
                 {"mse", out.val.mse},
                 {"mape", out.val.mape},
                 {"param_count", out.model.parameter_count()},
                 {"best_epoch", out.train.best_epoch},
                 {"epochs", out.train.history.size()},
                 {"early_stopped", out.train.early_stopped},
                 {"timing", {{"train_seconds", out.train.train_seconds}, {"infer_seconds_per_1k", infer}}}};
  detail::write_json(paths.ckm_checkpoint(out.name), ckm_to_json(out.model));
  detail::write_json(paths.ckm_metrics(out.name), out.metrics);
  std::ostringstream hist;
  hist << "epoch,train_mse,val_mse,lr\n";
  for (const auto& e : out.train.history) {
    hist << e.epoch << ',' << format_double(e.train_mse) << ',' << format_double(e.val_mse) << ','
         << format_double(e.lr) << '\n';
  }
  detail::write_text(paths.ckm_dir() / (out.name + ".history.csv"), hist.str());
  return out;
}

inline CkmModel load_ckm(const fs::path& p) {
  detail::require(p);
  return ckm_from_json(read_json_file(p.string()));
}

/// Validation metrics of a checkpoint next to the analytic model's.
inline nlohmann::json run_eval_ckm(const RunConfig& cfg, const fs::path& checkpoint) {
  const CkmModel m = load_ckm(checkpoint);
  const DataSplit data = load_split(cfg);
  const CkmMetrics got = evaluate_ckm(m, data.val);
  std::vector<double> analytic, truth;
  for (const auto& r : data.val.rows) {
    analytic.push_back(expected_loss_db(r.uav(), r.gu(), cfg.channel));
    truth.push_back(r.loss_db());
  }
  const CkmMetrics base = loss_metrics(analytic, truth);
  const std::string name = checkpoint.stem().string();
  const nlohmann::json doc = {{"name", name},
                              {"variant", to_string(m.variant)},
                              {"rows", data.val.size()},
                              {"mse", got.mse},
                              {"mape", got.mape},
                              {"analytic_mse", base.mse},
                              {"analytic_mape", base.mape},
                              {"param_count", m.parameter_count()},
                              {"timing", {{"infer_seconds_per_1k", inference_seconds_per_1k(m, data.val)}}}};
  detail::write_json(RunPaths{cfg.out}.ckm_dir() / (name + ".eval.json"), doc);
  return doc;
}

// ---------------------------------------------------------------- oracles

/// "los", "truth", or "ckm:<checkpoint>"; a CKM is tabulated on the
/// configured lattice so rollouts stay cheap.
inline std::shared_ptr<ChannelOracle> make_oracle(const RunConfig& cfg, const Environment& env,
                                                  const std::string& spec) {
  if (spec == "los") return std::make_shared<AnalyticOracle>(env.gus, cfg.channel);
  if (spec == "truth") return std::make_shared<TruthOracle>(env, cfg.channel);
  if (spec.rfind("ckm:", 0) == 0) {
    auto model = std::make_shared<const CkmModel>(load_ckm(spec.substr(4)));
    CkmOracle source(model, env.gus);
    return std::make_shared<GridOracle>(source, env, cfg.evaluation.ckm_grid, "ckm");
  }
  throw std::invalid_argument("unknown oracle '" + spec + "' (expected los, truth or ckm:<checkpoint>)");
}

inline std::string oracle_label(const std::string& spec) { return spec.rfind("ckm:", 0) == 0 ? "ckm" : spec; }

// ---------------------------------------------------------------- train-ppo

struct PpoOutcome {
  std::string label;
  PpoResult result;
  EvaluationReport truth;
  double oracle_seconds{0.0};
};

inline nlohmann::json evaluation_json(const EvaluationReport& r) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& tr : r.trajectories) t.push_back(trajectory_summary(tr));
  return {{"mean_flight_time", r.mean_flight_time},
          {"mean_throughput_bps", r.mean_throughput_bps},
          {"success_rate", r.success_rate},
          {"mean_return", r.mean_return},
          {"episodes", t}};
}

inline PpoOutcome train_ppo_replicate(const RunConfig& cfg, const Environment& env, std::shared_ptr<ChannelOracle> oracle,
                                      const std::string& label, std::size_t replicate) {
  const EpisodeConfig ep = cfg.episode_config();
  UavMdp train_env(env, ep, std::move(oracle));
  PpoConfig pc = cfg.ppo;
  pc.seed = fork_seed(cfg.seed, Stream::ppo, replicate);
  PpoOutcome out;
  out.label = label;
  out.result = train_ppo(train_env, pc);
  UavMdp truth(env, ep, std::make_shared<TruthOracle>(env, cfg.channel));
  out.truth = evaluate_policy(out.result.agent.policy, truth, cfg.evaluation.episodes,
                              fork_seed(cfg.seed, Stream::evaluation, replicate));
  return out;
}

inline PpoOutcome run_train_ppo(const RunConfig& cfg, const std::string& oracle_spec, std::size_t replicate = 0) {
  const Environment env = load_environment(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  auto oracle = make_oracle(cfg, env, oracle_spec);
  const double oracle_seconds = detail::seconds_since(t0);
  const std::string label = oracle_label(oracle_spec);
  PpoOutcome out = train_ppo_replicate(cfg, env, oracle, label, replicate);
  out.oracle_seconds = oracle_seconds;
  const RunPaths paths{cfg.out};
  detail::write_json(paths.ppo_dir() / (label + ".agent.json"), agent_to_json(out.result.agent));
  std::ostringstream curve;
  curve << "iteration,env_steps,episodes,mean_return,success_rate,mean_length,policy_loss,value_loss,approx_kl\n";
  for (const auto& it : out.result.curve) {
    curve << it.iteration << ',' << it.env_steps << ',' << it.episodes << ',' << format_double(it.mean_return) << ','
          << format_double(it.success_rate) << ',' << format_double(it.mean_length) << ','
          << format_double(it.policy_loss) << ',' << format_double(it.value_loss) << ','
          << format_double(it.approx_kl) << '\n';
  }
  detail::write_text(paths.ppo_dir() / (label + ".curve.csv"), curve.str());
  nlohmann::json eval = evaluation_json(out.truth);
  eval["oracle"] = oracle_spec.rfind("ckm:", 0) == 0 ? "ckm" : oracle_spec;
  eval["timing"] = {{"train_seconds", out.result.train_seconds}, {"oracle_seconds", oracle_seconds}};
  detail::write_json(paths.ppo_dir() / (label + ".eval.json"), eval);
  if (!out.truth.trajectories.empty()) {
    detail::write_text(paths.ppo_dir() / (label + ".trace.csv"), trajectory_csv(out.truth.trajectories.front()));
  }
  return out;
}

// ---------------------------------------------------------------- plan

struct PlanOutcome {
  BcdResult analytic;             // replay on the planning model
  EvaluationReport truth;         // replays in the blockage-aware channel
};

inline PlanOutcome plan_replicate(const RunConfig& cfg, const Environment& env, BcdVariant variant,
                                  std::size_t replicate) {
  BcdConfig bc = cfg.bcd;
  bc.variant = variant;
  bc.seed = fork_seed(cfg.seed, Stream::bcd, replicate);
  const EpisodeConfig ep = cfg.episode_config();
  PlanOutcome out;
  out.analytic = solve_bcd(env, ep, cfg.channel, bc);
  const std::uint64_t eval_seed = fork_seed(cfg.seed, Stream::evaluation, replicate);
  double t = 0.0, thr = 0.0, ok = 0.0;
  for (std::size_t e = 0; e < cfg.evaluation.episodes; ++e) {
    auto oracle = std::make_shared<TruthOracle>(env, cfg.channel);
    TrajectoryResult tr = replay_plan(out.analytic.plan, env, ep, oracle, fork_seed(eval_seed, Stream::evaluation, e));
    const bool success = tr.success && bcd_violations(tr, ep, env, variant).empty();
    t += static_cast<double>(tr.t_end);
    thr += tr.throughput_bps();
    ok += success ? 1.0 : 0.0;
    out.truth.trajectories.push_back(std::move(tr));
  }
  const double n = static_cast<double>(cfg.evaluation.episodes);
  out.truth.mean_flight_time = t / n;
  out.truth.mean_throughput_bps = thr / n;
  out.truth.success_rate = ok / n;
  return out;
}

inline PlanOutcome run_plan(const RunConfig& cfg, BcdVariant variant, std::size_t replicate = 0) {
  const Environment env = load_environment(cfg);
  PlanOutcome out = plan_replicate(cfg, env, variant, replicate);
  const RunPaths paths{cfg.out};
  const std::string name = to_string(variant);
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : out.analytic.violations) {
    violations.push_back({{"constraint", v.constraint}, {"step", v.step}, {"magnitude", v.magnitude}});
  }
  const auto& plan = out.analytic.plan;
  const nlohmann::json doc = {{"variant", name},
                              {"iterations", plan.iterations},
                              {"converged", plan.converged},
                              {"planned_payload_met", plan.planned_payload_met},
                              {"objective_log", plan.objective_log},
                              {"start", plan.waypoints.front()},
                              {"feasible", out.analytic.feasible},
                              {"violations", violations},
                              {"analytic_replay", trajectory_summary(out.analytic.trajectory)},
                              {"truth", evaluation_json(out.truth)}};
  detail::write_json(paths.bcd_dir() / (name + ".summary.json"), doc);
  detail::write_text(paths.bcd_dir() / (name + ".trace.csv"), trajectory_csv(out.analytic.trajectory));
  if (!out.truth.trajectories.empty()) {
    detail::write_text(paths.bcd_dir() / (name + ".truth.trace.csv"), trajectory_csv(out.truth.trajectories.front()));
  }
  return out;
}

// ---------------------------------------------------------------- compare

struct ReplicateScore {
  double flight_time{0.0};
  double throughput_bps{0.0};
  double success_rate{0.0};
  /// For planners: the plan met every constraint on its own model.
  bool planner_feasible{true};
  double seconds{0.0};
};

struct MethodScore {
  std::string method;
  std::vector<ReplicateScore> replicates;

  double mean(double ReplicateScore::*field) const {
    double s = 0.0;
    for (const auto& r : replicates) s += r.*field;
    return replicates.empty() ? 0.0 : s / static_cast<double>(replicates.size());
  }
};

struct Comparison {
  std::vector<MethodScore> methods;

  const MethodScore& at(const std::string& name) const {
    for (const auto& m : methods) {
      if (m.method == name) return m;
    }
    throw std::out_of_range("comparison: no method " + name);
  }
};

inline std::string comparison_csv(const Comparison& c) {
  std::ostringstream os;
  os << "method,mean_t_end,mean_throughput_bps,success_rate,replicates\n";
  for (const auto& m : c.methods) {
    os << m.method << ',' << format_double(m.mean(&ReplicateScore::flight_time)) << ','
       << format_double(m.mean(&ReplicateScore::throughput_bps)) << ','
       << format_double(m.mean(&ReplicateScore::success_rate)) << ',' << m.replicates.size() << '\n';
  }
  return os.str();
}

/// los-BCD, los-BCD-loose, los-PPO and KDCKM-PPO (plus a random policy) over
/// `n_seeds` replicates, all scored in the blockage-aware channel.
inline Comparison run_compare(const RunConfig& cfg, std::size_t n_seeds, const fs::path& ckm_checkpoint) {
  if (n_seeds == 0) throw std::invalid_argument("compare: need at least one seed");
  const Environment env = load_environment(cfg);
  auto ckm_oracle = make_oracle(cfg, env, "ckm:" + ckm_checkpoint.string());
  auto los_oracle = make_oracle(cfg, env, "los");
  const EpisodeConfig ep = cfg.episode_config();
  Comparison c;
  c.methods = {{"los-BCD", {}}, {"los-BCD-loose", {}}, {"los-PPO", {}}, {"KDCKM-PPO", {}}, {"random", {}}};
  auto score = [](const EvaluationReport& r, bool feasible, double secs) {
    return ReplicateScore{r.mean_flight_time, r.mean_throughput_bps, r.success_rate, feasible, secs};
  };
  for (std::size_t s = 0; s < n_seeds; ++s) {
    for (auto [idx, variant] : {std::pair{0, BcdVariant::fixed_start}, std::pair{1, BcdVariant::loose_start}}) {
      const auto t0 = std::chrono::steady_clock::now();
      const PlanOutcome p = plan_replicate(cfg, env, variant, s);
      c.methods[static_cast<std::size_t>(idx)].replicates.push_back(score(p.truth, p.analytic.feasible,
                                                                          detail::seconds_since(t0)));
    }
    for (auto [idx, oracle] : {std::pair{2, los_oracle}, std::pair{3, ckm_oracle}}) {
      const PpoOutcome o = train_ppo_replicate(cfg, env, oracle, oracle->name(), s);
      c.methods[static_cast<std::size_t>(idx)].replicates.push_back(score(o.truth, true, o.result.train_seconds));
    }
    UavMdp truth(env, ep, std::make_shared<TruthOracle>(env, cfg.channel));
    const EvaluationReport rnd =
        evaluate_random_policy(truth, cfg.evaluation.episodes, fork_seed(cfg.seed, Stream::evaluation, s));
    c.methods[4].replicates.push_back(score(rnd, true, 0.0));
  }
  const RunPaths paths{cfg.out};
  detail::write_text(paths.compare_csv(), comparison_csv(c));
  nlohmann::json doc = nlohmann::json::object();
  nlohmann::json timing = nlohmann::json::object();
  for (const auto& m : c.methods) {
    nlohmann::json reps = nlohmann::json::array();
    nlohmann::json secs = nlohmann::json::array();
    for (const auto& r : m.replicates) {
      reps.push_back({{"flight_time", r.flight_time},
                      {"throughput_bps", r.throughput_bps},
                      {"success_rate", r.success_rate},
                      {"planner_feasible", r.planner_feasible}});
      secs.push_back(r.seconds);
    }
    doc[m.method] = reps;
    timing[m.method] = secs;
  }
  doc["timing"] = timing;
  detail::write_json(paths.compare_json(), doc);
  return c;
}

// ---------------------------------------------------------------- report

struct RadarRow {
  std::string variant;
  double train_seconds{0.0};
  double infer_seconds_per_1k{0.0};
  double mape{0.0};
  double mse{0.0};
  std::optional<double> mse_reduction;
  double param_count{0.0};
};

/// Min-max scaling onto [0.1, 1]; a constant column maps to 1.
inline std::vector<double> radar_scale(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out(v.size(), 1.0);
  if (*hi > *lo) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = 0.1 + 0.9 * (v[i] - *lo) / (*hi - *lo);
  }
  return out;
}

/// Collects every CKM metrics file of the run into one row per variant:
/// the non-augmented run supplies time, MAPE and size; the augmented
/// counterpart, when present, supplies the MSE reduction.
inline std::vector<RadarRow> run_report(const RunConfig& cfg) {
  const RunPaths paths{cfg.out};
  detail::require(paths.ckm_dir());
  std::map<std::string, nlohmann::json> runs;
  for (const auto& entry : fs::directory_iterator(paths.ckm_dir())) {
    const std::string file = entry.path().filename().string();
    const std::string suffix = ".metrics.json";
    if (file.size() > suffix.size() && file.compare(file.size() - suffix.size(), suffix.size(), suffix) == 0) {
      runs[file.substr(0, file.size() - suffix.size())] = read_json_file(entry.path().string());
    }
  }
  if (runs.empty()) throw MissingArtifact(paths.ckm_dir() / "*.metrics.json");
  std::vector<RadarRow> rows;
  for (const auto& [name, m] : runs) {
    const bool aug = m.value("augmented", false);
    const std::string base = aug ? name.substr(0, name.size() - 4) : name;
    if (aug && runs.count(base)) continue;
    RadarRow r;
    r.variant = m.at("variant").get<std::string>();
    r.mse = m.at("mse").get<double>();
    r.mape = m.at("mape").get<double>();
    r.param_count = m.at("param_count").get<double>();
    const nlohmann::json timing = m.value("timing", nlohmann::json::object());
    r.train_seconds = timing.value("train_seconds", 0.0);
    r.infer_seconds_per_1k = timing.value("infer_seconds_per_1k", 0.0);
    if (!aug && runs.count(name + "-aug") && r.mse > 0.0) {
      r.mse_reduction = mse_reduction(r.mse, runs[name + "-aug"].at("mse").get<double>());
    }
    for (double v : {r.mse, r.mape, r.train_seconds, r.infer_seconds_per_1k, r.param_count, r.mse_reduction.value_or(0.0)}) {
      if (!std::isfinite(v)) throw std::runtime_error("report: non-finite metric in " + name);
    }
    rows.push_back(r);
  }
  std::vector<double> tr, inf, mape, red, par;
  for (const auto& r : rows) {
    tr.push_back(r.train_seconds);
    inf.push_back(r.infer_seconds_per_1k);
    mape.push_back(r.mape);
    red.push_back(r.mse_reduction.value_or(0.0));
    par.push_back(r.param_count);
  }
  const auto s_tr = radar_scale(tr), s_inf = radar_scale(inf), s_mape = radar_scale(mape), s_red = radar_scale(red),
             s_par = radar_scale(par);
  std::ostringstream csv;
  csv << "variant,mse,mape,mse_reduction,param_count,train_seconds,infer_seconds_per_1k,"
         "scaled_train,scaled_infer,scaled_mape,scaled_mse_reduction,scaled_params\n";
  std::vector<SvgSeries> series;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    csv << r.variant << ',' << format_double(r.mse) << ',' << format_double(r.mape) << ','
        << (r.mse_reduction ? format_double(*r.mse_reduction) : "") << ',' << format_double(r.param_count) << ','
        << format_double(r.train_seconds) << ',' << format_double(r.infer_seconds_per_1k) << ','
        << format_double(s_tr[i]) << ',' << format_double(s_inf[i]) << ',' << format_double(s_mape[i]) << ','
        << format_double(s_red[i]) << ',' << format_double(s_par[i]) << '\n';
    series.push_back({r.variant, {1, 2, 3, 4, 5}, {s_tr[i], s_inf[i], s_mape[i], s_red[i], s_par[i]}, false});
  }
  detail::write_text(paths.report_dir() / "ckm_radar.csv", csv.str());
  detail::write_text(paths.report_dir() / "ckm_radar.svg",
                     render_svg("train time, inference time, MAPE, MSE reduction, parameters (scaled)", series));
  return rows;
}

}  // namespace uavckm
