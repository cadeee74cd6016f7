#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uavckm/pipeline.hpp"

using namespace uavckm;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kBadInput = 2, kMissingInput = 3 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.out) cfg.out = *o.out;
  cfg.validate();
  return cfg;
}

void save_resolved(const RunConfig& cfg) {
  fs::create_directories(cfg.out);
  write_json_file((fs::path(cfg.out) / "config.json").string(), cfg);
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV channel-knowledge-map pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "global seed (overrides the config)");
  app.add_option("--out", opt.out, "output directory (overrides the config)");

  auto* gen_env = app.add_subcommand("gen-env", "sample the scene -> env.json");
  auto* gen_data = app.add_subcommand("gen-data", "simulate real rows -> data/{real,train,val}.csv, data/stats.json");
  auto* augment = app.add_subcommand("augment", "train the WGAN, synthesize rows -> data/synthetic.csv, wgan/");

  auto* train_ckm_cmd = app.add_subcommand("train-ckm", "train a CKM -> ckm/<name>.json, ckm/<name>.metrics.json");
  std::string variant = "kd";
  bool augmented = false;
  train_ckm_cmd->add_option("--variant", variant, "plain | kf | kd")->check(CLI::IsMember({"plain", "kf", "kd"}));
  train_ckm_cmd->add_flag("--augmented", augmented, "add data/synthetic.csv to the training rows");

  auto* eval_ckm = app.add_subcommand("eval-ckm", "validation metrics of a checkpoint -> ckm/<name>.eval.json");
  std::string eval_ckpt;
  eval_ckm->add_option("--ckpt", eval_ckpt, "checkpoint (default <out>/ckm/kd.json)");

  auto* train_ppo_cmd = app.add_subcommand("train-ppo", "train a PPO planner -> ppo/<oracle>.*");
  std::string oracle = "los";
  train_ppo_cmd->add_option("--oracle", oracle, "los | truth | ckm:<checkpoint>");
  std::size_t replicate = 0;
  train_ppo_cmd->add_option("--replicate", replicate, "replicate index for the derived seed");

  auto* plan = app.add_subcommand("plan", "trajectory baseline -> bcd/<variant>.*");
  std::string method = "bcd";
  bool loose = false;
  plan->add_option("--method", method, "planning method")->check(CLI::IsMember({"bcd"}));
  plan->add_flag("--loose", loose, "let the start point float");

  auto* compare = app.add_subcommand("compare", "four-method comparison -> compare.csv, compare.json");
  std::optional<std::size_t> seeds;
  std::string compare_ckpt;
  compare->add_option("--seeds", seeds, "replicates (default from the config)");
  compare->add_option("--ckpt", compare_ckpt, "CKM checkpoint for KDCKM-PPO (default <out>/ckm/kd.json)");

  auto* report = app.add_subcommand("report", "CKM comparison axes -> report/ckm_radar.{csv,svg}");

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve(opt);
    save_resolved(cfg);
    const RunPaths paths{cfg.out};
    if (gen_env->parsed()) {
      const Environment env = run_gen_env(cfg);
      std::cout << "env: " << env.gus.size() << " users, " << env.buildings.size() << " buildings -> "
                << paths.env().string() << '\n';
    } else if (gen_data->parsed()) {
      const DataSplit d = run_gen_data(cfg);
      std::cout << "data: " << d.train.size() << " train / " << d.val.size() << " val rows\n";
    } else if (augment->parsed()) {
      const AugmentOutcome a = run_augment(cfg);
      std::cout << "augment: " << a.synthetic.size() << " synthetic rows, " << a.quality.features_below(0.1)
                << "/8 features with W1 < 0.1, corr(d,g) " << fmt(a.quality.real_corr_dg) << " real vs "
                << fmt(a.quality.synth_corr_dg) << " synthetic\n";
    } else if (train_ckm_cmd->parsed()) {
      const CkmOutcome c = run_train_ckm(cfg, ckm_variant_from_string(variant), augmented);
      std::cout << "ckm " << c.name << ": val mse " << fmt(c.val.mse) << " dB^2, mape " << fmt(c.val.mape)
                << " %, " << c.train.history.size() << " epochs\n";
    } else if (eval_ckm->parsed()) {
      const fs::path ckpt = eval_ckpt.empty() ? paths.ckm_checkpoint("kd") : fs::path(eval_ckpt);
      const nlohmann::json m = run_eval_ckm(cfg, ckpt);
      std::cout << "eval " << m["name"].get<std::string>() << ": mse " << fmt(m["mse"].get<double>())
                << " dB^2 (analytic " << fmt(m["analytic_mse"].get<double>()) << ")\n";
    } else if (train_ppo_cmd->parsed()) {
      const PpoOutcome p = run_train_ppo(cfg, oracle, replicate);
      std::cout << "ppo " << p.label << ": flight time " << fmt(p.truth.mean_flight_time) << " s, success "
                << fmt(p.truth.success_rate) << " (blockage-aware evaluation)\n";
    } else if (plan->parsed()) {
      const PlanOutcome p = run_plan(cfg, loose ? BcdVariant::loose_start : BcdVariant::fixed_start);
      std::cout << "bcd " << (loose ? "loose" : "fixed") << ": " << (p.analytic.feasible ? "feasible" : "infeasible")
                << " on the planning model (" << p.analytic.trajectory.t_end << " s), blockage-aware flight time "
                << fmt(p.truth.mean_flight_time) << " s\n";
    } else if (compare->parsed()) {
      const fs::path ckpt = compare_ckpt.empty() ? paths.ckm_checkpoint("kd") : fs::path(compare_ckpt);
      const Comparison c = run_compare(cfg, seeds.value_or(cfg.evaluation.seeds), ckpt);
      std::cout << comparison_csv(c);
    } else if (report->parsed()) {
      const auto rows = run_report(cfg);
      std::cout << "report: " << rows.size() << " variants -> " << (paths.report_dir() / "ckm_radar.csv").string()
                << '\n';
    }
  } catch (const MissingArtifact& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config schema: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
