#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "uavckm/mdp.hpp"

using namespace uavckm;

namespace {

Environment open_scene(std::vector<Position> gus) {
  Environment env;
  env.gus = std::move(gus);
  return env;
}

std::shared_ptr<ChannelOracle> constant_loss(double loss, std::size_t n) {
  return std::make_shared<FunctionOracle>([loss](const Position&, std::size_t) { return loss; }, n);
}

Action hover(double power) { return {0.0, 0.0, 0.0, 0.0, power}; }

double rate_oracle(double pr_dbm, double bw) { return bw * std::log2(1.0 + std::pow(10.0, (pr_dbm + 100.0) / 10.0)); }

}  // namespace

TEST(Dcm, IdentityAndYawQuarterTurn) {
  const Mat3 m = dcm(0, 0, 0);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(m[i][j], i == j ? 1.0 : 0.0);
  }
  const Position v = rotate(dcm(0, 0, std::numbers::pi / 2), {10, 0, 0});
  EXPECT_NEAR(v.x, 0.0, 1e-12);
  EXPECT_NEAR(v.y, 10.0, 1e-12);
  EXPECT_NEAR(v.z, 0.0, 1e-12);
}

TEST(Dcm, PositivePitchPointsNoseDown) {
  // Ry(theta) maps x to (cos, 0, -sin).
  const Position v = rotate(dcm(0, 0.3, 0), {1, 0, 0});
  EXPECT_NEAR(v.x, std::cos(0.3), 1e-15);
  EXPECT_NEAR(v.z, -std::sin(0.3), 1e-15);
}

TEST(Dcm, OrthonormalWithUnitDeterminant) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const Mat3 c = dcm(rng.uniform(-3.2, 3.2), rng.uniform(-1.6, 1.6), rng.uniform(-3.2, 3.2));
    double worst = 0;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += c[k][i] * c[k][j];
        worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
      }
    }
    EXPECT_LT(worst, 1e-12);
    const double det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) -
                       c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0]) +
                       c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
    EXPECT_NEAR(det, 1.0, 1e-12);
  }
}

TEST(Reset, StartsAtHomeAtRest) {
  const Environment env = sample_environment(4, EnvGenConfig{});
  UavMdp mdp(env, {}, std::make_shared<TruthOracle>(env, ChannelParams{}));
  mdp.reset(7);
  EXPECT_EQ(mdp.state().q, (Position{0, 0, 250}));
  EXPECT_EQ(mdp.state().speed, 0.0);
  EXPECT_EQ(mdp.state().roll, 0.0);
  EXPECT_EQ(mdp.t(), 0u);
  EXPECT_TRUE(mdp.trajectory().steps.empty());
  for (double r : mdp.remaining_bits()) EXPECT_EQ(r, EpisodeConfig{}.payload_bits);
  const auto first = mdp.observation();
  EXPECT_EQ(first.size(), mdp.observation_dim());
  mdp.step({5, 0.1, 0.2, 0.3, 30});
  mdp.reset(7);
  EXPECT_EQ(mdp.observation(), first);
}

TEST(Step, ZeroSpeedKeepsPosition) {
  const Environment env = open_scene({{500, 500, 0}});
  UavMdp mdp(env, {}, constant_loss(200, 1));
  mdp.reset(0);
  mdp.step(hover(33));
  EXPECT_EQ(mdp.state().q, env.home());
  EXPECT_EQ(mdp.t(), 1u);
  EXPECT_EQ(mdp.trajectory().steps.size(), 1u);
}

TEST(Step, AssociatedUserReceivesShannonRate) {
  const Environment env = open_scene({{0, 0, 0}});
  UavMdp mdp(env, {}, constant_loss(90, 1));
  mdp.reset(0);
  mdp.step(hover(33));
  const auto& s = mdp.trajectory().steps.back();
  EXPECT_DOUBLE_EQ(s.received_dbm[0], -57.0);
  EXPECT_EQ(s.alpha[0], 1);
  EXPECT_NEAR(s.rate_bps[0], 14284363.11, 0.01);
  EXPECT_NEAR(s.rate_bps[0], rate_oracle(-57, 1e6), 1e-6);
  EXPECT_NEAR(mdp.remaining_bits()[0], 40e6 - s.rate_bps[0], 1e-6);
}

TEST(Step, BelowThresholdGetsNothing) {
  const Environment env = open_scene({{0, 0, 0}});
  UavMdp mdp(env, {}, constant_loss(110, 1));
  mdp.reset(0);
  mdp.step(hover(33));
  const auto& s = mdp.trajectory().steps.back();
  EXPECT_EQ(s.alpha[0], 0);
  EXPECT_EQ(s.rate_bps[0], 0.0);
  EXPECT_EQ(mdp.remaining_bits()[0], 40e6);
}

TEST(Step, BandwidthIsSplitEquallyAmongAssociated) {
  const Environment env = open_scene({{0, 0, 0}, {10, 0, 0}, {20, 0, 0}});
  auto oracle = std::make_shared<FunctionOracle>(
      [](const Position&, std::size_t i) { return i == 2 ? 120.0 : 90.0 + static_cast<double>(i); }, 3);
  UavMdp mdp(env, {}, oracle);
  mdp.reset(0);
  mdp.step(hover(33));
  const auto& s = mdp.trajectory().steps.back();
  EXPECT_EQ(s.alpha, (std::vector<int>{1, 1, 0}));
  EXPECT_NEAR(s.rate_bps[0], rate_oracle(-57, 0.5e6), 1e-6);
  EXPECT_NEAR(s.rate_bps[1], rate_oracle(-58, 0.5e6), 1e-6);
}

TEST(Step, OutOfRangeCommandsAreClamped) {
  const Environment env = open_scene({{0, 0, 0}});
  UavMdp mdp(env, {}, constant_loss(90, 1));
  mdp.reset(0);
  mdp.step({100, 5, 3, -9, 80});
  const auto& s = mdp.trajectory().steps.back();
  EXPECT_DOUBLE_EQ(s.state.speed, 20.0);
  EXPECT_DOUBLE_EQ(s.state.pitch, std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(s.state.roll, std::numbers::pi);
  EXPECT_DOUBLE_EQ(s.state.yaw, -std::numbers::pi);
  EXPECT_DOUBLE_EQ(s.action.power_dbm, 33.0);
  // pitch +90 degrees points the nose straight down, so the altitude clamp holds it at H_min.
  EXPECT_DOUBLE_EQ(s.state.q.z, env.h_min);
}

TEST(Step, NonFiniteActionFaults) {
  const Environment env = open_scene({{0, 0, 0}});
  UavMdp mdp(env, {}, constant_loss(90, 1));
  mdp.reset(0);
  EXPECT_THROW(mdp.step({std::nan(""), 0, 0, 0, 0}), std::invalid_argument);
  EXPECT_THROW(mdp.step({0, 0, 0, 0, INFINITY}), std::invalid_argument);
}

TEST(Reward, IdleStepIsOnlyTimePenalty) {
  const Environment env = open_scene({{0, 0, 0}});
  UavMdp mdp(env, {}, constant_loss(200, 1));
  mdp.reset(0);
  const auto r = mdp.step(hover(33));
  EXPECT_DOUBLE_EQ(r.reward, -1.0);
  EXPECT_DOUBLE_EQ(r.terms.movement, -1.0);
  EXPECT_EQ(r.terms.data, 0.0);
  EXPECT_EQ(r.terms.elevation, 0.0);
  EXPECT_FALSE(r.done);
}

TEST(Reward, LowElevationPenalty) {
  const Environment env = open_scene({{1000, 1000, 0}});
  UavMdp mdp(env, {}, constant_loss(200, 1));
  mdp.reset(0);
  const auto r = mdp.step(hover(33));
  EXPECT_EQ(r.terms.elevation, -1.0);
  EXPECT_DOUBLE_EQ(r.reward, -2.0);
}

TEST(Reward, DetourBeyondStraightLineIsPenalized) {
  const Environment env = open_scene({{1000, 0, 0}});
  EpisodeConfig cfg;
  UavMdp mdp(env, cfg, constant_loss(200, 1));
  mdp.reset(0);
  // flying straight at the user costs nothing extra
  EXPECT_DOUBLE_EQ(mdp.step({20, 0, 0, 0, 33}).terms.movement, -1.0);
  // flying 40 m perpendicular gains almost nothing
  const auto r = mdp.step({20, 0, 0, std::numbers::pi / 2, 33});
  const double progress = std::hypot(980.0, 0.0) - std::hypot(980.0, 40.0);
  EXPECT_NEAR(r.terms.movement, -1.0 - 0.01 * (40.0 - std::max(0.0, progress)), 1e-9);
}

TEST(Reward, EarlySuccessBonus) {
  const Environment env = open_scene({{0, 0, 0}});
  EpisodeConfig cfg;
  cfg.payload_bits = 1.0;
  UavMdp mdp(env, cfg, constant_loss(90, 1));
  mdp.reset(0);
  const auto r = mdp.step(hover(33));
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(r.success);
  EXPECT_DOUBLE_EQ(r.terms.early, 50.0 * 199.0 / 200.0);
  EXPECT_DOUBLE_EQ(r.terms.data, 1e-6 + 5.0);
  EXPECT_EQ(mdp.trajectory().t_end, 1.0);
  EXPECT_TRUE(check_feasibility(mdp.trajectory(), cfg, env).empty());
}

TEST(Reward, WeightsScaleComponents) {
  const Environment env = open_scene({{1000, 1000, 0}});
  EpisodeConfig cfg;
  cfg.weights = {2.0, 1.0, 1.0, 1.0, 3.0};
  UavMdp mdp(env, cfg, constant_loss(200, 1));
  mdp.reset(0);
  EXPECT_DOUBLE_EQ(mdp.step(hover(33)).reward, -2.0 - 3.0);
}

TEST(Episode, TimeoutEndsWithPenaltyRegardlessOfPayload) {
  const Environment env = open_scene({{0, 0, 0}});
  EpisodeConfig cfg;
  cfg.t_max = 3;
  UavMdp mdp(env, cfg, constant_loss(200, 1));
  mdp.reset(0);
  EXPECT_FALSE(mdp.step(hover(33)).done);
  EXPECT_FALSE(mdp.step(hover(33)).done);
  const auto r = mdp.step(hover(33));
  EXPECT_TRUE(r.done);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.terms.timeout, -50.0);
  EXPECT_EQ(mdp.trajectory().t_end, 3.0);
  EXPECT_THROW(mdp.step(hover(33)), std::logic_error);
}

TEST(Episode, ServedButAwayFromHomeKeepsFlying) {
  const Environment env = open_scene({{0, 0, 0}});
  EpisodeConfig cfg;
  cfg.payload_bits = 1.0;
  cfg.home_tolerance = 10.0;
  UavMdp mdp(env, cfg, constant_loss(90, 1));
  mdp.reset(0);
  const auto r = mdp.step({20, 0, 0, 0.7, 33});
  EXPECT_TRUE(mdp.all_served());
  EXPECT_GT((mdp.state().q - env.home()).norm(), 10.0);
  EXPECT_FALSE(r.done);
  cfg.require_return = false;
  UavMdp loose(env, cfg, constant_loss(90, 1));
  loose.reset(0);
  EXPECT_TRUE(loose.step({20, 0, 0, 0.7, 33}).success);
}

TEST(Episode, RandomActionsNeverBreakKinematicConstraints) {
  const Environment env = sample_environment(2, EnvGenConfig{});
  const EpisodeConfig cfg;
  UavMdp mdp(env, cfg, std::make_shared<AnalyticOracle>(env.gus, ChannelParams{}));
  Rng rng(11);
  std::size_t steps = 0;
  for (std::uint64_t ep = 0; steps < 100000; ++ep) {
    mdp.reset(ep);
    while (!mdp.done()) {
      mdp.step({rng.uniform(-25, 25), rng.uniform(-4, 4), rng.uniform(-2, 2), rng.uniform(-4, 4), rng.uniform(-5, 40)});
      const auto& s = mdp.state();
      ASSERT_GE(s.speed, 0.0);
      ASSERT_LE(s.speed, cfg.v_max);
      ASSERT_LE(std::abs(s.pitch), std::numbers::pi / 2);
      ASSERT_GE(s.q.z, env.h_min);
      ASSERT_LE(s.q.z, env.h_max);
      ++steps;
    }
    const auto& traj = mdp.trajectory();
    ASSERT_TRUE(check_feasibility(traj, cfg, env, FeasibilityScope::kinematic).empty());
    ASSERT_LE(traj.t_end, static_cast<double>(cfg.t_max) * cfg.dt);
    std::vector<double> sum(env.gus.size(), 0.0);
    for (const auto& s : traj.steps) {
      for (std::size_t i = 0; i < sum.size(); ++i) {
        ASSERT_GE(s.rate_bps[i], 0.0);
        sum[i] += s.alpha[i] * s.rate_bps[i] * cfg.dt;
      }
    }
    for (std::size_t i = 0; i < sum.size(); ++i) ASSERT_NEAR(sum[i], traj.delivered_bits[i], 1e-6 * (1 + sum[i]));
  }
}

TEST(Feasibility, HandBuiltOverspeedIsNamed) {
  const Environment env = open_scene({{0, 0, 0}});
  const EpisodeConfig cfg;
  TrajectoryResult traj;
  traj.initial.q = env.home();
  traj.initial.speed = 50;
  traj.required_bits = {0};
  traj.delivered_bits = {0};
  for (std::size_t t = 1; t <= 3; ++t) {
    TrajectoryStep s;
    s.t = t;
    s.state.q = env.home();
    s.state.speed = t == 2 ? 60 : 50;
    s.action.power_dbm = 20;
    s.alpha = {0};
    s.received_dbm = {-90};
    s.rate_bps = {0};
    traj.steps.push_back(s);
  }
  const auto v = check_feasibility(traj, cfg, env, FeasibilityScope::kinematic);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].constraint, "speed_bounds");
  EXPECT_EQ(v[0].step, 2u);
  EXPECT_DOUBLE_EQ(v[0].magnitude, 10.0);
}

TEST(Feasibility, AssociationBelowThresholdIsNamed) {
  const Environment env = open_scene({{0, 0, 0}});
  UavMdp mdp(env, {}, constant_loss(90, 1));
  mdp.reset(0);
  mdp.step(hover(33));
  TrajectoryResult traj = mdp.trajectory();
  traj.steps[0].received_dbm[0] = -75;
  const auto v = check_feasibility(traj, mdp.config(), env, FeasibilityScope::kinematic);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].constraint, "association_threshold");
  EXPECT_DOUBLE_EQ(v[0].magnitude, 5.0);
}

TEST(Feasibility, PayloadShortfallReportsMissingBits) {
  const Environment env = open_scene({{0, 0, 0}});
  EpisodeConfig cfg;
  cfg.t_max = 2;
  UavMdp mdp(env, cfg, constant_loss(90, 1));
  mdp.reset(0);
  mdp.step(hover(33));
  mdp.step(hover(33));
  const auto v = check_feasibility(mdp.trajectory(), cfg, env);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].constraint, "payload");
  EXPECT_NEAR(v[0].magnitude, 40e6 - 2 * rate_oracle(-57, 1e6), 1e-3);
}

TEST(Feasibility, RelaxedStartIsReported) {
  const Environment env = open_scene({{0, 0, 0}});
  EpisodeConfig cfg;
  cfg.payload_bits = 1;
  cfg.start = Position{100, 100, 300};
  UavMdp mdp(env, cfg, constant_loss(90, 1));
  mdp.reset(0);
  EXPECT_TRUE(mdp.step(hover(33)).success);
  const auto v = check_feasibility(mdp.trajectory(), cfg, env);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].constraint, "start_position");
  EXPECT_NEAR(v[0].magnitude, std::sqrt(100.0 * 100 * 2 + 50 * 50), 1e-9);
}

TEST(GridOracle, ExactOnNodesAndForAffineFields) {
  Environment env = open_scene({{0, 0, 0}, {5, 5, 0}});
  env.side = 100;
  env.h_min = 10;
  env.h_max = 50;
  FunctionOracle affine([](const Position& q, std::size_t i) { return 80 + 0.1 * q.x - 0.2 * q.y + 0.3 * q.z + i; }, 2);
  GridOracle grid(affine, env, {5, 4, 3}, "grid");
  Rng rng(3);
  std::vector<double> a(2), b(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Position q{rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(10, 50)};
    grid.losses_db(q, a);
    affine.losses_db(q, b);
    EXPECT_NEAR(a[0], b[0], 1e-10);
    EXPECT_NEAR(a[1], b[1], 1e-10);
  }
  FunctionOracle bumpy([](const Position& q, std::size_t) { return std::sin(q.x) * std::cos(q.z); }, 2);
  GridOracle g2(bumpy, env, {5, 4, 3}, "grid");
  const Position node = g2.node(3, 1, 2);
  g2.losses_db(node, a);
  EXPECT_NEAR(a[0], std::sin(node.x) * std::cos(node.z), 1e-12);
}

TEST(Serialization, TraceCsvAndSummary) {
  const Environment env = open_scene({{0, 0, 0}, {1, 1, 0}});
  EpisodeConfig cfg;
  cfg.t_max = 4;
  UavMdp mdp(env, cfg, constant_loss(90, 2));
  mdp.reset(0);
  while (!mdp.done()) mdp.step({3, 0, 0, 0, 33});
  const std::string csv = trajectory_csv(mdp.trajectory());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "step,x,y,z,speed,roll,pitch,yaw,power_dbm,alpha0,rate0,alpha1,rate1,reward");
  const auto j = trajectory_summary(mdp.trajectory());
  EXPECT_EQ(j.at("t_end").get<double>(), 4.0);
  EXPECT_GT(j.at("throughput_bps").get<double>(), 0.0);

  nlohmann::json cj = cfg;
  EXPECT_EQ(cj.get<EpisodeConfig>().t_max, 4u);
  cj["dt"] = -1;
  EXPECT_THROW(cj.get<EpisodeConfig>(), std::invalid_argument);
}
