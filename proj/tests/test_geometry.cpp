#include <gtest/gtest.h>

#include <cmath>

#include "uavckm/geometry.hpp"

using namespace uavckm;

namespace {

Environment one_building(double height) {
  Environment env;
  env.side = 500.0;
  env.h_min = 450.0;
  env.h_max = 750.0;
  env.buildings.push_back({200.0, 200.0, 100.0, 100.0, height});
  env.gus.push_back({10.0, 10.0, 0.0});
  return env;
}

// Point-sampling oracle: is any of `samples` interior points inside a box?
bool sampled_blocked(const Position& a, const Position& b, const Environment& env, int samples) {
  for (int i = 1; i < samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    const Position p = a + t * (b - a);
    for (const auto& bld : env.buildings) {
      if (bld.contains(p)) return true;
    }
  }
  return false;
}

Environment random_city(Rng& rng) {
  Environment env;
  env.side = 1000.0;
  env.h_min = 250.0;
  env.h_max = 750.0;
  const int n = 1 + static_cast<int>(rng.index(12));
  for (int i = 0; i < n; ++i) {
    Building b;
    b.width = rng.uniform(20.0, 200.0);
    b.depth = rng.uniform(20.0, 200.0);
    b.x0 = rng.uniform(0.0, env.side - b.width);
    b.y0 = rng.uniform(0.0, env.side - b.depth);
    b.height = rng.uniform(10.0, 240.0);
    env.buildings.push_back(b);
  }
  env.gus.push_back({0.0, 0.0, 0.0});
  return env;
}

}  // namespace

TEST(SegmentBlocked, EmptySceneNeverBlocks) {
  Environment env = one_building(100.0);
  env.buildings.clear();
  EXPECT_FALSE(segment_blocked({0, 0, 500}, {500, 500, 0}, env));
  EXPECT_FALSE(segment_blocked({3, 1, 2}, {400, 12, 700}, env));
}

TEST(SegmentBlocked, DiagonalThroughTallBuilding) {
  EXPECT_TRUE(segment_blocked({0, 0, 500}, {500, 500, 0}, one_building(400.0)));
}

TEST(SegmentBlocked, DiagonalOverLowBuilding) {
  EXPECT_FALSE(segment_blocked({0, 0, 500}, {500, 500, 0}, one_building(100.0)));
}

TEST(SegmentBlocked, ZeroLengthSegmentIsClear) {
  EXPECT_FALSE(segment_blocked({250, 250, 50}, {250, 250, 50}, one_building(400.0)));
}

TEST(SegmentBlocked, SymmetricAndAgreesWithDenseSampling) {
  Rng rng(7);
  int blocked_cases = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Environment env = random_city(rng);
    const Position a{rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(0, 300)};
    const Position b{rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(0, 300)};
    const bool fwd = segment_blocked(a, b, env);
    ASSERT_EQ(fwd, segment_blocked(b, a, env)) << "trial " << trial;
    bool oracle = sampled_blocked(a, b, env, 1000);
    if (oracle != fwd) oracle = sampled_blocked(a, b, env, 1000000);  // sub-resolution crossings
    ASSERT_EQ(fwd, oracle) << "trial " << trial;
    blocked_cases += fwd ? 1 : 0;
  }
  EXPECT_GT(blocked_cases, 1000);
  EXPECT_LT(blocked_cases, 9000);
}

TEST(Rasterize, EmptySceneIsZero) {
  Environment env = one_building(100.0);
  env.buildings.clear();
  const auto grid = rasterize_heights(env, 20, 20);
  ASSERT_EQ(grid.size(), 400u);
  for (double h : grid.cell_heights) EXPECT_EQ(h, 0.0);
}

TEST(Rasterize, BuildingCoveringExactlyOneCell) {
  Environment env = one_building(100.0);
  env.side = 200.0;
  env.buildings = {{50.0, 100.0, 50.0, 50.0, 120.0}};  // cell (row 2, col 1) with 4x4 cells of 50 m
  const auto grid = rasterize_heights(env, 4, 4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(grid.at(r, c), (r == 2 && c == 1) ? 120.0 : 0.0);
  }
}

TEST(Rasterize, OverlapTakesMaxAndMatchesBruteForce) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Environment env = random_city(rng);
    const auto grid = rasterize_heights(env, 20, 20);
    const double cell = env.side / 20.0;
    for (std::size_t r = 0; r < 20; ++r) {
      for (std::size_t c = 0; c < 20; ++c) {
        double expected = 0.0;
        for (const auto& b : env.buildings) {
          const double ox = std::min(b.x1(), (c + 1) * cell) - std::max(b.x0, c * cell);
          const double oy = std::min(b.y1(), (r + 1) * cell) - std::max(b.y0, r * cell);
          if (ox > 0 && oy > 0) expected = std::max(expected, b.height);
        }
        ASSERT_EQ(grid.at(r, c), expected);
      }
    }
  }
  Environment env = one_building(80.0);
  env.buildings.push_back({210.0, 210.0, 20.0, 20.0, 120.0});
  const auto grid = rasterize_heights(env, 20, 20);
  EXPECT_EQ(grid.at(8, 8), 120.0);  // 25 m cells: both buildings overlap [200,225)^2
}

TEST(Rasterize, AddingBuildingNeverLowersACell) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    Environment env = random_city(rng);
    const auto before = rasterize_heights(env, 20, 20);
    Environment more = env;
    more.buildings.push_back({rng.uniform(0, 800), rng.uniform(0, 800), rng.uniform(10, 200),
                              rng.uniform(10, 200), rng.uniform(10, 240)});
    const auto after = rasterize_heights(more, 20, 20);
    for (std::size_t i = 0; i < before.size(); ++i) ASSERT_GE(after.cell_heights[i], before.cell_heights[i]);
  }
}

TEST(Rasterize, RejectsZeroCells) {
  EXPECT_THROW(rasterize_heights(one_building(1.0), 0, 5), std::invalid_argument);
}

TEST(SampleEnvironment, DeterministicPerSeed) {
  EnvGenConfig cfg;
  EXPECT_EQ(sample_environment(42, cfg), sample_environment(42, cfg));
  EXPECT_NE(sample_environment(42, cfg), sample_environment(43, cfg));
}

TEST(SampleEnvironment, DefaultSceneHasFifteenUsersAtFlightFloor) {
  const EnvGenConfig cfg;
  const Environment env = sample_environment(1, cfg);
  EXPECT_EQ(env.side, 1000.0);
  EXPECT_EQ(env.h_min, 250.0);
  EXPECT_EQ(env.h_max, 750.0);
  ASSERT_EQ(env.gus.size(), 15u);
  for (const auto& g : env.gus) EXPECT_EQ(g.z, 250.0);
  EXPECT_EQ(env.home(), (Position{0.0, 0.0, 250.0}));
}

TEST(SampleEnvironment, ZeroBuildings) {
  EnvGenConfig cfg;
  cfg.building_count = 0;
  EXPECT_TRUE(sample_environment(5, cfg).buildings.empty());
}

TEST(SampleEnvironment, RejectsBuildingsLargerThanWorld) {
  EnvGenConfig cfg;
  cfg.footprint_max = 2000.0;
  EXPECT_THROW(sample_environment(1, cfg), std::invalid_argument);
  EnvGenConfig tall;
  tall.height_max = 260.0;
  EXPECT_THROW(sample_environment(1, tall), std::invalid_argument);
}

TEST(SampleEnvironment, UsersOutsideBuildings) {
  EnvGenConfig cfg;
  cfg.gu_height = 0.0;
  cfg.building_count = 120;
  const Environment env = sample_environment(9, cfg);
  for (const auto& g : env.gus) {
    for (const auto& b : env.buildings) EXPECT_FALSE(b.footprint_contains(g.x, g.y));
  }
}

TEST(Elevation, Examples) {
  EXPECT_NEAR(elevation_angle_deg({0, 0, 500}, {300, 400, 0}), 45.0, 1e-12);
  EXPECT_EQ(elevation_angle_deg({10, 20, 300}, {10, 20, 0}), 90.0);
  EXPECT_EQ(elevation_angle_deg({10, 20, 0}, {10, 20, 0}), 90.0);
  EXPECT_EQ(elevation_angle_deg({100, 0, 250}, {0, 0, 250}), 0.0);
}

TEST(Elevation, AlwaysWithinZeroToNinety) {
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const Position a{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)};
    const Position b{rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3)};
    const double e = elevation_angle_deg(a, b);
    ASSERT_GE(e, 0.0);
    ASSERT_LE(e, 90.0);
  }
}

TEST(EnvironmentJson, RoundTripWithGrid) {
  EnvGenConfig cfg;
  cfg.gu_height = 0.0;
  const Environment env = sample_environment(4, cfg);
  const nlohmann::json doc = environment_document(env, 20);
  const auto reparsed = nlohmann::json::parse(doc.dump());
  EXPECT_EQ(reparsed.get<Environment>(), env);
  EXPECT_EQ(reparsed.at("height_grid").get<HeightGrid>(), rasterize_heights(env, 20, 20));
}

TEST(EnvironmentJson, RejectsInvalidScene) {
  nlohmann::json doc = Environment{};
  EXPECT_THROW(doc.get<Environment>(), std::invalid_argument);  // no users
}
