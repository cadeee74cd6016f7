#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "uavckm/dataset.hpp"

using namespace uavckm;

namespace {

Environment small_scene(bool with_buildings) {
  EnvGenConfig cfg;
  cfg.side = 400;
  cfg.h_min = 200;
  cfg.h_max = 400;
  cfg.gu_count = 5;
  cfg.gu_height = 0;
  cfg.building_count = with_buildings ? 15 : 0;
  cfg.footprint_min = 20;
  cfg.footprint_max = 60;
  cfg.height_min = 30;
  cfg.height_max = 150;
  return sample_environment(13, cfg);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("uavckm_" + name)).string();
}

}  // namespace

TEST(Generate, DeterministicAndSized) {
  const auto env = small_scene(true);
  const ChannelParams p;
  const auto a = generate_dataset(env, p, 1, 5);
  const auto b = generate_dataset(env, p, 1, 5);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a.rows, b.rows);
  EXPECT_EQ(generate_dataset(env, p, 300, 8).rows, generate_dataset(env, p, 300, 8).rows);
  EXPECT_THROW(generate_dataset(env, p, 0, 5), std::invalid_argument);
}

TEST(Generate, DistanceColumnMatchesPositions) {
  const auto ds = generate_dataset(small_scene(true), ChannelParams{}, 2000, 1);
  for (const auto& r : ds.rows) {
    ASSERT_NEAR(r.d(), distance(r.uav(), r.gu()), 1e-6 * r.d());
  }
}

TEST(Generate, PositionsInsideFlightBox) {
  const auto env = small_scene(true);
  const auto ds = generate_dataset(env, ChannelParams{}, 2000, 2);
  for (const auto& r : ds.rows) {
    ASSERT_GE(r.uav().x, 0.0);
    ASSERT_LE(r.uav().x, env.side);
    ASSERT_GE(r.uav().z, env.h_min);
    ASSERT_LE(r.uav().z, env.h_max);
    ASSERT_TRUE(std::find(env.gus.begin(), env.gus.end(), r.gu()) != env.gus.end());
  }
}

TEST(Generate, NoiselessOpenSceneEqualsLosBranch) {
  ChannelParams p;
  p.shadow_sigma_los_db = 0;
  p.shadow_sigma_nlos_db = 0;
  const auto ds = generate_dataset(small_scene(false), p, 500, 3);
  for (const auto& r : ds.rows) ASSERT_DOUBLE_EQ(r.g(), -(fspl_db(r.d(), p) + p.eps_los_db));
}

TEST(Normalize, MapsRangeToUnitInterval) {
  Dataset ds;
  for (double z : {250.0, 500.0, 750.0}) ds.rows.push_back(Sample::make({1, 2, 0}, {3, 4, z}, -90.0 - z / 100));
  const auto n = normalize(ds);
  ASSERT_TRUE(n.normalized && n.stats);
  EXPECT_EQ(n.rows[0].values[kZU], 0.0);
  EXPECT_EQ(n.rows[1].values[kZU], 0.5);
  EXPECT_EQ(n.rows[2].values[kZU], 1.0);
  EXPECT_TRUE(n.stats->degenerate(kXG));
  EXPECT_EQ(n.rows[1].values[kXG], 0.0);
}

TEST(Normalize, RoundTripAndRange) {
  const auto ds = generate_dataset(small_scene(true), ChannelParams{}, 1000, 4);
  const auto n = normalize(ds);
  for (const auto& r : n.rows) {
    for (double v : r.values) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
  const auto back = denormalize(n, *n.stats);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      ASSERT_NEAR(back.rows[i].values[f], ds.rows[i].values[f], 1e-9 * std::max(1.0, std::abs(ds.rows[i].values[f])));
    }
  }
}

TEST(Normalize, StoredStatsMayLeaveUnitInterval) {
  const auto train = generate_dataset(small_scene(true), ChannelParams{}, 50, 4);
  const auto stats = compute_stats(train);
  Dataset other;
  other.rows.push_back(Sample::make({0, 0, 0}, {-100, 1e4, 1e4}, 0.0));
  const auto n = apply_normalization(other, stats);
  EXPECT_GT(n.rows[0].values[kYU], 1.0);
  EXPECT_LT(n.rows[0].values[kXU], 0.0);
}

TEST(Normalize, PreservesRankCorrelationSign) {
  const auto ds = generate_dataset(small_scene(true), ChannelParams{}, 2000, 6);
  const double raw = feature_correlation(ds, kDist, kGain);
  const double norm = feature_correlation(normalize(ds), kDist, kGain);
  EXPECT_LT(raw, 0.0);
  EXPECT_LT(norm, 0.0);
  EXPECT_NEAR(raw, norm, 1e-9);
}

TEST(Split, SizesDisjointReproducible) {
  Dataset ds;
  for (int i = 0; i < 10; ++i) ds.rows.push_back(Sample::make({double(i), 0, 0}, {0, 0, 300}, -i));
  const auto [a, b] = split(ds, 0.7, 1);
  EXPECT_EQ(a.size(), 7u);
  EXPECT_EQ(b.size(), 3u);
  std::vector<double> all;
  for (const auto& r : a.rows) all.push_back(r.values[kXG]);
  for (const auto& r : b.rows) all.push_back(r.values[kXG]);
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 10; ++i) EXPECT_EQ(all[i], i);
  const auto [c, d] = split(ds, 0.7, 1);
  EXPECT_EQ(a.rows, c.rows);
  EXPECT_EQ(b.rows, d.rows);
  EXPECT_THROW(split(ds, 1.0, 1), std::invalid_argument);
}

TEST(Csv, EmptyDatasetIsHeaderOnly) {
  const auto path = temp_path("empty.csv");
  write_csv(Dataset{}, path);
  EXPECT_EQ(read_text_file(path), "xG,yG,zG,xU,yU,zU,d,g\n");
  EXPECT_TRUE(read_csv(path).empty());
}

TEST(Csv, RoundTripIsValueIdentical) {
  const auto ds = normalize(generate_dataset(small_scene(true), ChannelParams{}, 500, 9));
  const auto path = temp_path("round.csv");
  write_csv(ds, path);
  const auto back = read_csv(path);
  EXPECT_EQ(back.rows, ds.rows);
  ASSERT_TRUE(back.stats);
  EXPECT_EQ(*back.stats, *ds.stats);
  EXPECT_TRUE(back.normalized);
}

TEST(Csv, ShortRowReportsLine) {
  const std::string text = "xG,yG,zG,xU,yU,zU,d,g\n1,2,3,4,5,6,7,8\n1,2,3,4,5,6,7\n";
  try {
    parse_dataset_csv(text);
    FAIL() << "expected a parse error";
  } catch (const CsvParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  EXPECT_THROW(parse_dataset_csv("xG,yG,zG,xU,yU,zU,d,g\n1,2,3,4,5,6,7,x\n"), CsvParseError);
}
