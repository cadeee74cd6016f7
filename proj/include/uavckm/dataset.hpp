#pragma once

// (ground user, UAV, distance, gain) samples: generation, min-max
// normalization, splitting, and CSV / JSON persistence.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uavckm/channel.hpp"
#include "uavckm/geometry.hpp"
#include "uavckm/io.hpp"
#include "uavckm/rng.hpp"

namespace uavckm {

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "xG", "yG", "zG", "xU", "yU", "zU", "d", "g"};

enum Feature : std::size_t { kXG = 0, kYG, kZG, kXU, kYU, kZU, kDist, kGain };

using FeatureRow = std::array<double, kFeatureCount>;

/// One link observation. g is the channel gain in dB, i.e. minus the loss.
struct Sample {
  FeatureRow values{};

  Position gu() const { return {values[kXG], values[kYG], values[kZG]}; }
  Position uav() const { return {values[kXU], values[kYU], values[kZU]}; }
  double d() const { return values[kDist]; }
  double g() const { return values[kGain]; }
  double loss_db() const { return -values[kGain]; }

  static Sample make(const Position& gu, const Position& uav, double gain_db) {
    return Sample{{gu.x, gu.y, gu.z, uav.x, uav.y, uav.z, distance(uav, gu), gain_db}};
  }
  bool operator==(const Sample&) const = default;
};

struct NormStats {
  FeatureRow min{};
  FeatureRow max{};

  bool degenerate(std::size_t f) const { return !(max[f] > min[f]); }
  double range(std::size_t f) const { return degenerate(f) ? 0.0 : max[f] - min[f]; }

  double normalize(std::size_t f, double v) const {
    return degenerate(f) ? 0.0 : (v - min[f]) / (max[f] - min[f]);
  }
  double denormalize(std::size_t f, double v) const {
    return degenerate(f) ? min[f] : min[f] + v * (max[f] - min[f]);
  }
  /// Loss (= -g) mapped onto the same [0, 1] scale as g, but increasing with loss.
  double normalize_loss(double loss_db) const { return 1.0 - normalize(kGain, -loss_db); }
  double denormalize_loss(double v) const { return -denormalize(kGain, 1.0 - v); }
  double loss_scale_db() const { return range(kGain); }

  bool operator==(const NormStats&) const = default;
};

struct Dataset {
  std::vector<Sample> rows;
  std::optional<NormStats> stats;
  bool normalized{false};

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

/// Rows: UAV uniform in the flight box, ground user drawn uniformly from the
/// scene's users, gain from the geometric ground truth.
inline Dataset generate_dataset(const Environment& env, const ChannelParams& params, std::size_t n,
                                std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_dataset: n must be >= 1");
  Rng rng(seed);
  Rng shadow(mix64(seed));
  Dataset ds;
  ds.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Position uav{rng.uniform(0.0, env.side), rng.uniform(0.0, env.side),
                       rng.uniform(env.h_min, env.h_max)};
    const Position& gu = env.gus[rng.index(env.gus.size())];
    const double loss = ground_truth_loss_db(uav, gu, env, params, shadow);
    ds.rows.push_back(Sample::make(gu, uav, -loss));
  }
  return ds;
}

inline NormStats compute_stats(const Dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("compute_stats: empty dataset");
  NormStats s;
  s.min = ds.rows.front().values;
  s.max = ds.rows.front().values;
  for (const auto& r : ds.rows) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      s.min[f] = std::min(s.min[f], r.values[f]);
      s.max[f] = std::max(s.max[f], r.values[f]);
    }
  }
  return s;
}

/// Applies stored stats; values outside the stats' range map outside [0, 1].
inline Dataset apply_normalization(const Dataset& ds, const NormStats& stats) {
  if (ds.normalized) throw std::invalid_argument("apply_normalization: dataset already normalized");
  Dataset out;
  out.rows.reserve(ds.size());
  for (const auto& r : ds.rows) {
    Sample s;
    for (std::size_t f = 0; f < kFeatureCount; ++f) s.values[f] = stats.normalize(f, r.values[f]);
    out.rows.push_back(s);
  }
  out.stats = stats;
  out.normalized = true;
  return out;
}

/// Min-max normalization with stats taken from the data itself.
inline Dataset normalize(const Dataset& ds) { return apply_normalization(ds, compute_stats(ds)); }

inline Dataset denormalize(const Dataset& ds, const NormStats& stats) {
  Dataset out;
  out.rows.reserve(ds.size());
  for (const auto& r : ds.rows) {
    Sample s;
    for (std::size_t f = 0; f < kFeatureCount; ++f) s.values[f] = stats.denormalize(f, r.values[f]);
    out.rows.push_back(s);
  }
  return out;
}

/// Shuffled disjoint split; the first part holds round(n * train_fraction) rows.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(ds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(ds.size()) * train_fraction));
  std::pair<Dataset, Dataset> parts;
  for (auto* part : {&parts.first, &parts.second}) {
    part->stats = ds.stats;
    part->normalized = ds.normalized;
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? parts.first : parts.second).rows.push_back(ds.rows[order[i]]);
  }
  return parts;
}

inline Dataset concat(const Dataset& a, const Dataset& b) {
  if (a.normalized != b.normalized) throw std::invalid_argument("concat: mixed normalization");
  Dataset out = a;
  out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
  return out;
}

/// Pearson correlation between two feature columns.
inline double feature_correlation(const Dataset& ds, std::size_t fa, std::size_t fb) {
  const double n = static_cast<double>(ds.size());
  double ma = 0.0, mb = 0.0;
  for (const auto& r : ds.rows) ma += r.values[fa], mb += r.values[fb];
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (const auto& r : ds.rows) {
    const double da = r.values[fa] - ma, db = r.values[fb] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

class CsvParseError : public std::runtime_error {
 public:
  CsvParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::string dataset_csv(const Dataset& ds) {
  std::string out;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    out += kFeatureNames[f];
    out += f + 1 < kFeatureCount ? ',' : '\n';
  }
  for (const auto& r : ds.rows) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      out += format_double(r.values[f]);
      out += f + 1 < kFeatureCount ? ',' : '\n';
    }
  }
  return out;
}

inline Dataset parse_dataset_csv(std::string_view text) {
  Dataset ds;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != kFeatureCount) {
      throw CsvParseError(line_no, "expected " + std::to_string(kFeatureCount) + " fields, got " +
                                       std::to_string(fields.size()));
    }
    if (!header_seen) {
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        if (fields[f] != kFeatureNames[f]) throw CsvParseError(line_no, "unexpected header");
      }
      header_seen = true;
      continue;
    }
    Sample s;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (!parse_double(fields[f], s.values[f])) {
        throw CsvParseError(line_no, "field " + std::string(kFeatureNames[f]) + " is not a number");
      }
    }
    ds.rows.push_back(s);
  }
  if (!header_seen) throw CsvParseError(line_no, "missing header");
  return ds;
}

inline void to_json(nlohmann::json& j, const NormStats& s) {
  nlohmann::json degenerate = nlohmann::json::array();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (s.degenerate(f)) degenerate.push_back(kFeatureNames[f]);
  }
  j = {{"features", kFeatureNames}, {"min", s.min}, {"max", s.max}, {"degenerate", degenerate}};
}
inline void from_json(const nlohmann::json& j, NormStats& s) {
  s.min = j.at("min").get<FeatureRow>();
  s.max = j.at("max").get<FeatureRow>();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    if (s.max[f] < s.min[f]) throw std::invalid_argument("norm stats: max < min");
  }
}

inline std::string stats_sidecar_path(const std::string& csv_path) { return csv_path + ".stats.json"; }

/// Writes the CSV and, when the dataset is normalized, its stats sidecar.
inline void write_csv(const Dataset& ds, const std::string& path) {
  write_text_file(path, dataset_csv(ds));
  if (ds.normalized && ds.stats) write_json_file(stats_sidecar_path(path), *ds.stats);
}

inline Dataset read_csv(const std::string& path) {
  Dataset ds = parse_dataset_csv(read_text_file(path));
  std::ifstream sidecar(stats_sidecar_path(path));
  if (sidecar) {
    ds.stats = read_json_file(stats_sidecar_path(path)).get<NormStats>();
    ds.normalized = true;
  }
  return ds;
}

}  // namespace uavckm
