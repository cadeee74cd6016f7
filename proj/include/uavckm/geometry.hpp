#pragma once

// World model: bounded box world, axis-aligned buildings, fixed ground users.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uavckm/rng.hpp"

namespace uavckm {

struct Position {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  friend Position operator+(const Position& a, const Position& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Position operator-(const Position& a, const Position& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Position operator*(double s, const Position& p) { return {s * p.x, s * p.y, s * p.z}; }
  friend bool operator==(const Position&, const Position&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  double horizontal_norm() const { return std::sqrt(x * x + y * y); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// Box [x0, x0 + width] x [y0, y0 + depth] x [0, height].
struct Building {
  double x0{0.0};
  double y0{0.0};
  double width{0.0};
  double depth{0.0};
  double height{0.0};

  double x1() const { return x0 + width; }
  double y1() const { return y0 + depth; }
  bool contains(const Position& p) const {
    return p.x >= x0 && p.x <= x1() && p.y >= y0 && p.y <= y1() && p.z >= 0.0 && p.z <= height;
  }
  bool footprint_contains(double x, double y) const {
    return x >= x0 && x <= x1() && y >= y0 && y <= y1();
  }
  friend bool operator==(const Building&, const Building&) = default;
};

struct Environment {
  double side{1000.0};
  double h_min{250.0};
  double h_max{750.0};
  std::vector<Building> buildings;
  std::vector<Position> gus;

  /// Throws std::invalid_argument naming the first broken invariant.
  void validate() const {
    if (!(side > 0.0) || !(h_max > h_min) || !(h_min >= 0.0)) {
      throw std::invalid_argument("environment: bad bounds");
    }
    if (gus.empty()) throw std::invalid_argument("environment: needs at least one ground user");
    for (std::size_t i = 0; i < gus.size(); ++i) {
      const auto& g = gus[i];
      if (!g.finite() || g.x < 0.0 || g.x > side || g.y < 0.0 || g.y > side || g.z < 0.0 ||
          g.z > h_max) {
        throw std::invalid_argument("environment: ground user " + std::to_string(i) +
                                    " outside the world");
      }
    }
    for (std::size_t i = 0; i < buildings.size(); ++i) {
      const auto& b = buildings[i];
      if (!(b.width > 0.0) || !(b.depth > 0.0) || !(b.height > 0.0)) {
        throw std::invalid_argument("environment: building " + std::to_string(i) +
                                    " has non-positive extent");
      }
      if (b.height >= h_min) {
        throw std::invalid_argument("environment: building " + std::to_string(i) +
                                    " reaches the minimum flight altitude");
      }
      if (b.x0 < 0.0 || b.y0 < 0.0 || b.x1() > side || b.y1() > side) {
        throw std::invalid_argument("environment: building " + std::to_string(i) +
                                    " outside the footprint");
      }
    }
  }

  bool operator==(const Environment&) const = default;

  /// Start and return point of every mission.
  Position home() const { return {0.0, 0.0, h_min}; }

  Position clamp_uav(const Position& p) const {
    return {std::clamp(p.x, 0.0, side), std::clamp(p.y, 0.0, side),
            std::clamp(p.z, h_min, h_max)};
  }
};

/// Row-major: cell (row, col) covers y in [row, row+1) * side/depth_cells and
/// x in [col, col+1) * side/width_cells.
struct HeightGrid {
  std::size_t width_cells{0};
  std::size_t depth_cells{0};
  std::vector<double> cell_heights;

  double at(std::size_t row, std::size_t col) const { return cell_heights[row * width_cells + col]; }
  std::size_t size() const { return cell_heights.size(); }
  bool operator==(const HeightGrid&) const = default;
};

/// True iff the open segment p1 -> p2 passes through the interior of a
/// building (slab test). Grazing contact and zero-length segments are clear.
inline bool segment_blocked(const Position& p1, const Position& p2, const Environment& env) {
  const double origin[3] = {p1.x, p1.y, p1.z};
  const double dir[3] = {p2.x - p1.x, p2.y - p1.y, p2.z - p1.z};
  if (dir[0] == 0.0 && dir[1] == 0.0 && dir[2] == 0.0) return false;
  for (const auto& b : env.buildings) {
    const double lo[3] = {b.x0, b.y0, 0.0};
    const double hi[3] = {b.x1(), b.y1(), b.height};
    double t_enter = 0.0;
    double t_exit = 1.0;
    bool miss = false;
    for (int k = 0; k < 3 && !miss; ++k) {
      if (dir[k] == 0.0) {
        if (origin[k] <= lo[k] || origin[k] >= hi[k]) miss = true;
        continue;
      }
      double t0 = (lo[k] - origin[k]) / dir[k];
      double t1 = (hi[k] - origin[k]) / dir[k];
      if (t0 > t1) std::swap(t0, t1);
      t_enter = std::max(t_enter, t0);
      t_exit = std::min(t_exit, t1);
      if (t_enter >= t_exit) miss = true;
    }
    if (!miss) return true;
  }
  return false;
}

/// Each cell holds the tallest building whose footprint overlaps it with
/// positive area.
inline HeightGrid rasterize_heights(const Environment& env, std::size_t width_cells,
                                    std::size_t depth_cells) {
  if (width_cells == 0 || depth_cells == 0) {
    throw std::invalid_argument("rasterize_heights: grid needs at least one cell");
  }
  HeightGrid grid{width_cells, depth_cells, std::vector<double>(width_cells * depth_cells, 0.0)};
  const double cw = env.side / static_cast<double>(width_cells);
  const double cd = env.side / static_cast<double>(depth_cells);
  for (const auto& b : env.buildings) {
    const auto col_lo = static_cast<std::size_t>(std::max(0.0, std::floor(b.x0 / cw)));
    const auto row_lo = static_cast<std::size_t>(std::max(0.0, std::floor(b.y0 / cd)));
    for (std::size_t row = row_lo; row < depth_cells; ++row) {
      const double y0 = static_cast<double>(row) * cd;
      if (y0 >= b.y1()) break;
      if (y0 + cd <= b.y0) continue;
      for (std::size_t col = col_lo; col < width_cells; ++col) {
        const double x0 = static_cast<double>(col) * cw;
        if (x0 >= b.x1()) break;
        if (x0 + cw <= b.x0) continue;
        double& cell = grid.cell_heights[row * width_cells + col];
        cell = std::max(cell, b.height);
      }
    }
  }
  return grid;
}

/// Elevation of the UAV seen from the ground user, in degrees. Coincident
/// points report 90 by convention.
inline double elevation_angle_deg(const Position& uav, const Position& gu) {
  const double r = std::hypot(uav.x - gu.x, uav.y - gu.y);
  const double h = std::abs(uav.z - gu.z);
  if (r == 0.0) return 90.0;
  return std::atan2(h, r) * 180.0 / std::numbers::pi;
}

struct EnvGenConfig {
  double side{1000.0};
  double h_min{250.0};
  double h_max{750.0};
  std::size_t gu_count{15};
  double gu_height{250.0};
  std::size_t building_count{40};
  double footprint_min{30.0};
  double footprint_max{120.0};
  double height_min{20.0};
  double height_max{200.0};
  /// Keeps this much horizontal clearance between a ground user and any wall.
  double gu_clearance{5.0};

  void validate() const {
    if (!(side > 0.0) || !(h_max > h_min) || !(h_min >= 0.0)) {
      throw std::invalid_argument("env config: bad bounds");
    }
    if (gu_count == 0) throw std::invalid_argument("env config: gu_count must be >= 1");
    if (gu_height < 0.0 || gu_height > h_max) {
      throw std::invalid_argument("env config: gu_height outside [0, h_max]");
    }
    if (building_count > 0) {
      if (!(footprint_min > 0.0) || footprint_max < footprint_min) {
        throw std::invalid_argument("env config: bad footprint range");
      }
      if (footprint_max > side) {
        throw std::invalid_argument("env config: building footprint cannot fit the world");
      }
      if (!(height_min > 0.0) || height_max < height_min || height_max >= h_min) {
        throw std::invalid_argument("env config: building heights must lie in (0, h_min)");
      }
    }
  }
};

/// Reproducible random scene. Ground users are placed outside every building
/// footprint (with clearance); throws if that proves impossible.
inline Environment sample_environment(std::uint64_t seed, const EnvGenConfig& cfg) {
  cfg.validate();
  Rng rng(seed);
  Environment env;
  env.side = cfg.side;
  env.h_min = cfg.h_min;
  env.h_max = cfg.h_max;
  for (std::size_t i = 0; i < cfg.building_count; ++i) {
    Building b;
    b.width = rng.uniform(cfg.footprint_min, cfg.footprint_max);
    b.depth = rng.uniform(cfg.footprint_min, cfg.footprint_max);
    b.x0 = rng.uniform(0.0, cfg.side - b.width);
    b.y0 = rng.uniform(0.0, cfg.side - b.depth);
    b.height = rng.uniform(cfg.height_min, cfg.height_max);
    env.buildings.push_back(b);
  }
  constexpr int kMaxAttempts = 10000;
  for (std::size_t i = 0; i < cfg.gu_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      const Position p{rng.uniform(0.0, cfg.side), rng.uniform(0.0, cfg.side), cfg.gu_height};
      const bool inside = std::any_of(env.buildings.begin(), env.buildings.end(), [&](const Building& b) {
        return p.x > b.x0 - cfg.gu_clearance && p.x < b.x1() + cfg.gu_clearance &&
               p.y > b.y0 - cfg.gu_clearance && p.y < b.y1() + cfg.gu_clearance;
      });
      if (!inside) {
        env.gus.push_back(p);
        placed = true;
      }
    }
    if (!placed) throw std::invalid_argument("env config: no free ground for ground users");
  }
  env.validate();
  return env;
}

// JSON

inline void to_json(nlohmann::json& j, const Position& p) { j = nlohmann::json::array({p.x, p.y, p.z}); }
inline void from_json(const nlohmann::json& j, Position& p) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("position must be [x, y, z]");
  p = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline void to_json(nlohmann::json& j, const Building& b) {
  j = {{"min_corner", {b.x0, b.y0}}, {"footprint", {b.width, b.depth}}, {"height", b.height}};
}
inline void from_json(const nlohmann::json& j, Building& b) {
  const auto& c = j.at("min_corner");
  const auto& f = j.at("footprint");
  b = {c.at(0).get<double>(), c.at(1).get<double>(), f.at(0).get<double>(), f.at(1).get<double>(),
       j.at("height").get<double>()};
}

inline void to_json(nlohmann::json& j, const HeightGrid& g) {
  j = {{"width_cells", g.width_cells}, {"depth_cells", g.depth_cells}, {"cell_heights", g.cell_heights}};
}
inline void from_json(const nlohmann::json& j, HeightGrid& g) {
  g.width_cells = j.at("width_cells").get<std::size_t>();
  g.depth_cells = j.at("depth_cells").get<std::size_t>();
  g.cell_heights = j.at("cell_heights").get<std::vector<double>>();
  if (g.cell_heights.size() != g.width_cells * g.depth_cells) {
    throw std::invalid_argument("height grid: cell count does not match dimensions");
  }
}

inline void to_json(nlohmann::json& j, const Environment& e) {
  j = {{"side", e.side},   {"h_min", e.h_min},         {"h_max", e.h_max},
       {"gus", e.gus},     {"buildings", e.buildings}};
}
inline void from_json(const nlohmann::json& j, Environment& e) {
  e.side = j.at("side").get<double>();
  e.h_min = j.at("h_min").get<double>();
  e.h_max = j.at("h_max").get<double>();
  e.gus = j.at("gus").get<std::vector<Position>>();
  e.buildings = j.at("buildings").get<std::vector<Building>>();
  e.validate();
}

inline void to_json(nlohmann::json& j, const EnvGenConfig& c) {
  j = {{"side", c.side},
       {"h_min", c.h_min},
       {"h_max", c.h_max},
       {"gu_count", c.gu_count},
       {"gu_height", c.gu_height},
       {"building_count", c.building_count},
       {"footprint_min", c.footprint_min},
       {"footprint_max", c.footprint_max},
       {"height_min", c.height_min},
       {"height_max", c.height_max},
       {"gu_clearance", c.gu_clearance}};
}
inline void from_json(const nlohmann::json& j, EnvGenConfig& c) {
  const EnvGenConfig d;
  c.side = j.value("side", d.side);
  c.h_min = j.value("h_min", d.h_min);
  c.h_max = j.value("h_max", d.h_max);
  c.gu_count = j.value("gu_count", d.gu_count);
  c.gu_height = j.value("gu_height", d.gu_height);
  c.building_count = j.value("building_count", d.building_count);
  c.footprint_min = j.value("footprint_min", d.footprint_min);
  c.footprint_max = j.value("footprint_max", d.footprint_max);
  c.height_min = j.value("height_min", d.height_min);
  c.height_max = j.value("height_max", d.height_max);
  c.gu_clearance = j.value("gu_clearance", d.gu_clearance);
}

/// Environment document with the rasterized height grid embedded.
inline nlohmann::json environment_document(const Environment& env, std::size_t grid_cells) {
  nlohmann::json doc = env;
  doc["height_grid"] = rasterize_heights(env, grid_cells, grid_cells);
  return doc;
}

}  // namespace uavckm
