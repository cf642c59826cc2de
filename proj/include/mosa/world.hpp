// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosa/rng.hpp"

namespace mosa::world {

enum class CellClass : std::uint8_t { Road = 0, Sidewalk = 1, Obstacle = 2, Terrain = 3 };
inline constexpr std::size_t kNumClasses = 4;

struct Cell {
  int row = 0;
  int col = 0;
  auto operator<=>(const Cell&) const = default;
};

/// Continuous position in grid units; cell (r, c) has its center at
/// (c + 0.5, r + 0.5).
struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

Point cell_center(Cell c);

class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoPathError : public WorldError {
 public:
  using WorldError::WorldError;
};

struct SceneGrid {
  std::string id;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> cells;  // row-major class ids

  CellClass at(Cell c) const {
    return static_cast<CellClass>(cells[static_cast<std::size_t>(c.row) * width +
                                        static_cast<std::size_t>(c.col)]);
  }
  bool contains(Cell c) const {
    return c.row >= 0 && c.col >= 0 && static_cast<std::size_t>(c.row) < height &&
           static_cast<std::size_t>(c.col) < width;
  }
  bool passable(Cell c) const { return contains(c) && at(c) != CellClass::Obstacle; }
  /// Class of the cell containing a continuous point (clamped to the grid).
  CellClass class_at(Point p) const;

  std::vector<Cell> free_cells() const;
  /// Throws WorldError on bad dimensions, unknown class ids, or no
  /// non-obstacle component with at least two cells.
  void validate() const;
};

struct ClassCosts {
  double road = 1.0;
  double sidewalk = 1.0;
  double terrain = 2.0;

  double of(CellClass c) const;
  bool operator==(const ClassCosts&) const = default;
};

struct StyleParams {
  double v_pref_mean = 1.0;  // cells per step
  double v_pref_std = 0.1;
  ClassCosts class_costs;
  double jitter_sigma = 0.05;  // cells
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const StyleParams&) const = default;
};

inline constexpr double kMinSpeed = 0.2;
inline constexpr double kMaxSpeed = 4.0;
inline constexpr double kMinStartGoalSeparation = 6.0;

struct Sample {
  std::string scene_id;
  std::vector<Point> past;
  std::vector<Point> future;
  bool operator==(const Sample&) const = default;
};

struct Dataset {
  std::string style_tag;
  std::map<std::string, SceneGrid> scenes;
  std::vector<Sample> samples;
};

/// Authored 16x16 layouts "layout1".."layout4".
SceneGrid build_scene(const std::string& preset_id);

struct PlannedPath {
  std::vector<Cell> cells;
  double cost = 0.0;
};

/// Minimum-cost 8-connected path. Entering a cell costs its class cost,
/// times sqrt(2) for diagonal moves. Equal-cost predecessors are resolved to
/// the lexicographically smallest (row, col).
PlannedPath plan_path(const SceneGrid& grid, const ClassCosts& costs, Cell start, Cell goal);

/// Walks the planned path at a speed drawn once from the style, then adds
/// per-coordinate Gaussian jitter. Points are clamped to the grid bounds.
std::vector<Point> sample_trajectory(const SceneGrid& grid, const StyleParams& style,
                                     Cell start, Cell goal, std::size_t total_steps,
                                     SplitMix64& rng);

/// Speed draw used by sample_trajectory: Gaussian clamped to [kMinSpeed, kMaxSpeed].
double draw_speed(const StyleParams& style, SplitMix64& rng);

/// Positions at arc lengths 0, v, 2v, ... along the polyline through cell
/// centers, holding at the end once the path is exhausted.
std::vector<Point> walk_path(const std::vector<Cell>& path, double speed,
                             std::size_t total_steps);

Dataset generate_dataset(const std::vector<SceneGrid>& scenes, const StyleParams& style,
                         std::size_t n, std::uint64_t seed, std::size_t t_obs,
                         std::size_t t_pred, const std::string& style_tag = "");

struct DatasetSpec {
  std::vector<std::string> scene_ids;
  StyleParams style;
  std::string style_tag;
};

struct ScenarioPreset {
  std::string name;
  DatasetSpec source;
  DatasetSpec target;
};

/// agent_shift, scene_shift or class_shift.
ScenarioPreset scenario_preset(const std::string& name);

}  // namespace mosa::world
