// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <tuple>

namespace mosa::world {

Point cell_center(Cell c) { return {c.col + 0.5, c.row + 0.5}; }

CellClass SceneGrid::class_at(Point p) const {
  const auto clamp_index = [](double v, std::size_t extent) {
    const auto i = static_cast<long>(std::floor(v));
    return static_cast<int>(std::clamp<long>(i, 0, static_cast<long>(extent) - 1));
  };
  return at({clamp_index(p.y, height), clamp_index(p.x, width)});
}

std::vector<Cell> SceneGrid::free_cells() const {
  std::vector<Cell> out;
  for (int r = 0; r < static_cast<int>(height); ++r) {
    for (int c = 0; c < static_cast<int>(width); ++c) {
      if (at({r, c}) != CellClass::Obstacle) out.push_back({r, c});
    }
  }
  return out;
}

void SceneGrid::validate() const {
  if (height == 0 || width == 0 || cells.size() != height * width) {
    throw WorldError("scene '" + id + "': cell count does not match " +
                     std::to_string(height) + "x" + std::to_string(width));
  }
  for (auto v : cells) {
    if (v >= kNumClasses) {
      throw WorldError("scene '" + id + "': class id " + std::to_string(v) + " out of range");
    }
  }
  // Largest 8-connected free component must have at least two cells.
  std::vector<bool> seen(cells.size(), false);
  std::size_t largest = 0;
  for (const Cell start : free_cells()) {
    const auto flat = [this](Cell c) { return static_cast<std::size_t>(c.row) * width + c.col; };
    if (seen[flat(start)]) continue;
    std::size_t count = 0;
    std::vector<Cell> stack{start};
    seen[flat(start)] = true;
    while (!stack.empty()) {
      const Cell cur = stack.back();
      stack.pop_back();
      ++count;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell next{cur.row + dr, cur.col + dc};
          if ((dr != 0 || dc != 0) && passable(next) && !seen[flat(next)]) {
            seen[flat(next)] = true;
            stack.push_back(next);
          }
        }
      }
    }
    largest = std::max(largest, count);
  }
  if (largest < 2) throw WorldError("scene '" + id + "': no connected free region");
}

double ClassCosts::of(CellClass c) const {
  switch (c) {
    case CellClass::Road: return road;
    case CellClass::Sidewalk: return sidewalk;
    case CellClass::Terrain: return terrain;
    case CellClass::Obstacle: return std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::infinity();
}

void StyleParams::validate() const {
  const auto positive_finite = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive_finite(v_pref_mean)) throw WorldError("style: v_pref_mean must be > 0");
  if (!(v_pref_std >= 0.0) || !std::isfinite(v_pref_std)) {
    throw WorldError("style: v_pref_std must be >= 0");
  }
  if (!(jitter_sigma >= 0.0) || !std::isfinite(jitter_sigma)) {
    throw WorldError("style: jitter_sigma must be >= 0");
  }
  if (!positive_finite(class_costs.road) || !positive_finite(class_costs.sidewalk) ||
      !positive_finite(class_costs.terrain)) {
    throw WorldError("style: class costs must be positive and finite");
  }
}

// ---- layouts ------------------------------------------------------------

namespace {

// '.' road, 's' sidewalk, '#' obstacle, 't' terrain.
constexpr std::array<const char*, 16> kLayout1 = {
    "tttttts..stttttt", "t###tts..st###tt", "t###tts..st###tt", "t###tts..st###tt",
    "tttttts..stttttt", "tttttts..stttttt", "sssssss..sssssss", "................",
    "................", "sssssss..sssssss", "tttttts..stttttt", "t###tts..stt###t",
    "t###tts..stt###t", "t###tts..stt###t", "tttttts..stttttt", "tttttts..stttttt",
};

// Wider east-west arm.
constexpr std::array<const char*, 16> kLayout2 = {
    "tttttts..stttttt", "t###tts..st###tt", "t###tts..st###tt", "t###tts..stttttt",
    "tttttts..stttttt", "sssssss..sssssss", "................", "................",
    "................", "sssssss..sssssss", "tttttts..stttttt", "tttttts..stttttt",
    "t###tts..st###tt", "t###tts..st###tt", "t###tts..st###tt", "tttttts..stttttt",
};

// Wider north-south arm.
constexpr std::array<const char*, 16> kLayout3 = {
    "ttttts....sttttt", "t###ts....st###t", "t###ts....st###t", "t###ts....st###t",
    "ttttts....sttttt", "ttttts....sttttt", "ssssss....ssssss", "................",
    "................", "ssssss....ssssss", "ttttts....sttttt", "t##tts....st###t",
    "t##tts....st###t", "t##tts....st###t", "ttttts....sttttt", "ttttts....sttttt",
};

// L-shaped corridor in the north-east; the rest is built up.
constexpr std::array<const char*, 16> kLayout4 = {
    "####tttttttts..t", "####sssssssss..s", "####............", "####............",
    "####sssssssss..s", "###########ts..t", "###########ts..t", "###########ts..t",
    "###########ts..t", "###########ts..t", "###########ts..t", "###########ts..t",
    "###########ts..t", "###########ts..t", "###########ts..t", "###########ts..t",
};

SceneGrid from_ascii(const std::string& id, const std::array<const char*, 16>& rows) {
  SceneGrid grid;
  grid.id = id;
  grid.height = rows.size();
  grid.width = std::string(rows[0]).size();
  for (const char* row : rows) {
    for (const char* ch = row; *ch != '\0'; ++ch) {
      CellClass c = CellClass::Terrain;
      switch (*ch) {
        case '.': c = CellClass::Road; break;
        case 's': c = CellClass::Sidewalk; break;
        case '#': c = CellClass::Obstacle; break;
        default: c = CellClass::Terrain; break;
      }
      grid.cells.push_back(static_cast<std::uint8_t>(c));
    }
  }
  grid.validate();
  return grid;
}

}  // namespace

SceneGrid build_scene(const std::string& preset_id) {
  if (preset_id == "layout1") return from_ascii(preset_id, kLayout1);
  if (preset_id == "layout2") return from_ascii(preset_id, kLayout2);
  if (preset_id == "layout3") return from_ascii(preset_id, kLayout3);
  if (preset_id == "layout4") return from_ascii(preset_id, kLayout4);
  throw WorldError("unknown scene preset '" + preset_id + "'");
}

// ---- planning -----------------------------------------------------------

PlannedPath plan_path(const SceneGrid& grid, const ClassCosts& costs, Cell start, Cell goal) {
  if (!grid.passable(start) || !grid.passable(goal)) {
    throw NoPathError("plan_path: start or goal is an obstacle or out of bounds");
  }
  const auto flat = [&grid](Cell c) {
    return static_cast<std::size_t>(c.row) * grid.width + static_cast<std::size_t>(c.col);
  };
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t n = grid.height * grid.width;
  std::vector<double> dist(n, kInf);
  std::vector<Cell> pred(n, Cell{-1, -1});
  std::vector<bool> done(n, false);

  using Entry = std::tuple<double, int, int>;  // (cost, row, col), smallest first
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[flat(start)] = 0.0;
  open.emplace(0.0, start.row, start.col);

  while (!open.empty()) {
    const auto [d, r, c] = open.top();
    open.pop();
    const Cell cur{r, c};
    if (done[flat(cur)]) continue;
    done[flat(cur)] = true;
    if (cur == goal) break;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const Cell next{r + dr, c + dc};
        if (!grid.passable(next) || done[flat(next)]) continue;
        const double step = (dr != 0 && dc != 0) ? std::numbers::sqrt2 : 1.0;
        const double cand = d + costs.of(grid.at(next)) * step;
        double& best = dist[flat(next)];
        // Sums of the same terms in different orders may differ in the last ulp.
        const double tie = std::isfinite(best) ? 1e-12 * std::max(1.0, best) : 0.0;
        if (cand < best - tie) {
          best = cand;
          pred[flat(next)] = cur;
          open.emplace(cand, next.row, next.col);
        } else if (std::abs(cand - best) <= tie && cur < pred[flat(next)]) {
          pred[flat(next)] = cur;
        }
      }
    }
  }
  if (!done[flat(goal)]) throw NoPathError("plan_path: goal not reachable from start");

  PlannedPath path;
  path.cost = dist[flat(goal)];
  for (Cell c = goal;; c = pred[flat(c)]) {
    path.cells.push_back(c);
    if (c == start) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

// ---- trajectories -------------------------------------------------------

double draw_speed(const StyleParams& style, SplitMix64& rng) {
  return std::clamp(rng.gaussian(style.v_pref_mean, style.v_pref_std), kMinSpeed, kMaxSpeed);
}

std::vector<Point> walk_path(const std::vector<Cell>& path, double speed,
                             std::size_t total_steps) {
  std::vector<Point> nodes;
  nodes.reserve(path.size());
  for (Cell c : path) nodes.push_back(cell_center(c));

  std::vector<Point> out;
  out.reserve(total_steps);
  std::size_t segment = 0;
  double consumed = 0.0;  // arc length at the start of `segment`
  for (std::size_t t = 0; t < total_steps; ++t) {
    const double target = speed * static_cast<double>(t);
    Point p = nodes.back();
    while (segment + 1 < nodes.size()) {
      const Point a = nodes[segment];
      const Point b = nodes[segment + 1];
      const double len = std::hypot(b.x - a.x, b.y - a.y);
      if (target <= consumed + len) {
        const double f = (target - consumed) / len;
        p = {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
        break;
      }
      consumed += len;
      ++segment;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<Point> sample_trajectory(const SceneGrid& grid, const StyleParams& style,
                                     Cell start, Cell goal, std::size_t total_steps,
                                     SplitMix64& rng) {
  const PlannedPath path = plan_path(grid, style.class_costs, start, goal);
  const double speed = draw_speed(style, rng);
  std::vector<Point> points = walk_path(path.cells, speed, total_steps);
  const double max_x = static_cast<double>(grid.width);
  const double max_y = static_cast<double>(grid.height);
  for (Point& p : points) {
    if (style.jitter_sigma > 0.0) {
      p.x += rng.gaussian(0.0, style.jitter_sigma);
      p.y += rng.gaussian(0.0, style.jitter_sigma);
    }
    p.x = std::clamp(p.x, 0.0, max_x);
    p.y = std::clamp(p.y, 0.0, max_y);
  }
  return points;
}

Dataset generate_dataset(const std::vector<SceneGrid>& scenes, const StyleParams& style,
                         std::size_t n, std::uint64_t seed, std::size_t t_obs,
                         std::size_t t_pred, const std::string& style_tag) {
  if (n == 0) throw WorldError("generate_dataset: n must be at least 1");
  if (scenes.empty()) throw WorldError("generate_dataset: no scenes");
  style.validate();

  Dataset data;
  data.style_tag = style_tag;
  std::vector<std::vector<Cell>> free;
  for (const auto& scene : scenes) {
    scene.validate();
    auto cells = scene.free_cells();
    if (cells.size() < 2) throw WorldError("scene '" + scene.id + "' has too few free cells");
    free.push_back(std::move(cells));
    data.scenes.emplace(scene.id, scene);
  }

  constexpr std::size_t kMaxAttempts = 10000;
  SplitMix64 rng(derive_seed(seed, style.seed));
  data.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t s = rng.uniform_index(scenes.size());
    const auto& cells = free[s];
    std::size_t attempt = 0;
    for (;; ++attempt) {
      if (attempt == kMaxAttempts) {
        throw WorldError("scene '" + scenes[s].id + "' has no start/goal pair " +
                         "at least 6 cells apart");
      }
      const Cell start = cells[rng.uniform_index(cells.size())];
      const Cell goal = cells[rng.uniform_index(cells.size())];
      if (std::hypot(start.row - goal.row, start.col - goal.col) < kMinStartGoalSeparation) {
        continue;
      }
      std::vector<Point> points;
      try {
        points = sample_trajectory(scenes[s], style, start, goal, t_obs + t_pred, rng);
      } catch (const NoPathError&) {
        continue;
      }
      Sample sample;
      sample.scene_id = scenes[s].id;
      sample.past.assign(points.begin(), points.begin() + static_cast<long>(t_obs));
      sample.future.assign(points.begin() + static_cast<long>(t_obs), points.end());
      data.samples.push_back(std::move(sample));
      break;
    }
  }
  return data;
}

// ---- presets --------------------------------------------------------------

ScenarioPreset scenario_preset(const std::string& name) {
  ScenarioPreset preset;
  preset.name = name;
  const std::vector<std::string> known{"layout1", "layout2", "layout3"};
  StyleParams base;
  if (name == "agent_shift") {
    preset.source = {known, base, "slow"};
    StyleParams fast = base;
    fast.v_pref_mean = 2.0;
    preset.target = {known, fast, "fast"};
  } else if (name == "scene_shift") {
    preset.source = {known, base, "seen_layouts"};
    preset.target = {{"layout4"}, base, "unseen_layout"};
  } else if (name == "class_shift") {
    StyleParams walker = base;
    walker.class_costs = {3.0, 1.0, 2.0};
    StyleParams rider = base;
    rider.class_costs = {1.0, 3.0, 4.0};
    rider.v_pref_mean = 2.0 * walker.v_pref_mean;
    preset.source = {known, walker, "sidewalk_preferring"};
    preset.target = {known, rider, "road_preferring"};
  } else {
    throw WorldError("unknown scenario '" + name +
                     "' (expected agent_shift, scene_shift or class_shift)");
  }
  return preset;
}

}  // namespace mosa::world
