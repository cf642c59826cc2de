// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/world.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "mosa/rng.hpp"

namespace mosa::world {
namespace {

SceneGrid grid_from(const std::vector<std::string>& rows) {
  SceneGrid g;
  g.id = "test";
  g.height = rows.size();
  g.width = rows[0].size();
  for (const auto& row : rows) {
    for (char ch : row) {
      g.cells.push_back(ch == '.' ? 0 : ch == 's' ? 1 : ch == '#' ? 2 : 3);
    }
  }
  return g;
}

std::set<Cell> cells_of(const SceneGrid& g, CellClass c) {
  std::set<Cell> out;
  for (int r = 0; r < static_cast<int>(g.height); ++r) {
    for (int col = 0; col < static_cast<int>(g.width); ++col) {
      if (g.at({r, col}) == c) out.insert({r, col});
    }
  }
  return out;
}

double step_cost(const SceneGrid& g, const ClassCosts& costs, Cell from, Cell to) {
  const bool diagonal = from.row != to.row && from.col != to.col;
  return costs.of(g.at(to)) * (diagonal ? std::numbers::sqrt2 : 1.0);
}

// Exhaustive minimum over all simple 8-connected paths, pruned by the best
// cost found so far (all step costs are positive).
double brute_force_cost(const SceneGrid& g, const ClassCosts& costs, Cell start, Cell goal) {
  double best = std::numeric_limits<double>::infinity();
  std::set<Cell> visited{start};
  std::function<void(Cell, double)> dfs = [&](Cell at, double cost) {
    if (cost >= best) return;
    if (at == goal) {
      best = cost;
      return;
    }
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        const Cell next{at.row + dr, at.col + dc};
        if ((dr == 0 && dc == 0) || !g.passable(next) || visited.contains(next)) continue;
        visited.insert(next);
        dfs(next, cost + step_cost(g, costs, at, next));
        visited.erase(next);
      }
    }
  };
  dfs(start, 0.0);
  return best;
}

TEST(Layouts, Layout1RoadTouchesAllBorders) {
  const SceneGrid g = build_scene("layout1");
  const auto roads = cells_of(g, CellClass::Road);
  // flood fill from one road cell
  std::set<Cell> seen{*roads.begin()};
  std::vector<Cell> stack{*roads.begin()};
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    for (const Cell n : {Cell{c.row - 1, c.col}, Cell{c.row + 1, c.col}, Cell{c.row, c.col - 1},
                         Cell{c.row, c.col + 1}}) {
      if (roads.contains(n) && seen.insert(n).second) stack.push_back(n);
    }
  }
  EXPECT_EQ(seen.size(), roads.size());
  bool top = false, bottom = false, left = false, right = false;
  for (const Cell c : seen) {
    top |= c.row == 0;
    bottom |= c.row == 15;
    left |= c.col == 0;
    right |= c.col == 15;
  }
  EXPECT_TRUE(top && bottom && left && right);
}

TEST(Layouts, Layout4RoadsDiffer) {
  const auto a = cells_of(build_scene("layout1"), CellClass::Road);
  const auto b = cells_of(build_scene("layout4"), CellClass::Road);
  std::size_t moved = 0;
  for (const Cell c : a) moved += b.contains(c) ? 0 : 1;
  EXPECT_GE(static_cast<double>(moved), 0.25 * static_cast<double>(a.size()));
}

TEST(Layouts, AllClassesPresentAndValid) {
  for (const char* id : {"layout1", "layout2", "layout3", "layout4"}) {
    const SceneGrid g = build_scene(id);
    EXPECT_EQ(g.height, 16u);
    EXPECT_EQ(g.width, 16u);
    EXPECT_NO_THROW(g.validate());
    for (CellClass c : {CellClass::Road, CellClass::Sidewalk, CellClass::Obstacle,
                        CellClass::Terrain}) {
      EXPECT_FALSE(cells_of(g, c).empty()) << id;
    }
  }
  EXPECT_THROW(build_scene("layout5"), WorldError);
}

TEST(SceneGrid, ValidateRejectsBadGrids) {
  EXPECT_THROW(grid_from({"##", "#."}).validate(), WorldError);  // one free cell
  SceneGrid g = grid_from({"..", ".."});
  g.cells[0] = 7;
  EXPECT_THROW(g.validate(), WorldError);
  g = grid_from({"..", ".."});
  g.cells.pop_back();
  EXPECT_THROW(g.validate(), WorldError);
}

TEST(PlanPath, DiagonalOnUniformGrid) {
  const SceneGrid g = grid_from({"...", "...", "..."});
  const PlannedPath p = plan_path(g, {}, {0, 0}, {2, 2});
  EXPECT_DOUBLE_EQ(p.cost, 2 * std::numbers::sqrt2);
  EXPECT_EQ(p.cells, (std::vector<Cell>{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_DOUBLE_EQ(p.cost, brute_force_cost(g, {}, {0, 0}, {2, 2}));
}

TEST(PlanPath, GoalEqualsStart) {
  const SceneGrid g = grid_from({"...", "...", "..."});
  const PlannedPath p = plan_path(g, {}, {1, 1}, {1, 1});
  EXPECT_EQ(p.cells, (std::vector<Cell>{{1, 1}}));
  EXPECT_EQ(p.cost, 0.0);
}

TEST(PlanPath, FollowsCorridor) {
  const SceneGrid g = grid_from({"####", "....", "####", "####"});
  const PlannedPath p = plan_path(g, {}, {1, 0}, {1, 3});
  EXPECT_EQ(p.cells, (std::vector<Cell>{{1, 0}, {1, 1}, {1, 2}, {1, 3}}));
  EXPECT_DOUBLE_EQ(p.cost, brute_force_cost(g, {}, {1, 0}, {1, 3}));
}

TEST(PlanPath, TieBrokenByLexicographicPredecessor) {
  // (0,0)->(0,1)->(1,2) and (0,0)->(1,1)->(1,2) both cost 1 + sqrt2
  const SceneGrid g = grid_from({"...", "...", "..."});
  const PlannedPath p = plan_path(g, {}, {0, 0}, {1, 2});
  EXPECT_EQ(p.cells, (std::vector<Cell>{{0, 0}, {0, 1}, {1, 2}}));
}

TEST(PlanPath, PrefersCheapClass) {
  ClassCosts costs;
  costs.terrain = 5.0;
  const SceneGrid g = grid_from({".....", "ttttt", "ttttt"});
  const PlannedPath p = plan_path(g, costs, {1, 0}, {1, 4});
  for (std::size_t i = 1; i + 1 < p.cells.size(); ++i) EXPECT_EQ(p.cells[i].row, 0);
}

TEST(PlanPath, Unreachable) {
  const SceneGrid g = grid_from({"..#..", "..#..", "..#.."});
  EXPECT_THROW(plan_path(g, {}, {0, 0}, {0, 4}), NoPathError);
  EXPECT_THROW(plan_path(g, {}, {0, 0}, {0, 2}), NoPathError);
}

TEST(PlanPath, MatchesBruteForceOnSmallGrids) {
  SplitMix64 rng(1);
  const char classes[] = {'.', 's', '#', 't'};
  int compared = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t h = 2 + rng.uniform_index(3);
    const std::size_t w = 2 + rng.uniform_index(3);
    std::vector<std::string> rows(h, std::string(w, '.'));
    for (auto& row : rows) {
      for (auto& ch : row) ch = classes[rng.uniform_index(4)];
    }
    const SceneGrid g = grid_from(rows);
    const auto free = g.free_cells();
    if (free.size() < 2) continue;
    ClassCosts costs{0.5 + 3 * rng.uniform(), 0.5 + 3 * rng.uniform(), 0.5 + 3 * rng.uniform()};
    const Cell start = free[rng.uniform_index(free.size())];
    const Cell goal = free[rng.uniform_index(free.size())];
    const double expected = brute_force_cost(g, costs, start, goal);
    if (std::isinf(expected)) {
      EXPECT_THROW(plan_path(g, costs, start, goal), NoPathError);
      continue;
    }
    const PlannedPath p = plan_path(g, costs, start, goal);
    EXPECT_NEAR(p.cost, expected, 1e-12);
    ASSERT_EQ(p.cells.front(), start);
    ASSERT_EQ(p.cells.back(), goal);
    double walked = 0.0;
    for (std::size_t i = 1; i < p.cells.size(); ++i) {
      ASSERT_LE(std::abs(p.cells[i].row - p.cells[i - 1].row), 1);
      ASSERT_LE(std::abs(p.cells[i].col - p.cells[i - 1].col), 1);
      walked += step_cost(g, costs, p.cells[i - 1], p.cells[i]);
    }
    EXPECT_NEAR(walked, p.cost, 1e-12);
    ++compared;
  }
  EXPECT_GT(compared, 150);
}

std::vector<Cell> straight(int length) {
  std::vector<Cell> path;
  for (int c = 0; c < length; ++c) path.push_back({0, c});
  return path;
}

TEST(Walk, UnitAndDoubleSpeed) {
  for (double v : {1.0, 2.0}) {
    const auto pts = walk_path(straight(10), v, 5);
    ASSERT_EQ(pts.size(), 5u);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      EXPECT_DOUBLE_EQ(pts[i].x, 0.5 + v * static_cast<double>(i));
      EXPECT_EQ(pts[i].y, 0.5);
    }
  }
}

TEST(Walk, StaysAtGoalWhenExhausted) {
  const auto pts = walk_path(straight(3), 1.5, 6);
  EXPECT_DOUBLE_EQ(pts[1].x, 2.0);
  for (std::size_t i = 2; i < pts.size(); ++i) EXPECT_EQ(pts[i], (Point{2.5, 0.5}));
}

TEST(Walk, InterpolatesAroundCorners) {
  // (0,0) -> (0,1) -> (1,1): the second point sits half way down the second leg
  const auto pts = walk_path({{0, 0}, {0, 1}, {1, 1}}, 1.5, 2);
  EXPECT_DOUBLE_EQ(pts[1].x, 1.5);
  EXPECT_DOUBLE_EQ(pts[1].y, 1.0);
}

TEST(SampleTrajectory, NoiseFreeLiesOnPath) {
  const SceneGrid g = grid_from({".........."});
  StyleParams style;
  style.v_pref_std = 0.0;
  style.jitter_sigma = 0.0;
  SplitMix64 rng(2);
  const auto pts = sample_trajectory(g, style, {0, 0}, {0, 9}, 8, rng);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_DOUBLE_EQ(pts[i].x, 0.5 + static_cast<double>(i));
    EXPECT_EQ(pts[i].y, 0.5);
  }
}

TEST(SampleTrajectory, PointsStayInBounds) {
  const SceneGrid g = build_scene("layout1");
  StyleParams style;
  style.jitter_sigma = 2.0;
  SplitMix64 rng(3);
  const auto pts = sample_trajectory(g, style, {0, 7}, {15, 8}, 20, rng);
  for (const Point& p : pts) {
    EXPECT_GE(p.x, 0.0);
    EXPECT_LE(p.x, 16.0);
    EXPECT_GE(p.y, 0.0);
    EXPECT_LE(p.y, 16.0);
  }
}

// Expected values of clamp(N(mean, std), 0.2, 4.0), numerically integrated
// with scipy (tests/oracles/world_oracle.txt).
TEST(SampleTrajectory, MeanStepMatchesClampedGaussian) {
  const SceneGrid g = grid_from({"................"});
  struct Case {
    double mean, stddev, expected;
  };
  for (const Case c : {Case{0.5, 0.5, 0.5843363661207898}, Case{1.0, 0.1, 1.0},
                       Case{3.5, 1.0, 3.3023307118678815}}) {
    StyleParams style;
    style.v_pref_mean = c.mean;
    style.v_pref_std = c.stddev;
    style.jitter_sigma = 0.0;
    SplitMix64 rng(4);
    double total = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const auto pts = sample_trajectory(g, style, {0, 0}, {0, 15}, 2, rng);
      total += pts[1].x - pts[0].x;
    }
    EXPECT_NEAR(total / 1000.0, c.expected, 0.05 * c.expected) << c.mean;
  }
}

TEST(SampleTrajectory, SpeedIsClamped) {
  StyleParams style;
  style.v_pref_mean = 10.0;
  SplitMix64 rng(5);
  EXPECT_EQ(draw_speed(style, rng), kMaxSpeed);
  style.v_pref_mean = -3.0;
  EXPECT_THROW(style.validate(), WorldError);
  style.v_pref_mean = 0.01;
  EXPECT_EQ(draw_speed(style, rng), kMinSpeed);
}

std::vector<SceneGrid> source_scenes() {
  return {build_scene("layout1"), build_scene("layout2"), build_scene("layout3")};
}

TEST(GenerateDataset, CountAndInvariants) {
  const auto scenes = source_scenes();
  const Dataset d = generate_dataset(scenes, {}, 100, 1, 8, 12, "slow");
  ASSERT_EQ(d.samples.size(), 100u);
  EXPECT_EQ(d.style_tag, "slow");
  for (const Sample& s : d.samples) {
    ASSERT_TRUE(d.scenes.contains(s.scene_id));
    ASSERT_EQ(s.past.size(), 8u);
    ASSERT_EQ(s.future.size(), 12u);
    for (const auto* part : {&s.past, &s.future}) {
      for (const Point& p : *part) {
        EXPECT_TRUE(p.x >= 0 && p.x <= 16 && p.y >= 0 && p.y <= 16);
      }
    }
  }
  std::set<std::string> used;
  for (const Sample& s : d.samples) used.insert(s.scene_id);
  EXPECT_EQ(used.size(), 3u);
}

TEST(GenerateDataset, StartGoalSeparation) {
  // noise-free, so the first and last points are cell centres of start and goal
  // whenever the agent reaches its goal
  StyleParams style;
  style.jitter_sigma = 0.0;
  style.v_pref_mean = 4.0;
  style.v_pref_std = 0.0;
  const Dataset d = generate_dataset(source_scenes(), style, 200, 2, 8, 12);
  for (const Sample& s : d.samples) {
    const Point a = s.past.front();
    const Point b = s.future.back();
    EXPECT_GE(std::hypot(a.x - b.x, a.y - b.y), kMinStartGoalSeparation - 1e-12);
  }
}

TEST(GenerateDataset, Deterministic) {
  const auto scenes = source_scenes();
  const Dataset a = generate_dataset(scenes, {}, 50, 3, 8, 12);
  const Dataset b = generate_dataset(scenes, {}, 50, 3, 8, 12);
  EXPECT_EQ(a.samples, b.samples);
  const Dataset c = generate_dataset(scenes, {}, 50, 4, 8, 12);
  EXPECT_NE(a.samples.front(), c.samples.front());
}

TEST(GenerateDataset, RejectsDegenerateInput) {
  EXPECT_THROW(generate_dataset(source_scenes(), {}, 0, 1, 8, 12), WorldError);
  EXPECT_THROW(generate_dataset({}, {}, 5, 1, 8, 12), WorldError);
  // every free pair is closer than the minimum separation
  const SceneGrid small = grid_from({"....", "...."});
  EXPECT_THROW(generate_dataset({small}, {}, 1, 1, 8, 12), WorldError);
}

double mean_first_step(const Dataset& d) {
  double total = 0.0;
  for (const Sample& s : d.samples) {
    total += std::hypot(s.past[1].x - s.past[0].x, s.past[1].y - s.past[0].y);
  }
  return total / static_cast<double>(d.samples.size());
}

std::vector<SceneGrid> scenes_for(const DatasetSpec& spec) {
  std::vector<SceneGrid> out;
  for (const auto& id : spec.scene_ids) out.push_back(build_scene(id));
  return out;
}

TEST(Presets, AgentShiftDoublesSpeed) {
  const ScenarioPreset p = scenario_preset("agent_shift");
  EXPECT_EQ(p.source.scene_ids, p.target.scene_ids);
  EXPECT_EQ(p.source.style.class_costs, p.target.style.class_costs);
  const Dataset src = generate_dataset(scenes_for(p.source), p.source.style, 1000, 5, 8, 12);
  const Dataset tgt = generate_dataset(scenes_for(p.target), p.target.style, 1000, 5, 8, 12);
  const double ratio = mean_first_step(tgt) / mean_first_step(src);
  EXPECT_NEAR(ratio, 2.0, 0.2);
}

TEST(Presets, SceneShiftKeepsStyle) {
  const ScenarioPreset p = scenario_preset("scene_shift");
  EXPECT_EQ(p.source.style, p.target.style);
  EXPECT_EQ(p.target.scene_ids, std::vector<std::string>{"layout4"});
  EXPECT_EQ(p.source.scene_ids.size(), 3u);
}

double road_fraction(const Dataset& d) {
  std::size_t on_road = 0, total = 0;
  for (const Sample& s : d.samples) {
    const SceneGrid& g = d.scenes.at(s.scene_id);
    for (const auto* part : {&s.past, &s.future}) {
      for (const Point& p : *part) {
        on_road += g.class_at(p) == CellClass::Road ? 1 : 0;
        ++total;
      }
    }
  }
  return static_cast<double>(on_road) / static_cast<double>(total);
}

TEST(Presets, ClassShiftMovesAgentsOntoRoads) {
  const ScenarioPreset p = scenario_preset("class_shift");
  EXPECT_EQ(p.source.style.class_costs, (ClassCosts{3.0, 1.0, 2.0}));
  EXPECT_EQ(p.target.style.class_costs, (ClassCosts{1.0, 3.0, 4.0}));
  EXPECT_EQ(p.target.style.v_pref_mean, 2.0 * p.source.style.v_pref_mean);
  const Dataset src = generate_dataset(scenes_for(p.source), p.source.style, 500, 6, 8, 12);
  const Dataset tgt = generate_dataset(scenes_for(p.target), p.target.style, 500, 6, 8, 12);
  EXPECT_GT(road_fraction(tgt), road_fraction(src));
}

TEST(Presets, UnknownNameRejected) {
  try {
    scenario_preset("weather_shift");
    FAIL() << "expected WorldError";
  } catch (const WorldError& e) {
    EXPECT_NE(std::string(e.what()).find("weather_shift"), std::string::npos);
  }
}

}  // namespace
}  // namespace mosa::world
