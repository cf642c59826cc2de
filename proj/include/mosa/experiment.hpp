// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosa/config.hpp"
#include "mosa/metrics.hpp"
#include "mosa/serialize.hpp"
#include "mosa/train.hpp"
#include "mosa/world.hpp"

namespace mosa::bench {

namespace fs = std::filesystem;

/// Runtime failure inside one adaptation cell; maps to exit code 1.
class CellError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dataset file names under <out>/data.
struct DataFiles {
  static constexpr const char* kScenes = "scenes.json";
  static constexpr const char* kSplits[] = {"source_train.json", "source_val.json",
                                            "source_test.json",  "target_adapt.json",
                                            "target_val.json",   "target_test.json"};
};

struct LoadedData {
  world::Dataset source_train, source_val, source_test;
  world::Dataset target_adapt, target_val, target_test;
};

/// Generates every split for the scenario in memory.
LoadedData generate_data(const ExperimentConfig& config);

/// Writes scenes.json and the six split files into <out>/data. Returns the
/// paths written.
std::vector<fs::path> run_generate(const ExperimentConfig& config, const fs::path& out);

LoadedData load_data(const fs::path& out);

/// Pretrains on the source splits; writes <out>/pretrained.json and
/// <out>/pretrain_curve.csv.
train::TrainResult run_pretrain(const ExperimentConfig& config, const fs::path& out);

/// One experiment cell.
struct Cell {
  adapt::Method method;
  adapt::ModularMask mask;
  std::size_t rank;  // 0 for methods without a rank
  std::size_t n_target;
  std::uint64_t seed;

  std::string name() const;
};

/// Cross product of the config lists. Rank only varies for MOSA; the mask
/// only for MOSA and PA.
std::vector<Cell> enumerate_cells(const ExperimentConfig& config);

struct CellResult {
  Cell cell;
  metrics::EvalReport report;
  std::size_t trainable_params = 0;
  std::size_t epochs_run = 0;
  net::Model model;
};

/// Subsamples the adapt set, adapts, and evaluates on the target test set.
CellResult run_cell(const ExperimentConfig& config, const net::Model& checkpoint,
                    const LoadedData& data, const Cell& cell);

std::vector<std::string> results_header();
std::vector<std::string> results_row(const std::string& scenario, const CellResult& r);

/// Runs every cell (up to `jobs` at once); writes adapted checkpoints under
/// <out>/adapted and the rows to <out>/results.csv. Row order follows
/// completion order.
std::vector<CellResult> run_adapt(const ExperimentConfig& config, const fs::path& out,
                                  std::size_t jobs);

/// Evaluation of a checkpoint on a dataset file. `scenes` defaults to the
/// scenes.json beside the dataset.
metrics::EvalReport run_eval(const fs::path& checkpoint, const fs::path& dataset,
                             const fs::path& scenes = {});

std::vector<std::string> eval_header();
std::vector<std::string> eval_row(const fs::path& checkpoint, const fs::path& dataset,
                                  const metrics::EvalReport& report);

/// Mean and sample standard deviation of each metric per
/// (scenario, method, mask, rank, n_target) group.
io::CsvTable aggregate_results(const io::CsvTable& results);

}  // namespace mosa::bench
