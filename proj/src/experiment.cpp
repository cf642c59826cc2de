// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <tuple>

#include "mosa/rng.hpp"

namespace mosa::bench {

namespace {

std::vector<world::SceneGrid> scenes_for(const std::vector<std::string>& ids) {
  std::vector<world::SceneGrid> out;
  for (const auto& id : ids) out.push_back(world::build_scene(id));
  return out;
}

}  // namespace

LoadedData generate_data(const ExperimentConfig& config) {
  const auto preset = world::scenario_preset(config.scenario);
  const auto source_scenes = scenes_for(preset.source.scene_ids);
  const auto target_scenes = scenes_for(preset.target.scene_ids);
  const auto& m = config.model;
  const auto& d = config.data;
  const auto make = [&](const world::DatasetSpec& spec, const std::vector<world::SceneGrid>& scenes,
                        std::size_t n, std::uint64_t stream) {
    return world::generate_dataset(scenes, spec.style, n, derive_seed(d.seed, stream), m.t_obs,
                                   m.t_pred, spec.style_tag);
  };
  LoadedData data;
  data.source_train = make(preset.source, source_scenes, d.source_train, 0);
  data.source_val = make(preset.source, source_scenes, d.source_val, 1);
  data.source_test = make(preset.source, source_scenes, d.source_test, 2);
  data.target_adapt = make(preset.target, target_scenes, d.target_adapt, 3);
  data.target_val = make(preset.target, target_scenes, d.target_val, 4);
  data.target_test = make(preset.target, target_scenes, d.target_test, 5);
  return data;
}

std::vector<fs::path> run_generate(const ExperimentConfig& config, const fs::path& out) {
  const LoadedData data = generate_data(config);
  const fs::path dir = out / "data";
  std::map<std::string, world::SceneGrid> all_scenes;
  for (const auto* split : {&data.source_train, &data.target_adapt}) {
    all_scenes.insert(split->scenes.begin(), split->scenes.end());
  }
  std::vector<fs::path> written;
  written.push_back(dir / DataFiles::kScenes);
  io::write_file(written.back(), io::dump_json(io::scenes_to_json(all_scenes)));
  const world::Dataset* splits[] = {&data.source_train, &data.source_val, &data.source_test,
                                    &data.target_adapt, &data.target_val, &data.target_test};
  for (std::size_t i = 0; i < std::size(splits); ++i) {
    written.push_back(dir / DataFiles::kSplits[i]);
    io::write_file(written.back(), io::dump_json(io::dataset_to_json(*splits[i])));
  }
  return written;
}

LoadedData load_data(const fs::path& out) {
  const fs::path dir = out / "data";
  const auto scenes = io::scenes_from_json(io::read_json(dir / DataFiles::kScenes));
  const auto load = [&](std::size_t i) {
    return io::dataset_from_json(io::read_json(dir / DataFiles::kSplits[i]), scenes);
  };
  return {load(0), load(1), load(2), load(3), load(4), load(5)};
}

train::TrainResult run_pretrain(const ExperimentConfig& config, const fs::path& out) {
  const LoadedData data = load_data(out);
  train::TrainConfig tc;
  tc.lr = config.pretrain.lr;
  tc.batch_size = config.pretrain.batch_size;
  tc.max_epochs = config.pretrain.max_epochs;
  tc.patience = config.pretrain.patience;
  tc.seed = config.pretrain.seed;
  tc.method = adapt::Method::FT;
  auto result =
      train::pretrain(net::init_model(config.model), data.source_train, data.source_val, tc);

  io::save_checkpoint(out / "pretrained.json", result.model);
  io::CsvTable curve;
  curve.header = {"epoch", "train_loss", "val_ade", "val_fde"};
  for (const auto& rec : result.history) {
    curve.rows.push_back({std::to_string(rec.epoch), io::format_double(rec.train_loss),
                          io::format_double(rec.val_ade), io::format_double(rec.val_fde)});
  }
  io::write_file(out / "pretrain_curve.csv", io::format_csv(curve));
  return result;
}

std::string Cell::name() const {
  return adapt::to_string(method) + "_" + adapt::mask_to_string(mask) + "_r" +
         std::to_string(rank) + "_n" + std::to_string(n_target) + "_s" + std::to_string(seed);
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (adapt::Method method : config.methods) {
    const bool uses_mask = method == adapt::Method::MOSA || method == adapt::Method::PA;
    const bool uses_rank = method == adapt::Method::MOSA;
    const std::vector<adapt::ModularMask> masks =
        uses_mask ? config.masks : std::vector<adapt::ModularMask>{{}};
    const std::vector<std::size_t> ranks = uses_rank ? config.ranks : std::vector<std::size_t>{0};
    for (const auto& mask : masks) {
      for (std::size_t rank : ranks) {
        for (std::size_t n : config.n_target) {
          for (std::uint64_t seed : config.seeds) cells.push_back({method, mask, rank, n, seed});
        }
      }
    }
  }
  return cells;
}

CellResult run_cell(const ExperimentConfig& config, const net::Model& checkpoint,
                    const LoadedData& data, const Cell& cell) {
  const world::Dataset target =
      train::subsample(data.target_adapt, cell.n_target, derive_seed(cell.seed, 0x5ab5));
  train::TrainConfig tc;
  tc.method = cell.method;
  tc.mask = cell.mask;
  tc.rank = cell.rank == 0 ? 1 : cell.rank;
  tc.lr = config.adapt.lr.at(cell.method);
  tc.batch_size = config.adapt.batch_size;
  tc.max_epochs = config.adapt.max_epochs;
  tc.patience = config.adapt.patience;
  tc.init_std = config.adapt.init_std;
  tc.seed = cell.seed;
  auto result = train::adapt(checkpoint, target, data.target_val, tc);

  CellResult out;
  out.cell = cell;
  out.report = metrics::evaluate(result.model, data.target_test, result.model.config.k_modes);
  out.trainable_params = result.model.count_trainable();
  out.epochs_run = result.epochs_run;
  out.model = std::move(result.model);
  return out;
}

std::vector<std::string> results_header() {
  return {"scenario", "method",   "mask",     "rank",     "n_target",         "seed",
          "ade",      "fde",      "topk_ade", "topk_fde", "trainable_params", "epochs_run"};
}

std::vector<std::string> results_row(const std::string& scenario, const CellResult& r) {
  return {scenario,
          adapt::to_string(r.cell.method),
          adapt::mask_to_string(r.cell.mask),
          std::to_string(r.cell.rank),
          std::to_string(r.cell.n_target),
          std::to_string(r.cell.seed),
          io::format_double(r.report.ade),
          io::format_double(r.report.fde),
          io::format_double(r.report.topk_ade),
          io::format_double(r.report.topk_fde),
          std::to_string(r.trainable_params),
          std::to_string(r.epochs_run)};
}

std::vector<CellResult> run_adapt(const ExperimentConfig& config, const fs::path& out,
                                  std::size_t jobs) {
  const LoadedData data = load_data(out);
  const net::Model checkpoint = io::load_checkpoint(out / "pretrained.json");
  const std::vector<Cell> cells = enumerate_cells(config);

  std::vector<CellResult> results;
  io::CsvTable table;
  table.header = results_header();
  std::mutex appender;
  std::string failure;
  const auto count = static_cast<std::int64_t>(cells.size());

#pragma omp parallel for schedule(dynamic) num_threads(static_cast<int>(std::max<std::size_t>(jobs, 1)))
  for (std::int64_t i = 0; i < count; ++i) {
    const Cell& cell = cells[static_cast<std::size_t>(i)];
    {
      std::lock_guard lock(appender);
      if (!failure.empty()) continue;
    }
    try {
      CellResult r = run_cell(config, checkpoint, data, cell);
      io::save_checkpoint(out / "adapted" / (cell.name() + ".json"), r.model);
      r.model = net::Model{};  // checkpoints can be large; keep only metrics
      std::lock_guard lock(appender);
      table.rows.push_back(results_row(config.scenario, r));
      results.push_back(std::move(r));
    } catch (const std::exception& e) {
      std::lock_guard lock(appender);
      if (failure.empty()) failure = "cell " + cell.name() + " failed: " + e.what();
    }
  }
  if (!failure.empty()) throw CellError(failure);
  io::write_file(out / "results.csv", io::format_csv(table));
  return results;
}

metrics::EvalReport run_eval(const fs::path& checkpoint, const fs::path& dataset,
                             const fs::path& scenes) {
  const fs::path scenes_path =
      scenes.empty() ? dataset.parent_path() / DataFiles::kScenes : scenes;
  const auto grids = io::scenes_from_json(io::read_json(scenes_path));
  const auto data = io::dataset_from_json(io::read_json(dataset), grids);
  const net::Model model = io::load_checkpoint(checkpoint);
  return metrics::evaluate(model, data, model.config.k_modes);
}

std::vector<std::string> eval_header() {
  return {"checkpoint", "dataset", "n_samples", "k", "ade", "fde", "topk_ade", "topk_fde"};
}

std::vector<std::string> eval_row(const fs::path& checkpoint, const fs::path& dataset,
                                  const metrics::EvalReport& r) {
  return {checkpoint.filename().string(), dataset.filename().string(),
          std::to_string(r.n_samples),    std::to_string(r.k),
          io::format_double(r.ade),       io::format_double(r.fde),
          io::format_double(r.topk_ade),  io::format_double(r.topk_fde)};
}

io::CsvTable aggregate_results(const io::CsvTable& results) {
  const char* metric_names[] = {"ade", "fde", "topk_ade", "topk_fde", "trainable_params"};
  const std::size_t c_scenario = results.column("scenario");
  const std::size_t c_method = results.column("method");
  const std::size_t c_mask = results.column("mask");
  const std::size_t c_rank = results.column("rank");
  const std::size_t c_n = results.column("n_target");
  std::vector<std::size_t> metric_cols;
  for (const char* m : metric_names) metric_cols.push_back(results.column(m));

  const auto parse_number = [](const std::string& field, const char* what) {
    try {
      std::size_t used = 0;
      const double v = std::stod(field, &used);
      if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
      return v;
    } catch (const std::exception&) {
      throw io::FormatError(std::string("results column '") + what + "' has bad value '" +
                            field + "'");
    }
  };

  using Key = std::tuple<std::string, std::string, std::string, long, long>;
  std::map<Key, std::pair<std::vector<std::string>, std::vector<std::vector<double>>>> groups;
  for (const auto& row : results.rows) {
    const Key key{row[c_scenario], row[c_method], row[c_mask],
                  static_cast<long>(parse_number(row[c_rank], "rank")),
                  static_cast<long>(parse_number(row[c_n], "n_target"))};
    auto& group = groups[key];
    group.first = {row[c_scenario], row[c_method], row[c_mask], row[c_rank], row[c_n]};
    std::vector<double> values;
    for (std::size_t i = 0; i < metric_cols.size(); ++i) {
      values.push_back(parse_number(row[metric_cols[i]], metric_names[i]));
    }
    group.second.push_back(std::move(values));
  }

  io::CsvTable out;
  out.header = {"scenario", "method", "mask", "rank", "n_target", "n_runs"};
  for (const char* m : metric_names) {
    out.header.push_back(std::string(m) + "_mean");
    out.header.push_back(std::string(m) + "_std");
  }
  for (const auto& [key, group] : groups) {
    std::vector<std::string> row = group.first;
    const auto& runs = group.second;
    row.push_back(std::to_string(runs.size()));
    for (std::size_t m = 0; m < metric_cols.size(); ++m) {
      double mean = 0.0;
      for (const auto& r : runs) mean += r[m];
      mean /= static_cast<double>(runs.size());
      double var = 0.0;
      for (const auto& r : runs) var += (r[m] - mean) * (r[m] - mean);
      const double stddev =
          runs.size() > 1 ? std::sqrt(var / static_cast<double>(runs.size() - 1)) : 0.0;
      row.push_back(io::format_double(mean));
      row.push_back(io::format_double(stddev));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace mosa::bench
