// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mosa/adapters.hpp"
#include "mosa/model.hpp"

namespace mosa::bench {

/// Bad configuration; maps to exit code 2. The message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DataSizes {
  std::size_t source_train = 2000;
  std::size_t source_val = 300;
  std::size_t source_test = 500;
  std::size_t target_adapt = 200;
  std::size_t target_val = 80;
  std::size_t target_test = 500;
  std::uint64_t seed = 7;
};

struct PretrainSettings {
  double lr = 1e-3;
  std::size_t batch_size = 10;
  std::size_t max_epochs = 50;
  std::size_t patience = 50;
  std::uint64_t seed = 11;
};

struct AdaptSettings {
  std::size_t batch_size = 10;
  std::size_t max_epochs = 100;
  std::size_t patience = 30;
  double init_std = 0.02;
  std::map<adapt::Method, double> lr;  // filled with defaults
};

struct ExperimentConfig {
  std::string scenario = "agent_shift";
  std::vector<std::size_t> n_target{10, 20, 30};
  std::vector<adapt::Method> methods{adapt::Method::MOSA};
  std::vector<adapt::ModularMask> masks{adapt::ModularMask{}};
  std::vector<std::size_t> ranks{3};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t jobs = 1;
  std::string output_dir = "out";
  net::ModelConfig model;
  DataSizes data;
  PretrainSettings pretrain;
  AdaptSettings adapt;

  ExperimentConfig();
  void validate() const;
};

/// Parses `key = value` lines with dotted section names ('#' comments).
/// Unknown keys and malformed values throw ConfigError naming the key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text form; parse_config(format_config(c)) reproduces c.
std::string format_config(const ExperimentConfig& config);

}  // namespace mosa::bench
