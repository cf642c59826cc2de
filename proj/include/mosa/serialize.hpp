// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mosa/model.hpp"
#include "mosa/world.hpp"

namespace mosa::io {

inline constexpr int kFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compact JSON text with every floating-point number printed with 17
/// significant digits, which round-trips doubles exactly.
std::string dump_json(const nlohmann::json& value);

nlohmann::json tensor_to_json(const diff::Tensor& t);
diff::Tensor tensor_from_json(const nlohmann::json& j);

nlohmann::json checkpoint_to_json(const net::Model& model);
net::Model checkpoint_from_json(const nlohmann::json& j);

nlohmann::json scenes_to_json(const std::map<std::string, world::SceneGrid>& scenes);
std::map<std::string, world::SceneGrid> scenes_from_json(const nlohmann::json& j);

/// Samples reference scenes by id; the scenes live in a separate file.
nlohmann::json dataset_to_json(const world::Dataset& data);
world::Dataset dataset_from_json(const nlohmann::json& j,
                                 const std::map<std::string, world::SceneGrid>& scenes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const net::Model& model);
net::Model load_checkpoint(const std::filesystem::path& path);

/// Plain CSV: header row then data rows; no quoting (fields never contain commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
std::string format_csv(const CsvTable& table);
/// %.17g
std::string format_double(double v);

}  // namespace mosa::io
