// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mosa::io {

using nlohmann::json;

std::string format_double(double v) {
  if (!std::isfinite(v)) throw FormatError("cannot serialize non-finite value");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string out(buf);
  // Keep the token a JSON float so it parses back as a double.
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

namespace {

void dump_into(const json& value, std::string& out) {
  switch (value.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (const auto& [key, item] : value.items()) {
        if (!first) out += ',';
        first = false;
        out += json(key).dump();
        out += ':';
        dump_into(item, out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i > 0) out += ',';
        dump_into(value[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float:
      out += format_double(value.get<double>());
      break;
    default:
      out += value.dump();
  }
}

}  // namespace

std::string dump_json(const json& value) {
  std::string out;
  dump_into(value, out);
  out += '\n';
  return out;
}

// ---- tensors & checkpoints -----------------------------------------------------

json tensor_to_json(const diff::Tensor& t) {
  json values;
  if (t.rank() == 2) {
    values = json::array();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < t.cols(); ++c) row.push_back(t.at(r, c));
      values.push_back(std::move(row));
    }
  } else {
    values = json(t.raw());
  }
  return {{"shape", t.shape()}, {"values", std::move(values)}};
}

namespace {

void flatten(const json& j, std::vector<double>& out) {
  if (j.is_array()) {
    for (const auto& item : j) flatten(item, out);
  } else if (j.is_number()) {
    out.push_back(j.get<double>());
  } else {
    throw FormatError("tensor values must be numbers");
  }
}

}  // namespace

diff::Tensor tensor_from_json(const json& j) {
  try {
    auto shape = j.at("shape").get<diff::Shape>();
    std::vector<double> values;
    flatten(j.at("values"), values);
    return diff::Tensor(std::move(shape), std::move(values));
  } catch (const diff::ShapeError& e) {
    throw FormatError(std::string("bad tensor: ") + e.what());
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad tensor: ") + e.what());
  }
}

namespace {

json config_to_json(const net::ModelConfig& c) {
  return {{"grid_h", c.grid_h}, {"grid_w", c.grid_w},   {"n_classes", c.n_classes},
          {"t_obs", c.t_obs},   {"t_pred", c.t_pred},   {"d_model", c.d_model},
          {"k_modes", c.k_modes}, {"seed", c.seed}};
}

net::ModelConfig config_from_json(const json& j) {
  net::ModelConfig c;
  c.grid_h = j.at("grid_h").get<std::size_t>();
  c.grid_w = j.at("grid_w").get<std::size_t>();
  c.n_classes = j.at("n_classes").get<std::size_t>();
  c.t_obs = j.at("t_obs").get<std::size_t>();
  c.t_pred = j.at("t_pred").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.k_modes = j.at("k_modes").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

void check_version(const json& j, const char* what) {
  const int version = j.at("format_version").get<int>();
  if (version != kFormatVersion) {
    throw FormatError(std::string(what) + " format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
}

}  // namespace

json checkpoint_to_json(const net::Model& model) {
  json tensors = json::object();
  for (const auto& [name, p] : model.params) tensors[name] = tensor_to_json(p.value);
  json out = {{"format_version", kFormatVersion},
              {"model_config", config_to_json(model.config)},
              {"tensors", std::move(tensors)}};
  if (model.adapter_spec) {
    const auto& spec = *model.adapter_spec;
    json pairs = json::object();
    for (const auto& [name, pair] : model.adapters) {
      pairs[name] = {{"A", tensor_to_json(pair.a.value)}, {"B", tensor_to_json(pair.b.value)}};
    }
    out["adapter"] = {{"kind", "mosa"},
                      {"spec",
                       {{"rank", spec.rank},
                        {"targets", spec.targets},
                        {"init_std", spec.init_std},
                        {"seed", spec.seed}}},
                      {"pairs", std::move(pairs)}};
  } else if (!model.residuals.empty()) {
    json residuals = json::object();
    for (const auto& [name, res] : model.residuals) residuals[name] = tensor_to_json(res.p.value);
    out["adapter"] = {{"kind", "parallel"}, {"residuals", std::move(residuals)}};
  }
  return out;
}

net::Model checkpoint_from_json(const json& j) {
  try {
    check_version(j, "checkpoint");
    net::Model model;
    model.config = config_from_json(j.at("model_config"));
    const net::Model reference = net::init_model(model.config);
    for (const auto& [name, tj] : j.at("tensors").items()) {
      if (!reference.params.contains(name)) {
        throw FormatError("checkpoint has unknown tensor '" + name + "'");
      }
      diff::Tensor value = tensor_from_json(tj);
      if (value.shape() != reference.param(name).value.shape()) {
        throw FormatError("tensor '" + name + "' has shape " + diff::shape_string(value.shape()) +
                          ", expected " +
                          diff::shape_string(reference.param(name).value.shape()));
      }
      model.params.emplace(name, diff::Param(name, std::move(value)));
    }
    for (const auto& [name, p] : reference.params) {
      if (!model.params.contains(name)) throw FormatError("checkpoint is missing '" + name + "'");
    }
    if (j.contains("adapter")) {
      const json& a = j.at("adapter");
      const auto kind = a.at("kind").get<std::string>();
      if (kind == "mosa") {
        net::AdapterSpec spec;
        spec.rank = a.at("spec").at("rank").get<std::size_t>();
        spec.targets = a.at("spec").at("targets").get<std::vector<std::string>>();
        spec.init_std = a.at("spec").at("init_std").get<double>();
        spec.seed = a.at("spec").at("seed").get<std::uint64_t>();
        model.adapter_spec = spec;
        for (const auto& target : spec.targets) {
          const json& pj = a.at("pairs").at(target);
          const std::string prefix = target.substr(0, target.rfind(".weight"));
          net::AdapterPair pair{target, diff::Param(prefix + ".mosa.A", tensor_from_json(pj.at("A"))),
                                diff::Param(prefix + ".mosa.B", tensor_from_json(pj.at("B")))};
          const auto& w = model.param(target).value;
          if (pair.a.value.rows() != spec.rank || pair.a.value.cols() != w.cols() ||
              pair.b.value.rows() != w.rows() || pair.b.value.cols() != spec.rank) {
            throw FormatError("adapter pair for '" + target + "' does not match its weight");
          }
          model.param(target).trainable = false;
          model.adapters.emplace(target, std::move(pair));
        }
      } else if (kind == "parallel") {
        for (const auto& [target, tj] : a.at("residuals").items()) {
          diff::Tensor p = tensor_from_json(tj);
          if (p.shape() != model.param(target).value.shape()) {
            throw FormatError("residual for '" + target + "' does not match its weight");
          }
          const std::string prefix = target.substr(0, target.rfind(".weight"));
          model.residuals.emplace(
              target, net::ParallelResidual{target, diff::Param(prefix + ".parallel.P", std::move(p))});
          model.param(target).trainable = false;
        }
      } else {
        throw FormatError("unknown adapter kind '" + kind + "'");
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

// ---- scenes & datasets ---------------------------------------------------------

json scenes_to_json(const std::map<std::string, world::SceneGrid>& scenes) {
  json list = json::array();
  for (const auto& [id, grid] : scenes) {
    json rows = json::array();
    for (std::size_t r = 0; r < grid.height; ++r) {
      json row = json::array();
      for (std::size_t c = 0; c < grid.width; ++c) row.push_back(grid.cells[r * grid.width + c]);
      rows.push_back(std::move(row));
    }
    list.push_back({{"id", id}, {"height", grid.height}, {"width", grid.width}, {"cells", rows}});
  }
  return {{"format_version", kFormatVersion}, {"scenes", std::move(list)}};
}

std::map<std::string, world::SceneGrid> scenes_from_json(const json& j) {
  try {
    check_version(j, "scenes");
    std::map<std::string, world::SceneGrid> out;
    for (const auto& sj : j.at("scenes")) {
      world::SceneGrid grid;
      grid.id = sj.at("id").get<std::string>();
      grid.height = sj.at("height").get<std::size_t>();
      grid.width = sj.at("width").get<std::size_t>();
      for (const auto& row : sj.at("cells")) {
        for (const auto& v : row) grid.cells.push_back(v.get<std::uint8_t>());
      }
      grid.validate();
      out.emplace(grid.id, std::move(grid));
    }
    return out;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed scenes file: ") + e.what());
  } catch (const world::WorldError& e) {
    throw FormatError(std::string("invalid scene: ") + e.what());
  }
}

namespace {

json points_to_json(const std::vector<world::Point>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(json::array({p.x, p.y}));
  return out;
}

std::vector<world::Point> points_from_json(const json& j) {
  std::vector<world::Point> out;
  for (const auto& p : j) {
    if (p.size() != 2) throw FormatError("points must be [x, y] pairs");
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

}  // namespace

json dataset_to_json(const world::Dataset& data) {
  json samples = json::array();
  for (const auto& s : data.samples) {
    samples.push_back(
        {{"scene_id", s.scene_id}, {"past", points_to_json(s.past)}, {"future", points_to_json(s.future)}});
  }
  std::vector<std::string> ids;
  for (const auto& [id, grid] : data.scenes) ids.push_back(id);
  return {{"format_version", kFormatVersion},
          {"style_tag", data.style_tag},
          {"scene_ids", ids},
          {"samples", std::move(samples)}};
}

world::Dataset dataset_from_json(const json& j,
                                 const std::map<std::string, world::SceneGrid>& scenes) {
  try {
    check_version(j, "dataset");
    world::Dataset data;
    data.style_tag = j.at("style_tag").get<std::string>();
    for (const auto& id : j.at("scene_ids").get<std::vector<std::string>>()) {
      auto it = scenes.find(id);
      if (it == scenes.end()) throw FormatError("dataset references unknown scene '" + id + "'");
      data.scenes.emplace(id, it->second);
    }
    for (const auto& sj : j.at("samples")) {
      world::Sample s;
      s.scene_id = sj.at("scene_id").get<std::string>();
      if (!data.scenes.contains(s.scene_id)) {
        throw FormatError("sample references unlisted scene '" + s.scene_id + "'");
      }
      s.past = points_from_json(sj.at("past"));
      s.future = points_from_json(sj.at("future"));
      data.samples.push_back(std::move(s));
    }
    return data;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed dataset: ") + e.what());
  }
}

// ---- files -----------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

json read_json(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const net::Model& model) {
  write_file(path, dump_json(checkpoint_to_json(model)));
}

net::Model load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(read_json(path));
}

// ---- CSV -------------------------------------------------------------------

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw FormatError("CSV has no column '" + name + "'");
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw FormatError("CSV line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, header has " +
                        std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (table.header.empty()) throw FormatError("CSV is empty");
  return table;
}

std::string format_csv(const CsvTable& table) {
  std::string out;
  const auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
  return out;
}

}  // namespace mosa::io
