// Copyright 2026 The mosa-bench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mosa/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include "mosa/serialize.hpp"
#include "mosa/train.hpp"
#include "mosa/world.hpp"

namespace mosa::bench {

namespace {

constexpr adapt::Method kAllMethods[] = {adapt::Method::FT, adapt::Method::ET, adapt::Method::PA,
                                         adapt::Method::NORM, adapt::Method::MOSA};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a non-negative integer");
  }
  return v;
}

double to_double(const std::string& key, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + text + "' is not a number");
  }
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& text, F convert) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(convert(key, item));
  if (out.empty()) throw ConfigError("config key '" + key + "': list must not be empty");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

std::size_t to_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(to_u64(key, text));
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["scenario"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.scenario = v;
    };
    t["output_dir"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.output_dir = v;
    };
    t["jobs"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.jobs = to_size(k, v);
    };
    t["n_target"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.n_target = to_list<std::size_t>(k, v, to_size);
    };
    t["ranks"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.ranks = to_list<std::size_t>(k, v, to_size);
    };
    t["seeds"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.seeds = to_list<std::uint64_t>(k, v, to_u64);
    };
    t["methods"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.methods = to_list<adapt::Method>(k, v, [](const std::string& key, const std::string& s) {
        try {
          return adapt::parse_method(s);
        } catch (const adapt::AdapterError& e) {
          throw ConfigError("config key '" + key + "': " + e.what());
        }
      });
    };
    t["masks"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.masks = to_list<adapt::ModularMask>(k, v, [](const std::string& key, const std::string& s) {
        try {
          return adapt::parse_mask(s);
        } catch (const adapt::AdapterError& e) {
          throw ConfigError("config key '" + key + "': " + e.what());
        }
      });
    };

    const auto size_field = [&t](const std::string& key, auto member) {
      t[key] = [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
        member(c) = to_size(k, v);
      };
    };
    const auto u64_field = [&t](const std::string& key, auto member) {
      t[key] = [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
        member(c) = to_u64(k, v);
      };
    };
    const auto double_field = [&t](const std::string& key, auto member) {
      t[key] = [member](ExperimentConfig& c, const std::string& k, const std::string& v) {
        member(c) = to_double(k, v);
      };
    };

    size_field("data.n_source_train", [](ExperimentConfig& c) -> auto& { return c.data.source_train; });
    size_field("data.n_source_val", [](ExperimentConfig& c) -> auto& { return c.data.source_val; });
    size_field("data.n_source_test", [](ExperimentConfig& c) -> auto& { return c.data.source_test; });
    size_field("data.n_target_adapt", [](ExperimentConfig& c) -> auto& { return c.data.target_adapt; });
    size_field("data.n_target_val", [](ExperimentConfig& c) -> auto& { return c.data.target_val; });
    size_field("data.n_target_test", [](ExperimentConfig& c) -> auto& { return c.data.target_test; });
    u64_field("data.seed", [](ExperimentConfig& c) -> auto& { return c.data.seed; });

    size_field("model.grid_h", [](ExperimentConfig& c) -> auto& { return c.model.grid_h; });
    size_field("model.grid_w", [](ExperimentConfig& c) -> auto& { return c.model.grid_w; });
    size_field("model.n_classes", [](ExperimentConfig& c) -> auto& { return c.model.n_classes; });
    size_field("model.t_obs", [](ExperimentConfig& c) -> auto& { return c.model.t_obs; });
    size_field("model.t_pred", [](ExperimentConfig& c) -> auto& { return c.model.t_pred; });
    size_field("model.d_model", [](ExperimentConfig& c) -> auto& { return c.model.d_model; });
    size_field("model.k_modes", [](ExperimentConfig& c) -> auto& { return c.model.k_modes; });
    u64_field("model.seed", [](ExperimentConfig& c) -> auto& { return c.model.seed; });

    double_field("pretrain.lr", [](ExperimentConfig& c) -> auto& { return c.pretrain.lr; });
    size_field("pretrain.batch_size", [](ExperimentConfig& c) -> auto& { return c.pretrain.batch_size; });
    size_field("pretrain.max_epochs", [](ExperimentConfig& c) -> auto& { return c.pretrain.max_epochs; });
    size_field("pretrain.patience", [](ExperimentConfig& c) -> auto& { return c.pretrain.patience; });
    u64_field("pretrain.seed", [](ExperimentConfig& c) -> auto& { return c.pretrain.seed; });

    size_field("adapt.batch_size", [](ExperimentConfig& c) -> auto& { return c.adapt.batch_size; });
    size_field("adapt.max_epochs", [](ExperimentConfig& c) -> auto& { return c.adapt.max_epochs; });
    size_field("adapt.patience", [](ExperimentConfig& c) -> auto& { return c.adapt.patience; });
    double_field("adapt.init_std", [](ExperimentConfig& c) -> auto& { return c.adapt.init_std; });
    for (adapt::Method m : kAllMethods) {
      t["adapt.lr." + adapt::to_string(m)] = [m](ExperimentConfig& c, const std::string& k,
                                                 const std::string& v) {
        c.adapt.lr[m] = to_double(k, v);
      };
    }
    return t;
  }();
  return table;
}

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (adapt::Method m : kAllMethods) adapt.lr[m] = train::default_lr(m);
}

void ExperimentConfig::validate() const {
  try {
    world::scenario_preset(scenario);
  } catch (const world::WorldError& e) {
    throw ConfigError(std::string("config key 'scenario': ") + e.what());
  }
  if (n_target.empty()) throw ConfigError("config key 'n_target': list must not be empty");
  if (methods.empty()) throw ConfigError("config key 'methods': list must not be empty");
  if (masks.empty()) throw ConfigError("config key 'masks': list must not be empty");
  if (ranks.empty()) throw ConfigError("config key 'ranks': list must not be empty");
  if (seeds.empty()) throw ConfigError("config key 'seeds': list must not be empty");
  for (auto n : n_target) {
    if (n == 0 || n > data.target_adapt) {
      throw ConfigError("config key 'n_target': each value must be in [1, data.n_target_adapt]");
    }
  }
  for (auto r : ranks) {
    if (r == 0) throw ConfigError("config key 'ranks': ranks must be positive");
  }
  if (jobs == 0) throw ConfigError("config key 'jobs': must be at least 1");
  if (data.source_train == 0 || data.source_val == 0 || data.source_test == 0 ||
      data.target_adapt == 0 || data.target_val == 0 || data.target_test == 0) {
    throw ConfigError("config section 'data': every split size must be positive");
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config section 'model': ") + e.what());
  }
  const auto layout = world::build_scene("layout1");
  if (model.grid_h != layout.height || model.grid_w != layout.width) {
    throw ConfigError("config keys 'model.grid_h'/'model.grid_w' must match the 16x16 layouts");
  }
  if (model.n_classes != world::kNumClasses) {
    throw ConfigError("config key 'model.n_classes' must be " + std::to_string(world::kNumClasses));
  }
  const auto check_train = [](const char* section, double lr, std::size_t batch,
                              std::size_t epochs, std::size_t patience) {
    if (!(lr > 0.0)) throw ConfigError(std::string("config key '") + section + ".lr' must be positive");
    if (batch == 0) throw ConfigError(std::string("config key '") + section + ".batch_size' must be positive");
    if (patience == 0 || (epochs > 0 && patience > epochs)) {
      throw ConfigError(std::string("config key '") + section +
                        ".patience' must be in [1, max_epochs]");
    }
  };
  check_train("pretrain", pretrain.lr, pretrain.batch_size, pretrain.max_epochs,
              pretrain.patience);
  for (const auto& [m, lr] : adapt.lr) {
    check_train(("adapt.lr." + adapt::to_string(m)).c_str(), lr, adapt.batch_size,
                adapt.max_epochs, adapt.patience);
  }
  if (!(adapt.init_std > 0.0)) throw ConfigError("config key 'adapt.init_std' must be positive");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    it->second(config, key, value);
  }
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream out;
  const auto join = [](const auto& items, auto fmt) {
    std::string s;
    for (const auto& item : items) {
      if (!s.empty()) s += ", ";
      s += fmt(item);
    }
    return s;
  };
  const auto num = [](auto v) { return std::to_string(v); };
  out << "scenario = " << c.scenario << "\n"
      << "output_dir = " << c.output_dir << "\n"
      << "jobs = " << c.jobs << "\n"
      << "n_target = " << join(c.n_target, num) << "\n"
      << "methods = " << join(c.methods, [](adapt::Method m) { return adapt::to_string(m); }) << "\n"
      << "masks = " << join(c.masks, adapt::mask_to_string) << "\n"
      << "ranks = " << join(c.ranks, num) << "\n"
      << "seeds = " << join(c.seeds, num) << "\n"
      << "data.n_source_train = " << c.data.source_train << "\n"
      << "data.n_source_val = " << c.data.source_val << "\n"
      << "data.n_source_test = " << c.data.source_test << "\n"
      << "data.n_target_adapt = " << c.data.target_adapt << "\n"
      << "data.n_target_val = " << c.data.target_val << "\n"
      << "data.n_target_test = " << c.data.target_test << "\n"
      << "data.seed = " << c.data.seed << "\n"
      << "model.grid_h = " << c.model.grid_h << "\n"
      << "model.grid_w = " << c.model.grid_w << "\n"
      << "model.n_classes = " << c.model.n_classes << "\n"
      << "model.t_obs = " << c.model.t_obs << "\n"
      << "model.t_pred = " << c.model.t_pred << "\n"
      << "model.d_model = " << c.model.d_model << "\n"
      << "model.k_modes = " << c.model.k_modes << "\n"
      << "model.seed = " << c.model.seed << "\n"
      << "pretrain.lr = " << io::format_double(c.pretrain.lr) << "\n"
      << "pretrain.batch_size = " << c.pretrain.batch_size << "\n"
      << "pretrain.max_epochs = " << c.pretrain.max_epochs << "\n"
      << "pretrain.patience = " << c.pretrain.patience << "\n"
      << "pretrain.seed = " << c.pretrain.seed << "\n"
      << "adapt.batch_size = " << c.adapt.batch_size << "\n"
      << "adapt.max_epochs = " << c.adapt.max_epochs << "\n"
      << "adapt.patience = " << c.adapt.patience << "\n"
      << "adapt.init_std = " << io::format_double(c.adapt.init_std) << "\n";
  for (const auto& [m, lr] : c.adapt.lr) {
    out << "adapt.lr." << adapt::to_string(m) << " = " << io::format_double(lr) << "\n";
  }
  return out.str();
}

}  // namespace mosa::bench
