/*
 * Copyright 2026 The malfare-bounds Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "malfare_bounds/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "json.hpp"
#include "malfare_bounds/errors.hpp"

namespace mfb {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& item : obj.items()) {
    if (!allowed.contains(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

const json& required(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(std::string("missing key '") + key + "'");
  return *it;
}

// Shortest decimal form that reads back to the same double.
std::string format_number(double x) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::stod(buf) == x) break;
  }
  return buf;
}

std::string malfare_name(const json& j) {
  if (j.is_number()) return format_number(j.get<double>());
  if (j.is_string()) return j.get<std::string>();
  throw ConfigError("malfare must be a number or a string");
}

Task parse_task(const std::string& s) {
  if (s == "regression") return Task::kRegression;
  if (s == "classification") return Task::kClassification;
  throw ConfigError("task must be 'regression' or 'classification', got '" + s + "'");
}

}  // namespace

ExperimentConfig config_from_json(std::string_view text) {
  ExperimentConfig cfg;
  try {
    const json root = json::parse(text);
    if (!root.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(root,
                   {"task", "d", "rho", "x_max", "y_max", "groups", "proportions", "grid", "test_size", "runs",
                    "delta", "mc_n", "seed", "malfare", "weights"},
                   "config");
    cfg.task = parse_task(required(root, "task").get<std::string>());
    cfg.d = required(root, "d").get<std::size_t>();
    cfg.rho = required(root, "rho").get<double>();
    if (root.contains("x_max")) cfg.x_max = root["x_max"].get<double>();
    if (root.contains("y_max") && !root["y_max"].is_null()) cfg.y_max = root["y_max"].get<double>();
    int id = 1;
    for (const json& gj : required(root, "groups")) {
      if (!gj.is_object()) throw ConfigError("each group must be an object");
      reject_unknown(gj, {"beta_true", "noise"}, "group " + std::to_string(id));
      GroupGenConfig g;
      g.group_id = id++;
      g.task = cfg.task;
      g.noise = required(gj, "noise").get<double>();
      const json& b = required(gj, "beta_true");
      if (b.is_number()) {
        g.beta_true = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cfg.d), b.get<double>());
      } else {
        const auto v = b.get<std::vector<double>>();
        g.beta_true = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      }
      cfg.groups.push_back(std::move(g));
    }
    cfg.proportions = required(root, "proportions").get<std::vector<double>>();
    cfg.grid = required(root, "grid").get<std::vector<std::size_t>>();
    cfg.test_size = required(root, "test_size").get<std::size_t>();
    cfg.runs = required(root, "runs").get<int>();
    cfg.delta = required(root, "delta").get<double>();
    cfg.mc_n = required(root, "mc_n").get<std::size_t>();
    cfg.seed = required(root, "seed").get<std::uint64_t>();
    cfg.malfare = malfare_name(required(root, "malfare"));
    const json& w = required(root, "weights");
    if (w.is_string()) {
      cfg.weights = w.get<std::string>();
      if (cfg.weights != "proportional" && cfg.weights != "equal") {
        throw ConfigError("weights must be 'proportional', 'equal' or an array");
      }
    } else {
      cfg.weights = "explicit";
      cfg.weight_values = w.get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config JSON: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json root;
  root["task"] = cfg.task == Task::kRegression ? "regression" : "classification";
  root["d"] = cfg.d;
  root["rho"] = cfg.rho;
  root["x_max"] = cfg.x_max;
  if (cfg.y_max) root["y_max"] = *cfg.y_max;
  json groups = json::array();
  for (const auto& g : cfg.groups) {
    groups.push_back({{"beta_true", std::vector<double>(g.beta_true.data(), g.beta_true.data() + g.beta_true.size())},
                      {"noise", g.noise}});
  }
  root["groups"] = groups;
  root["proportions"] = cfg.proportions;
  root["grid"] = cfg.grid;
  root["test_size"] = cfg.test_size;
  root["runs"] = cfg.runs;
  root["delta"] = cfg.delta;
  root["mc_n"] = cfg.mc_n;
  root["seed"] = cfg.seed;
  root["malfare"] = cfg.malfare;
  if (cfg.weights == "explicit") {
    root["weights"] = cfg.weight_values;
  } else {
    root["weights"] = cfg.weights;
  }
  return root.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.d == 0) throw ConfigError("d must be >= 1");
  if (!std::isfinite(cfg.rho) || cfg.rho < 0.0) throw ConfigError("rho must be finite and >= 0");
  if (!std::isfinite(cfg.x_max) || !(cfg.x_max > 0.0)) throw ConfigError("x_max must be positive");
  if (cfg.y_max && !(std::isfinite(*cfg.y_max) && *cfg.y_max >= 0.0)) throw ConfigError("y_max must be >= 0");
  if (cfg.groups.empty()) throw ConfigError("at least one group is required");
  for (const auto& g : cfg.groups) {
    const std::string name = "group " + std::to_string(g.group_id);
    if (g.d() != cfg.d) throw ConfigError(name + ": beta_true has the wrong length");
    if (!g.beta_true.allFinite()) throw ConfigError(name + ": beta_true must be finite");
    if (!std::isfinite(g.noise) || g.noise < 0.0) throw ConfigError(name + ": noise must be >= 0");
    if (cfg.task == Task::kClassification && g.noise == 0.0) throw ConfigError(name + ": logit noise must be > 0");
  }
  if (cfg.proportions.size() != cfg.groups.size()) throw ConfigError("one proportion per group is required");
  if (cfg.grid.empty()) throw ConfigError("grid must not be empty");
  for (std::size_t k = 1; k < cfg.grid.size(); ++k) {
    if (cfg.grid[k] <= cfg.grid[k - 1]) throw ConfigError("grid must be strictly increasing");
  }
  for (std::size_t total : cfg.grid) split_sizes(total, cfg.proportions);
  if (cfg.runs < 1) throw ConfigError("runs must be >= 1");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw ConfigError("delta must lie in (0, 1)");
  if (cfg.mc_n == 0) throw ConfigError("mc_n must be >= 1");
  if (cfg.weights == "explicit" && cfg.weight_values.size() != cfg.groups.size()) {
    throw ConfigError("one weight per group is required");
  }
  try {
    make_malfare(cfg, cfg.malfare, split_sizes(cfg.grid.front(), cfg.proportions));
    param_space(cfg);
    loss_spec(cfg);
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_to_json(cfg))));
  return buf;
}

ExperimentConfig contours_preset() {
  ExperimentConfig cfg;
  cfg.task = Task::kRegression;
  cfg.d = 2;
  cfg.rho = 1.0;
  const double betas[3][2] = {{0.3, 0.3}, {-0.1, 0.1}, {0.3, 0.0}};
  for (int i = 0; i < 3; ++i) {
    cfg.groups.push_back({i + 1, Eigen::Vector2d(betas[i][0], betas[i][1]), Task::kRegression, 1.0});
  }
  cfg.proportions = {0.65, 0.30, 0.05};
  cfg.grid = {10000};
  cfg.test_size = 0;
  cfg.runs = 7;
  cfg.delta = 0.1;
  cfg.mc_n = 100;
  cfg.malfare = "1";
  return cfg;
}

ExperimentConfig logistic_preset(std::size_t max_total) {
  ExperimentConfig cfg;
  cfg.task = Task::kClassification;
  cfg.d = 15;
  cfg.rho = 15.0;
  const double betas[3] = {0.3, 0.1, 0.2};
  for (int i = 0; i < 3; ++i) {
    cfg.groups.push_back({i + 1, Eigen::VectorXd::Constant(15, betas[i]), Task::kClassification, 0.1});
  }
  cfg.proportions = {0.75, 0.20, 0.05};
  cfg.grid = doubling_grid(64, max_total);
  cfg.test_size = 20000;
  cfg.runs = 7;
  cfg.delta = 0.1;
  cfg.mc_n = 100;
  cfg.malfare = "1";
  return cfg;
}

std::vector<std::size_t> doubling_grid(std::size_t from, std::size_t to) {
  if (from == 0) throw ConfigError("grid must start above 0");
  std::vector<std::size_t> out;
  for (std::size_t m = from; m <= to; m *= 2) out.push_back(m);
  return out;
}

ParamSpace param_space(const ExperimentConfig& cfg) { return ParamSpace::make(cfg.d, cfg.rho); }

LossSpec loss_spec(const ExperimentConfig& cfg) {
  const ParamSpace space = param_space(cfg);
  if (cfg.task == Task::kClassification) return LossSpec::make(LossKind::kLogistic, space, cfg.x_max, 1.0);
  double noise = 0.0;
  for (const auto& g : cfg.groups) noise = std::max(noise, g.noise);
  const double y_max = cfg.y_max.value_or(cfg.rho * cfg.x_max + noise);
  return LossSpec::make(LossKind::kSquare, space, cfg.x_max, y_max);
}

MalfareSpec make_malfare(const ExperimentConfig& cfg, std::string_view name, std::span<const std::size_t> sizes) {
  const std::size_t g = cfg.groups.size();
  if (sizes.size() != g) throw DimensionError("one size per group is required");
  std::vector<double> w;
  if (cfg.weights == "proportional") {
    w = MalfareSpec::proportional_weights(sizes);
  } else if (cfg.weights == "equal") {
    w.assign(g, 1.0 / static_cast<double>(g));
  } else {
    w = cfg.weight_values;
  }
  if (name == "gini") {
    std::sort(w.begin(), w.end(), std::greater<>());
    return MalfareSpec::gini(std::move(w));
  }
  if (name == "inf" || name == "infinity") return MalfareSpec::egalitarian(std::move(w));
  double p = 0.0;
  try {
    std::size_t used = 0;
    p = std::stod(std::string(name), &used);
    if (used != name.size()) throw ConfigError("");
  } catch (const std::exception&) {
    throw ConfigError("malfare must be 'inf', 'gini' or a number >= 1, got '" + std::string(name) + "'");
  }
  return MalfareSpec::power_mean(Exponent::finite(p), std::move(w));
}

}  // namespace mfb
