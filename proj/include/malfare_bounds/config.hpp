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

#ifndef MALFARE_BOUNDS_CONFIG_HPP_
#define MALFARE_BOUNDS_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "malfare_bounds/datagen.hpp"
#include "malfare_bounds/linmodel.hpp"
#include "malfare_bounds/malfare.hpp"

namespace mfb {

/// Everything an experiment needs. Group i gets group_id i + 1.
///
/// JSON form (all keys required unless noted; unknown keys are rejected):
///   task          "regression" | "classification"
///   d, rho        dimension and L1 radius
///   x_max         optional, default 1
///   y_max         optional, regression only; default rho * x_max + max noise
///   groups        [{"beta_true": number | [d numbers], "noise": number}]
///   proportions   one per group, summing to 1
///   grid          strictly increasing total sample sizes
///   test_size     per group (0 disables test sets)
///   runs, delta, mc_n, seed
///   malfare       "1" | "inf" | "gini" | any p >= 1 as a number or string
///   weights       "proportional" | "equal" | [g numbers]
struct ExperimentConfig {
  Task task = Task::kClassification;
  std::size_t d = 0;
  double rho = 0.0;
  double x_max = 1.0;
  std::optional<double> y_max;
  std::vector<GroupGenConfig> groups;
  std::vector<double> proportions;
  std::vector<std::size_t> grid;
  std::size_t test_size = 0;
  int runs = 1;
  double delta = 0.1;
  std::size_t mc_n = 100;
  std::uint64_t seed = 0;
  std::string malfare = "1";
  std::string weights = "proportional";
  std::vector<double> weight_values;  // used when weights == "explicit"

  std::size_t group_count() const noexcept { return groups.size(); }
};

/// Throws ConfigError on malformed JSON, unknown keys or violated invariants.
ExperimentConfig config_from_json(std::string_view text);
/// Canonical JSON (sorted keys, 17 digits); config_from_json round-trips it.
std::string config_to_json(const ExperimentConfig& cfg);
/// Throws ConfigError if an invariant does not hold.
void validate_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
/// fnv1a64 of the canonical JSON, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Regression contours setup: d = 2, rho = 1, sizes 6500 / 3000 / 500.
ExperimentConfig contours_preset();
/// Three-group logistic setup, d = 15, rho = 15, proportions .75/.20/.05,
/// grid 64 .. max_total by doubling.
ExperimentConfig logistic_preset(std::size_t max_total = 8192);

/// from, 2 from, 4 from, ... while <= to.
std::vector<std::size_t> doubling_grid(std::size_t from, std::size_t to);

ParamSpace param_space(const ExperimentConfig& cfg);
LossSpec loss_spec(const ExperimentConfig& cfg);
/// Malfare named by `name` (same syntax as the config key), with the
/// config's weight rule applied to the given group sizes.
MalfareSpec make_malfare(const ExperimentConfig& cfg, std::string_view name,
                         std::span<const std::size_t> sizes);

}  // namespace mfb

#endif  // MALFARE_BOUNDS_CONFIG_HPP_
