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

#include "malfare_bounds/datagen.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "malfare_bounds/errors.hpp"

namespace mfb {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::MatrixXd uniform_features(std::size_t m, std::size_t d, std::mt19937_64& rng) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
  // Row-major fill so a sample's features are consecutive draws.
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) X(r, c) = 2.0 * uniform01(rng) - 1.0;
  }
  return X;
}

void check_request(const GroupGenConfig& cfg, std::size_t m, Task expected) {
  if (m == 0) throw ConfigError("sample size must be positive");
  if (cfg.task != expected) throw ConfigError("generator called with the wrong task");
  if (cfg.d() == 0) throw ConfigError("feature dimension must be >= 1");
  if (expected == Task::kClassification && !(cfg.noise > 0.0)) {
    throw ConfigError("logit noise scale must be positive");
  }
}

}  // namespace

std::uint64_t stream_seed(const StreamKey& key) {
  std::uint64_t h = splitmix64(key.seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(key.group)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(key.run)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(key.purpose));
  return splitmix64(h ^ key.extra);
}

std::mt19937_64 make_stream(const StreamKey& key) { return std::mt19937_64(stream_seed(key)); }

GroupSample gen_linear_group(const GroupGenConfig& cfg, std::size_t m, std::uint64_t seed) {
  check_request(cfg, m, Task::kRegression);
  std::mt19937_64 rng(seed);
  GroupSample s;
  s.group_id = cfg.group_id;
  s.X = uniform_features(m, cfg.d(), rng);
  s.y = s.X * cfg.beta_true;
  for (Eigen::Index j = 0; j < s.y.size(); ++j) s.y[j] += cfg.noise * (2.0 * uniform01(rng) - 1.0);
  return s;
}

GroupSample gen_logistic_group(const GroupGenConfig& cfg, std::size_t m, std::uint64_t seed) {
  check_request(cfg, m, Task::kClassification);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> logit_noise(0.0, cfg.noise);
  GroupSample s;
  s.group_id = cfg.group_id;
  s.X = uniform_features(m, cfg.d(), rng);
  const Eigen::VectorXd logits = s.X * cfg.beta_true;
  s.y.resize(static_cast<Eigen::Index>(m));
  for (Eigen::Index j = 0; j < s.y.size(); ++j) {
    const double u = logits[j] + logit_noise(rng);
    const double p_pos = 1.0 / (1.0 + std::exp(-u));
    s.y[j] = uniform01(rng) < p_pos ? 1.0 : -1.0;
  }
  return s;
}

GroupSample gen_group(const GroupGenConfig& cfg, std::size_t m, std::uint64_t seed) {
  return cfg.task == Task::kRegression ? gen_linear_group(cfg, m, seed)
                                       : gen_logistic_group(cfg, m, seed);
}

std::vector<std::size_t> split_sizes(std::size_t total, std::span<const double> proportions) {
  if (proportions.empty()) throw ConfigError("no group proportions");
  if (total < proportions.size()) throw ConfigError("total sample size smaller than group count");
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0)) throw ConfigError("group proportions must be positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("group proportions must sum to 1");
  std::vector<std::size_t> sizes;
  std::size_t assigned = 0;
  for (double p : proportions) {
    // The epsilon keeps exact products such as 20 * 0.05 from flooring to 0.
    const auto mi = static_cast<std::size_t>(std::floor(static_cast<double>(total) * p + 1e-9));
    sizes.push_back(mi);
    assigned += mi;
  }
  if (assigned > total) throw ConfigError("rounding assigned more samples than available");
  sizes.front() += total - assigned;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) {
      throw ConfigError("group " + std::to_string(i + 1) + " receives no samples at total " +
                        std::to_string(total));
    }
  }
  return sizes;
}

void write_samples_csv(std::ostream& out, int run, std::span<const GroupSample> samples,
                       bool header) {
  const std::size_t d = samples.empty() ? 0 : samples.front().d();
  const auto old_precision = out.precision(17);
  if (header) {
    out << "group,run,row";
    for (std::size_t k = 0; k < d; ++k) out << ",x" << k;
    out << ",y\n";
  }
  for (const GroupSample& s : samples) {
    for (Eigen::Index r = 0; r < s.X.rows(); ++r) {
      out << s.group_id << ',' << run << ',' << r;
      for (Eigen::Index c = 0; c < s.X.cols(); ++c) out << ',' << s.X(r, c);
      out << ',' << s.y[r] << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace mfb
