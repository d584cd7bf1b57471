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

#ifndef MALFARE_BOUNDS_DATAGEN_HPP_
#define MALFARE_BOUNDS_DATAGEN_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "malfare_bounds/linmodel.hpp"

namespace mfb {

enum class Task { kRegression, kClassification };

/// Data-generating process for one group.
///  regression:     x ~ U[-1,1]^d,  y = x . beta_true + U(-noise, noise)
///  classification: x ~ U[-1,1]^d,  P(y = +1) = logistic(x . beta_true + xi),
///                  xi ~ N(0, noise) per sample (noise is a standard deviation)
struct GroupGenConfig {
  int group_id = 0;
  Eigen::VectorXd beta_true;
  Task task = Task::kRegression;
  double noise = 1.0;

  std::size_t d() const noexcept { return static_cast<std::size_t>(beta_true.size()); }
};

/// What a random stream is used for. Streams with different purposes never
/// overlap for the same (seed, group, run, size).
enum class StreamPurpose : std::uint64_t {
  kTrain = 1,
  kTest = 2,
  kRademacher = 3,
};

struct StreamKey {
  std::uint64_t seed = 0;
  int group = 0;
  int run = 0;
  StreamPurpose purpose = StreamPurpose::kTrain;
  std::uint64_t extra = 0;  // e.g. the total sample size of a grid point
};

/// 64-bit seed of the sub-stream for `key` (SplitMix64 over the key fields).
std::uint64_t stream_seed(const StreamKey& key);

/// mt19937_64 seeded with stream_seed(key).
std::mt19937_64 make_stream(const StreamKey& key);

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

GroupSample gen_linear_group(const GroupGenConfig& cfg, std::size_t m, std::uint64_t seed);
GroupSample gen_logistic_group(const GroupGenConfig& cfg, std::size_t m, std::uint64_t seed);
/// Dispatches on cfg.task.
GroupSample gen_group(const GroupGenConfig& cfg, std::size_t m, std::uint64_t seed);

/// m_i = floor(total * p_i), remainder to the first group. Throws ConfigError
/// if proportions do not sum to 1 or any m_i would be zero.
std::vector<std::size_t> split_sizes(std::size_t total, std::span<const double> proportions);

/// CSV with header `group,run,row,x0..x{d-1},y`, 17 significant digits.
void write_samples_csv(std::ostream& out, int run, std::span<const GroupSample> samples,
                       bool header = true);

}  // namespace mfb

#endif  // MALFARE_BOUNDS_DATAGEN_HPP_
