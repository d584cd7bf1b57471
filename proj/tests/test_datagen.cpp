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

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "malfare_bounds/datagen.hpp"
#include "malfare_bounds/errors.hpp"

using namespace mfb;
using doctest::Approx;

namespace {

GroupGenConfig regression(Eigen::VectorXd beta) { return {1, std::move(beta), Task::kRegression, 1.0}; }
GroupGenConfig classification(Eigen::VectorXd beta) { return {1, std::move(beta), Task::kClassification, 0.1}; }

}  // namespace

TEST_CASE("linear groups: centred labels and uniform noise") {
  const auto s = gen_linear_group(regression(Eigen::Vector2d(0.3, 0.3)), 1000, 42);
  CHECK(std::abs(s.y.mean()) < 0.1);
  const auto flat = gen_linear_group(regression(Eigen::Vector2d::Zero()), 10000, 7);
  const double mean = flat.y.mean();
  const double var = (flat.y.array() - mean).square().sum() / 9999.0;
  CHECK(var == Approx(1.0 / 3.0).epsilon(0.15));
  CHECK(std::abs(var - 1.0 / 3.0) < 0.05);
  CHECK(flat.y.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("logistic groups: label balance") {
  const auto zero = gen_logistic_group(classification(Eigen::VectorXd::Zero(15)), 10000, 3);
  const double pos = (zero.y.array() > 0.0).cast<double>().mean();
  CHECK(std::abs(pos - 0.5) < 0.02);
  // Labels follow the sign of the logit more often than not.
  const auto tilted = gen_logistic_group(classification(Eigen::VectorXd::Constant(15, 0.3)), 20000, 3);
  const Eigen::VectorXd logits = tilted.X * Eigen::VectorXd::Constant(15, 0.3);
  CHECK((logits.array() * tilted.y.array() > 0.0).cast<double>().mean() > 0.6);
}

TEST_CASE("same seed, same sample; different seed, different sample") {
  for (const auto& cfg : {regression(Eigen::Vector3d(0.1, -0.2, 0.3)), classification(Eigen::Vector3d(1, 1, 1))}) {
    const auto a = gen_group(cfg, 50, 99);
    const auto b = gen_group(cfg, 50, 99);
    const auto c = gen_group(cfg, 50, 100);
    CHECK(a.X == b.X);
    CHECK(a.y == b.y);
    CHECK(a.X != c.X);
  }
}

TEST_CASE("domain bounds of generated data") {
  const auto r = gen_linear_group(regression(Eigen::VectorXd::Constant(4, 0.2)), 500, 1);
  CHECK(r.X.cwiseAbs().maxCoeff() <= 1.0);
  const auto c = gen_logistic_group(classification(Eigen::VectorXd::Constant(4, 0.2)), 500, 1);
  CHECK(c.X.cwiseAbs().maxCoeff() <= 1.0);
  for (Eigen::Index j = 0; j < c.y.size(); ++j) CHECK((c.y[j] == 1.0 || c.y[j] == -1.0));
}

TEST_CASE("generator argument checks") {
  CHECK_THROWS_AS(gen_linear_group(regression(Eigen::Vector2d::Zero()), 0, 1), ConfigError);
  CHECK_THROWS_AS(gen_linear_group(classification(Eigen::Vector2d::Zero()), 5, 1), ConfigError);
  auto bad = classification(Eigen::Vector2d::Zero());
  bad.noise = 0.0;
  CHECK_THROWS_AS(gen_logistic_group(bad, 5, 1), ConfigError);
}

TEST_CASE("split sizes") {
  const std::vector<double> p3{0.75, 0.20, 0.05};
  CHECK(split_sizes(32768, p3) == std::vector<std::size_t>{24577, 6553, 1638});
  CHECK(split_sizes(100, std::vector<double>{0.5, 0.5}) == std::vector<std::size_t>{50, 50});
  CHECK(split_sizes(20, p3) == std::vector<std::size_t>{15, 4, 1});
  CHECK(split_sizes(8192, p3) == std::vector<std::size_t>{6145, 1638, 409});
  CHECK_THROWS_AS(split_sizes(10, p3), ConfigError);  // group 3 gets nothing
  CHECK_THROWS_AS(split_sizes(100, std::vector<double>{0.5, 0.4}), ConfigError);
  CHECK_THROWS_AS(split_sizes(100, std::vector<double>{}), ConfigError);
  for (std::size_t total = 20; total < 5000; total += 37) {
    const auto s = split_sizes(total, p3);
    CHECK(s[0] + s[1] + s[2] == total);
  }
}

TEST_CASE("stream keys") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t seed : {0ULL, 1ULL})
    for (int g = 1; g <= 3; ++g)
      for (int run = 0; run < 7; ++run)
        for (auto purpose : {StreamPurpose::kTrain, StreamPurpose::kTest, StreamPurpose::kRademacher})
          for (std::uint64_t extra : {64ULL, 128ULL}) seen.insert(stream_seed({seed, g, run, purpose, extra}));
  CHECK(seen.size() == 2 * 3 * 7 * 3 * 2);
  auto a = make_stream({5, 1, 2, StreamPurpose::kTest, 0});
  auto b = make_stream({5, 1, 2, StreamPurpose::kTest, 0});
  for (int k = 0; k < 10; ++k) CHECK(a() == b());
  for (int k = 0; k < 10000; ++k) {
    const double u = uniform01(a);
    CHECK((u >= 0.0 && u < 1.0));
  }
}

TEST_CASE("sample CSV layout") {
  std::vector<GroupSample> groups{gen_linear_group(regression(Eigen::Vector2d(0.3, 0)), 3, 1),
                                  gen_linear_group({2, Eigen::Vector2d(0, 0.3), Task::kRegression, 1.0}, 2, 2)};
  std::ostringstream out;
  write_samples_csv(out, 4, groups);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "group,run,row,x0,x1,y");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(rows == 5);
  CHECK(out.str().find("\n2,4,1,") != std::string::npos);
  // 17 significant digits round-trip exactly.
  std::istringstream first(out.str().substr(out.str().find('\n') + 1));
  std::string cell;
  for (int k = 0; k < 4; ++k) std::getline(first, cell, ',');
  CHECK(std::stod(cell) == groups[0].X(0, 0));
}
