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

#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "malfare_bounds/errors.hpp"
#include "malfare_bounds/malfare.hpp"
#include "test_support.hpp"

using namespace mfb;
using doctest::Approx;

namespace {

MalfareSpec pm(double p, std::vector<double> w) { return MalfareSpec::power_mean(Exponent::finite(p), std::move(w)); }

}  // namespace

TEST_CASE("power mean examples") {
  const std::vector<double> s{0.2, 0.4};
  CHECK(malfare(s, MalfareSpec::utilitarian({0.5, 0.5})) == Approx(0.3).epsilon(1e-15));
  CHECK(malfare(s, MalfareSpec::egalitarian({0.9, 0.1})) == 0.4);
  CHECK(malfare(std::vector<double>{0.3, 0.4}, pm(2.0, {0.5, 0.5})) ==
        Approx(std::sqrt(0.5 * 0.09 + 0.5 * 0.16)).epsilon(1e-15));
  CHECK(malfare(std::vector<double>{0.3, 0.4}, pm(2.0, {0.5, 0.5})) == Approx(0.3535533905932738));
}

TEST_CASE("constant vectors are fixed points") {
  testing::Gen gen(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t g = gen.index(1, 6);
    const double c = gen.uniform(0.0, 3.0);
    const std::vector<double> s(g, c);
    const auto w = gen.simplex(g);
    CHECK(malfare(s, MalfareSpec::utilitarian(w)) == Approx(c).epsilon(1e-12));
    CHECK(malfare(s, pm(gen.uniform(1.0, 60.0), w)) == Approx(c).epsilon(1e-12));
    CHECK(malfare(s, MalfareSpec::egalitarian(w)) == c);
  }
}

TEST_CASE("gini examples") {
  const std::vector<double> s{0.1, 0.7};
  CHECK(malfare(s, MalfareSpec::gini({1.0, 0.0})) == Approx(0.7));
  CHECK(malfare(s, MalfareSpec::gini({0.5, 0.5})) == Approx(0.4));
  CHECK(malfare(s, MalfareSpec::gini({0.7, 0.3})) == Approx(0.52));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(malfare(std::vector<double>{-0.1, 0.2}, MalfareSpec::utilitarian({0.5, 0.5})), DomainError);
  CHECK_THROWS_AS(malfare(std::vector<double>{0.1}, MalfareSpec::utilitarian({0.5, 0.5})), DimensionError);
  CHECK_THROWS_AS(MalfareSpec::gini({0.3, 0.7}), SpecError);
  CHECK_THROWS_AS(Exponent::finite(0.5), SpecError);
  CHECK_THROWS_AS(Exponent::finite(std::numeric_limits<double>::infinity()), SpecError);
  CHECK_THROWS_AS(MalfareSpec::utilitarian({0.5, 0.6}), SpecError);
  CHECK_THROWS_AS(MalfareSpec::utilitarian({1.0, 0.0}), SpecError);
  CHECK_THROWS_AS(malfare(std::vector<double>{std::nan(""), 0.2}, MalfareSpec::utilitarian({0.5, 0.5})),
                  DomainError);
}

TEST_CASE("infinity is a distinguished exponent") {
  CHECK(Exponent::infinity().is_infinite());
  CHECK_FALSE(Exponent::finite(1e300).is_infinite());
  CHECK(Exponent::infinity() == Exponent::infinity());
  CHECK_FALSE(Exponent::finite(2.0) == Exponent::infinity());
}

TEST_CASE("large p does not overflow") {
  const std::vector<double> s{3.0, 2.0, 1e-3};
  const auto w = std::vector<double>{0.2, 0.3, 0.5};
  const double v = malfare(s, pm(500.0, w));
  CHECK(std::isfinite(v));
  CHECK(v == Approx(3.0 * std::pow(0.2, 1.0 / 500.0)).epsilon(1e-12));
  CHECK(malfare(std::vector<double>{0.0, 0.0}, pm(100.0, {0.5, 0.5})) == 0.0);
  CHECK(malfare(std::vector<double>{1e200, 1e200}, pm(3.0, {0.5, 0.5})) == Approx(1e200));
}

TEST_CASE("extended evaluation on negative inputs") {
  const std::vector<double> s{-0.2, 0.4};
  CHECK(malfare_extended(s, MalfareSpec::utilitarian({0.5, 0.5})) == Approx(0.1));
  CHECK(malfare_extended(s, MalfareSpec::egalitarian({0.5, 0.5})) == Approx(0.4));
  CHECK(malfare_extended(std::vector<double>{-0.5, -0.2}, MalfareSpec::egalitarian({0.5, 0.5})) == Approx(-0.2));
  CHECK(malfare_extended(s, MalfareSpec::gini({0.7, 0.3})) == Approx(0.7 * 0.4 - 0.3 * 0.2));
  CHECK_THROWS_AS(malfare_extended(s, pm(2.0, {0.5, 0.5})), DomainError);
}

TEST_CASE("proportional weights") {
  const std::vector<std::size_t> m{6500, 3000, 500};
  const auto w = MalfareSpec::proportional_weights(m);
  CHECK(w[0] == Approx(0.65));
  CHECK(w[1] == Approx(0.30));
  CHECK(w[2] == Approx(0.05));
}

// Property suite over random (S, S', w, p).
TEST_CASE("malfare properties on random instances") {
  testing::Gen gen(20260101);
  const std::vector<double> ladder{1.0, 1.5, 2.0, 4.0, 8.0};
  for (int t = 0; t < 1000; ++t) {
    const std::size_t g = gen.index(1, 8);
    const auto s = gen.risks(g);
    auto s2 = gen.risks(g);
    const auto w = gen.simplex(g);
    const double p = gen.uniform(1.0, 40.0);
    std::vector<double> above(g), sum(g);
    for (std::size_t j = 0; j < g; ++j) {
      above[j] = s[j] + gen.uniform(0.0, 0.5);
      sum[j] = s[j] + s2[j];
    }
    auto desc = gen.simplex(g);
    std::sort(desc.begin(), desc.end(), std::greater<>());
    const std::vector<MalfareSpec> specs{pm(p, w), MalfareSpec::utilitarian(w), MalfareSpec::egalitarian(w),
                                         MalfareSpec::gini(desc)};
    for (const auto& spec : specs) {
      // Monotone in every coordinate.
      CHECK(malfare(s, spec) <= malfare(above, spec) + 1e-12);
    }
    // Subadditive, and the second risk vector enters at most through its max.
    double s2_max = 0.0;
    for (double x : s2) s2_max = std::max(s2_max, x);
    for (const auto& spec : {pm(p, w), MalfareSpec::utilitarian(w), MalfareSpec::egalitarian(w)}) {
      CHECK(malfare(sum, spec) <= malfare(s, spec) + malfare(s2, spec) + 1e-12);
      CHECK(malfare(s, spec) + malfare(s2, spec) <= malfare(s, spec) + s2_max + 1e-12);
    }
    // Non-decreasing in p.
    double prev = 0.0;
    for (double q : ladder) {
      const double v = malfare(s, pm(q, w));
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    CHECK(malfare(s, MalfareSpec::egalitarian(w)) >= prev - 1e-12);
    // p = 1 is the weighted mean.
    double dot = 0.0;
    for (std::size_t j = 0; j < g; ++j) dot += w[j] * s[j];
    CHECK(malfare(s, MalfareSpec::utilitarian(w)) == Approx(dot).epsilon(1e-14));
    CHECK(malfare(s, pm(1.0, w)) == Approx(dot).epsilon(1e-14));
    // Very large finite p approaches the max.
    const double mx = malfare(s, MalfareSpec::egalitarian(w));
    if (mx > 0.0) CHECK(std::abs(malfare(s, pm(1e6, w)) - mx) <= 1e-3 * mx);
  }
}
