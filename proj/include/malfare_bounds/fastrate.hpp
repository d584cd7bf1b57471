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

#ifndef MALFARE_BOUNDS_FASTRATE_HPP_
#define MALFARE_BOUNDS_FASTRATE_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace mfb {

/// Mean estimation with unit-range losses, viewed through its Rademacher
/// average and the restricted radius that the empirical class shrinks to.
struct FastRatePoint {
  std::size_t m = 0;
  double mean_abs = 0.0;           // E|(1/m) sum sigma|
  double eps = 0.0;
  double rade_full = 0.0;          // r^2/2 * mean_abs
  double radius_restricted = 0.0;  // min(r, sqrt(4 rade_full + 6 eps))
  double rade_restricted = 0.0;    // radius^2/2 * mean_abs

  bool restriction_active() const noexcept;
};

/// Exact E|(1/m) sum_{i<=m} sigma_i| = C(2n, n) / 4^n with n = floor(m/2).
/// Integer arithmetic while C(2n, n) fits in 64 bits, log-gamma beyond.
double mean_abs_rademacher(std::size_t m);

std::vector<FastRatePoint> fastrate_curve(std::span<const std::size_t> m_grid, double delta, double r = 1.0);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// CSV with header `m,eps,rade_full,radius_restricted,rade_restricted`.
void write_fastrate_csv(std::ostream& out, std::span<const FastRatePoint> curve);

}  // namespace mfb

#endif  // MALFARE_BOUNDS_FASTRATE_HPP_
