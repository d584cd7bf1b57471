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

#include "malfare_bounds/fastrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>

#include "malfare_bounds/bounds.hpp"
#include "malfare_bounds/errors.hpp"

namespace mfb {

bool FastRatePoint::restriction_active() const noexcept {
  return radius_restricted * radius_restricted * mean_abs < 2.0 * rade_full;
}

double mean_abs_rademacher(std::size_t m) {
  if (m == 0) throw DomainError("m must be positive");
  const std::size_t n = m / 2;
  if (n <= 30) {
    // C(2n, n) built incrementally: C(2k, k) = C(2k-2, k-1) * 2(2k-1) / k.
    std::uint64_t c = 1;
    for (std::size_t k = 1; k <= n; ++k) c = c * 2 * (2 * k - 1) / k;
    return std::ldexp(static_cast<double>(c), -2 * static_cast<int>(n));
  }
  const double nn = static_cast<double>(n);
  return std::exp(std::lgamma(2.0 * nn + 1.0) - 2.0 * std::lgamma(nn + 1.0) - 2.0 * nn * std::log(2.0));
}

std::vector<FastRatePoint> fastrate_curve(std::span<const std::size_t> m_grid, double delta, double r) {
  if (!(r > 0.0)) throw DomainError("r must be positive");
  std::vector<FastRatePoint> out;
  out.reserve(m_grid.size());
  for (std::size_t k = 0; k < m_grid.size(); ++k) {
    if (k > 0 && m_grid[k] <= m_grid[k - 1]) throw DomainError("m grid must be increasing");
    FastRatePoint p;
    p.m = m_grid[k];
    p.mean_abs = mean_abs_rademacher(p.m);
    p.eps = hoeffding_epsilon(r, delta, p.m);
    p.rade_full = r * r / 2.0 * p.mean_abs;
    p.radius_restricted = std::min(r, std::sqrt(4.0 * p.rade_full + 6.0 * p.eps));
    p.rade_restricted = p.radius_restricted * p.radius_restricted / 2.0 * p.mean_abs;
    out.push_back(p);
  }
  return out;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("slope fit needs two or more paired points");
  double mx = 0.0;
  double my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw DomainError("log-log fit needs positive values");
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw DomainError("log-log fit needs distinct x values");
  return sxy / sxx;
}

void write_fastrate_csv(std::ostream& out, std::span<const FastRatePoint> curve) {
  const auto old = out.precision(17);
  out << "m,eps,rade_full,radius_restricted,rade_restricted\n";
  for (const FastRatePoint& p : curve)
    out << p.m << ',' << p.eps << ',' << p.rade_full << ',' << p.radius_restricted << ',' << p.rade_restricted << '\n';
  out.precision(old);
}

}  // namespace mfb
