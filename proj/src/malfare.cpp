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

#include "malfare_bounds/malfare.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "malfare_bounds/errors.hpp"

namespace mfb {
namespace {

constexpr double kWeightSumTolerance = 1e-12;

void check_probability_vector(const std::vector<double>& w, bool strictly_positive) {
  if (w.empty()) throw SpecError("malfare weights must be non-empty");
  double sum = 0.0;
  for (double wi : w) {
    if (!std::isfinite(wi) || wi < 0.0 || (strictly_positive && wi <= 0.0)) {
      throw SpecError("malfare weight out of range: " + std::to_string(wi));
    }
    sum += wi;
  }
  if (std::abs(sum - 1.0) > kWeightSumTolerance) {
    throw SpecError("malfare weights must sum to 1, got " + std::to_string(sum));
  }
}

void check_risks(std::span<const double> risks, const MalfareSpec& spec,
                 bool allow_negative) {
  if (risks.size() != spec.groups()) {
    throw DimensionError("risk vector has " + std::to_string(risks.size()) +
                         " entries, malfare expects " + std::to_string(spec.groups()));
  }
  for (double s : risks) {
    if (!std::isfinite(s)) throw DomainError("non-finite risk");
    if (!allow_negative && s < 0.0) {
      throw DomainError("negative risk " + std::to_string(s) + " (clamp before aggregating)");
    }
  }
}

double weighted_sum(std::span<const double> s, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += w[i] * s[i];
  return acc;
}

double gini_unchecked(std::span<const double> s, const std::vector<double>& w) {
  std::vector<double> sorted(s.begin(), s.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return weighted_sum(sorted, w);
}

double power_mean_unchecked(std::span<const double> s, const MalfareSpec& spec) {
  if (spec.p().is_infinite()) return *std::max_element(s.begin(), s.end());
  const double p = spec.p().value();
  const auto& w = spec.weights();
  if (p == 1.0) return weighted_sum(s, w);
  // Factor out the max so s^p cannot overflow.
  const double top = *std::max_element(s.begin(), s.end());
  if (top == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) acc += w[i] * std::pow(s[i] / top, p);
  return top * std::pow(acc, 1.0 / p);
}

}  // namespace

Exponent Exponent::finite(double p) {
  if (!std::isfinite(p) || p < 1.0) {
    throw SpecError("power-mean exponent must be a finite value >= 1 (use Exponent::infinity())");
  }
  Exponent e;
  e.infinite_ = false;
  e.value_ = p;
  return e;
}

MalfareSpec MalfareSpec::power_mean(Exponent p, std::vector<double> weights) {
  check_probability_vector(weights, /*strictly_positive=*/true);
  return MalfareSpec(MalfareKind::kPowerMean, p, std::move(weights));
}

MalfareSpec MalfareSpec::utilitarian(std::vector<double> weights) {
  return power_mean(Exponent::finite(1.0), std::move(weights));
}

MalfareSpec MalfareSpec::egalitarian(std::vector<double> weights) {
  return power_mean(Exponent::infinity(), std::move(weights));
}

MalfareSpec MalfareSpec::gini(std::vector<double> descending_weights) {
  check_probability_vector(descending_weights, /*strictly_positive=*/false);
  if (!std::is_sorted(descending_weights.begin(), descending_weights.end(), std::greater<>())) {
    throw SpecError("Gini weights must be non-increasing");
  }
  return MalfareSpec(MalfareKind::kGini, Exponent::finite(1.0), std::move(descending_weights));
}

std::vector<double> MalfareSpec::proportional_weights(std::span<const std::size_t> sizes) {
  const double total = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), std::size_t{0}));
  if (sizes.empty() || total <= 0.0) throw SpecError("proportional weights need positive sizes");
  std::vector<double> w;
  w.reserve(sizes.size());
  for (std::size_t m : sizes) w.push_back(static_cast<double>(m) / total);
  return w;
}

double power_mean(std::span<const double> risks, const MalfareSpec& spec) {
  if (spec.kind() != MalfareKind::kPowerMean) throw SpecError("power_mean called with a Gini spec");
  check_risks(risks, spec, /*allow_negative=*/false);
  return power_mean_unchecked(risks, spec);
}

double gini_malfare(std::span<const double> risks, const MalfareSpec& spec) {
  if (spec.kind() != MalfareKind::kGini) throw SpecError("gini_malfare called with a power-mean spec");
  check_risks(risks, spec, /*allow_negative=*/false);
  return gini_unchecked(risks, spec.weights());
}

double malfare(std::span<const double> risks, const MalfareSpec& spec) {
  return spec.kind() == MalfareKind::kGini ? gini_malfare(risks, spec) : power_mean(risks, spec);
}

double malfare_extended(std::span<const double> values, const MalfareSpec& spec) {
  if (!spec.defined_on_negative()) return malfare(values, spec);
  check_risks(values, spec, /*allow_negative=*/true);
  if (spec.kind() == MalfareKind::kGini) return gini_unchecked(values, spec.weights());
  return power_mean_unchecked(values, spec);
}

}  // namespace mfb
