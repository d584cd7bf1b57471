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

#ifndef MALFARE_BOUNDS_MALFARE_HPP_
#define MALFARE_BOUNDS_MALFARE_HPP_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace mfb {

/// Power-mean exponent in [1, +inf]. Infinity is a distinguished state and
/// is never approximated by a large finite value.
class Exponent {
 public:
  static Exponent finite(double p);
  static Exponent infinity() noexcept { return Exponent(); }

  bool is_infinite() const noexcept { return infinite_; }
  /// Finite value; only meaningful when !is_infinite().
  double value() const noexcept { return value_; }

  friend bool operator==(const Exponent&, const Exponent&) = default;

 private:
  Exponent() = default;
  bool infinite_ = true;
  double value_ = 0.0;
};

enum class MalfareKind { kPowerMean, kGini };

/// Risk-aggregation rule over g groups.
///
/// Power-mean: weights are a strictly positive probability vector.
/// Gini: weights are a non-increasing probability vector applied to the
/// risks sorted in descending order.
class MalfareSpec {
 public:
  static MalfareSpec power_mean(Exponent p, std::vector<double> weights);
  /// p = 1 with the given weights.
  static MalfareSpec utilitarian(std::vector<double> weights);
  /// p = inf; the weights are kept for reporting but never used.
  static MalfareSpec egalitarian(std::vector<double> weights);
  static MalfareSpec gini(std::vector<double> descending_weights);
  /// Weights proportional to group sample sizes.
  static std::vector<double> proportional_weights(std::span<const std::size_t> sizes);

  MalfareKind kind() const noexcept { return kind_; }
  const Exponent& p() const noexcept { return p_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  std::size_t groups() const noexcept { return weights_.size(); }

  bool is_utilitarian() const noexcept {
    return kind_ == MalfareKind::kPowerMean && !p_.is_infinite() && p_.value() == 1.0;
  }
  bool is_egalitarian() const noexcept {
    return kind_ == MalfareKind::kPowerMean && p_.is_infinite();
  }
  /// True when the aggregator extends linearly (p = 1, Gini) or as a max
  /// (p = inf) to negative arguments.
  bool defined_on_negative() const noexcept {
    return kind_ == MalfareKind::kGini || is_utilitarian() || is_egalitarian();
  }

 private:
  MalfareSpec(MalfareKind kind, Exponent p, std::vector<double> weights)
      : kind_(kind), p_(p), weights_(std::move(weights)) {}

  MalfareKind kind_;
  Exponent p_;
  std::vector<double> weights_;
};

/// Weighted power mean (sum_i w_i S_i^p)^(1/p), or max_i S_i for p = inf.
/// Throws DomainError on negative or non-finite risks and DimensionError on a
/// length mismatch.
double power_mean(std::span<const double> risks, const MalfareSpec& spec);

/// w_desc . sort_desc(S).
double gini_malfare(std::span<const double> risks, const MalfareSpec& spec);

/// Dispatches on spec.kind(). Requires nonnegative risks.
double malfare(std::span<const double> risks, const MalfareSpec& spec);

/// Like malfare() but accepts negative entries when the aggregator is
/// defined on them (see MalfareSpec::defined_on_negative()). Throws
/// DomainError otherwise.
double malfare_extended(std::span<const double> values, const MalfareSpec& spec);

}  // namespace mfb

#endif  // MALFARE_BOUNDS_MALFARE_HPP_
