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

#ifndef MALFARE_BOUNDS_ERRORS_HPP_
#define MALFARE_BOUNDS_ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace mfb {

/// Vector or matrix sizes that do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the domain of a function (negative risk, bad label, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A malformed malfare, loss or parameter-space specification.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A malformed experiment configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The iterative solver stopped before reaching its tolerance. Carries the
/// best iterate found and an estimate of its suboptimality.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, Eigen::VectorXd best_iterate,
              double gap_estimate)
      : std::runtime_error(what),
        best_iterate_(std::move(best_iterate)),
        gap_estimate_(gap_estimate) {}

  const Eigen::VectorXd& best_iterate() const noexcept { return best_iterate_; }
  double gap_estimate() const noexcept { return gap_estimate_; }

 private:
  Eigen::VectorXd best_iterate_;
  double gap_estimate_;
};

/// A restricted parameter set turned out to be empty. Since the malfare
/// minimizer is feasible by construction this signals an internal
/// inconsistency (e.g. a threshold computed from a different sample).
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double violation)
      : std::runtime_error(what), violation_(violation) {}
  double violation() const noexcept { return violation_; }

 private:
  double violation_;
};

}  // namespace mfb

#endif  // MALFARE_BOUNDS_ERRORS_HPP_
