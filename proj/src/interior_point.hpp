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

// Log-barrier interior-point engine for small convex programs over the L1
// ball whose nonlinear parts are compositions of per-group empirical risks.
//
// Variables are z = [beta (d), s (d), aux (n_aux)] with the ball written as
// -s <= beta <= s, sum(s) <= rho.

#ifndef MALFARE_BOUNDS_SRC_INTERIOR_POINT_HPP_
#define MALFARE_BOUNDS_SRC_INTERIOR_POINT_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "malfare_bounds/linmodel.hpp"

namespace mfb::detail {

/// coef * max(0, x + shift)^power, x being a group risk or an aux variable.
struct Term {
  enum class Source { kRisk, kAux };
  Source source = Source::kRisk;
  std::size_t index = 0;
  double coef = 1.0;
  double shift = 0.0;
  double power = 1.0;
};

/// sum(terms) + beta_linear . beta + constant. Convex as long as risk terms
/// have nonnegative coefficients and powers >= 1.
struct Composite {
  std::vector<Term> terms;
  Eigen::VectorXd beta_linear;  // empty = none
  double constant = 0.0;
};

/// minimize objective s.t. every constraint <= 0 and beta in the L1 ball.
struct Program {
  std::size_t d = 0;
  double rho = 1.0;
  std::size_t n_aux = 0;
  Composite objective;
  std::vector<Composite> constraints;
};

struct Settings {
  double gap_tol = 1e-6;
  double mu = 50.0;
  double t0 = 1.0;
  int max_newton = 50000;
  /// Return as soon as the objective drops below this (Phase I).
  std::optional<double> stop_below;
};

struct Outcome {
  Eigen::VectorXd z;
  double objective = 0.0;
  double gap = 0.0;
  int newton_steps = 0;
  std::vector<double> trace;  // objective after each centering
  bool converged = false;
};

std::size_t variable_count(const Program& prog);

/// Strictly interior L1 point near `hint` (shrunk towards 0 if needed).
Eigen::VectorXd interior_ball_point(const Eigen::VectorXd& hint, double rho, std::size_t n_aux);

double evaluate(const Composite& f, const Eigen::VectorXd& z, std::size_t d,
                const Eigen::VectorXd& risks);

/// Runs the barrier method from a strictly feasible z0. `risks` may be null
/// when no term references a group risk.
Outcome minimize(const Program& prog, const GroupRisks* risks, Eigen::VectorXd z0,
                 const Settings& settings);

/// Phase I: finds z with every constraint <= -margin (or the least violated
/// point). Returns the max constraint value at the returned point.
struct PhaseOne {
  Eigen::VectorXd z;
  double max_violation = 0.0;
};
PhaseOne find_interior(const Program& prog, const GroupRisks* risks, Eigen::VectorXd z0,
                       double margin, const Settings& settings);

}  // namespace mfb::detail

#endif  // MALFARE_BOUNDS_SRC_INTERIOR_POINT_HPP_
