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

#ifndef MALFARE_BOUNDS_OPTIMIZE_HPP_
#define MALFARE_BOUNDS_OPTIMIZE_HPP_

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "malfare_bounds/linmodel.hpp"
#include "malfare_bounds/malfare.hpp"

namespace mfb {

enum class Method {
  /// Log-barrier Newton method on the lifted L1 ball. Handles every malfare.
  kInteriorPoint,
  /// Monotone projected gradient with exact L1 projection. Smooth objectives
  /// only (finite p); other objectives fall back to kInteriorPoint.
  kProjectedGradient,
};

struct SolveOptions {
  double obj_tol = 1e-6;   // duality-gap / Frank-Wolfe-gap target
  double feas_tol = 1e-8;  // allowed constraint violation
  int max_iterations = 50000;
  Method method = Method::kInteriorPoint;
};

struct SolveResult {
  Eigen::VectorXd beta;
  double objective = 0.0;     // true objective at beta
  double gap_estimate = 0.0;  // certified upper bound on objective - optimum
  int iterations = 0;
  Method method = Method::kInteriorPoint;
  /// Objective after each outer iteration (centering step or accepted
  /// gradient step); non-increasing.
  std::vector<double> trace;
};

/// Euclidean projection onto {||b||_1 <= rho}.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double rho);

struct LinearMax {
  double value = 0.0;
  Eigen::VectorXd argmax;
};

/// sup_{||b||_1 <= rho} v . b = rho ||v||_inf, attained at rho sign(v_k) e_k
/// for the first k with |v_k| maximal.
LinearMax max_linear_l1_ball(const Eigen::VectorXd& v, double rho);

/// Same supremum computed by the iterative solver instead of the closed form.
LinearMax max_linear_l1_ball_iterative(const Eigen::VectorXd& v, double rho,
                                       const SolveOptions& opts = {});

SolveResult solve_erm(const GroupSample& sample, const ParamSpace& space, LossKind kind,
                      const SolveOptions& opts = {});

/// argmin_beta W(R(beta) + shift). `shift` is empty or has one nonnegative
/// entry per group.
SolveResult solve_emm(const GroupRisks& risks, const MalfareSpec& malfare, const ParamSpace& space,
                      const SolveOptions& opts = {}, std::span<const double> shift = {});

SolveResult solve_emm(std::span<const GroupSample> samples, LossKind kind, const MalfareSpec& malfare,
                      const ParamSpace& space, const SolveOptions& opts = {});

/// Whether the adjusted focus risk is clamped at zero inside the restricted
/// class constraint.
enum class LhsClamp {
  /// Only when the malfare is undefined on negative inputs (finite p > 1).
  kWhenUndefined,
  kAlways,
};

/// { beta in B : W(R_1, ..., R_focus - slack, ..., R_g) <= threshold }.
class RestrictedClass {
 public:
  RestrictedClass(ParamSpace base, std::shared_ptr<const GroupRisks> risks, MalfareSpec malfare,
                  std::size_t focus, double slack, double threshold,
                  LhsClamp clamp = LhsClamp::kWhenUndefined);

  const ParamSpace& base() const noexcept { return base_; }
  const GroupRisks& risks() const noexcept { return *risks_; }
  const MalfareSpec& malfare() const noexcept { return malfare_; }
  std::size_t focus() const noexcept { return focus_; }
  double slack() const noexcept { return slack_; }
  double threshold() const noexcept { return threshold_; }
  LhsClamp clamp() const noexcept { return clamp_; }
  bool clamped() const noexcept;

  /// Left-hand side of the defining inequality at beta.
  double lhs(const Eigen::VectorXd& beta) const;
  /// max(0, lhs - threshold).
  double violation(const Eigen::VectorXd& beta) const;
  bool contains(const Eigen::VectorXd& beta, double tol = 0.0) const;

 private:
  ParamSpace base_;
  std::shared_ptr<const GroupRisks> risks_;
  MalfareSpec malfare_;
  std::size_t focus_;
  double slack_;
  double threshold_;
  LhsClamp clamp_;
};

/// Repeated linear maximization over one restricted class. The interior
/// point found by Phase I is shared by every call.
class RestrictedMaximizer {
 public:
  /// `hint` (may be empty) should be a point of the class, e.g. the EMM
  /// solution. Throws InfeasibleError if the class is empty beyond feas_tol.
  RestrictedMaximizer(const RestrictedClass& cls, const SolveOptions& opts,
                      const Eigen::VectorXd& hint = {});
  ~RestrictedMaximizer();
  RestrictedMaximizer(RestrictedMaximizer&&) noexcept;
  RestrictedMaximizer& operator=(RestrictedMaximizer&&) noexcept;

  /// sup over the class of v . beta, returned at a feasible point, so the
  /// value never exceeds the bare-ball supremum. `iterative` skips the
  /// vertex shortcut.
  LinearMax maximize(const Eigen::VectorXd& v, bool iterative = false) const;

  /// Max constraint violation left after Phase I (<= 0 when the class has
  /// an interior).
  double phase_one_violation() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

LinearMax max_linear_over_restricted(const Eigen::VectorXd& v, const RestrictedClass& cls,
                                     const SolveOptions& opts = {});

struct ThresholdResult {
  double value = 0.0;
  Eigen::VectorXd beta;
  double gap_estimate = 0.0;
};

/// inf_beta W(R(beta) + eps_i e_focus), with `candidate` (if non-empty) also
/// evaluated so the returned value is never above W(R(candidate) + shift).
ThresholdResult shifted_emm_threshold(const GroupRisks& risks, const MalfareSpec& malfare,
                                      const ParamSpace& space, std::size_t focus, double shift,
                                      const SolveOptions& opts = {},
                                      const Eigen::VectorXd& candidate = {});

}  // namespace mfb

#endif  // MALFARE_BOUNDS_OPTIMIZE_HPP_
