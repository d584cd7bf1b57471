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

#ifndef MALFARE_BOUNDS_BOUNDS_HPP_
#define MALFARE_BOUNDS_BOUNDS_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "malfare_bounds/datagen.hpp"
#include "malfare_bounds/linmodel.hpp"
#include "malfare_bounds/malfare.hpp"
#include "malfare_bounds/optimize.hpp"

namespace mfb {

/// n x m matrix of Rademacher signs.
struct RademacherDraw {
  Eigen::MatrixXd sigma;
  std::uint64_t seed = 0;  // stream seed the signs came from (0 if supplied)

  std::size_t n() const noexcept { return static_cast<std::size_t>(sigma.rows()); }
  std::size_t m() const noexcept { return static_cast<std::size_t>(sigma.cols()); }

  /// One sign per 64-bit draw (top bit) of the keyed stream.
  static RademacherDraw generate(std::size_t n, std::size_t m, const StreamKey& key);
  /// Throws DomainError unless every entry is -1 or +1.
  static RademacherDraw from_matrix(Eigen::MatrixXd sigma);
};

/// r sqrt(ln(1/delta) / (2m)).
double hoeffding_epsilon(double r, double delta, std::size_t m);

/// Monte-Carlo Rademacher average of g o H (not scaled by lambda).
struct McEra {
  double value = 0.0;
  double std_error = 0.0;  // sample standard error over the draws
  std::vector<double> per_draw;
  std::vector<Eigen::VectorXd> argmax;  // filled only on request
};

/// Closed form over the bare ball: mean_k [rho ||v_k||_inf + offset_k].
McEra mcera(const GroupSample& sample, LossKind kind, const ParamSpace& space,
            const RademacherDraw& draw, bool keep_argmax = false);

/// Same average with each supremum taken over a restricted class.
McEra mcera(const GroupSample& sample, LossKind kind, const RestrictedMaximizer& cls,
            const RademacherDraw& draw, bool keep_argmax = false);

/// 2 lambda mcera + 2 eps.
double eta_hat(double mcera, double lambda, double eps);

/// 2 lambda mcera + 2 eps, i.e. eta_hat() applied to whichever class the
/// MCERA was taken over.
double group_generalization_bound(double mcera, double lambda, double eps);

struct RestrictedBuild {
  RestrictedClass cls;
  ThresholdResult threshold;
};

/// Restricted class for `focus`: slack 2 eta_hat, threshold
/// inf_beta W(R(beta) + 2 eps e_focus). `beta_hat` (may be empty) is the EMM
/// solution, used as a candidate for the infimum.
RestrictedBuild build_restricted_class(std::shared_ptr<const GroupRisks> risks, const MalfareSpec& malfare,
                                       const ParamSpace& space, std::size_t focus, double eta_hat,
                                       double eps, const SolveOptions& opts,
                                       const Eigen::VectorXd& beta_hat = {},
                                       LhsClamp clamp = LhsClamp::kWhenUndefined);

struct Sandwich {
  double lower = 0.0;        // W(max(0, R - b))
  double upper = 0.0;        // W(R + b)
  double upper_loose = 0.0;  // W(R) + ||b||_inf
};

Sandwich malfare_sandwich(std::span<const double> emp_risks, const MalfareSpec& malfare,
                          std::span<const double> bounds);

/// max_j (2 lambda mcera_restricted_j + 3 eps_j), the sup-norm instance.
double malfare_suboptimality_bound(std::span<const double> lambda_mcera_restricted,
                                   std::span<const double> eps);

/// Failure probabilities attached to each reported quantity.
struct FailureProbabilities {
  double group_bound_full = 0.0;        // 2 delta
  double emm_in_restricted = 0.0;       // 4 delta
  double group_bound_restricted = 0.0;  // 6 delta
  double sandwich = 0.0;                // 5 g delta
  double suboptimality = 0.0;           // 6 g delta

  static FailureProbabilities from(double delta, std::size_t groups);
};

struct GroupBound {
  std::size_t group = 0;
  std::size_t m = 0;
  double eps = 0.0;
  double mcera_full = 0.0;        // lambda-scaled
  double mcera_full_se = 0.0;     // lambda-scaled
  double mcera_restricted = 0.0;  // lambda-scaled
  double mcera_restricted_se = 0.0;
  double eta_hat = 0.0;
  double bound_full = 0.0;
  double bound_restricted = 0.0;
  double threshold = 0.0;
  double emp_risk = 0.0;
  double test_risk = 0.0;  // NaN unless filled by the caller
  /// lhs(beta_hat) - threshold of the restricted class (NaN when skipped).
  double emm_violation = 0.0;
  std::shared_ptr<const RestrictedClass> restricted;  // null when skipped
  std::vector<Eigen::VectorXd> argmax_full;
  std::vector<Eigen::VectorXd> argmax_restricted;
};

struct BoundReport {
  double delta = 0.1;
  FailureProbabilities failure;
  Eigen::VectorXd beta_hat;
  double emp_malfare = 0.0;
  std::vector<GroupBound> groups;
  Sandwich sandwich;
  double suboptimality = 0.0;
};

struct BoundOptions {
  double delta = 0.1;
  SolveOptions solve;
  LhsClamp clamp = LhsClamp::kWhenUndefined;
  bool keep_argmax = false;
  /// Skip the restricted classes (bound_restricted = bound_full).
  bool full_only = false;
};

/// Fits the EMM model and computes every per-group and malfare-level bound.
/// `draws[i]` must have m = samples[i].m(); the same draw feeds the full and
/// restricted MCERA.
BoundReport compute_bounds(std::span<const GroupSample> samples, const MalfareSpec& malfare,
                           const ParamSpace& space, const LossSpec& loss,
                           std::span<const RademacherDraw> draws, const BoundOptions& opts);

/// Header `run,total_m,group,m_i,eps,mcera_full,mcera_restr,bound_full,bound_restr,threshold_c,emp_risk,test_risk`.
void write_bounds_csv_header(std::ostream& out);
void write_bounds_csv_rows(std::ostream& out, int run, std::size_t total_m, const BoundReport& report);

}  // namespace mfb

#endif  // MALFARE_BOUNDS_BOUNDS_HPP_
