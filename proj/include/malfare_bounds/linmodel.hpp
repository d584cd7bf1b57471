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

#ifndef MALFARE_BOUNDS_LINMODEL_HPP_
#define MALFARE_BOUNDS_LINMODEL_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mfb {

/// L1-ball parameter set {beta in R^d : ||beta||_1 <= rho}.
struct ParamSpace {
  std::size_t d = 0;
  double rho = 1.0;

  /// Validates rho >= 0 (rho = 0 is the constant-zero class).
  static ParamSpace make(std::size_t d, double rho);
  bool contains(const Eigen::VectorXd& beta, double tol = 0.0) const;
};

enum class LossKind { kSquare, kLogistic };

/// Loss l = f o g together with its Lipschitz constant (of f over the range of
/// g o H) and the range of l o H over the domain box.
struct LossSpec {
  LossKind kind = LossKind::kSquare;
  double lambda = 1.0;
  double loss_range = 1.0;
  double x_max = 1.0;
  double y_max = 1.0;

  /// Derives lambda and loss_range from the class and domain bounds.
  static LossSpec make(LossKind kind, const ParamSpace& space, double x_max, double y_max);
};

/// One group's labeled sample.
struct GroupSample {
  int group_id = 0;
  Eigen::MatrixXd X;  // m x d
  Eigen::VectorXd y;  // m

  std::size_t m() const noexcept { return static_cast<std::size_t>(y.size()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(X.cols()); }
};

/// Throws DimensionError/DomainError if the sample breaks the domain
/// invariants of `loss` (sizes, |x| <= x_max, label set or |y| <= y_max).
void validate_sample(const GroupSample& sample, const LossSpec& loss);

double predict(const Eigen::VectorXd& beta, const Eigen::VectorXd& x);

/// square: (yhat - y)^2; logistic: ln(1 + exp(-yhat * y)) with y in {-1,+1}.
double loss(LossKind kind, double yhat, double y);

/// The inner map g of l = f o g: square yhat - y, logistic yhat * y.
double loss_inner(LossKind kind, double yhat, double y);

double empirical_risk(const Eigen::VectorXd& beta, const GroupSample& sample, LossKind kind);

/// square: 2 (rho x_max + y_max); logistic: 1.
double lipschitz_constant(LossKind kind, const ParamSpace& space, double x_max, double y_max);

/// square: (rho x_max + y_max)^2;
/// logistic: ln(1 + e^{rho x_max}) - ln(1 + e^{-rho x_max}).
double loss_range(LossKind kind, const ParamSpace& space, double x_max, double y_max);

/// g(x_j . beta, y_j) = a_j . beta + b_j for every sample row.
struct AffineInner {
  Eigen::MatrixXd a;  // m x d
  Eigen::VectorXd b;  // m
};
AffineInner affine_inner(const GroupSample& sample, LossKind kind);

/// First and second derivatives of one group's empirical risk.
struct RiskDerivatives {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Per-group empirical risk oracle over a fixed set of samples. Square loss
/// is reduced to its sufficient statistics; logistic keeps the margin matrix.
class GroupRisks {
 public:
  GroupRisks(std::span<const GroupSample> samples, LossKind kind);

  std::size_t groups() const noexcept { return groups_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t sample_size(std::size_t j) const noexcept { return groups_[j].m; }
  std::vector<std::size_t> sample_sizes() const;
  LossKind kind() const noexcept { return kind_; }

  double value(std::size_t j, const Eigen::VectorXd& beta) const;
  Eigen::VectorXd values(const Eigen::VectorXd& beta) const;
  void derivatives(std::size_t j, const Eigen::VectorXd& beta, RiskDerivatives& out) const;

 private:
  struct Group {
    std::size_t m = 0;
    // square
    Eigen::MatrixXd gram;   // X^T X / m
    Eigen::VectorXd cross;  // X^T y / m
    double y2 = 0.0;        // y^T y / m
    // logistic: rows y_j x_j
    Eigen::MatrixXd margins;
  };
  LossKind kind_;
  std::size_t dim_ = 0;
  std::vector<Group> groups_;
};

}  // namespace mfb

#endif  // MALFARE_BOUNDS_LINMODEL_HPP_
