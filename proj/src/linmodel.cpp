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

#include "malfare_bounds/linmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "malfare_bounds/errors.hpp"

namespace mfb {
namespace {

// ln(1 + e^z) without overflow.
double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// 1 / (1 + e^{-z})
double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_finite_bounds(double x_max, double y_max) {
  if (!std::isfinite(x_max) || !std::isfinite(y_max) || x_max < 0.0 || y_max < 0.0) {
    throw SpecError("domain bounds must be finite and nonnegative");
  }
}

}  // namespace

ParamSpace ParamSpace::make(std::size_t d, double rho) {
  if (!std::isfinite(rho) || rho < 0.0) throw SpecError("L1 radius must be finite and >= 0");
  return ParamSpace{d, rho};
}

bool ParamSpace::contains(const Eigen::VectorXd& beta, double tol) const {
  return static_cast<std::size_t>(beta.size()) == d && beta.lpNorm<1>() <= rho + tol;
}

LossSpec LossSpec::make(LossKind kind, const ParamSpace& space, double x_max, double y_max) {
  LossSpec spec;
  spec.kind = kind;
  spec.x_max = x_max;
  spec.y_max = kind == LossKind::kLogistic ? 1.0 : y_max;
  spec.lambda = lipschitz_constant(kind, space, x_max, spec.y_max);
  spec.loss_range = mfb::loss_range(kind, space, x_max, spec.y_max);
  if (!(spec.lambda > 0.0)) throw SpecError("Lipschitz constant must be positive");
  return spec;
}

void validate_sample(const GroupSample& sample, const LossSpec& loss) {
  if (sample.m() == 0) throw DimensionError("empty sample");
  if (static_cast<std::size_t>(sample.X.rows()) != sample.m()) {
    throw DimensionError("feature rows do not match label count");
  }
  constexpr double kSlack = 1e-12;
  if (sample.X.size() > 0 && sample.X.cwiseAbs().maxCoeff() > loss.x_max + kSlack) {
    throw DomainError("feature outside [-x_max, x_max]");
  }
  for (Eigen::Index j = 0; j < sample.y.size(); ++j) {
    const double yj = sample.y[j];
    if (loss.kind == LossKind::kLogistic) {
      if (yj != 1.0 && yj != -1.0) throw DomainError("logistic labels must be -1 or +1");
    } else if (!(std::abs(yj) <= loss.y_max + kSlack)) {
      throw DomainError("label outside [-y_max, y_max]");
    }
  }
}

double predict(const Eigen::VectorXd& beta, const Eigen::VectorXd& x) {
  if (beta.size() != x.size()) throw DimensionError("parameter and feature dimensions differ");
  return beta.dot(x);
}

double loss(LossKind kind, double yhat, double y) {
  if (kind == LossKind::kSquare) {
    const double r = yhat - y;
    return r * r;
  }
  if (y != 1.0 && y != -1.0) throw DomainError("logistic label must be -1 or +1");
  return softplus(-yhat * y);
}

double loss_inner(LossKind kind, double yhat, double y) {
  return kind == LossKind::kSquare ? yhat - y : yhat * y;
}

double empirical_risk(const Eigen::VectorXd& beta, const GroupSample& sample, LossKind kind) {
  if (sample.m() == 0) throw DimensionError("empirical risk of an empty sample");
  if (static_cast<std::size_t>(beta.size()) != sample.d()) {
    throw DimensionError("parameter dimension does not match the sample");
  }
  const Eigen::VectorXd yhat = sample.X * beta;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < yhat.size(); ++j) acc += loss(kind, yhat[j], sample.y[j]);
  return acc / static_cast<double>(sample.m());
}

double lipschitz_constant(LossKind kind, const ParamSpace& space, double x_max, double y_max) {
  check_finite_bounds(x_max, y_max);
  if (kind == LossKind::kLogistic) return 1.0;
  // sup |beta . x - y| over the L1 ball and the L-inf feature box.
  return 2.0 * (space.rho * x_max + y_max);
}

double loss_range(LossKind kind, const ParamSpace& space, double x_max, double y_max) {
  check_finite_bounds(x_max, y_max);
  if (kind == LossKind::kSquare) {
    const double reach = space.rho * x_max + y_max;
    return reach * reach;
  }
  const double reach = space.rho * x_max;
  if (reach <= 0.0) throw SpecError("logistic loss range is zero for a zero-width class");
  return softplus(reach) - softplus(-reach);
}

AffineInner affine_inner(const GroupSample& sample, LossKind kind) {
  AffineInner out;
  if (kind == LossKind::kSquare) {
    out.a = sample.X;
    out.b = -sample.y;
  } else {
    out.a = sample.X.array().colwise() * sample.y.array();
    out.b = Eigen::VectorXd::Zero(sample.y.size());
  }
  return out;
}

GroupRisks::GroupRisks(std::span<const GroupSample> samples, LossKind kind) : kind_(kind) {
  if (samples.empty()) throw DimensionError("no group samples");
  dim_ = samples.front().d();
  groups_.reserve(samples.size());
  for (const GroupSample& s : samples) {
    if (s.m() == 0) throw DimensionError("empty group sample");
    if (s.d() != dim_) throw DimensionError("groups disagree on the feature dimension");
    Group g;
    g.m = s.m();
    const double inv_m = 1.0 / static_cast<double>(g.m);
    if (kind == LossKind::kSquare) {
      g.gram = (s.X.transpose() * s.X) * inv_m;
      g.cross = (s.X.transpose() * s.y) * inv_m;
      g.y2 = s.y.squaredNorm() * inv_m;
    } else {
      for (Eigen::Index j = 0; j < s.y.size(); ++j) {
        if (s.y[j] != 1.0 && s.y[j] != -1.0) throw DomainError("logistic labels must be -1 or +1");
      }
      g.margins = s.X.array().colwise() * s.y.array();
    }
    groups_.push_back(std::move(g));
  }
}

std::vector<std::size_t> GroupRisks::sample_sizes() const {
  std::vector<std::size_t> out;
  for (const Group& g : groups_) out.push_back(g.m);
  return out;
}

double GroupRisks::value(std::size_t j, const Eigen::VectorXd& beta) const {
  const Group& g = groups_[j];
  if (kind_ == LossKind::kSquare) {
    const double v = beta.dot(g.gram * beta) - 2.0 * g.cross.dot(beta) + g.y2;
    return v > 0.0 ? v : 0.0;
  }
  const Eigen::VectorXd u = g.margins * beta;
  double acc = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) acc += softplus(-u[k]);
  return acc / static_cast<double>(g.m);
}

Eigen::VectorXd GroupRisks::values(const Eigen::VectorXd& beta) const {
  Eigen::VectorXd out(groups_.size());
  for (std::size_t j = 0; j < groups_.size(); ++j) out[static_cast<Eigen::Index>(j)] = value(j, beta);
  return out;
}

void GroupRisks::derivatives(std::size_t j, const Eigen::VectorXd& beta, RiskDerivatives& out) const {
  const Group& g = groups_[j];
  if (kind_ == LossKind::kSquare) {
    const Eigen::VectorXd ab = g.gram * beta;
    out.value = std::max(0.0, beta.dot(ab) - 2.0 * g.cross.dot(beta) + g.y2);
    out.gradient = 2.0 * (ab - g.cross);
    out.hessian = 2.0 * g.gram;
    return;
  }
  const Eigen::VectorXd u = g.margins * beta;
  const double inv_m = 1.0 / static_cast<double>(g.m);
  Eigen::VectorXd slope(u.size());
  Eigen::VectorXd root_curvature(u.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    // softplus(-u) and logistic(-u) from one exponential.
    const double e = std::exp(-std::abs(u[k]));
    acc += std::max(-u[k], 0.0) + std::log1p(e);
    const double s = u[k] > 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
    slope[k] = -s * inv_m;
    root_curvature[k] = std::sqrt(s * (1.0 - s) * inv_m);
  }
  out.value = acc * inv_m;
  out.gradient = g.margins.transpose() * slope;
  const Eigen::MatrixXd scaled = root_curvature.asDiagonal() * g.margins;
  out.hessian.setZero(dim_, dim_);
  out.hessian.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
  out.hessian.triangularView<Eigen::StrictlyUpper>() = out.hessian.transpose();
}

}  // namespace mfb
