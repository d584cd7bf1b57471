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

#include "malfare_bounds/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "interior_point.hpp"
#include "malfare_bounds/errors.hpp"

namespace mfb {
namespace {

using detail::Composite;
using detail::Term;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kMaxGiniGroups = 7;

Term risk_term(std::size_t j, double coef, double shift = 0.0, double power = 1.0) {
  return {Term::Source::kRisk, j, coef, shift, power};
}
Term aux_term(std::size_t a, double coef) { return {Term::Source::kAux, a, coef, 0.0, 1.0}; }

bool is_finite_power(const MalfareSpec& m) {
  return m.kind() == MalfareKind::kPowerMean && !m.p().is_infinite();
}

// Distinct coefficient vectors a with a[perm[k]] = w_desc[k] over all
// rankings perm of the groups.
std::vector<std::vector<double>> gini_coefficients(const std::vector<double>& w) {
  const std::size_t g = w.size();
  if (g > kMaxGiniGroups) throw SpecError("Gini malfare supports at most 7 groups in the solver");
  std::vector<std::size_t> perm(g);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::vector<double>> out;
  do {
    std::vector<double> a(g);
    for (std::size_t k = 0; k < g; ++k) a[perm[k]] = w[k];
    if (std::find(out.begin(), out.end(), a) == out.end()) out.push_back(std::move(a));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

void check_dims(const GroupRisks& risks, const MalfareSpec& malfare, const ParamSpace& space) {
  if (risks.dim() != space.d) throw DimensionError("parameter dimension does not match samples");
  if (malfare.groups() != risks.groups()) throw DimensionError("malfare weights do not match group count");
  if (space.d == 0) throw DimensionError("parameter dimension must be positive");
}

std::vector<double> shifted(const Eigen::VectorXd& r, std::span<const double> shift) {
  std::vector<double> out(r.data(), r.data() + r.size());
  for (std::size_t j = 0; j < shift.size(); ++j) out[j] += shift[j];
  return out;
}

double shifted_malfare(const GroupRisks& risks, const MalfareSpec& malfare, const Eigen::VectorXd& beta,
                       std::span<const double> shift) {
  return mfb::malfare(shifted(risks.values(beta), shift), malfare);
}

detail::Settings settings_for(const SolveOptions& opts, double gap_tol, double m_c, double scale) {
  detail::Settings s;
  s.gap_tol = gap_tol;
  s.max_newton = opts.max_iterations;
  s.t0 = m_c / std::max(scale, 1e-12);
  return s;
}

double barrier_count(const detail::Program& p) {
  return static_cast<double>(2 * p.d + 1 + p.constraints.size());
}

// --- EMM by interior point -------------------------------------------------

SolveResult emm_interior(const GroupRisks& risks, const MalfareSpec& malfare, const ParamSpace& space,
                         const SolveOptions& opts, std::span<const double> shift) {
  const std::size_t g = risks.groups();
  const auto& w = malfare.weights();
  auto sh = [&](std::size_t j) { return shift.empty() ? 0.0 : shift[j]; };

  detail::Program prog;
  prog.d = space.d;
  prog.rho = space.rho;
  Eigen::VectorXd z0 = detail::interior_ball_point(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.d)),
                                                   space.rho, 0);
  const Eigen::VectorXd beta0 = z0.head(static_cast<Eigen::Index>(space.d));
  const double w0 = shifted_malfare(risks, malfare, beta0, shift);

  SolveResult out;
  out.method = Method::kInteriorPoint;

  if (is_finite_power(malfare)) {
    const double p = malfare.p().value();
    // Two passes: the second rescales so the tolerance maps onto W.
    double scale = std::max(w0, 1e-12);
    Eigen::VectorXd z = z0;
    double gap_w = kInf;
    double t_warm = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      prog.objective = Composite{};
      const double inv = p == 1.0 ? 1.0 : std::pow(scale, -p);
      for (std::size_t j = 0; j < g; ++j) prog.objective.terms.push_back(risk_term(j, w[j] * inv, sh(j), p));
      const double f_start = detail::evaluate(prog.objective, z, prog.d,
                                              risks.values(z.head(static_cast<Eigen::Index>(prog.d))));
      double tol_f = p == 1.0 ? opts.obj_tol : (pass == 0 ? 1e-3 : 0.5 * opts.obj_tol * p / scale);
      auto settings = settings_for(opts, tol_f, barrier_count(prog), std::max(f_start, 1e-12));
      // Resume the second pass where the first left the central path.
      if (t_warm > settings.t0) settings.t0 = t_warm;
      const auto res = detail::minimize(prog, &risks, z, settings);
      z = res.z;
      out.iterations += res.newton_steps;
      for (double f : res.trace) out.trace.push_back(p == 1.0 ? f : scale * std::pow(std::max(f, 0.0), 1.0 / p));
      if (p == 1.0) {
        gap_w = res.gap;
        break;
      }
      const double f = res.objective;
      const double lo = std::max(0.0, f - res.gap);
      gap_w = lo > 0.0 ? scale * res.gap * std::pow(lo, 1.0 / p - 1.0) / p : scale * std::pow(f, 1.0 / p);
      if (pass == 0) {
        const double next = std::max(scale * std::pow(std::max(f, 1e-300), 1.0 / p), 1e-12);
        t_warm = barrier_count(prog) / res.gap * std::pow(next / scale, p);
        scale = next;
      }
    }
    out.beta = z.head(static_cast<Eigen::Index>(space.d));
    out.gap_estimate = gap_w;
  } else {
    // Epigraph: minimize t s.t. every piece <= t.
    prog.n_aux = 1;
    prog.objective.terms.push_back(aux_term(0, 1.0));
    if (malfare.is_egalitarian()) {
      for (std::size_t j = 0; j < g; ++j) {
        Composite c;
        c.terms = {risk_term(j, 1.0, sh(j)), aux_term(0, -1.0)};
        prog.constraints.push_back(std::move(c));
      }
    } else {
      for (const auto& a : gini_coefficients(w)) {
        Composite c;
        for (std::size_t j = 0; j < g; ++j)
          if (a[j] > 0.0) c.terms.push_back(risk_term(j, a[j], sh(j)));
        c.terms.push_back(aux_term(0, -1.0));
        prog.constraints.push_back(std::move(c));
      }
    }
    Eigen::VectorXd z(z0.size() + 1);
    z.head(z0.size()) = z0;
    z[z0.size()] = w0 + std::max(1.0, w0);
    const auto res = detail::minimize(prog, &risks, z,
                                      settings_for(opts, opts.obj_tol, barrier_count(prog), z[z0.size()]));
    out.beta = res.z.head(static_cast<Eigen::Index>(space.d));
    out.iterations = res.newton_steps;
    out.trace = res.trace;
    out.gap_estimate = res.gap;
  }
  out.objective = shifted_malfare(risks, malfare, out.beta, shift);
  return out;
}

// --- EMM by projected gradient ---------------------------------------------

SolveResult emm_projected_gradient(const GroupRisks& risks, const MalfareSpec& malfare,
                                   const ParamSpace& space, const SolveOptions& opts,
                                   std::span<const double> shift) {
  const std::size_t g = risks.groups();
  const double p = malfare.p().value();
  const auto& w = malfare.weights();
  const auto d = static_cast<Eigen::Index>(space.d);
  std::vector<RiskDerivatives> rd(g);

  auto value_and_gradient = [&](const Eigen::VectorXd& beta, Eigen::VectorXd& grad) {
    std::vector<double> u(g);
    for (std::size_t j = 0; j < g; ++j) {
      risks.derivatives(j, beta, rd[j]);
      u[j] = rd[j].value + (shift.empty() ? 0.0 : shift[j]);
    }
    const double W = mfb::malfare(u, malfare);
    grad = Eigen::VectorXd::Zero(d);
    if (W <= 0.0) return W;
    for (std::size_t j = 0; j < g; ++j) {
      const double c = p == 1.0 ? w[j] : w[j] * std::pow(u[j] / W, p - 1.0);
      grad += c * rd[j].gradient;
    }
    return W;
  };

  SolveResult out;
  out.method = Method::kProjectedGradient;
  out.beta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd grad;
  double f = value_and_gradient(out.beta, grad);
  out.trace.push_back(f);
  double step = 1.0;
  while (true) {
    const double fw_gap = grad.dot(out.beta) + space.rho * grad.lpNorm<Eigen::Infinity>();
    out.gap_estimate = fw_gap;
    if (fw_gap <= opts.obj_tol) break;
    if (out.iterations >= opts.max_iterations)
      throw SolverError("projected gradient iteration limit reached", out.beta, fw_gap);
    ++out.iterations;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      const Eigen::VectorXd cand = project_l1_ball(out.beta - step * grad, space.rho);
      const Eigen::VectorXd diff = cand - out.beta;
      Eigen::VectorXd cand_grad;
      const double fc = value_and_gradient(cand, cand_grad);
      if (fc <= f + grad.dot(diff) + diff.squaredNorm() / (2.0 * step) && fc <= f) {
        out.beta = cand;
        f = fc;
        grad = std::move(cand_grad);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // numerical floor: no representable descent
    out.trace.push_back(f);
    step *= 2.0;
  }
  out.objective = f;
  return out;
}

// --- restricted class as constraints ---------------------------------------

detail::Program restricted_program(const RestrictedClass& cls) {
  const GroupRisks& risks = cls.risks();
  const MalfareSpec& m = cls.malfare();
  const std::size_t g = risks.groups();
  const std::size_t i = cls.focus();
  const double c = cls.threshold();
  const double slack = cls.slack();
  const auto& w = m.weights();

  detail::Program prog;
  prog.d = cls.base().d;
  prog.rho = cls.base().rho;

  auto linear = [&](const std::vector<double>& a, bool include_focus, double rhs) {
    Composite f;
    for (std::size_t j = 0; j < g; ++j) {
      if (j == i && !include_focus) continue;
      if (a[j] > 0.0) f.terms.push_back(risk_term(j, a[j]));
    }
    f.constant = -rhs;
    if (f.terms.empty()) {
      if (rhs < 0.0) throw InfeasibleError("restricted class is empty", -rhs);
      return;
    }
    prog.constraints.push_back(std::move(f));
  };

  if (m.is_egalitarian()) {
    for (std::size_t j = 0; j < g; ++j) {
      Composite f;
      f.terms.push_back(risk_term(j, 1.0));
      f.constant = -(j == i ? c + slack : c);
      prog.constraints.push_back(std::move(f));
    }
  } else if (m.kind() == MalfareKind::kGini || m.is_utilitarian()) {
    const auto coefs = m.kind() == MalfareKind::kGini ? gini_coefficients(w) : std::vector<std::vector<double>>{w};
    for (const auto& a : coefs) {
      linear(a, true, c + a[i] * slack);
      if (cls.clamped()) linear(a, false, c);
    }
  } else {
    // Finite p > 1: aux t stands for max(0, R_i - slack).
    const double p = m.p().value();
    if (!(c > 0.0)) throw InfeasibleError("restricted class threshold is not positive", -c);
    prog.n_aux = 1;
    Composite nonneg;
    nonneg.terms.push_back(aux_term(0, -1.0));
    prog.constraints.push_back(std::move(nonneg));
    Composite above;
    above.terms = {risk_term(i, 1.0, -slack), aux_term(0, -1.0)};
    prog.constraints.push_back(std::move(above));
    Composite level;
    const double inv = std::pow(c, -p);
    for (std::size_t j = 0; j < g; ++j) {
      if (j == i)
        level.terms.push_back({Term::Source::kAux, 0, w[j] * inv, 0.0, p});
      else
        level.terms.push_back(risk_term(j, w[j] * inv, 0.0, p));
    }
    level.constant = -1.0;
    prog.constraints.push_back(std::move(level));
  }
  return prog;
}

}  // namespace

// --- L1 ball ---------------------------------------------------------------

Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double rho) {
  if (rho < 0.0) throw DomainError("rho must be nonnegative");
  if (v.lpNorm<1>() <= rho) return v;
  if (rho == 0.0) return Eigen::VectorXd::Zero(v.size());
  std::vector<double> u(v.data(), v.data() + v.size());
  for (double& x : u) x = std::abs(x);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - rho) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  Eigen::VectorXd out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double mag = std::max(std::abs(v[k]) - theta, 0.0);
    out[k] = v[k] < 0.0 ? -mag : mag;
  }
  return out;
}

LinearMax max_linear_l1_ball(const Eigen::VectorXd& v, double rho) {
  if (rho < 0.0) throw DomainError("rho must be nonnegative");
  LinearMax out;
  out.argmax = Eigen::VectorXd::Zero(v.size());
  if (v.size() == 0) return out;
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k)
    if (std::abs(v[k]) > std::abs(v[best])) best = k;
  out.argmax[best] = v[best] < 0.0 ? -rho : rho;
  out.value = rho * std::abs(v[best]);
  return out;
}

LinearMax max_linear_l1_ball_iterative(const Eigen::VectorXd& v, double rho, const SolveOptions& opts) {
  if (rho < 0.0) throw DomainError("rho must be nonnegative");
  const double scale = rho * v.lpNorm<Eigen::Infinity>();
  if (rho == 0.0 || v.size() == 0 || scale == 0.0) return {0.0, Eigen::VectorXd::Zero(v.size())};
  detail::Program prog;
  prog.d = static_cast<std::size_t>(v.size());
  prog.rho = rho;
  prog.objective.beta_linear = -v;
  const auto z0 = detail::interior_ball_point(Eigen::VectorXd::Zero(v.size()), rho, 0);
  const auto res = detail::minimize(prog, nullptr, z0, settings_for(opts, opts.obj_tol, barrier_count(prog), 2.0 * scale));
  LinearMax out;
  out.argmax = res.z.head(v.size());
  out.value = v.dot(out.argmax);
  return out;
}

// --- ERM / EMM ---------------------------------------------------------------

SolveResult solve_emm(const GroupRisks& risks, const MalfareSpec& malfare, const ParamSpace& space,
                      const SolveOptions& opts, std::span<const double> shift) {
  check_dims(risks, malfare, space);
  if (!shift.empty()) {
    if (shift.size() != risks.groups()) throw DimensionError("shift length does not match group count");
    for (double s : shift)
      if (!(s >= 0.0) || !std::isfinite(s)) throw DomainError("shift entries must be finite and nonnegative");
  }
  if (space.rho == 0.0) {
    SolveResult out;
    out.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.d));
    out.objective = shifted_malfare(risks, malfare, out.beta, shift);
    out.trace = {out.objective};
    out.method = opts.method;
    return out;
  }
  if (opts.method == Method::kProjectedGradient && is_finite_power(malfare))
    return emm_projected_gradient(risks, malfare, space, opts, shift);
  return emm_interior(risks, malfare, space, opts, shift);
}

SolveResult solve_emm(std::span<const GroupSample> samples, LossKind kind, const MalfareSpec& malfare,
                      const ParamSpace& space, const SolveOptions& opts) {
  const GroupRisks risks(samples, kind);
  return solve_emm(risks, malfare, space, opts);
}

SolveResult solve_erm(const GroupSample& sample, const ParamSpace& space, LossKind kind,
                      const SolveOptions& opts) {
  const GroupRisks risks(std::span<const GroupSample>(&sample, 1), kind);
  return solve_emm(risks, MalfareSpec::utilitarian({1.0}), space, opts);
}

// --- restricted class --------------------------------------------------------

RestrictedClass::RestrictedClass(ParamSpace base, std::shared_ptr<const GroupRisks> risks,
                                 MalfareSpec malfare, std::size_t focus, double slack, double threshold,
                                 LhsClamp clamp)
    : base_(base),
      risks_(std::move(risks)),
      malfare_(std::move(malfare)),
      focus_(focus),
      slack_(slack),
      threshold_(threshold),
      clamp_(clamp) {
  if (!risks_) throw SpecError("restricted class needs a risk oracle");
  check_dims(*risks_, malfare_, base_);
  if (focus_ >= risks_->groups()) throw DimensionError("focus group out of range");
  if (!(slack_ >= 0.0) || !std::isfinite(slack_)) throw DomainError("slack must be finite and nonnegative");
  if (!std::isfinite(threshold_)) throw DomainError("threshold must be finite");
}

bool RestrictedClass::clamped() const noexcept {
  return clamp_ == LhsClamp::kAlways || !malfare_.defined_on_negative();
}

double RestrictedClass::lhs(const Eigen::VectorXd& beta) const {
  Eigen::VectorXd r = risks_->values(beta);
  r[static_cast<Eigen::Index>(focus_)] -= slack_;
  if (clamped()) r[static_cast<Eigen::Index>(focus_)] = std::max(0.0, r[static_cast<Eigen::Index>(focus_)]);
  return malfare_extended(std::span<const double>(r.data(), static_cast<std::size_t>(r.size())), malfare_);
}

double RestrictedClass::violation(const Eigen::VectorXd& beta) const {
  return std::max(0.0, lhs(beta) - threshold_);
}

bool RestrictedClass::contains(const Eigen::VectorXd& beta, double tol) const {
  return base_.contains(beta, tol) && lhs(beta) <= threshold_ + tol;
}

namespace {

// The barrier leaves the maximizer slightly inside the class. Extend the ray
// from the interior point through it up to the boundary; the linear objective
// only grows along the way and the result stays feasible.
Eigen::VectorXd push_to_boundary(const RestrictedClass& cls, const Eigen::VectorXd& centre,
                                 const Eigen::VectorXd& beta, const Eigen::VectorXd& v) {
  const Eigen::VectorXd dir = beta - centre;
  const double reach = dir.lpNorm<Eigen::Infinity>();
  if (reach == 0.0 || v.dot(dir) <= 0.0 || !cls.contains(beta)) return beta;
  auto inside = [&](double a) { return cls.contains(centre + a * dir); };
  double lo = 1.0;
  double hi = 2.0;
  while (inside(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  while ((hi - lo) * reach > 1e-13 * (1.0 + beta.lpNorm<Eigen::Infinity>())) {
    const double mid = 0.5 * (lo + hi);
    (inside(mid) ? lo : hi) = mid;
  }
  return centre + lo * dir;
}

}  // namespace

struct RestrictedMaximizer::Impl {
  RestrictedClass cls;
  SolveOptions opts;
  detail::Program prog;
  Eigen::VectorXd z_interior;
  double phase_violation = 0.0;
};

RestrictedMaximizer::RestrictedMaximizer(const RestrictedClass& cls, const SolveOptions& opts,
                                         const Eigen::VectorXd& hint)
    : impl_(std::make_unique<Impl>(Impl{cls, opts, {}, {}, 0.0})) {
  Impl& im = *impl_;
  if (cls.base().rho == 0.0) return;
  im.prog = restricted_program(cls);
  const auto d = static_cast<Eigen::Index>(cls.base().d);
  const Eigen::VectorXd start = hint.size() == d ? hint : Eigen::VectorXd::Zero(d);
  Eigen::VectorXd z = detail::interior_ball_point(start, cls.base().rho, im.prog.n_aux);
  if (im.prog.n_aux == 1) {
    const double ri = cls.risks().value(cls.focus(), z.head(d)) - cls.slack();
    z[2 * d] = std::max(ri, 0.0) + 1e-3 * std::max(cls.threshold(), 1e-6);
  }
  detail::Settings s;
  s.gap_tol = 0.1 * opts.feas_tol;
  s.max_newton = opts.max_iterations;
  const double margin = 1e-2 * std::max(std::abs(cls.threshold()), 1e-6);
  const auto found = detail::find_interior(im.prog, &cls.risks(), z, margin, s);
  im.phase_violation = found.max_violation;
  im.z_interior = found.z;
  if (found.max_violation >= 0.0) {
    if (found.max_violation > opts.feas_tol)
      throw InfeasibleError("restricted class is empty", found.max_violation);
    const double relax = found.max_violation + opts.feas_tol;
    for (Composite& c : im.prog.constraints) c.constant -= relax;
  }
}

RestrictedMaximizer::~RestrictedMaximizer() = default;
RestrictedMaximizer::RestrictedMaximizer(RestrictedMaximizer&&) noexcept = default;
RestrictedMaximizer& RestrictedMaximizer::operator=(RestrictedMaximizer&&) noexcept = default;

double RestrictedMaximizer::phase_one_violation() const noexcept { return impl_->phase_violation; }

LinearMax RestrictedMaximizer::maximize(const Eigen::VectorXd& v, bool iterative) const {
  const Impl& im = *impl_;
  const ParamSpace& space = im.cls.base();
  if (static_cast<std::size_t>(v.size()) != space.d) throw DimensionError("direction has wrong dimension");
  const auto d = static_cast<Eigen::Index>(space.d);
  if (space.rho == 0.0) return {0.0, Eigen::VectorXd::Zero(d)};
  if (!iterative) {
    LinearMax vertex = max_linear_l1_ball(v, space.rho);
    if (im.cls.contains(vertex.argmax)) return vertex;
  }
  const double scale = space.rho * v.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return {0.0, im.z_interior.head(d)};
  detail::Program prog = im.prog;
  prog.objective.beta_linear = -v;
  const auto res = detail::minimize(prog, &im.cls.risks(), im.z_interior,
                                    settings_for(im.opts, im.opts.obj_tol, barrier_count(prog), 2.0 * scale));
  LinearMax out;
  out.argmax = push_to_boundary(im.cls, im.z_interior.head(d), res.z.head(d), v);
  out.value = v.dot(out.argmax);
  return out;
}

LinearMax max_linear_over_restricted(const Eigen::VectorXd& v, const RestrictedClass& cls,
                                     const SolveOptions& opts) {
  return RestrictedMaximizer(cls, opts).maximize(v);
}

ThresholdResult shifted_emm_threshold(const GroupRisks& risks, const MalfareSpec& malfare,
                                      const ParamSpace& space, std::size_t focus, double shift,
                                      const SolveOptions& opts, const Eigen::VectorXd& candidate) {
  if (focus >= risks.groups()) throw DimensionError("focus group out of range");
  std::vector<double> s(risks.groups(), 0.0);
  s[focus] = shift;
  const SolveResult res = solve_emm(risks, malfare, space, opts, s);
  ThresholdResult out{res.objective, res.beta, res.gap_estimate};
  if (candidate.size() == static_cast<Eigen::Index>(space.d)) {
    const double alt = shifted_malfare(risks, malfare, candidate, s);
    if (alt < out.value) {
      out.value = alt;
      out.beta = candidate;
    }
  }
  return out;
}

}  // namespace mfb
