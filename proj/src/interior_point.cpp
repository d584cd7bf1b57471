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

#include "interior_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "malfare_bounds/errors.hpp"

namespace mfb::detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadraticRegion = 0.05;

double term_value(const Term& term, double x) {
  const double u = x + term.shift;
  if (term.power == 1.0) return term.coef * u;
  return u <= 0.0 ? 0.0 : term.coef * std::pow(u, term.power);
}

// First and second derivative of the term in its scalar argument.
std::pair<double, double> term_slopes(const Term& term, double x) {
  const double u = x + term.shift;
  const double p = term.power;
  if (p == 1.0) return {term.coef, 0.0};
  if (u <= 0.0) return {0.0, 0.0};
  const double d1 = term.coef * p * std::pow(u, p - 1.0);
  const double u2 = p < 2.0 ? std::max(u, 1e-12) : u;
  const double d2 = term.coef * p * (p - 1.0) * std::pow(u2, p - 2.0);
  return {d1, d2};
}

struct Workspace {
  std::vector<char> needed;
  Eigen::VectorXd risk_values;
  std::vector<RiskDerivatives> derivs;
};

void mark_needed(const Composite& f, std::vector<char>& needed) {
  for (const Term& t : f.terms)
    if (t.source == Term::Source::kRisk) needed[t.index] = 1;
}

void fill_values(const GroupRisks* risks, const Eigen::VectorXd& beta, Workspace& ws) {
  for (std::size_t j = 0; j < ws.needed.size(); ++j)
    if (ws.needed[j]) ws.risk_values[static_cast<Eigen::Index>(j)] = risks->value(j, beta);
}

void fill_derivatives(const GroupRisks* risks, const Eigen::VectorXd& beta, Workspace& ws) {
  for (std::size_t j = 0; j < ws.needed.size(); ++j) {
    if (!ws.needed[j]) continue;
    risks->derivatives(j, beta, ws.derivs[j]);
    ws.risk_values[static_cast<Eigen::Index>(j)] = ws.derivs[j].value;
  }
}

// Adds scale * (gradient, hessian) of f to (g, H).
void accumulate(const Composite& f, const Eigen::VectorXd& z, std::size_t d, const Workspace& ws,
                double scale, Eigen::VectorXd& g, Eigen::MatrixXd& H) {
  const auto dd = static_cast<Eigen::Index>(d);
  for (const Term& term : f.terms) {
    if (term.source == Term::Source::kRisk) {
      const RiskDerivatives& rd = ws.derivs[term.index];
      const auto [d1, d2] = term_slopes(term, rd.value);
      if (d1 == 0.0 && d2 == 0.0) continue;
      g.head(dd).noalias() += (scale * d1) * rd.gradient;
      H.topLeftCorner(dd, dd).noalias() += (scale * d1) * rd.hessian;
      if (d2 != 0.0)
        H.topLeftCorner(dd, dd).noalias() += (scale * d2) * rd.gradient * rd.gradient.transpose();
    } else {
      const auto k = static_cast<Eigen::Index>(2 * d + term.index);
      const auto [d1, d2] = term_slopes(term, z[k]);
      g[k] += scale * d1;
      H(k, k) += scale * d2;
    }
  }
  if (f.beta_linear.size() > 0) g.head(dd) += scale * f.beta_linear;
}

// Gradient of f alone (used for the rank-one barrier correction).
Eigen::VectorXd gradient_of(const Composite& f, const Eigen::VectorXd& z, std::size_t d,
                            const Workspace& ws) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
  const auto dd = static_cast<Eigen::Index>(d);
  for (const Term& term : f.terms) {
    if (term.source == Term::Source::kRisk) {
      const RiskDerivatives& rd = ws.derivs[term.index];
      g.head(dd) += term_slopes(term, rd.value).first * rd.gradient;
    } else {
      const auto k = static_cast<Eigen::Index>(2 * d + term.index);
      g[k] += term_slopes(term, z[k]).first;
    }
  }
  if (f.beta_linear.size() > 0) g.head(dd) += f.beta_linear;
  return g;
}

// Ball barrier value, or +inf outside the strict interior.
double ball_barrier(const Eigen::VectorXd& z, std::size_t d, double rho) {
  double acc = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double b = z[static_cast<Eigen::Index>(k)];
    const double s = z[static_cast<Eigen::Index>(d + k)];
    const double lo = s - b;
    const double hi = s + b;
    if (!(lo > 0.0) || !(hi > 0.0)) return kInf;
    acc -= std::log(lo) + std::log(hi);
    total += s;
  }
  const double e = rho - total;
  if (!(e > 0.0)) return kInf;
  return acc - std::log(e);
}

void ball_derivatives(const Eigen::VectorXd& z, std::size_t d, double rho, Eigen::VectorXd& g,
                      Eigen::MatrixXd& H) {
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) total += z[static_cast<Eigen::Index>(d + k)];
  const double e = rho - total;
  const auto dd = static_cast<Eigen::Index>(d);
  for (Eigen::Index k = 0; k < dd; ++k) {
    const double a = z[dd + k] - z[k];
    const double b = z[dd + k] + z[k];
    const double ia = 1.0 / a;
    const double ib = 1.0 / b;
    g[k] += ia - ib;
    g[dd + k] += -ia - ib + 1.0 / e;
    H(k, k) += ia * ia + ib * ib;
    H(k, dd + k) += -ia * ia + ib * ib;
    H(dd + k, k) += -ia * ia + ib * ib;
    H(dd + k, dd + k) += ia * ia + ib * ib;
  }
  H.block(dd, dd, dd, dd).array() += 1.0 / (e * e);
}

// Largest step keeping the linear ball constraints strictly satisfied.
double max_ball_step(const Eigen::VectorXd& z, const Eigen::VectorXd& dz, std::size_t d, double rho) {
  double alpha = kInf;
  const auto dd = static_cast<Eigen::Index>(d);
  double total = 0.0;
  double dtotal = 0.0;
  for (Eigen::Index k = 0; k < dd; ++k) {
    const double lo = z[dd + k] - z[k];
    const double dlo = dz[dd + k] - dz[k];
    const double hi = z[dd + k] + z[k];
    const double dhi = dz[dd + k] + dz[k];
    if (dlo < 0.0) alpha = std::min(alpha, -lo / dlo);
    if (dhi < 0.0) alpha = std::min(alpha, -hi / dhi);
    total += z[dd + k];
    dtotal += dz[dd + k];
  }
  if (dtotal > 0.0) alpha = std::min(alpha, (rho - total) / dtotal);
  return alpha;
}

struct Evaluation {
  double objective = 0.0;
  double barrier = 0.0;  // +inf if infeasible
};

Evaluation evaluate_all(const Program& prog, const GroupRisks* risks, const Eigen::VectorXd& z,
                        double t, Workspace& ws) {
  Evaluation out;
  out.barrier = ball_barrier(z, prog.d, prog.rho);
  if (!std::isfinite(out.barrier)) return out;
  fill_values(risks, z.head(static_cast<Eigen::Index>(prog.d)), ws);
  out.objective = evaluate(prog.objective, z, prog.d, ws.risk_values);
  if (!std::isfinite(out.objective)) {
    out.barrier = kInf;
    return out;
  }
  double acc = t * out.objective + out.barrier;
  for (const Composite& c : prog.constraints) {
    const double v = evaluate(c, z, prog.d, ws.risk_values);
    if (!(v < 0.0)) {
      out.barrier = kInf;
      return out;
    }
    acc -= std::log(-v);
  }
  out.barrier = acc;
  return out;
}

}  // namespace

std::size_t variable_count(const Program& prog) { return 2 * prog.d + prog.n_aux; }

Eigen::VectorXd interior_ball_point(const Eigen::VectorXd& hint, double rho, std::size_t n_aux) {
  const auto d = hint.size();
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2 * d + static_cast<Eigen::Index>(n_aux));
  Eigen::VectorXd beta = hint;
  const double norm = beta.lpNorm<1>();
  if (norm > 0.9 * rho) beta *= 0.9 * rho / norm;
  const double spare = rho - beta.lpNorm<1>();
  z.head(d) = beta;
  for (Eigen::Index k = 0; k < d; ++k) z[d + k] = std::abs(beta[k]) + spare / (2.0 * static_cast<double>(d));
  return z;
}

double evaluate(const Composite& f, const Eigen::VectorXd& z, std::size_t d,
                const Eigen::VectorXd& risks) {
  double acc = f.constant;
  for (const Term& term : f.terms) {
    const double x = term.source == Term::Source::kRisk
                         ? risks[static_cast<Eigen::Index>(term.index)]
                         : z[static_cast<Eigen::Index>(2 * d + term.index)];
    acc += term_value(term, x);
  }
  if (f.beta_linear.size() > 0) acc += f.beta_linear.dot(z.head(static_cast<Eigen::Index>(d)));
  return acc;
}

Outcome minimize(const Program& prog, const GroupRisks* risks, Eigen::VectorXd z0,
                 const Settings& settings) {
  const std::size_t n = variable_count(prog);
  const auto nn = static_cast<Eigen::Index>(n);
  const auto dd = static_cast<Eigen::Index>(prog.d);
  Workspace ws;
  ws.needed.assign(risks ? risks->groups() : 0, 0);
  mark_needed(prog.objective, ws.needed);
  for (const Composite& c : prog.constraints) mark_needed(c, ws.needed);
  ws.risk_values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ws.needed.size()));
  ws.derivs.resize(ws.needed.size());

  const double m_c = static_cast<double>(2 * prog.d + 1 + prog.constraints.size());
  double t = settings.t0;
  Outcome out;
  out.z = std::move(z0);
  Evaluation current = evaluate_all(prog, risks, out.z, t, ws);
  if (!std::isfinite(current.barrier))
    throw SolverError("interior-point start is not strictly feasible", out.z.head(dd), kInf);

  Eigen::VectorXd g(nn);
  Eigen::MatrixXd H(nn, nn);
  Eigen::LLT<Eigen::MatrixXd> llt;
  std::vector<double> cvals(prog.constraints.size());

  while (true) {
    // Centering.
    for (;;) {
      if (out.newton_steps >= settings.max_newton) {
        out.gap = m_c / t;
        throw SolverError("interior-point iteration limit reached", out.z.head(dd), out.gap);
      }
      ++out.newton_steps;
      g.setZero();
      H.setZero();
      fill_derivatives(risks, out.z.head(dd), ws);
      accumulate(prog.objective, out.z, prog.d, ws, t, g, H);
      for (std::size_t k = 0; k < prog.constraints.size(); ++k) {
        const Composite& c = prog.constraints[k];
        const double v = evaluate(c, out.z, prog.d, ws.risk_values);
        const double inv = -1.0 / v;
        accumulate(c, out.z, prog.d, ws, inv, g, H);
        const Eigen::VectorXd gc = gradient_of(c, out.z, prog.d, ws);
        H.noalias() += (inv * inv) * gc * gc.transpose();
      }
      ball_derivatives(out.z, prog.d, prog.rho, g, H);

      llt.compute(H);
      double ridge = 1e-14 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
      while (llt.info() != Eigen::Success && ridge < 1e6) {
        llt.compute(H + ridge * Eigen::MatrixXd::Identity(nn, nn));
        ridge *= 100.0;
      }
      const Eigen::VectorXd dz = -llt.solve(g);
      const double decrement = -g.dot(dz);
      if (!(decrement > 1e-10) || !dz.allFinite()) break;

      double alpha = std::min(1.0, 0.99 * max_ball_step(out.z, dz, prog.d, prog.rho));
      Evaluation trial;
      Eigen::VectorXd z_new;
      bool moved = false;
      while (alpha > 1e-16) {
        z_new = out.z + alpha * dz;
        trial = evaluate_all(prog, risks, z_new, t, ws);
        // Close to the centre the barrier's rounding error exceeds the
        // predicted decrease, so only feasibility is checked there.
        if (std::isfinite(trial.barrier) &&
            (decrement < kQuadraticRegion || trial.barrier <= current.barrier - 0.25 * alpha * decrement)) {
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
      const double step_size = alpha * dz.lpNorm<Eigen::Infinity>();
      out.z = std::move(z_new);
      current = trial;
      if (settings.stop_below && current.objective < *settings.stop_below) {
        out.objective = current.objective;
        out.gap = m_c / t;
        out.trace.push_back(current.objective);
        out.converged = true;
        return out;
      }
      if (decrement < 1e-9 || step_size < 1e-15 * (1.0 + out.z.lpNorm<Eigen::Infinity>())) break;
    }
    out.objective = current.objective;
    out.trace.push_back(current.objective);
    out.gap = m_c / t;
    if (out.gap < settings.gap_tol) {
      out.converged = true;
      return out;
    }
    t *= settings.mu;
    current = evaluate_all(prog, risks, out.z, t, ws);
  }
}

PhaseOne find_interior(const Program& prog, const GroupRisks* risks, Eigen::VectorXd z0,
                       double margin, const Settings& settings) {
  const auto dd = static_cast<Eigen::Index>(prog.d);
  Workspace ws;
  ws.needed.assign(risks ? risks->groups() : 0, 0);
  for (const Composite& c : prog.constraints) mark_needed(c, ws.needed);
  ws.risk_values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ws.needed.size()));
  fill_values(risks, z0.head(dd), ws);

  auto max_violation = [&](const Eigen::VectorXd& z) {
    fill_values(risks, z.head(dd), ws);
    double worst = -kInf;
    for (const Composite& c : prog.constraints) worst = std::max(worst, evaluate(c, z, prog.d, ws.risk_values));
    return worst;
  };

  PhaseOne out;
  out.z = z0;
  out.max_violation = prog.constraints.empty() ? -kInf : max_violation(z0);
  if (out.max_violation < -margin) return out;

  // Lift: one more aux variable s, minimize s s.t. f_k - s <= 0.
  Program lifted = prog;
  const std::size_t s_index = prog.n_aux;
  lifted.n_aux = prog.n_aux + 1;
  lifted.objective = Composite{};
  lifted.objective.terms.push_back({Term::Source::kAux, s_index, 1.0, 0.0, 1.0});
  for (Composite& c : lifted.constraints) c.terms.push_back({Term::Source::kAux, s_index, -1.0, 0.0, 1.0});

  Eigen::VectorXd z(z0.size() + 1);
  z.head(z0.size()) = z0;
  const double scale = std::max(1.0, std::abs(out.max_violation));
  z[z0.size()] = out.max_violation + scale;

  Settings s1 = settings;
  s1.stop_below = -margin;
  s1.t0 = static_cast<double>(2 * prog.d + 1 + prog.constraints.size()) / scale;
  const Outcome res = minimize(lifted, risks, z, s1);
  out.z = res.z.head(z0.size());
  out.max_violation = max_violation(out.z);
  return out;
}

}  // namespace mfb::detail
