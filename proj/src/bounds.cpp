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

#include "malfare_bounds/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "malfare_bounds/errors.hpp"

namespace mfb {
namespace {

struct Directions {
  Eigen::MatrixXd v;        // n x d
  Eigen::VectorXd offsets;  // n
};

Directions directions(const GroupSample& sample, LossKind kind, const RademacherDraw& draw) {
  if (draw.m() != sample.m()) throw DimensionError("Rademacher draw length does not match the sample");
  if (draw.n() == 0) throw DimensionError("Rademacher draw has no rows");
  const AffineInner g = affine_inner(sample, kind);
  const double inv_m = 1.0 / static_cast<double>(sample.m());
  Directions out;
  out.v = (draw.sigma * g.a) * inv_m;
  out.offsets = (draw.sigma * g.b) * inv_m;
  return out;
}

void summarize(McEra& out) {
  const double n = static_cast<double>(out.per_draw.size());
  double sum = 0.0;
  for (double x : out.per_draw) sum += x;  // fixed order
  out.value = sum / n;
  if (out.per_draw.size() < 2) return;
  double ss = 0.0;
  for (double x : out.per_draw) ss += (x - out.value) * (x - out.value);
  out.std_error = std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

RademacherDraw RademacherDraw::generate(std::size_t n, std::size_t m, const StreamKey& key) {
  RademacherDraw out;
  out.seed = stream_seed(key);
  std::mt19937_64 rng(out.seed);
  out.sigma.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (Eigen::Index k = 0; k < out.sigma.rows(); ++k)
    for (Eigen::Index j = 0; j < out.sigma.cols(); ++j) out.sigma(k, j) = (rng() >> 63) ? 1.0 : -1.0;
  return out;
}

RademacherDraw RademacherDraw::from_matrix(Eigen::MatrixXd sigma) {
  for (Eigen::Index k = 0; k < sigma.size(); ++k) {
    const double s = sigma.data()[k];
    if (s != 1.0 && s != -1.0) throw DomainError("Rademacher entries must be -1 or +1");
  }
  RademacherDraw out;
  out.sigma = std::move(sigma);
  return out;
}

double hoeffding_epsilon(double r, double delta, std::size_t m) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("loss range must be positive");
  if (m == 0) throw DomainError("sample size must be positive");
  return r * std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(m)));
}

McEra mcera(const GroupSample& sample, LossKind kind, const ParamSpace& space, const RademacherDraw& draw,
            bool keep_argmax) {
  if (sample.d() != space.d) throw DimensionError("sample dimension does not match the class");
  const Directions dir = directions(sample, kind, draw);
  McEra out;
  out.per_draw.reserve(draw.n());
  for (Eigen::Index k = 0; k < dir.v.rows(); ++k) {
    LinearMax best = max_linear_l1_ball(dir.v.row(k).transpose(), space.rho);
    out.per_draw.push_back(best.value + dir.offsets[k]);
    if (keep_argmax) out.argmax.push_back(std::move(best.argmax));
  }
  summarize(out);
  return out;
}

McEra mcera(const GroupSample& sample, LossKind kind, const RestrictedMaximizer& cls,
            const RademacherDraw& draw, bool keep_argmax) {
  const Directions dir = directions(sample, kind, draw);
  McEra out;
  out.per_draw.reserve(draw.n());
  for (Eigen::Index k = 0; k < dir.v.rows(); ++k) {
    LinearMax best = cls.maximize(dir.v.row(k).transpose());
    out.per_draw.push_back(best.value + dir.offsets[k]);
    if (keep_argmax) out.argmax.push_back(std::move(best.argmax));
  }
  summarize(out);
  return out;
}

double eta_hat(double mcera, double lambda, double eps) { return 2.0 * lambda * mcera + 2.0 * eps; }

double group_generalization_bound(double mcera, double lambda, double eps) {
  return eta_hat(mcera, lambda, eps);
}

RestrictedBuild build_restricted_class(std::shared_ptr<const GroupRisks> risks, const MalfareSpec& malfare,
                                       const ParamSpace& space, std::size_t focus, double eta_hat,
                                       double eps, const SolveOptions& opts, const Eigen::VectorXd& beta_hat,
                                       LhsClamp clamp) {
  if (!risks) throw SpecError("restricted class needs a risk oracle");
  if (!(eta_hat >= 0.0) || !(eps >= 0.0)) throw DomainError("eta_hat and eps must be nonnegative");
  ThresholdResult c = shifted_emm_threshold(*risks, malfare, space, focus, 2.0 * eps, opts, beta_hat);
  RestrictedClass cls(space, std::move(risks), malfare, focus, 2.0 * eta_hat, c.value, clamp);
  return {std::move(cls), std::move(c)};
}

Sandwich malfare_sandwich(std::span<const double> emp_risks, const MalfareSpec& malfare,
                          std::span<const double> bounds) {
  if (emp_risks.size() != bounds.size()) throw DimensionError("risk and bound vectors differ in length");
  std::vector<double> lo(emp_risks.size());
  std::vector<double> hi(emp_risks.size());
  double widest = 0.0;
  for (std::size_t j = 0; j < emp_risks.size(); ++j) {
    if (!(bounds[j] >= 0.0)) throw DomainError("group bounds must be nonnegative");
    lo[j] = std::max(0.0, emp_risks[j] - bounds[j]);
    hi[j] = emp_risks[j] + bounds[j];
    widest = std::max(widest, bounds[j]);
  }
  Sandwich out;
  out.lower = mfb::malfare(lo, malfare);
  out.upper = mfb::malfare(hi, malfare);
  out.upper_loose = mfb::malfare(emp_risks, malfare) + widest;
  return out;
}

double malfare_suboptimality_bound(std::span<const double> lambda_mcera_restricted, std::span<const double> eps) {
  if (lambda_mcera_restricted.size() != eps.size()) throw DimensionError("mcera and eps vectors differ in length");
  double worst = 0.0;
  for (std::size_t j = 0; j < eps.size(); ++j)
    worst = std::max(worst, 2.0 * lambda_mcera_restricted[j] + 3.0 * eps[j]);
  return worst;
}

FailureProbabilities FailureProbabilities::from(double delta, std::size_t groups) {
  const double g = static_cast<double>(groups);
  return {2.0 * delta, 4.0 * delta, 6.0 * delta, 5.0 * g * delta, 6.0 * g * delta};
}

BoundReport compute_bounds(std::span<const GroupSample> samples, const MalfareSpec& malfare,
                           const ParamSpace& space, const LossSpec& loss,
                           std::span<const RademacherDraw> draws, const BoundOptions& opts) {
  const std::size_t g = samples.size();
  if (draws.size() != g) throw DimensionError("one Rademacher draw per group is required");
  for (const GroupSample& s : samples) validate_sample(s, loss);
  auto risks = std::make_shared<const GroupRisks>(samples, loss.kind);

  BoundReport report;
  report.delta = opts.delta;
  report.failure = FailureProbabilities::from(opts.delta, g);
  const SolveResult emm = solve_emm(*risks, malfare, space, opts.solve);
  report.beta_hat = emm.beta;
  const Eigen::VectorXd emp = risks->values(emm.beta);
  report.emp_malfare = emm.objective;

  std::vector<double> restricted_bounds(g);
  std::vector<double> lambda_restr(g);
  std::vector<double> eps_all(g);
  for (std::size_t i = 0; i < g; ++i) {
    GroupBound gb;
    gb.group = i;
    gb.m = samples[i].m();
    gb.eps = hoeffding_epsilon(loss.loss_range, opts.delta, gb.m);
    gb.emp_risk = emp[static_cast<Eigen::Index>(i)];
    gb.test_risk = std::numeric_limits<double>::quiet_NaN();
    McEra full = mcera(samples[i], loss.kind, space, draws[i], opts.keep_argmax);
    gb.mcera_full = loss.lambda * full.value;
    gb.mcera_full_se = loss.lambda * full.std_error;
    gb.eta_hat = eta_hat(full.value, loss.lambda, gb.eps);
    gb.bound_full = gb.eta_hat;
    if (opts.keep_argmax) gb.argmax_full = std::move(full.argmax);

    if (opts.full_only) {
      gb.mcera_restricted = gb.mcera_full;
      gb.mcera_restricted_se = gb.mcera_full_se;
      gb.threshold = std::numeric_limits<double>::quiet_NaN();
      gb.emm_violation = std::numeric_limits<double>::quiet_NaN();
    } else {
      RestrictedBuild built = build_restricted_class(risks, malfare, space, i, gb.eta_hat, gb.eps, opts.solve,
                                                     emm.beta, opts.clamp);
      gb.threshold = built.threshold.value;
      gb.emm_violation = built.cls.lhs(emm.beta) - built.cls.threshold();
      const RestrictedMaximizer maximizer(built.cls, opts.solve, emm.beta);
      McEra restr = mcera(samples[i], loss.kind, maximizer, draws[i], opts.keep_argmax);
      gb.mcera_restricted = loss.lambda * restr.value;
      gb.mcera_restricted_se = loss.lambda * restr.std_error;
      if (opts.keep_argmax) gb.argmax_restricted = std::move(restr.argmax);
      gb.restricted = std::make_shared<const RestrictedClass>(std::move(built.cls));
    }
    gb.bound_restricted = group_generalization_bound(gb.mcera_restricted / loss.lambda, loss.lambda, gb.eps);
    restricted_bounds[i] = gb.bound_restricted;
    lambda_restr[i] = gb.mcera_restricted;
    eps_all[i] = gb.eps;
    report.groups.push_back(std::move(gb));
  }
  std::vector<double> emp_vec(emp.data(), emp.data() + emp.size());
  report.sandwich = malfare_sandwich(emp_vec, malfare, restricted_bounds);
  report.suboptimality = malfare_suboptimality_bound(lambda_restr, eps_all);
  return report;
}

void write_bounds_csv_header(std::ostream& out) {
  out << "run,total_m,group,m_i,eps,mcera_full,mcera_restr,bound_full,bound_restr,threshold_c,emp_risk,test_risk\n";
}

void write_bounds_csv_rows(std::ostream& out, int run, std::size_t total_m, const BoundReport& report) {
  const auto old_precision = out.precision(17);
  for (const GroupBound& gb : report.groups) {
    out << run << ',' << total_m << ',' << gb.group + 1 << ',' << gb.m << ',' << gb.eps << ',' << gb.mcera_full
        << ',' << gb.mcera_restricted << ',' << gb.bound_full << ',' << gb.bound_restricted << ','
        << gb.threshold << ',' << gb.emp_risk << ',' << gb.test_risk << '\n';
  }
  out.precision(old_precision);
}

}  // namespace mfb
