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

#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "malfare_bounds/bounds.hpp"
#include "malfare_bounds/errors.hpp"
#include "test_support.hpp"

using namespace mfb;
using doctest::Approx;

namespace {

RademacherDraw signs(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double x : row) s(r, c++) = x;
    ++r;
  }
  return RademacherDraw::from_matrix(s);
}

GroupSample constant_sample(std::size_t m, double x, double y) {
  GroupSample s;
  s.X = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(m), 1, x);
  s.y = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), y);
  return s;
}

// sup over the ball of the empirical correlation, by enumerating the 2d
// vertices (a linear function peaks at one of them).
double vertex_sup(const GroupSample& s, LossKind kind, double rho, const Eigen::RowVectorXd& sigma) {
  double best = -1e300;
  for (Eigen::Index k = 0; k < s.X.cols(); ++k) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(s.X.cols());
      beta[k] = sign * rho;
      double acc = 0.0;
      for (Eigen::Index j = 0; j < s.X.rows(); ++j)
        acc += sigma[j] * loss_inner(kind, predict(beta, s.X.row(j).transpose()), s.y[j]);
      best = std::max(best, acc / static_cast<double>(s.X.rows()));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("Hoeffding epsilon") {
  CHECK(hoeffding_epsilon(1.0, 0.1, 500) == Approx(std::sqrt(std::log(10.0) / 1000.0)).epsilon(1e-15));
  CHECK(hoeffding_epsilon(1.0, 0.1, 500) == Approx(0.047985).epsilon(1e-5));
  CHECK(hoeffding_epsilon(2.0, 0.1, 500) == Approx(2.0 * hoeffding_epsilon(1.0, 0.1, 500)));
  CHECK(hoeffding_epsilon(1.0, 0.1, 2000) == Approx(0.5 * hoeffding_epsilon(1.0, 0.1, 500)));
  CHECK_THROWS_AS(hoeffding_epsilon(1.0, 0.0, 10), DomainError);
  CHECK_THROWS_AS(hoeffding_epsilon(1.0, 1.0, 10), DomainError);
  CHECK_THROWS_AS(hoeffding_epsilon(1.0, 0.1, 0), DomainError);
}

TEST_CASE("Rademacher draws") {
  CHECK_THROWS_AS(RademacherDraw::from_matrix(Eigen::MatrixXd::Constant(2, 2, 0.5)), DomainError);
  const StreamKey key{3, 1, 0, StreamPurpose::kRademacher, 64};
  const auto a = RademacherDraw::generate(100, 64, key);
  const auto b = RademacherDraw::generate(100, 64, key);
  CHECK(a.sigma == b.sigma);
  CHECK(a.seed == stream_seed(key));
  CHECK(a.n() == 100);
  CHECK(a.m() == 64);
  CHECK((a.sigma.array().abs() == 1.0).all());
  CHECK(std::abs(a.sigma.mean()) < 0.05);
}

TEST_CASE("MCERA examples") {
  const GroupSample s = constant_sample(2, 1.0, 0.0);
  const auto space = ParamSpace::make(1, 1.0);
  CHECK(mcera(s, LossKind::kSquare, space, signs({{1, 1}})).value == Approx(1.0));
  CHECK(mcera(s, LossKind::kSquare, space, signs({{1, -1}})).value == Approx(0.0));
  CHECK(mcera(s, LossKind::kSquare, space, signs({{1, -1}, {1, -1}})).value ==
        mcera(s, LossKind::kSquare, space, signs({{1, -1}})).value);
  CHECK_THROWS_AS(mcera(s, LossKind::kSquare, space, signs({{1, 1, 1}})), DimensionError);
}

TEST_CASE("closed-form MCERA matches vertex enumeration") {
  testing::Gen gen(211);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = gen.index(1, 5);
    const std::size_t m = gen.index(1, 50);
    const LossKind kind = t % 2 ? LossKind::kSquare : LossKind::kLogistic;
    const GroupSample s = kind == LossKind::kSquare ? gen.regression(0, m, d) : gen.classification(0, m, d);
    const double rho = gen.uniform(0.1, 3.0);
    const auto draw = RademacherDraw::generate(7, m, {static_cast<std::uint64_t>(t), 0, 0, StreamPurpose::kRademacher, m});
    const McEra res = mcera(s, kind, ParamSpace::make(d, rho), draw, true);
    double oracle = 0.0;
    for (Eigen::Index k = 0; k < 7; ++k) oracle += vertex_sup(s, kind, rho, draw.sigma.row(k));
    CHECK(res.value == Approx(oracle / 7.0).epsilon(1e-12));
    CHECK(res.argmax.size() == 7);
    CHECK(res.per_draw.size() == 7);
    CHECK(res.std_error >= 0.0);
  }
}

TEST_CASE("eta hat and group bounds") {
  CHECK(eta_hat(0.0, 1.0, 0.0) == 0.0);
  CHECK(eta_hat(0.05, 1.0, 0.048) == Approx(0.196));
  CHECK(eta_hat(0.05, 3.0, 0.048) - 2 * 0.048 == Approx(3.0 * (eta_hat(0.05, 1.0, 0.048) - 2 * 0.048)));
  CHECK(group_generalization_bound(0.1, 6.0, 0.2) == Approx(1.6));
}

TEST_CASE("mean estimation: restricted set is c^2 <= 4 R + 6 eps") {
  const GroupSample s = constant_sample(50, 1.0, 0.0);
  auto risks = std::make_shared<const GroupRisks>(std::span<const GroupSample>(&s, 1), LossKind::kSquare);
  const auto space = ParamSpace::make(1, 1.0);
  const double rade = 0.05;
  const double eps = 0.01;
  SolveOptions tight;
  tight.obj_tol = 1e-10;
  const auto built = build_restricted_class(risks, MalfareSpec::utilitarian({1.0}), space, 0,
                                            eta_hat(rade, 1.0, eps), eps, tight);
  CHECK(built.threshold.value == Approx(2.0 * eps).epsilon(1e-8));
  const double radius = std::sqrt(4.0 * rade + 6.0 * eps);
  for (double c = -1.0; c <= 1.0; c += 0.01) {
    if (std::abs(std::abs(c) - radius) < 1e-6) continue;
    CHECK(built.cls.contains(Eigen::VectorXd::Constant(1, c)) == (c * c <= 4.0 * rade + 6.0 * eps));
  }
  RestrictedMaximizer mx(built.cls, {});
  CHECK(mx.maximize(Eigen::VectorXd::Constant(1, 1.0)).value == Approx(radius).epsilon(1e-5));
}

TEST_CASE("restricted classes: feasibility of the EMM solution and vacuous restriction") {
  testing::Gen gen(223);
  for (LossKind kind : {LossKind::kSquare, LossKind::kLogistic}) {
    std::vector<GroupSample> groups;
    for (int i = 0; i < 3; ++i)
      groups.push_back(kind == LossKind::kSquare ? gen.regression(i, 40 * (i + 1), 3) : gen.classification(i, 40 * (i + 1), 3));
    auto risks = std::make_shared<const GroupRisks>(groups, kind);
    const auto space = ParamSpace::make(3, 1.5);
    for (const auto& m : {MalfareSpec::utilitarian({0.5, 0.3, 0.2}),
                          MalfareSpec::power_mean(Exponent::finite(3.0), {0.5, 0.3, 0.2}),
                          MalfareSpec::egalitarian({0.5, 0.3, 0.2}), MalfareSpec::gini({0.5, 0.3, 0.2})}) {
      const auto emm = solve_emm(*risks, m, space);
      for (std::size_t i = 0; i < 3; ++i) {
        for (double eta : {0.0, 0.01, 0.3}) {
          const auto built = build_restricted_class(risks, m, space, i, eta, 0.02, {}, emm.beta);
          CHECK(built.cls.lhs(emm.beta) <= built.cls.threshold() + 1e-6);
        }
        // Huge slack: every point of the ball qualifies.
        const auto loose = build_restricted_class(risks, m, space, i, 1e3, 1e3, {}, emm.beta);
        RestrictedMaximizer mx(loose.cls, {}, emm.beta);
        const auto draw = RademacherDraw::generate(20, groups[i].m(), {1, static_cast<int>(i), 0, StreamPurpose::kRademacher, 0});
        CHECK(mcera(groups[i], kind, mx, draw).value == mcera(groups[i], kind, space, draw).value);
      }
    }
  }
}

TEST_CASE("malfare sandwich") {
  const std::vector<double> r{0.3, 0.5, 0.1};
  const auto util = MalfareSpec::utilitarian({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto none = malfare_sandwich(r, util, std::vector<double>{0, 0, 0});
  CHECK(none.lower == Approx(malfare(r, util)));
  CHECK(none.upper == Approx(malfare(r, util)));
  const std::vector<double> b{0.05, 0.2, 0.3};
  const auto s = malfare_sandwich(r, util, b);
  CHECK(s.upper - malfare(r, util) == Approx((0.05 + 0.2 + 0.3) / 3));
  CHECK(s.lower == Approx((0.25 + 0.3 + 0.0) / 3));
  CHECK(s.upper_loose == Approx(malfare(r, util) + 0.3));
  CHECK_THROWS_AS(malfare_sandwich(r, util, std::vector<double>{0.1}), DimensionError);
  testing::Gen gen(227);
  for (int t = 0; t < 500; ++t) {
    const auto rr = gen.risks(3);
    const auto bb = gen.risks(3, 0.5);
    const auto w = gen.simplex(3);
    for (const auto& m : {MalfareSpec::utilitarian(w), MalfareSpec::power_mean(Exponent::finite(2.5), w),
                          MalfareSpec::egalitarian(w)}) {
      const auto sw = malfare_sandwich(rr, m, bb);
      CHECK(sw.lower <= sw.upper);
      CHECK(sw.upper <= sw.upper_loose + 1e-12);
      CHECK(sw.lower >= 0.0);
    }
  }
}

TEST_CASE("suboptimality bound") {
  CHECK(malfare_suboptimality_bound(std::vector<double>{0, 0}, std::vector<double>{0, 0}) == 0.0);
  CHECK(malfare_suboptimality_bound(std::vector<double>{0.1, 0.2}, std::vector<double>{0.3, 0.05}) ==
        Approx(std::max(0.2 + 0.9, 0.4 + 0.15)));
  CHECK(malfare_suboptimality_bound(std::vector<double>{0.1, 0.2}, std::vector<double>{0.1, 0.05}) <=
        malfare_suboptimality_bound(std::vector<double>{0.1, 0.2}, std::vector<double>{0.3, 0.05}));
}

TEST_CASE("failure probabilities") {
  const auto f = FailureProbabilities::from(0.1, 3);
  CHECK(f.group_bound_full == Approx(0.2));
  CHECK(f.emm_in_restricted == Approx(0.4));
  CHECK(f.group_bound_restricted == Approx(0.6));
  CHECK(f.sandwich == Approx(1.5));
  CHECK(f.suboptimality == Approx(1.8));
}

TEST_CASE("full bound pipeline") {
  testing::Gen gen(229);
  std::vector<GroupSample> groups;
  std::vector<RademacherDraw> draws;
  for (int i = 0; i < 3; ++i) {
    groups.push_back(gen.regression(i + 1, 100 * (3 - i), 2, 1.0));
    draws.push_back(RademacherDraw::generate(30, groups.back().m(), {9, i + 1, 0, StreamPurpose::kRademacher, 600}));
  }
  const auto space = ParamSpace::make(2, 1.0);
  const auto loss = LossSpec::make(LossKind::kSquare, space, 1.0, 2.0);
  for (const auto& m : {MalfareSpec::utilitarian({0.5, 1.0 / 3, 1.0 / 6}), MalfareSpec::egalitarian({0.5, 1.0 / 3, 1.0 / 6})}) {
    const BoundReport rep = compute_bounds(groups, m, space, loss, draws, {});
    REQUIRE(rep.groups.size() == 3);
    std::vector<double> emp;
    for (const auto& g : rep.groups) {
      CHECK(g.mcera_restricted <= g.mcera_full + 1e-9);
      CHECK(g.bound_restricted <= g.bound_full + 1e-9);
      CHECK(g.bound_full == Approx(2.0 * g.mcera_full + 2.0 * g.eps));
      CHECK(g.eta_hat == Approx(g.bound_full));
      CHECK(g.eps == Approx(hoeffding_epsilon(9.0, 0.1, g.m)));
      CHECK(g.mcera_full >= 0.0);
      CHECK(g.threshold >= rep.emp_malfare - 1e-9);
      emp.push_back(g.emp_risk);
    }
    CHECK(rep.emp_malfare == Approx(malfare(emp, m)));
    CHECK(rep.sandwich.lower <= rep.emp_malfare);
    CHECK(rep.sandwich.upper >= rep.emp_malfare);
    CHECK(rep.suboptimality > 0.0);
    std::ostringstream out;
    write_bounds_csv_header(out);
    write_bounds_csv_rows(out, 2, 600, rep);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "run,total_m,group,m_i,eps,mcera_full,mcera_restr,bound_full,bound_restr,threshold_c,emp_risk,test_risk");
    std::getline(in, line);
    CHECK(line.rfind("2,600,1,300,", 0) == 0);
  }
  BoundOptions full_only;
  full_only.full_only = true;
  const BoundReport rep = compute_bounds(groups, MalfareSpec::utilitarian({0.5, 1.0 / 3, 1.0 / 6}), space, loss, draws, full_only);
  for (const auto& g : rep.groups) CHECK(g.bound_restricted == g.bound_full);
  CHECK_THROWS_AS(compute_bounds(groups, MalfareSpec::utilitarian({0.5, 1.0 / 3, 1.0 / 6}), space, loss,
                                 std::span<const RademacherDraw>(draws.data(), 2), {}),
                  DimensionError);
}
