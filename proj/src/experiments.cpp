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

#include "malfare_bounds/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

#include "malfare_bounds/errors.hpp"
#include "malfare_bounds/svg.hpp"

namespace mfb {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void write_quartile_rows(std::ostream& out, const MedianSeries& s, const char* series) {
  for (std::size_t t = 0; t < s.totals.size(); ++t) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const Quartiles& q = s.values[i][t];
      out << s.totals[t] << ',' << i + 1 << ',' << s.sizes[i][t] << ',' << series << ',' << q.q1 << ','
          << q.median << ',' << q.q3 << '\n';
    }
  }
}

svg::Line quartile_line(const MedianSeries& s, std::size_t group, std::string label, std::string color,
                        bool dashed) {
  svg::Line l;
  l.label = std::move(label);
  l.color = std::move(color);
  l.dashed = dashed;
  for (std::size_t t = 0; t < s.totals.size(); ++t) {
    l.x.push_back(static_cast<double>(s.totals[t]));
    l.y.push_back(s.values[group][t].median);
    l.lo.push_back(s.values[group][t].q1);
    l.hi.push_back(s.values[group][t].q3);
  }
  return l;
}

}  // namespace

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  auto body = [&](std::size_t k) {
    try {
      fn(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t k = 0; k < n; ++k) body(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t k = next++; k < n; k = next++) body(k);
      });
    }
    for (auto& t : workers) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw DimensionError("quartiles of an empty set");
  std::sort(values.begin(), values.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

PointData make_point(const ExperimentConfig& cfg, int run, std::size_t total, bool with_test, bool with_draws) {
  PointData p;
  p.run = run;
  p.total = total;
  p.sizes = split_sizes(total, cfg.proportions);
  for (std::size_t i = 0; i < cfg.groups.size(); ++i) {
    const GroupGenConfig& g = cfg.groups[i];
    p.train.push_back(gen_group(g, p.sizes[i], stream_seed({cfg.seed, g.group_id, run, StreamPurpose::kTrain, total})));
    if (with_test && cfg.test_size > 0) {
      p.test.push_back(gen_group(g, cfg.test_size, stream_seed({cfg.seed, g.group_id, run, StreamPurpose::kTest, 0})));
    }
    if (with_draws) {
      p.draws.push_back(RademacherDraw::generate(cfg.mc_n, p.sizes[i],
                                                 {cfg.seed, g.group_id, run, StreamPurpose::kRademacher, total}));
    }
  }
  return p;
}

void InvariantTally::check(bool ok, const std::string& what) {
  ++checked;
  if (!ok) failures.push_back(what);
}

void InvariantTally::merge(const InvariantTally& other) {
  checked += other.checked;
  failures.insert(failures.end(), other.failures.begin(), other.failures.end());
}

void check_report(const BoundReport& report, double tol, const std::string& where, InvariantTally& tally) {
  for (const GroupBound& g : report.groups) {
    const std::string at = where + " group " + std::to_string(g.group + 1);
    tally.check(g.mcera_restricted <= g.mcera_full + tol, at + ": restricted MCERA exceeds full");
    tally.check(g.bound_restricted <= g.bound_full + tol, at + ": restricted bound exceeds full");
    if (g.restricted) tally.check(g.emm_violation <= tol, at + ": EMM solution outside the restricted class");
    tally.check(g.eps >= 0.0 && g.bound_full >= 0.0 && g.bound_restricted >= 0.0, at + ": negative bound");
  }
}

// --- contours --------------------------------------------------------------

ContourRun run_contours(const ExperimentConfig& cfg, int run, const SolveOptions& opts, double boundary_tol) {
  if (cfg.grid.size() != 1) throw ConfigError("the contours experiment takes a single grid point");
  if (cfg.task != Task::kRegression) throw ConfigError("the contours experiment uses a regression config");
  const PointData data = make_point(cfg, run, cfg.grid.front(), false, true);
  const MalfareSpec malfare = make_malfare(cfg, cfg.malfare, data.sizes);
  BoundOptions bo;
  bo.delta = cfg.delta;
  bo.solve = opts;
  bo.keep_argmax = true;
  ContourRun out;
  out.run = run;
  out.sizes = data.sizes;
  out.report = compute_bounds(data.train, malfare, param_space(cfg), loss_spec(cfg), data.draws, bo);
  for (const GroupBound& g : out.report.groups) {
    for (const auto& b : g.argmax_full) {
      ++out.argmax_points;
      if (std::abs(b.lpNorm<1>() - cfg.rho) > boundary_tol) ++out.off_boundary;
    }
    for (const auto& b : g.argmax_restricted) {
      ++out.argmax_points;
      const bool on_ball = std::abs(b.lpNorm<1>() - cfg.rho) <= boundary_tol;
      const bool on_constraint = std::abs(g.restricted->lhs(b) - g.restricted->threshold()) <= boundary_tol;
      if (!on_ball && !on_constraint) ++out.off_boundary;
    }
  }
  return out;
}

void write_contours_summary_csv(std::ostream& out, std::span<const ContourRun> runs) {
  const auto old = out.precision(17);
  out << "run,group,m_i,mcera_full,mcera_restr,bound_full,bound_restr,threshold_c,emm_violation\n";
  for (const ContourRun& r : runs) {
    for (const GroupBound& g : r.report.groups) {
      out << r.run << ',' << g.group + 1 << ',' << g.m << ',' << g.mcera_full << ',' << g.mcera_restricted << ','
          << g.bound_full << ',' << g.bound_restricted << ',' << g.threshold << ',' << g.emm_violation << '\n';
    }
  }
  out.precision(old);
}

void write_contours_points_csv(std::ostream& out, std::span<const ContourRun> runs) {
  const auto old = out.precision(17);
  const std::size_t d = runs.empty() ? 0 : static_cast<std::size_t>(runs.front().report.beta_hat.size());
  out << "run,group,class,draw";
  for (std::size_t k = 0; k < d; ++k) out << ",beta" << k;
  out << '\n';
  auto row = [&](int run, std::size_t group, const char* cls, std::size_t draw, const Eigen::VectorXd& b) {
    out << run << ',' << group << ',' << cls << ',' << draw;
    for (Eigen::Index k = 0; k < b.size(); ++k) out << ',' << b[k];
    out << '\n';
  };
  for (const ContourRun& r : runs) {
    row(r.run, 0, "emm", 0, r.report.beta_hat);
    for (const GroupBound& g : r.report.groups) {
      for (std::size_t k = 0; k < g.argmax_full.size(); ++k) row(r.run, g.group + 1, "full", k, g.argmax_full[k]);
      for (std::size_t k = 0; k < g.argmax_restricted.size(); ++k) {
        row(r.run, g.group + 1, "restricted", k, g.argmax_restricted[k]);
      }
    }
  }
  out.precision(old);
}

std::string contours_svg(const ContourRun& run, double rho) {
  std::vector<svg::Panel> panels;
  for (const GroupBound& g : run.report.groups) {
    svg::Panel p;
    char title[96];
    std::snprintf(title, sizeof title, "group %zu (m=%zu): full %.3f, restricted %.3f", g.group + 1, g.m,
                  g.mcera_full, g.mcera_restricted);
    p.title = title;
    p.xlabel = "beta0";
    p.ylabel = "beta1";
    p.equal_aspect = true;
    p.outlines.push_back({{rho, 0.0, -rho, 0.0}, {0.0, rho, 0.0, -rho}, "#444444"});
    svg::Points full{"argmax over H", {}, {}, "#9a9a9a", 3.0, 0.5};
    svg::Points restr{"argmax over restricted", {}, {}, svg::palette(g.group), 2.0, 0.8};
    for (const auto& b : g.argmax_full) {
      full.x.push_back(b[0]);
      full.y.push_back(b.size() > 1 ? b[1] : 0.0);
    }
    for (const auto& b : g.argmax_restricted) {
      restr.x.push_back(b[0]);
      restr.y.push_back(b.size() > 1 ? b[1] : 0.0);
    }
    const Eigen::VectorXd& bh = run.report.beta_hat;
    svg::Points emm{"EMM", {bh[0]}, {bh.size() > 1 ? bh[1] : 0.0}, "#000000", 4.0, 1.0};
    p.points = {full, restr, emm};
    panels.push_back(std::move(p));
  }
  return svg::render(panels, "Argmax points of the Rademacher samples, run " + std::to_string(run.run));
}

// --- grid experiments --------------------------------------------------------

GridPoint run_grid_point(const ExperimentConfig& cfg, int run, std::size_t total, const GridOptions& opts) {
  const bool want_bounds = !opts.bound_malfares.empty();
  const PointData data = make_point(cfg, run, total, opts.with_test, want_bounds);
  const ParamSpace space = param_space(cfg);
  const LossSpec loss = loss_spec(cfg);
  const std::size_t g = cfg.groups.size();
  auto test_risks = [&](const Eigen::VectorXd& beta) {
    std::vector<double> out(g, kNaN);
    for (std::size_t i = 0; i < data.test.size(); ++i) out[i] = empirical_risk(beta, data.test[i], loss.kind);
    return out;
  };

  GridPoint p;
  p.run = run;
  p.total = total;
  p.sizes = data.sizes;
  for (const GroupSample& s : data.train) validate_sample(s, loss);
  const GroupRisks risks(data.train, loss.kind);

  BoundOptions bo;
  bo.delta = cfg.delta;
  bo.solve = opts.solve;
  bo.keep_argmax = opts.keep_argmax;
  for (const std::string& name : opts.bound_malfares) {
    BoundReport rep = compute_bounds(data.train, make_malfare(cfg, name, data.sizes), space, loss, data.draws, bo);
    const std::vector<double> test = test_risks(rep.beta_hat);
    for (std::size_t i = 0; i < g; ++i) rep.groups[i].test_risk = test[i];
    p.test_malfare.push_back(data.test.empty() ? kNaN
                                               : malfare(test, make_malfare(cfg, name, data.sizes)));
    if (name == cfg.malfare && p.pooled_beta.size() == 0) p.pooled_beta = rep.beta_hat;
    p.bounds.push_back(std::move(rep));
  }
  if (p.pooled_beta.size() == 0) {
    p.pooled_beta = solve_emm(risks, make_malfare(cfg, cfg.malfare, data.sizes), space, opts.solve).beta;
  }
  p.pooled_train = as_vector(risks.values(p.pooled_beta));
  p.pooled_test = test_risks(p.pooled_beta);
  if (opts.separate) {
    for (std::size_t i = 0; i < g; ++i) {
      const SolveResult erm = solve_erm(data.train[i], space, loss.kind, opts.solve);
      p.separate_beta.push_back(erm.beta);
      p.separate_train.push_back(risks.value(i, erm.beta));
      p.separate_test.push_back(data.test.empty() ? kNaN : empirical_risk(erm.beta, data.test[i], loss.kind));
    }
  }
  return p;
}

std::vector<GridPoint> run_grid(const ExperimentConfig& cfg, const GridOptions& opts, std::size_t jobs) {
  const std::size_t per_run = cfg.grid.size();
  std::vector<GridPoint> out(static_cast<std::size_t>(cfg.runs) * per_run);
  parallel_for(out.size(), jobs, [&](std::size_t k) {
    out[k] = run_grid_point(cfg, static_cast<int>(k / per_run), cfg.grid[k % per_run], opts);
  });
  return out;
}

MedianSeries median_series(std::span<const GridPoint> points,
                           const std::function<double(const GridPoint&, std::size_t)>& value) {
  MedianSeries s;
  std::map<std::size_t, std::vector<const GridPoint*>> by_total;
  for (const GridPoint& p : points) by_total[p.total].push_back(&p);
  if (by_total.empty()) return s;
  const std::size_t g = points.front().sizes.size();
  s.sizes.resize(g);
  s.values.resize(g);
  for (const auto& [total, pts] : by_total) {
    s.totals.push_back(total);
    for (std::size_t i = 0; i < g; ++i) {
      std::vector<double> v;
      for (const GridPoint* p : pts) v.push_back(value(*p, i));
      s.sizes[i].push_back(pts.front()->sizes[i]);
      s.values[i].push_back(quartiles(std::move(v)));
    }
  }
  return s;
}

void write_pooled_csv(std::ostream& out, std::span<const GridPoint> points) {
  const auto old = out.precision(17);
  out << "run,total_m,group,m_i,pooled_train_risk,pooled_test_risk,separate_train_risk,separate_test_risk\n";
  for (const GridPoint& p : points) {
    for (std::size_t i = 0; i < p.sizes.size(); ++i) {
      out << p.run << ',' << p.total << ',' << i + 1 << ',' << p.sizes[i] << ',' << p.pooled_train[i] << ','
          << p.pooled_test[i] << ',' << (p.separate_train.empty() ? kNaN : p.separate_train[i]) << ','
          << (p.separate_test.empty() ? kNaN : p.separate_test[i]) << '\n';
    }
  }
  out.precision(old);
}

void write_pooled_summary_csv(std::ostream& out, std::span<const GridPoint> points) {
  const auto old = out.precision(17);
  out << "total_m,group,m_i,series,q1,median,q3\n";
  write_quartile_rows(out, median_series(points, [](const GridPoint& p, std::size_t i) { return p.pooled_test[i]; }),
                      "pooled_test_risk");
  write_quartile_rows(out,
                      median_series(points, [](const GridPoint& p, std::size_t i) { return p.separate_test[i]; }),
                      "separate_test_risk");
  out.precision(old);
}

std::string pooled_svg(std::span<const GridPoint> points) {
  const auto pooled = median_series(points, [](const GridPoint& p, std::size_t i) { return p.pooled_test[i]; });
  const auto separate = median_series(points, [](const GridPoint& p, std::size_t i) { return p.separate_test[i]; });
  std::vector<svg::Panel> panels;
  for (std::size_t i = 0; i < pooled.values.size(); ++i) {
    svg::Panel panel;
    panel.title = "group " + std::to_string(i + 1);
    panel.xlabel = "total sample size";
    panel.ylabel = "test risk";
    panel.logx = true;
    panel.lines.push_back(quartile_line(pooled, i, "pooled", svg::palette(0), false));
    panel.lines.push_back(quartile_line(separate, i, "separate", svg::palette(1), true));
    panels.push_back(std::move(panel));
  }
  return svg::render(panels, "Test risk of pooled and separately trained models (median, quartiles)");
}

void write_grid_bounds_csv(std::ostream& out, std::span<const GridPoint> points, std::size_t which) {
  write_bounds_csv_header(out);
  for (const GridPoint& p : points) write_bounds_csv_rows(out, p.run, p.total, p.bounds.at(which));
}

namespace {

double realized_gap(const GroupBound& g) { return std::abs(g.emp_risk - g.test_risk); }

}  // namespace

void write_bounds_summary_csv(std::ostream& out, std::span<const GridPoint> points, std::size_t which) {
  const auto old = out.precision(17);
  out << "total_m,group,m_i,series,q1,median,q3\n";
  write_quartile_rows(
      out, median_series(points, [&](const GridPoint& p, std::size_t i) { return p.bounds.at(which).groups[i].bound_full; }),
      "bound_full");
  write_quartile_rows(out,
                      median_series(points, [&](const GridPoint& p, std::size_t i) {
                        return p.bounds.at(which).groups[i].bound_restricted;
                      }),
                      "bound_restr");
  write_quartile_rows(
      out, median_series(points, [&](const GridPoint& p, std::size_t i) { return realized_gap(p.bounds.at(which).groups[i]); }),
      "realized_gap");
  out.precision(old);
}

std::string bounds_svg(std::span<const GridPoint> points, std::size_t which, const std::string& title) {
  const auto full =
      median_series(points, [&](const GridPoint& p, std::size_t i) { return p.bounds.at(which).groups[i].bound_full; });
  const auto restr = median_series(
      points, [&](const GridPoint& p, std::size_t i) { return p.bounds.at(which).groups[i].bound_restricted; });
  const auto gap =
      median_series(points, [&](const GridPoint& p, std::size_t i) { return realized_gap(p.bounds.at(which).groups[i]); });
  std::vector<svg::Panel> panels;
  for (std::size_t i = 0; i < full.values.size(); ++i) {
    svg::Panel panel;
    panel.title = "group " + std::to_string(i + 1);
    panel.xlabel = "total sample size";
    panel.ylabel = "generalization bound";
    panel.logx = true;
    panel.logy = true;
    panel.lines.push_back(quartile_line(full, i, "bound over H", svg::palette(0), false));
    panel.lines.push_back(quartile_line(restr, i, "restricted bound", svg::palette(1), false));
    panel.lines.push_back(quartile_line(gap, i, "|train - test|", svg::palette(2), true));
    panels.push_back(std::move(panel));
  }
  return svg::render(panels, title);
}

// --- fast rate ---------------------------------------------------------------

std::string fastrate_svg(std::span<const FastRatePoint> curve) {
  svg::Panel panel;
  panel.title = "0-dimensional regression, unit range";
  panel.xlabel = "m";
  panel.ylabel = "Rademacher average";
  panel.logx = true;
  panel.logy = true;
  svg::Line full{"full class", {}, {}, {}, {}, svg::palette(0), false};
  svg::Line restr{"restricted class", {}, {}, {}, {}, svg::palette(1), false};
  svg::Line eps{"eps", {}, {}, {}, {}, "#777777", true};
  for (const FastRatePoint& p : curve) {
    const double m = static_cast<double>(p.m);
    full.x.push_back(m);
    full.y.push_back(p.rade_full);
    restr.x.push_back(m);
    restr.y.push_back(p.rade_restricted);
    eps.x.push_back(m);
    eps.y.push_back(p.eps);
  }
  panel.lines = {full, restr, eps};
  const std::vector<svg::Panel> panels{panel};
  return svg::render(panels);
}

}  // namespace mfb
