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

#ifndef MALFARE_BOUNDS_EXPERIMENTS_HPP_
#define MALFARE_BOUNDS_EXPERIMENTS_HPP_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "malfare_bounds/bounds.hpp"
#include "malfare_bounds/config.hpp"
#include "malfare_bounds/fastrate.hpp"

namespace mfb {

/// Calls fn(k) for every k in [0, n) on up to `jobs` threads. After all
/// workers finish, the exception of the lowest failing k is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};
/// Linear-interpolation quartiles. Throws DimensionError on empty input.
Quartiles quartiles(std::vector<double> values);

/// Samples and signs of one (run, total) grid point. Streams are keyed by
/// (seed, group id, run, purpose, total); test sets use total = 0 so every
/// grid point of a run shares them.
struct PointData {
  int run = 0;
  std::size_t total = 0;
  std::vector<std::size_t> sizes;
  std::vector<GroupSample> train;
  std::vector<GroupSample> test;
  std::vector<RademacherDraw> draws;
};
PointData make_point(const ExperimentConfig& cfg, int run, std::size_t total, bool with_test, bool with_draws);

struct InvariantTally {
  std::size_t checked = 0;
  std::vector<std::string> failures;

  void check(bool ok, const std::string& what);
  void merge(const InvariantTally& other);
  bool ok() const noexcept { return failures.empty(); }
};

/// Containment (restricted <= full + tol), feasibility of the EMM solution
/// (violation <= tol) and nonnegativity of eps and bounds.
void check_report(const BoundReport& report, double tol, const std::string& where, InvariantTally& tally);

// --- contours --------------------------------------------------------------

struct ContourRun {
  int run = 0;
  std::vector<std::size_t> sizes;
  BoundReport report;  // argmax points kept
  std::size_t argmax_points = 0;
  std::size_t off_boundary = 0;  // argmax points on neither boundary
};

/// Bounds on the single grid point of a regression config, keeping the argmax
/// of every draw. Argmax points are checked against the ball boundary and
/// the restricted-constraint boundary with tolerance `boundary_tol`.
ContourRun run_contours(const ExperimentConfig& cfg, int run, const SolveOptions& opts = {},
                        double boundary_tol = 1e-8);
/// run,group,m_i,mcera_full,mcera_restr,bound_full,bound_restr,threshold_c,emm_violation
void write_contours_summary_csv(std::ostream& out, std::span<const ContourRun> runs);
/// run,group,class,draw,beta0,...; class is full, restricted or emm.
void write_contours_points_csv(std::ostream& out, std::span<const ContourRun> runs);
std::string contours_svg(const ContourRun& run, double rho);

// --- grid experiments --------------------------------------------------------

struct GridOptions {
  bool with_test = true;
  bool separate = true;  // fit per-group ERM models
  std::vector<std::string> bound_malfares;
  bool keep_argmax = false;
  SolveOptions solve;
};

struct GridPoint {
  int run = 0;
  std::size_t total = 0;
  std::vector<std::size_t> sizes;
  /// Shared EMM model under the config malfare.
  Eigen::VectorXd pooled_beta;
  std::vector<double> pooled_train;
  std::vector<double> pooled_test;
  std::vector<Eigen::VectorXd> separate_beta;
  std::vector<double> separate_train;
  std::vector<double> separate_test;
  /// One report per entry of GridOptions::bound_malfares, test risks filled.
  std::vector<BoundReport> bounds;
  /// Malfare of the test risks of each report's EMM solution.
  std::vector<double> test_malfare;
};

GridPoint run_grid_point(const ExperimentConfig& cfg, int run, std::size_t total, const GridOptions& opts);
/// All (run, total) points, run-major, computed on up to `jobs` threads.
std::vector<GridPoint> run_grid(const ExperimentConfig& cfg, const GridOptions& opts, std::size_t jobs);

/// run,total_m,group,m_i,pooled_train_risk,pooled_test_risk,separate_train_risk,separate_test_risk
void write_pooled_csv(std::ostream& out, std::span<const GridPoint> points);
/// total_m,group,m_i,series,q1,median,q3 for pooled and separate test risk.
void write_pooled_summary_csv(std::ostream& out, std::span<const GridPoint> points);
std::string pooled_svg(std::span<const GridPoint> points);

/// Bounds CSV rows of report `which` of every point.
void write_grid_bounds_csv(std::ostream& out, std::span<const GridPoint> points, std::size_t which);
/// total_m,group,m_i,series,q1,median,q3 for bound_full, bound_restr and
/// the realized gap |emp_risk - test_risk|.
void write_bounds_summary_csv(std::ostream& out, std::span<const GridPoint> points, std::size_t which);
std::string bounds_svg(std::span<const GridPoint> points, std::size_t which, const std::string& title);

/// Per-group median series over the grid, indexed [group][grid point].
struct MedianSeries {
  std::vector<std::size_t> totals;
  std::vector<std::vector<std::size_t>> sizes;
  std::vector<std::vector<Quartiles>> values;
};
MedianSeries median_series(std::span<const GridPoint> points,
                           const std::function<double(const GridPoint&, std::size_t group)>& value);

// --- fast rate ---------------------------------------------------------------

std::string fastrate_svg(std::span<const FastRatePoint> curve);

}  // namespace mfb

#endif  // MALFARE_BOUNDS_EXPERIMENTS_HPP_
