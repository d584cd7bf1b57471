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

// malfare-bounds: experiment harness.
//
// Exit codes: 0 success, 1 solver error or failed invariant, 2 config error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "malfare_bounds/config.hpp"
#include "malfare_bounds/errors.hpp"
#include "malfare_bounds/experiments.hpp"
#include "malfare_bounds/fastrate.hpp"

namespace fs = std::filesystem;
using namespace mfb;

namespace {

constexpr std::size_t kFullGridMax = 32768;
constexpr std::size_t kCappedGridMax = 8192;
constexpr double kInvariantTol = 1e-6;

struct Options {
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::string> malfare;
  std::optional<double> delta;
  std::optional<std::size_t> mc_n;
  std::optional<int> runs;
  bool full = false;
  std::size_t jobs = 1;
  std::size_t m_min = 64;
  std::size_t m_max = 16384;
};

class Manifest {
 public:
  Manifest(const Options& opts, std::string command_line) : opts_(opts), command_(std::move(command_line)) {}

  // Writes `text` to out/name and records it.
  void write(const std::string& name, const std::string& text) {
    const fs::path path = fs::path(opts_.out) / name;
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + path.string());
    outputs_.push_back(name);
  }
  template <typename Fn>
  void write_with(const std::string& name, Fn fn) {
    std::ostringstream s;
    fn(s);
    write(name, s.str());
  }
  void criterion(const std::string& name, bool pass) { criteria_[name] = pass; }
  void value(const std::string& name, double v) { values_[name] = v; }
  void set_config(const ExperimentConfig& cfg) {
    hash_ = config_hash(cfg);
    seed_ = cfg.seed;
  }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  // Writes manifest.json; true when every criterion passed and every output
  // exists and is non-empty.
  bool finish() {
    nlohmann::json j;
    j["command"] = command_;
    j["config_hash"] = hash_;
    j["seed"] = seed_;
    nlohmann::json outs = nlohmann::json::array();
    bool ok = true;
    for (const auto& name : outputs_) {
      const fs::path path = fs::path(opts_.out) / name;
      const bool present = fs::exists(path) && fs::file_size(path) > 0;
      ok = ok && present;
      outs.push_back({{"path", name}, {"bytes", present ? fs::file_size(path) : 0}});
    }
    j["outputs"] = outs;
    nlohmann::json crit = nlohmann::json::object();
    for (const auto& [name, pass] : criteria_) {
      crit[name] = pass ? "PASS" : "FAIL";
      ok = ok && pass;
    }
    j["criteria"] = crit;
    j["values"] = values_;
    std::ofstream f(fs::path(opts_.out) / "manifest.json", std::ios::binary);
    f << j.dump(2) << '\n';
    for (const auto& [name, pass] : criteria_) std::cout << (pass ? "PASS " : "FAIL ") << name << '\n';
    return ok;
  }

 private:
  const Options& opts_;
  std::string command_;
  std::string hash_ = "";
  std::uint64_t seed_ = 0;
  std::vector<std::string> outputs_;
  std::map<std::string, bool> criteria_;
  std::map<std::string, double> values_;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

ExperimentConfig load(const Options& opts, bool contours) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) {
    cfg = config_from_json(read_file(opts.config_path));
    if (opts.full && cfg.grid.back() < kFullGridMax) {
      for (std::size_t m = cfg.grid.back() * 2; m <= kFullGridMax; m *= 2) cfg.grid.push_back(m);
    }
  } else {
    cfg = contours ? contours_preset() : logistic_preset(opts.full ? kFullGridMax : kCappedGridMax);
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.malfare) cfg.malfare = *opts.malfare;
  if (opts.delta) cfg.delta = *opts.delta;
  if (opts.mc_n) cfg.mc_n = *opts.mc_n;
  if (opts.runs) cfg.runs = *opts.runs;
  validate_config(cfg);
  return cfg;
}

std::string malfare_label(const std::string& name) {
  if (name == "1") return "utilitarian";
  if (name == "inf" || name == "infinity") return "egalitarian";
  if (name == "gini") return "gini";
  return "p" + name;
}

void record_invariants(Manifest& man, const InvariantTally& tally) {
  for (std::size_t k = 0; k < tally.failures.size() && k < 20; ++k) std::cerr << "invariant: " << tally.failures[k] << '\n';
  man.value("invariant_checks", static_cast<double>(tally.checked));
  man.value("invariant_failures", static_cast<double>(tally.failures.size()));
  man.criterion("invariants", tally.ok());
}

// --- subcommands -------------------------------------------------------------

void cmd_datagen(const Options& opts, Manifest& man) {
  const ExperimentConfig cfg = load(opts, false);
  man.set_config(cfg);
  man.write("config.json", config_to_json(cfg));
  for (std::size_t total : cfg.grid) {
    std::ostringstream s;
    for (int run = 0; run < cfg.runs; ++run) {
      const PointData p = make_point(cfg, run, total, false, false);
      write_samples_csv(s, run, p.train, run == 0);
    }
    man.write("samples_m" + std::to_string(total) + ".csv", s.str());
  }
}

void cmd_train(const Options& opts, Manifest& man) {
  const ExperimentConfig cfg = load(opts, false);
  man.set_config(cfg);
  man.write("config.json", config_to_json(cfg));
  GridOptions go;
  const auto points = run_grid(cfg, go, opts.jobs);
  man.write_with("risks.csv", [&](std::ostream& o) { write_pooled_csv(o, points); });
  man.write_with("models.csv", [&](std::ostream& o) {
    o.precision(17);
    o << "run,total_m,model,group";
    for (std::size_t k = 0; k < cfg.d; ++k) o << ",beta" << k;
    o << '\n';
    auto row = [&](const GridPoint& p, const char* model, std::size_t group, const Eigen::VectorXd& b) {
      o << p.run << ',' << p.total << ',' << model << ',' << group;
      for (Eigen::Index k = 0; k < b.size(); ++k) o << ',' << b[k];
      o << '\n';
    };
    for (const GridPoint& p : points) {
      row(p, "pooled", 0, p.pooled_beta);
      for (std::size_t i = 0; i < p.separate_beta.size(); ++i) row(p, "separate", i + 1, p.separate_beta[i]);
    }
  });
}

void cmd_bounds(const Options& opts, Manifest& man) {
  const ExperimentConfig cfg = load(opts, false);
  man.set_config(cfg);
  man.write("config.json", config_to_json(cfg));
  GridOptions go;
  go.separate = false;
  go.bound_malfares = {cfg.malfare};
  const auto points = run_grid(cfg, go, opts.jobs);
  InvariantTally tally;
  for (const GridPoint& p : points) {
    check_report(p.bounds[0], kInvariantTol, "run " + std::to_string(p.run) + " m " + std::to_string(p.total), tally);
  }
  man.write_with("bounds.csv", [&](std::ostream& o) { write_grid_bounds_csv(o, points, 0); });
  man.write_with("malfare_bounds.csv", [&](std::ostream& o) {
    o.precision(17);
    o << "run,total_m,emp_malfare,test_malfare,sandwich_lower,sandwich_upper,sandwich_upper_loose,suboptimality\n";
    for (const GridPoint& p : points) {
      const BoundReport& r = p.bounds[0];
      o << p.run << ',' << p.total << ',' << r.emp_malfare << ',' << p.test_malfare[0] << ',' << r.sandwich.lower
        << ',' << r.sandwich.upper << ',' << r.sandwich.upper_loose << ',' << r.suboptimality << '\n';
    }
  });
  record_invariants(man, tally);
}

void cmd_contours(const Options& opts, Manifest& man) {
  const ExperimentConfig cfg = load(opts, true);
  man.set_config(cfg);
  man.write("config.json", config_to_json(cfg));
  std::vector<ContourRun> runs(static_cast<std::size_t>(cfg.runs));
  parallel_for(runs.size(), opts.jobs, [&](std::size_t k) { runs[k] = run_contours(cfg, static_cast<int>(k)); });
  InvariantTally tally;
  std::size_t off = 0;
  for (const ContourRun& r : runs) {
    check_report(r.report, kInvariantTol, "run " + std::to_string(r.run), tally);
    off += r.off_boundary;
  }
  man.write_with("contours_summary.csv", [&](std::ostream& o) { write_contours_summary_csv(o, runs); });
  man.write_with("contours_points.csv", [&](std::ostream& o) { write_contours_points_csv(o, runs); });
  man.write("contours.svg", contours_svg(runs.front(), cfg.rho));
  const std::size_t g = cfg.groups.size();
  for (std::size_t i = 0; i < g; ++i) {
    std::vector<double> full, restr;
    for (const ContourRun& r : runs) {
      full.push_back(r.report.groups[i].mcera_full);
      restr.push_back(r.report.groups[i].mcera_restricted);
    }
    const double mf = quartiles(full).median;
    const double mr = quartiles(restr).median;
    man.value("group" + std::to_string(i + 1) + "_median_mcera_full", mf);
    man.value("group" + std::to_string(i + 1) + "_median_mcera_restr", mr);
    std::printf("group %zu: median mcera_full %.4f, mcera_restr %.4f\n", i + 1, mf, mr);
  }
  man.value("argmax_off_boundary", static_cast<double>(off));
  man.criterion("argmax_on_boundary", off == 0);
  record_invariants(man, tally);
}

void cmd_pooled(const Options& opts, Manifest& man) {
  const ExperimentConfig cfg = load(opts, false);
  man.set_config(cfg);
  man.write("config.json", config_to_json(cfg));
  GridOptions go;
  const auto points = run_grid(cfg, go, opts.jobs);
  man.write_with("pooled.csv", [&](std::ostream& o) { write_pooled_csv(o, points); });
  man.write_with("pooled_summary.csv", [&](std::ostream& o) { write_pooled_summary_csv(o, points); });
  man.write("pooled.svg", pooled_svg(points));
  // Smallest group: share of grid points where the pooled median wins.
  const auto pooled = median_series(points, [](const GridPoint& p, std::size_t i) { return p.pooled_test[i]; });
  const auto separate = median_series(points, [](const GridPoint& p, std::size_t i) { return p.separate_test[i]; });
  const std::size_t last = cfg.groups.size() - 1;
  std::size_t wins = 0, considered = 0;
  for (std::size_t t = 0; t < pooled.totals.size(); ++t) {
    if (pooled.sizes[last][t] < 32) continue;
    ++considered;
    if (pooled.values[last][t].median < separate.values[last][t].median) ++wins;
  }
  const double share = considered ? static_cast<double>(wins) / static_cast<double>(considered) : 0.0;
  man.value("last_group_pooled_win_share", share);
  std::printf("group %zu: pooled median test risk below separate at %zu of %zu grid points (m_i >= 32)\n", last + 1,
              wins, considered);
}

void cmd_bounds_compare(const Options& opts, Manifest& man) {
  const ExperimentConfig cfg = load(opts, false);
  man.set_config(cfg);
  man.write("config.json", config_to_json(cfg));
  GridOptions go;
  go.separate = false;
  go.bound_malfares = opts.malfare ? std::vector<std::string>{*opts.malfare} : std::vector<std::string>{"1", "inf"};
  const auto points = run_grid(cfg, go, opts.jobs);
  InvariantTally tally;
  for (std::size_t k = 0; k < go.bound_malfares.size(); ++k) {
    const std::string label = malfare_label(go.bound_malfares[k]);
    for (const GridPoint& p : points) {
      check_report(p.bounds[k], kInvariantTol,
                   label + " run " + std::to_string(p.run) + " m " + std::to_string(p.total), tally);
    }
    man.write_with("bounds_" + label + ".csv", [&](std::ostream& o) { write_grid_bounds_csv(o, points, k); });
    man.write_with("bounds_" + label + "_summary.csv",
                   [&](std::ostream& o) { write_bounds_summary_csv(o, points, k); });
    man.write("bounds_" + label + ".svg",
              bounds_svg(points, k, "Generalization bounds, " + label + " malfare (median, quartiles)"));
    std::size_t improved = 0, rows = 0;
    for (const GridPoint& p : points) {
      for (const GroupBound& g : p.bounds[k].groups) {
        ++rows;
        if (g.bound_full - g.bound_restricted > 1e-3) ++improved;
      }
    }
    man.value(label + "_improved_share", static_cast<double>(improved) / static_cast<double>(rows));
    std::printf("%s: restricted bound below full by > 1e-3 in %zu of %zu rows\n", label.c_str(), improved, rows);
  }
  record_invariants(man, tally);
}

void cmd_fastrate(const Options& opts, Manifest& man) {
  const double delta = opts.delta.value_or(0.1);
  if (opts.m_min < 1 || opts.m_max < opts.m_min) throw ConfigError("need 1 <= m-min <= m-max");
  man.set_seed(opts.seed.value_or(0));
  const auto grid = doubling_grid(opts.m_min, opts.m_max);
  const auto curve = fastrate_curve(grid, delta);
  std::vector<double> m, full, mr, restr;
  for (const FastRatePoint& p : curve) {
    m.push_back(static_cast<double>(p.m));
    full.push_back(p.rade_full);
    if (p.restriction_active()) {
      mr.push_back(static_cast<double>(p.m));
      restr.push_back(p.rade_restricted);
    }
  }
  const double slope_full = loglog_slope(m, full);
  const double slope_restr = restr.size() >= 2 ? loglog_slope(mr, restr) : std::nan("");
  man.write_with("fastrate.csv", [&](std::ostream& o) { write_fastrate_csv(o, curve); });
  man.write_with("fastrate_slopes.csv", [&](std::ostream& o) {
    o.precision(17);
    o << "series,m_from,m_to,points,slope\n";
    o << "full," << m.front() << ',' << m.back() << ',' << m.size() << ',' << slope_full << '\n';
    if (!mr.empty()) o << "restricted," << mr.front() << ',' << mr.back() << ',' << mr.size() << ',' << slope_restr << '\n';
  });
  man.write("fastrate.svg", fastrate_svg(curve));
  man.value("slope_full", slope_full);
  man.value("slope_restricted", slope_restr);
  std::printf("log-log slope: full %.4f, restricted %.4f\n", slope_full, slope_restr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-fair malfare minimization and restricted-class generalization bounds"};
  app.require_subcommand(1);
  Options opts;
  std::map<std::string, void (*)(const Options&, Manifest&)> handlers{
      {"datagen", cmd_datagen},        {"train", cmd_train},          {"bounds", cmd_bounds},
      {"exp-contours", cmd_contours},  {"exp-pooled", cmd_pooled},    {"exp-bounds", cmd_bounds_compare},
      {"exp-fastrate", cmd_fastrate}};
  const std::map<std::string, std::string> help{
      {"datagen", "write training samples for every run and grid point"},
      {"train", "fit the shared EMM model and per-group ERM models"},
      {"bounds", "per-group and malfare bounds under the config malfare"},
      {"exp-contours", "MCERA over H and the restricted classes, argmax points (regression)"},
      {"exp-pooled", "test risk of pooled versus separately trained models"},
      {"exp-bounds", "full versus restricted bounds, utilitarian and egalitarian"},
      {"exp-fastrate", "exact curves of the 0-dimensional worked example"}};
  for (const auto& [name, text] : help) {
    CLI::App* sub = app.add_subcommand(name, text);
    sub->add_option("--config", opts.config_path, "JSON config (default: built-in setup)")->check(CLI::ExistingFile);
    sub->add_option("--seed", opts.seed, "master seed (overrides the config)");
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
    sub->add_option("--malfare", opts.malfare, "p >= 1, inf or gini (overrides the config)");
    sub->add_option("--delta", opts.delta, "failure probability");
    sub->add_option("--mc-n", opts.mc_n, "Rademacher sign vectors per group");
    sub->add_option("--runs", opts.runs, "number of runs (overrides the config)");
    sub->add_flag("--full", opts.full, "extend the grid to total m = 32768");
    sub->add_option("--jobs", opts.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    if (name == "exp-fastrate") {
      sub->add_option("--m-min", opts.m_min, "smallest m")->capture_default_str();
      sub->add_option("--m-max", opts.m_max, "largest m")->capture_default_str();
    }
    sub->callback([&opts, name = name] { opts.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string command_line = "malfare-bounds";
  for (int k = 1; k < argc; ++k) command_line += std::string(" ") + argv[k];
  try {
    fs::create_directories(opts.out);
    Manifest man(opts, command_line);
    handlers.at(opts.command)(opts, man);
    return man.finish() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SpecError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 1;
  } catch (const InfeasibleError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
