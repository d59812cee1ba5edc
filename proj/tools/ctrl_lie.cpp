// ctrl-lie: accessibility and small-time local controllability analysis of
// real-analytic control systems q' = f(t, q, w).

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "ctrl/report.hpp"

namespace {

using ctrl::json;

ctrl::ParamMap parse_param_flags(const std::vector<std::string>& raw) {
  ctrl::ParamMap out;
  for (const auto& s : raw) {
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--param expects name=value, got '" + s + "'");
    out[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
  }
  return out;
}

Eigen::MatrixXd parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) {
    std::vector<double> r;
    std::stringstream rs(row);
    std::string cell;
    while (rs >> cell) {
      if (!cell.empty() && cell.back() == ',') cell.pop_back();
      if (!cell.empty()) r.push_back(std::stod(cell));
    }
    if (!r.empty()) rows.push_back(std::move(r));
  }
  if (rows.empty()) throw CLI::ValidationError("empty matrix '" + text + "'");
  Eigen::MatrixXd M(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size())
      throw CLI::ValidationError("ragged matrix '" + text + "'");
    for (size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  }
  return M;
}

std::vector<double> parse_point(const std::string& text) {
  std::string body = text;
  if (!body.empty() && body.front() == '(') body = body.substr(1);
  if (!body.empty() && body.back() == ')') body.pop_back();
  std::vector<double> out;
  std::stringstream ss(body);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

void emit(const json& report, const std::string& json_path) {
  std::string text = report.dump(2);
  if (json_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream f(json_path);
  if (!f) throw std::runtime_error("cannot write '" + json_path + "'");
  f << text << '\n';
  std::cout << "report written to " << json_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symbolic + numeric controllability analysis of q' = f(t, q, w)"};
  app.require_subcommand(1);

  std::string system_arg, json_path, out_path, matrix_a, matrix_b, point_arg;
  std::vector<std::string> param_flags, point_flags;
  uint64_t seed = ctrl::kDefaultSeed;
  double tol = ctrl::kRankTol;
  int beta = 1, max_depth = -1, points = 16;
  int span_trials = ctrl::kSpanTrials, rank_trials = ctrl::kRankTrials;
  int bracket_depth = ctrl::kMaxBracketDepth;
  ctrl::SimulateOptions sim;
  int random_count = 0, rand_n = 3, rand_m = 2;

  auto add_common = [&](CLI::App* cmd, bool with_system = true) {
    if (with_system)
      cmd->add_option("system", system_arg,
                      "system file or fixture (exampleA, exampleB, exampleC, marta, sleigh, "
                      "kalman-random)")
          ->required();
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--tol", tol, "rank tolerance (default 1e-8)");
    cmd->add_option("--span-trials", span_trials, "sample points per span test (default 24)");
    cmd->add_option("--rank-trials", rank_trials, "sample points per rank profile (default 24)");
    cmd->add_option("--bracket-depth", bracket_depth, "Lie-closure depth cap (default 4)");
    cmd->add_option("--json", json_path, "write the report to this file");
    cmd->add_option("--param", param_flags, "override a system parameter, name=value");
  };

  auto* analyze = app.add_subcommand("analyze", "full pipeline: generators, strata, verdicts");
  add_common(analyze);
  analyze->add_option("--points", points, "goodness samples per stratum");

  auto* brackets = app.add_subcommand("brackets", "iterated bracket chain of one control");
  add_common(brackets);
  brackets->add_option("--beta", beta, "control index (1-based)")->required();
  brackets->add_option("--max-depth", max_depth, "explicit chain depth cap");

  auto* strata_cmd = app.add_subcommand("strata", "Lie closure and strata");
  add_common(strata_cmd);

  auto* goodness = app.add_subcommand("goodness", "goodness verdicts at probe points");
  add_common(goodness);
  goodness->add_option("--point", point_flags, "extra probe point \"(t, q..., w...)\"");

  auto* kalman_cmd = app.add_subcommand("kalman", "controllability rank test for q' = Aq + Bw");
  kalman_cmd->add_option("--A", matrix_a, "state matrix, rows ';'-separated");
  kalman_cmd->add_option("--B", matrix_b, "input matrix, rows ';'-separated");
  kalman_cmd->add_option("--random", random_count, "test this many random pairs instead");
  kalman_cmd->add_option("--n", rand_n, "state dimension for --random");
  kalman_cmd->add_option("--m", rand_m, "control dimension for --random");
  kalman_cmd->add_option("--seed", seed, "random seed");
  kalman_cmd->add_option("--json", json_path, "write the report to this file");

  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo reachable cloud");
  add_common(simulate);
  simulate->add_option("--T", sim.T, "horizon")->required();
  simulate->add_option("--samples", sim.samples, "number of trajectories")->required();
  simulate->add_option("--segments", sim.segments, "max control pieces per signal");
  simulate->add_option("--dt", sim.dt, "integrator step (default 1e-3*T)");
  simulate->add_option("--q0", point_arg, "initial state \"(q1, ..., qn)\"");
  simulate->add_option("--r", sim.r, "covers_ball radius");
  simulate->add_option("--delta", sim.delta, "covers_ball tolerance");
  simulate->add_option("--out", out_path, "write the cloud records to this file");

  CLI11_PARSE(app, argc, argv);

  try {
    ctrl::AnalyzeOptions opt;
    opt.seed = seed;
    opt.tol = tol;
    opt.goodness_points = points;
    opt.span_trials = span_trials;
    opt.rank_trials = rank_trials;
    opt.max_bracket_depth = bracket_depth;

    if (analyze->parsed()) {
      auto ls = ctrl::load(system_arg, seed, parse_param_flags(param_flags));
      emit(ctrl::analyze_report(ls, opt), json_path);
    } else if (brackets->parsed()) {
      auto ls = ctrl::load(system_arg, seed, parse_param_flags(param_flags));
      emit(ctrl::brackets_report(ls, beta, max_depth, opt), json_path);
    } else if (strata_cmd->parsed()) {
      auto ls = ctrl::load(system_arg, seed, parse_param_flags(param_flags));
      emit(ctrl::strata_report(ls, opt), json_path);
    } else if (goodness->parsed()) {
      auto ls = ctrl::load(system_arg, seed, parse_param_flags(param_flags));
      std::vector<ctrl::Point> pts;
      for (const auto& p : ls.system.probes) pts.push_back(ctrl::Point{p});
      for (const auto& s : point_flags) pts.push_back(ctrl::Point{parse_point(s)});
      if (pts.empty()) throw std::runtime_error("no probe points; pass --point or add probes");
      emit(ctrl::goodness_report(ls, pts, opt), json_path);
    } else if (kalman_cmd->parsed()) {
      if (random_count > 0) {
        json list = json::array();
        int controllable = 0;
        for (int i = 0; i < random_count; ++i) {
          auto ls = ctrl::load("kalman-random", seed + i);
          Eigen::MatrixXd A(ls.system.n, ls.system.n), B(ls.system.n, ls.system.m);
          auto cf = ctrl::canonical_fields(ls.system);
          ctrl::Point origin{std::vector<double>(ls.system.chart().dim(), 0.0)};
          for (int r = 0; r < ls.system.n; ++r) {
            for (int c = 0; c < ls.system.n; ++c) {
              ctrl::Expr d = ctrl::diff(ls.system.f[r], ls.system.chart().q_index(c + 1));
              A(r, c) = ctrl::eval(d, origin.x, ls.system.params);
            }
            for (int c = 0; c < ls.system.m; ++c) {
              ctrl::Expr d = ctrl::diff(ls.system.f[r], ls.system.chart().w_index(c + 1));
              B(r, c) = ctrl::eval(d, origin.x, ls.system.params);
            }
          }
          json r = ctrl::kalman_report(A, B);
          if (r["controllable"].get<bool>()) ++controllable;
          r["seed"] = seed + i;
          list.push_back(std::move(r));
        }
        emit(json{{"random_pairs", list}, {"controllable", controllable}}, json_path);
      } else {
        if (matrix_a.empty() || matrix_b.empty())
          throw std::runtime_error("kalman needs --A and --B (or --random N)");
        emit(ctrl::kalman_report(parse_matrix(matrix_a), parse_matrix(matrix_b)), json_path);
      }
    } else if (simulate->parsed()) {
      auto ls = ctrl::load(system_arg, seed, parse_param_flags(param_flags));
      sim.seed = seed;
      if (!point_arg.empty()) sim.q0 = parse_point(point_arg);
      auto out = ctrl::simulate_report(ls, sim);
      if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw std::runtime_error("cannot write '" + out_path + "'");
        f << ctrl::cloud_export(out.cloud);
        out.report["simulation"]["cloud_file"] = out_path;
      }
      emit(out.report, json_path);
    }
  } catch (const ctrl::SystemFileError& e) {
    std::cerr << "system file error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
