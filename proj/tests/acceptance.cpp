// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.  Tolerances and thresholds are pinned here, in code.

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <vector>

#include "ctrl/report.hpp"
#include "systems.hpp"
#include "test_util.hpp"

using namespace ctrl;

namespace {

struct Criterion {
  int id;
  std::string title;
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      notes.push_back("FAILED: " + what);
    }
  }
  void note(const std::string& what) { notes.push_back(what); }
};

std::vector<Criterion> results;

Criterion& begin(int id, const std::string& title) {
  results.push_back(Criterion{id, title});
  return results.back();
}

Point at(std::initializer_list<double> xs) { return Point{std::vector<double>(xs)}; }

// ---------------------------------------------------------------------------

void criterion1() {
  auto& c = begin(1, "bracket engine vs finite-difference oracle");
  Rng rng(10101);
  double max_err = 0.0;
  int fields_used = 0, points_used = 0;
  while (fields_used < 100) {
    int n = 1 + static_cast<int>(rng.below(5));
    int m = 1 + static_cast<int>(rng.below(2));
    if (1 + n + m > 8) continue;
    Chart chart{n, m};
    VectorField X = testutil::random_poly_field(rng, chart, "X");
    VectorField Y = testutil::random_poly_field(rng, chart, "Y");
    // sprinkle trig factors into a couple of components
    for (int k = 1; k < chart.dim(); ++k) {
      if (rng.below(3) == 0)
        X.comp[k] = simplify(
            Expr::prod({X.comp[k], Expr::sin(Expr::var(static_cast<int>(rng.below(chart.dim()))))}));
      if (rng.below(3) == 0)
        Y.comp[k] = simplify(
            Expr::prod({Y.comp[k], Expr::cos(Expr::var(static_cast<int>(rng.below(chart.dim()))))}));
    }
    fields_used += 2;
    VectorField B = lie_bracket(X, Y);
    for (int rep = 0; rep < 2; ++rep) {
      auto p = testutil::random_point(rng, chart.dim());
      auto fd = testutil::fd_bracket(X, Y, p, {}, 1e-5);
      auto sym = eval_field(B, Point{p}, {});
      for (int k = 0; k < chart.dim(); ++k)
        max_err = std::max(max_err, std::fabs(sym[k] - fd[k]));
      ++points_used;
    }
  }
  // top up to 100 evaluation points on a fixed pair
  Chart chart{3, 2};
  VectorField X = testutil::random_poly_field(rng, chart, "X");
  VectorField Y = testutil::random_poly_field(rng, chart, "Y");
  VectorField B = lie_bracket(X, Y);
  while (points_used < 100) {
    auto p = testutil::random_point(rng, chart.dim());
    auto fd = testutil::fd_bracket(X, Y, p, {}, 1e-5);
    auto sym = eval_field(B, Point{p}, {});
    for (int k = 0; k < chart.dim(); ++k) max_err = std::max(max_err, std::fabs(sym[k] - fd[k]));
    ++points_used;
  }
  std::ostringstream os;
  os << "max abs error " << max_err << " over " << fields_used << " fields / " << points_used
     << " points";
  c.note(os.str());
  c.check(max_err <= 1e-6, "bracket vs central differences exceeds 1e-6");
}

void criterion2() {
  auto& c = begin(2, "example (A): q' = (w1)^2");
  auto ls = load("exampleA");
  const ControlSystem& sys = ls.system;
  Chart chart = sys.chart();

  auto dii = secondary_distribution(sys);
  auto drops = drop_locus(dii.fields(), sys.domain);
  c.check(drops.generic_rank == 2, "D^II generic rank != 2");
  c.check(drops.sets.size() == 1 && drops.sets[0].rank_on_set == 1 &&
              drops.sets[0].predicate.zero_vars == std::vector<int>{chart.w_index(1)},
          "D^II rank-1 locus is not {w1 = 0}");
  for (double w : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
    int want = (w == 0.0) ? 1 : 2;
    c.check(pointwise_rank(dii.fields(), at({0.3, 0.1, w}), sys.params) == want,
            "pointwise D^II rank wrong at w1 = " + std::to_string(w));
  }

  auto strat = stratify_family(dii, sys.domain);
  c.check(strat.closure.profile.generic == 2 && strat.closure.profile.min_observed == 2,
          "Lie closure rank is not 2 everywhere");

  Point sing = at({0.5, 0.2, 0.0});
  auto first = good_first_kind(sys, sing, strat);
  auto second = good_second_kind(sys, sing, strat);
  c.check(first.kind == GoodnessKind::Inconclusive && second.kind == GoodnessKind::Inconclusive,
          "goodness at (t, q, 0) should be inconclusive");

  auto cloud = reach_cloud(sys, {0.0}, 0.5, 2000);
  double qmin = 1e300;
  for (const auto& e : cloud.endpoints) qmin = std::min(qmin, e[0]);
  c.check(qmin >= -1e-9, "cloud crosses below q0 - 1e-9");
  c.check(!covers_ball(cloud, {0.0}, 0.05, 0.02), "covers_ball unexpectedly succeeds");
}

void criterion3() {
  auto& c = begin(3, "example (B): q' = w1*w2");
  auto ls = load("exampleB");
  const ControlSystem& sys = ls.system;

  auto strat = stratify(sys);
  auto hyper = hyper_accessibility(sys, strat);
  c.check(hyper.hyper_accessible == Verdict3::Established, "hyper-accessibility not established");
  c.check(hyper.all_points_good, "some sampled point is not good");
  bool saw_first = false, saw_second_with_witness = false;
  for (const auto& sg : hyper.strata)
    for (const auto& v : sg.verdicts) {
      if (v.kind == GoodnessKind::First) saw_first = true;
      if (v.kind == GoodnessKind::Second && !v.type_b.empty()) saw_second_with_witness = true;
    }
  c.check(saw_first, "no first-kind point sampled off {w = 0}");
  c.check(saw_second_with_witness, "no second-kind point with a recorded witness bracket");

  auto v0 = good_second_kind(sys, at({0.5, 0.0, 0.0, 0.0}), strat);
  c.check(v0.kind == GoodnessKind::Second && !v0.type_b.empty(),
          "point on {w = 0} is not second-kind good");
  if (!v0.type_b.empty())
    c.note("witness bracket " + v0.type_b[0].bracket_label + " via beta = " +
           std::to_string(v0.type_b[0].beta));

  auto stlc = stlc_at(sys, {0.0});
  c.check(stlc.stlc == Verdict3::Established, "STLC not established at q0 = 0");

  auto cloud = reach_cloud(sys, {0.0}, 0.5, 4000);
  c.check(covers_ball(cloud, {0.0}, 0.05, 0.02),
          "covers_ball(r=0.05, delta=0.02, 4000 samples) failed");
}

void criterion4() {
  auto& c = begin(4, "example (C): q' = exp(w1)");
  auto ls = load("exampleC");
  const ControlSystem& sys = ls.system;

  auto strat = stratify(sys);
  auto hyper = hyper_accessibility(sys, strat);
  c.check(hyper.hyper_accessible == Verdict3::Established, "hyper-accessibility not established");
  for (const auto& sg : hyper.strata)
    for (const auto& v : sg.verdicts)
      c.check(v.kind == GoodnessKind::First, "a sampled point is not first-kind good");

  auto eq = equilibria(sys, {0.0});
  c.check(eq.points.empty(), "equilibria should be empty for exp(w1)");
  auto stlc = stlc_at(sys, {0.0});
  c.check(stlc.stlc == Verdict3::NotEstablished, "STLC must not be asserted without equilibria");

  auto cloud = reach_cloud(sys, {0.2}, 1.0, 1000);
  for (const auto& e : cloud.endpoints)
    c.check(e[0] > 0.2, "cloud endpoint does not satisfy q > q0");
}

void criterion5() {
  auto& c = begin(5, "cos(q3) sin(w1) system");
  auto ls = load("marta");
  const ControlSystem& sys = ls.system;
  Chart chart = sys.chart();

  auto dii = secondary_distribution(sys);
  auto drops = drop_locus(dii.fields(), sys.domain);
  c.check(drops.generic_rank == 5, "D^II generic rank != 5");
  c.check(drops.sets.size() == 1 && drops.sets[0].rank_on_set == 4 &&
              drops.sets[0].predicate.zero_vars ==
                  std::vector<int>({chart.w_index(1), chart.w_index(2)}),
          "D^II does not drop to 4 exactly on Sing = {w1 = w2 = 0}");

  auto strat = stratify_family(dii, sys.domain);
  c.check(strat.closure.profile.generic == 5 && strat.closure.profile.min_observed == 5,
          "closure rank is not 5 everywhere");

  auto sub = sub_distribution(sys, 1);
  auto substrat = stratify_family(sub, sys.domain);
  bool sub_ok = substrat.strata.size() == 2 && substrat.strata[0].closure_rank == 3 &&
                substrat.strata[1].closure_rank == 2 &&
                substrat.strata[1].predicate.zero_vars == std::vector<int>{chart.w_index(2)};
  c.check(sub_ok, "sub-distribution beta=1 ranks are not 3/2 on {w2 != 0}/{w2 = 0}");

  Point sing = at({0.5, 0.1, -0.2, 0.3, 0.0, 0.0});
  auto second = good_second_kind(sys, sing, strat);
  c.check(second.kind == GoodnessKind::Second, "Sing point is not second-kind good");

  // projection rank: computed value, with the printed "5" recorded as a
  // discrepancy in the fixture note
  int pq = pi_q_rank(strat.closure.fields(), sing, sys.params);
  c.check(pq == 3 && pq == sys.n, "pi^Q rank on the closure != 3 = dim Q");
  c.check(ls.note.find("prints 5") != std::string::npos,
          "fixture report does not record the printed-rank discrepancy");
  c.note("pi^Q rank computed 3 = dim Q; the source table prints 5 (recorded)");

  for (const auto& probe : sys.probes) {
    std::vector<double> q0(probe.begin() + 1, probe.begin() + 1 + sys.n);
    auto stlc = stlc_at(sys, q0);
    c.check(stlc.stlc == Verdict3::Established, "STLC not established at a probed q0");
  }
}

void criterion6() {
  auto& c = begin(6, "Chaplygin sleigh, A = 0 and A = 1");
  for (double Aval : {0.0, 1.0}) {
    std::string tag = " [A = " + std::to_string(static_cast<int>(Aval)) + "]";
    auto ls = load("sleigh", kDefaultSeed, {{"A", Aval}});
    const ControlSystem& sys = ls.system;
    Chart chart = sys.chart();

    auto dii = secondary_distribution(sys);
    auto prof = generic_rank(dii.fields(), sys.domain);
    c.check(prof.generic == 7, "D^II generic rank != 7" + tag);
    Point sing = at({0.5, 0.1, -0.2, 0.3, 0.0, 0.0, 0.0, 0.0});
    c.check(pointwise_rank(dii.fields(), sing, sys.params) == 6, "D^II rank != 6 on Sing" + tag);

    auto strat = stratify_family(dii, sys.domain);
    c.check(strat.closure.profile.generic == 7 && strat.closure.profile.min_observed == 7,
            "closure rank is not 7 everywhere" + tag);

    // the paper's witness Y = [W_1^(3), W_2^(1)] completes the span at Sing
    auto cf = canonical_fields(sys);
    VectorField W13 = cf.W0[0];
    for (int k = 0; k < 3; ++k) W13 = lie_bracket(cf.T0, W13);
    VectorField W21 = lie_bracket(cf.T0, cf.W0[1]);
    VectorField Y = lie_bracket(W13, W21);
    auto gens = dii.fields();
    int before = pointwise_rank(gens, sing, sys.params);
    gens.push_back(Y);
    c.check(before == 6 && pointwise_rank(gens, sing, sys.params) == 7,
            "[W_1^(3), W_2^(1)] does not raise the rank to 7 at Sing" + tag);

    // computed sub-distribution ranks (the printed 5/4 is recorded as a
    // discrepancy; the chain spans {dq1, dq2, dq4, dw1} so its rank is <= 4)
    auto sub = sub_distribution(sys, 1);
    c.check(sub.gens.size() == 5, "sub-distribution beta=1 does not keep depths 0..4" + tag);
    auto substrat = stratify_family(sub, sys.domain);
    bool sub_ok = substrat.strata.size() == 2 && substrat.strata[0].closure_rank == 4 &&
                  substrat.strata[1].closure_rank == 3 &&
                  substrat.strata[1].predicate.zero_vars ==
                      std::vector<int>({chart.q_index(5), chart.w_index(2)});
    c.check(sub_ok,
            "sub-distribution beta=1 computed ranks are not 4/3 on the {q5 = w2 = 0} split" + tag);
    c.check(ls.note.find("5/4") != std::string::npos,
            "sleigh fixture does not record the printed 5/4 discrepancy" + tag);

    SampleRestriction off_q5;
    off_q5.avoid_all_zero = {{chart.q_index(5)}};
    auto table = adapted_generators(sys, nullptr, {}, off_q5);
    c.check(table.certified && table.nu == 3 && table.R == std::vector<int>{0, 0, 1, 1},
            "adapted table on {q5 != 0} is not nu=3, R2=R3=1" + tag);

    auto second = good_second_kind(sys, sing, strat);
    c.check(second.kind == GoodnessKind::Second, "Sing point is not second-kind good" + tag);

    int pq = pi_q_rank(strat.closure.fields(), sing, sys.params);
    c.check(pq == 5, "pi^Q rank != 5" + tag);

    auto stlc = stlc_at(sys, {0.0, 0.0, 0.0, 0.0, 0.0});
    c.check(stlc.stlc == Verdict3::Established, "STLC not established at the origin" + tag);
  }
  c.note("computed sub-distribution beta=1 ranks 4/3; the source prints 5/4 (recorded)");

  // Monte-Carlo ball coverage, exactly as stated.  Uniform signals cannot
  // produce the parallel-parking maneuvers that move q2 while pinning the
  // other coordinates: the q2-thickness of the cloud near the origin is
  // about 1e-4, far below delta = 0.01, so this check fails; the analysis
  // is in the reviewer ledger.
  auto t0 = std::chrono::steady_clock::now();
  auto ls = load("sleigh");
  auto cloud = reach_cloud(ls.system, {0, 0, 0, 0, 0}, 1.0, 20000);
  auto rep = covers_ball_report(cloud, {0, 0, 0, 0, 0}, 0.02, 0.01);
  auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  {
    std::ostringstream os;
    os << "covers_ball(r=0.02, delta=0.01, T=1, 20000 samples): covered=" << (rep.covered ? 1 : 0)
       << ", misses=" << rep.misses << "/" << rep.grid_nodes << ", runtime " << dt << "s";
    c.note(os.str());
  }
  c.check(dt <= 120.0, "cloud runtime exceeds 2 minutes");
  c.check(rep.covered,
          "covers_ball(r=0.02, delta=0.01, T=1, 20000 samples) = true is unattainable with "
          "uniform signals (see decisions ledger)");
}

void criterion7() {
  auto& c = begin(7, "Kalman rank test, steering, and the linear cross-check");
  Rng rng(70707);

  // exact agreement with the brute-force controllability-matrix rank
  auto exact_rank = [](const Eigen::MatrixXd& K) {
    const int rows = static_cast<int>(K.rows());
    const int cols = static_cast<int>(K.cols());
    std::vector<std::vector<__int128>> a(rows, std::vector<__int128>(cols));
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) a[i][j] = static_cast<long long>(std::llround(K(i, j)));
    int rank = 0;
    __int128 prev = 1;
    for (int col = 0; col < cols && rank < rows; ++col) {
      int pivot = -1;
      for (int r = rank; r < rows; ++r)
        if (a[r][col] != 0) {
          pivot = r;
          break;
        }
      if (pivot < 0) continue;
      std::swap(a[rank], a[pivot]);
      for (int r = rank + 1; r < rows; ++r) {
        for (int cc = col + 1; cc < cols; ++cc)
          a[r][cc] = (a[rank][col] * a[r][cc] - a[r][col] * a[rank][cc]) / prev;
        a[r][col] = 0;
      }
      prev = a[rank][col];
      ++rank;
    }
    return rank;
  };
  auto random_pair = [&](int max_n, int max_m) {
    int n = 1 + static_cast<int>(rng.below(max_n));
    int m = 1 + static_cast<int>(rng.below(max_m));
    Eigen::MatrixXd A(n, n), B(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        A(i, j) = static_cast<double>(static_cast<long long>(rng.below(7)) - 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        B(i, j) = static_cast<double>(static_cast<long long>(rng.below(7)) - 3);
    return std::make_pair(A, B);
  };

  int mismatches = 0;
  for (int it = 0; it < 200; ++it) {
    auto [A, B] = random_pair(5, 3);
    const int n = static_cast<int>(A.rows());
    const int m = static_cast<int>(B.cols());
    Eigen::MatrixXd K(n, n * m);
    Eigen::MatrixXd block = B;
    for (int l = 0; l < n; ++l) {
      K.middleCols(l * m, m) = block;
      block = A * block;
    }
    if (kalman(A, B).n_max != exact_rank(K)) ++mismatches;
  }
  c.check(mismatches == 0,
          std::to_string(mismatches) + "/200 disagreements with the exact rank oracle");

  int sim_mismatch = 0;
  for (int it = 0; it < 50; ++it) {
    auto [A, B] = random_pair(4, 2);
    const int n = static_cast<int>(A.rows());
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) R(i, j) = rng.range(-1, 1);
    Eigen::MatrixXd S = Eigen::HouseholderQR<Eigen::MatrixXd>(R).householderQ();
    if (kalman(A, B).n_max != kalman(S * A * S.transpose(), S * B).n_max) ++sim_mismatch;
  }
  c.check(sim_mismatch == 0, "similarity invariance violated");

  double worst_steer = 0.0;
  int steered = 0;
  while (steered < 50) {
    auto [A, B] = random_pair(4, 2);
    A *= 0.5;
    B *= 0.5;
    if (!kalman(A, B).controllable) continue;
    const int n = static_cast<int>(A.rows());
    std::vector<double> q0(n), q1(n);
    for (int i = 0; i < n; ++i) {
      q0[i] = rng.range(-0.5, 0.5);
      q1[i] = rng.range(-0.5, 0.5);
    }
    auto res = steer_linear(A, B, q0, q1, 1.5);
    worst_steer = std::max(worst_steer, res.error);
    ++steered;
  }
  {
    std::ostringstream os;
    os << "worst steering endpoint error " << worst_steer << " over 50 controllable pairs";
    c.note(os.str());
  }
  c.check(worst_steer <= 1e-6, "steering endpoint error exceeds 1e-6");

  CriteriaConfig quick;
  quick.goodness_points = 6;
  int cross_mismatch = 0;
  for (int it = 0; it < 100; ++it) {
    int n = 1 + static_cast<int>(rng.below(3));
    int m = 1 + static_cast<int>(rng.below(2));
    std::vector<std::vector<double>> A(n, std::vector<double>(n));
    std::vector<std::vector<double>> B(n, std::vector<double>(m));
    Eigen::MatrixXd Am(n, n), Bm(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        Am(i, j) = A[i][j] = static_cast<double>(static_cast<long long>(rng.below(5)) - 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j)
        Bm(i, j) = B[i][j] = static_cast<double>(static_cast<long long>(rng.below(5)) - 2);
    auto sys = linear_control_system(A, B);
    bool hyper =
        hyper_accessibility(sys, nullptr, quick).hyper_accessible == Verdict3::Established;
    if (hyper != kalman(Am, Bm).controllable) ++cross_mismatch;
  }
  c.check(cross_mismatch == 0,
          std::to_string(cross_mismatch) + "/100 hyper-vs-kalman disagreements");
}

void criterion8() {
  auto& c = begin(8, "deterministic fixture reports");
  AnalyzeOptions opt;
  opt.goodness_points = 8;
  for (const std::string name : {"exampleA", "exampleB", "exampleC", "marta", "sleigh"}) {
    auto r1 = analyze_report(load(name), opt).dump();
    auto r2 = analyze_report(load(name), opt).dump();
    c.check(r1 == r2, name + " report is not byte-stable");
  }
  SimulateOptions sopt;
  sopt.T = 0.5;
  sopt.samples = 500;
  sopt.seed = 123;
  sopt.q0 = {0.0};
  auto s1 = simulate_report(load("exampleB"), sopt);
  auto s2 = simulate_report(load("exampleB"), sopt);
  c.check(s1.report.dump() == s2.report.dump() && cloud_export(s1.cloud) == cloud_export(s2.cloud),
          "simulation output is not byte-stable");
}

}  // namespace

int main() {
  auto t0 = std::chrono::steady_clock::now();
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();

  int failures = 0;
  for (const auto& c : results) {
    std::cout << "[" << c.id << "] " << (c.pass ? "PASS" : "FAIL") << "  " << c.title << "\n";
    for (const auto& n : c.notes) std::cout << "      " << n << "\n";
    if (!c.pass) ++failures;
  }
  double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << results.size() - failures << "/" << results.size() << " criteria passed in " << dt
            << "s\n";
  return failures == 0 ? 0 : 1;
}
