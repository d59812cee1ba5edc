#include <doctest.h>

#include <fstream>

#include "ctrl/report.hpp"

using namespace ctrl;

TEST_SUITE_BEGIN("cli");

TEST_CASE("load: fixtures parse into valid systems") {
  auto b = load("exampleB");
  CHECK(b.system.n == 1);
  CHECK(b.system.m == 2);
  CHECK(b.f_text == std::vector<std::string>{"w1*w2"});

  auto s0 = load("sleigh");
  CHECK(s0.system.params.at("A") == 0.0);  // classical sleigh by default
  auto s1 = load("sleigh", kDefaultSeed, {{"A", 1.0}});
  CHECK(s1.system.params.at("A") == 1.0);

  auto m = load("marta");
  CHECK(m.system.n == 3);
  CHECK(m.system.K[0].hi == doctest::Approx(1.4707963267948966));
  CHECK(!m.note.empty());

  auto kr = load("kalman-random", 5);
  CHECK(kr.system.n >= 2);
  CHECK(load("kalman-random", 5).system.name == kr.system.name);

  CHECK_THROWS(load("no-such-fixture-or-file"));
  CHECK_THROWS_AS(load("sleigh", kDefaultSeed, {{"nope", 1.0}}), std::invalid_argument);
}

TEST_CASE("load: malformed files raise errors naming the offence") {
  CHECK_THROWS_WITH_AS(
      load_system_text("name = x ; n = 1 ; m = 1\nf1 = \"w1^\"\nK1 = (-1, 1)\n"),
      doctest::Contains("w1^"), SystemFileError);
  CHECK_THROWS_WITH_AS(load_system_text("name = x ; n = 1 ; m = 1\nK1 = (-1, 1)\n"),
                       doctest::Contains("missing equation f1"), SystemFileError);
  CHECK_THROWS_WITH_AS(load_system_text("name = x ; n = 1 ; m = 1\nf1 = \"w1\"\n"),
                       doctest::Contains("missing control interval"), SystemFileError);
  try {
    load_system_text("name = x ; n = 1 ; m = 1\nf1 = \"q2\"\nK1 = (-1, 1)\n");
    FAIL("expected an error");
  } catch (const SystemFileError& e) {
    CHECK(e.line == 2);
  }
  // probe points must respect the control region
  CHECK_THROWS_WITH_AS(
      load_system_text("name = x ; n = 1 ; m = 1\nf1 = \"w1\"\nK1 = (-1, 1)\n"
                       "probe = (0, 0, 3)\n"),
      doctest::Contains("control region"), std::invalid_argument);
}

TEST_CASE("load: round trip through the schema text") {
  std::string text =
      "name = demo ; n = 2 ; m = 1\n"
      "# a comment line\n"
      "f1 = \"q2\" ; f2 = \"w1 + c*q1\"\n"
      "K1 = (-2, 2)\n"
      "param.c = 0.5\n"
      "domain.t = (0, 2) ; domain.q1 = (-1, 1) ; domain.q2 = (-1, 1)\n"
      "domain.w1 = (-1.5, 1.5)\n"
      "probe = (0, 0.1, -0.2, 0.3)\n";
  auto ls = load_system_text(text);
  CHECK(ls.system.name == "demo");
  CHECK(ls.system.params.at("c") == 0.5);
  CHECK(ls.system.domain.box[0][1] == 2.0);
  CHECK(ls.system.domain.box[ls.system.chart().w_index(1)][0] == -1.5);
  REQUIRE(ls.system.probes.size() == 1);
  CHECK(ls.system.probes[0][3] == 0.3);
}

TEST_CASE("load: file path loading") {
  std::string path = "test_system_file.ctrl";
  {
    std::ofstream f(path);
    f << "name = filedemo ; n = 1 ; m = 1\nf1 = \"w1\"\nK1 = (-1, 1)\n";
  }
  auto ls = load(path);
  CHECK(ls.system.name == "filedemo");
  std::remove(path.c_str());
  CHECK_THROWS(load_system_file("definitely-missing-file.ctrl"));
}

TEST_CASE("analyze: per-stratum adapted tables on a stratified system") {
  std::string text =
      "name = toy ; n = 1 ; m = 1\nf1 = \"q1*w1\"\nK1 = (-1, 1)\n";
  auto ls = load_system_text(text);
  AnalyzeOptions opt;
  opt.goodness_points = 6;
  auto r = analyze_report(ls, opt);
  REQUIRE(r["adapted"].size() == 2);
  CHECK(r["adapted"][0]["stratum"] == 0);
  CHECK(r["adapted"][0]["nu"] == 1);
  CHECK(r["adapted"][1]["stratum"] == 1);
  CHECK(r["verdicts"]["hyper_accessible"] == "not established");
  CHECK(r["verdicts"]["essentially_good_sampled"] == true);
  CHECK(r["verdicts"]["pi_q_full_everywhere"] == false);
}

TEST_CASE("analyze: verdict summaries of the fixtures") {
  AnalyzeOptions opt;
  opt.goodness_points = 8;  // keep the unit suite quick; acceptance uses 16

  auto rc = analyze_report(load("exampleC"), opt);
  CHECK(rc["verdicts"]["hyper_accessible"] == "established");
  CHECK(rc["verdicts"]["stlc"][0]["stlc"] == "not established");
  CHECK(rc["verdicts"]["stlc"][0]["equilibria"].empty());

  auto ra = analyze_report(load("exampleA"), opt);
  CHECK(ra["verdicts"]["hyper_accessible"] == "not established");

  auto rb = analyze_report(load("exampleB"), opt);
  CHECK(rb["verdicts"]["hyper_accessible"] == "established");
  CHECK(rb["verdicts"]["stlc"][0]["stlc"] == "established");

  auto rm = analyze_report(load("marta"), opt);
  CHECK(rm["verdicts"]["hyper_accessible"] == "established");
  CHECK(rm["verdicts"]["stlc"][0]["stlc"] == "established");
  CHECK(rm["strata"]["strata"][0]["closure_rank"] == 5);
  CHECK(rm["system"]["note"].get<std::string>().find("3 = dim Q") != std::string::npos);
}

TEST_CASE("analyze: reports are byte-stable given the seed") {
  AnalyzeOptions opt;
  opt.goodness_points = 6;
  auto r1 = analyze_report(load("exampleB"), opt);
  auto r2 = analyze_report(load("exampleB"), opt);
  CHECK(r1.dump() == r2.dump());

  opt.seed = 99;
  auto r3 = analyze_report(load("exampleB"), opt);
  CHECK(r1.dump() != r3.dump());  // the seed is part of the provenance
}

TEST_CASE("brackets/strata/goodness/kalman/simulate fragments") {
  AnalyzeOptions opt;
  auto rb = brackets_report(load("sleigh"), 1);
  CHECK(rb["generators"]["accepted"].size() == 5);
  CHECK(rb["generators"]["accepted"][4]["depth"] == 4);

  auto rs = strata_report(load("exampleA"), opt);
  CHECK(rs["strata"]["strata"].size() == 1);
  CHECK(rs["strata"]["dii_rank_drops"][0]["predicate"] == "w1 = 0");

  auto ls = load("exampleB");
  std::vector<Point> pts = {Point{{0.5, 0.0, 0.0, 0.0}}};
  auto rg = goodness_report(ls, pts, opt);
  CHECK(rg["verdicts"]["points"][0]["kind"] == "second");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2, 2);
  A(0, 1) = 1;
  Eigen::MatrixXd B(2, 1);
  B << 0, 1;
  auto rk = kalman_report(A, B);
  CHECK(rk["n_max"] == 2);
  CHECK(rk["controllable"] == true);

  SimulateOptions sopt;
  sopt.T = 0.5;
  sopt.samples = 200;
  sopt.seed = 7;
  sopt.q0 = {0.0};
  sopt.r = 0.05;
  sopt.delta = 0.02;
  auto sim = simulate_report(load("exampleA"), sopt);
  CHECK(sim.report["simulation"]["covers_ball"]["covered"] == false);
  CHECK(sim.report["simulation"]["endpoint_min"][0].get<double>() >= -1e-9);

  // export format: "seed,sample_index,t=T,q1,...,qn"
  std::string exported = cloud_export(sim.cloud);
  CHECK(exported.rfind("7,0,t=0.5,", 0) == 0);
}

TEST_SUITE_END();
