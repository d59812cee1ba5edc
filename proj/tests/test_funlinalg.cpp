#include <doctest.h>

#include "ctrl/funlinalg.hpp"
#include "systems.hpp"
#include "test_util.hpp"

using namespace ctrl;

TEST_SUITE_BEGIN("funlinalg");

namespace {

// generator chains used repeatedly below
struct Marta {
  ControlSystem sys = testsys::marta();
  Chart c = sys.chart();
  CanonicalFields cf = canonical_fields(sys);
  VectorField W1_1 = lie_bracket(cf.T0, cf.W0[0]);
  VectorField W1_2 = lie_bracket(cf.T0, W1_1);
  VectorField W1_3 = lie_bracket(cf.T0, W1_2);
  VectorField W2_1 = lie_bracket(cf.T0, cf.W0[1]);
  VectorField W2_2 = lie_bracket(cf.T0, W2_1);
  std::vector<VectorField> dii() const { return {cf.W0[0], W1_1, W1_2, cf.W0[1], W2_1, W2_2}; }
};

}  // namespace

TEST_CASE("pointwise_rank: example (A) generators") {
  auto sys = testsys::exampleA();
  Chart c = sys.chart();
  auto cf = canonical_fields(sys);
  VectorField W1 = lie_bracket(cf.T0, cf.W0[0]);
  std::vector<VectorField> gens = {cf.W0[0], W1};
  Point at0{{0.2, 0.1, 0.0}};
  Point at03{{0.2, 0.1, 0.3}};
  CHECK(pointwise_rank(gens, at0, sys.params) == 1);
  CHECK(pointwise_rank(gens, at03, sys.params) == 2);
}

TEST_CASE("pointwise_rank: sleigh secondary distribution on Sing has rank 6") {
  for (double A : {0.0, 1.0}) {
    CAPTURE(A);
    auto sys = testsys::sleigh(A);
    Chart c = sys.chart();
    auto cf = canonical_fields(sys);
    std::vector<VectorField> gens = {cf.W0[0], cf.W0[1]};
    VectorField b1 = cf.W0[0];
    VectorField b2 = cf.W0[1];
    for (int k = 1; k <= 4; ++k) {
      b1 = lie_bracket(cf.T0, b1);
      b2 = lie_bracket(cf.T0, b2);
      gens.push_back(b1);
      gens.push_back(b2);
    }
    // a Sing point: q4 = q5 = w1 = w2 = 0
    Point sing{{0.3, 0.2, -0.4, 0.6, 0.0, 0.0, 0.0, 0.0}};
    Point generic{{0.3, 0.2, -0.4, 0.6, 0.3, -0.2, 0.5, 0.4}};
    CHECK(pointwise_rank(gens, sing, sys.params) == 6);
    CHECK(pointwise_rank(gens, generic, sys.params) == 7);
  }
}

TEST_CASE("generic_rank: profiles with drop hints") {
  auto sys = testsys::exampleA();
  auto cf = canonical_fields(sys);
  VectorField W1 = lie_bracket(cf.T0, cf.W0[0]);
  std::vector<VectorField> gens = {cf.W0[0], W1};
  auto prof = generic_rank(gens, sys.domain);
  CHECK(prof.generic == 2);
  CHECK(prof.min_observed == 1);  // the box contains w1 = 0
  CHECK_FALSE(prof.drop_hints.empty());

  // a box avoiding w1 = 0 sees no drop
  Domain shifted = sys.domain;
  shifted.box[sys.chart().w_index(1)] = {0.2, 0.8};
  auto prof2 = generic_rank(gens, shifted);
  CHECK(prof2.generic == 2);
  CHECK(prof2.min_observed == 2);

  Marta M;
  auto prof3 = generic_rank(M.dii(), M.sys.domain);
  CHECK(prof3.generic == 5);
}

TEST_CASE("in_module_span: worked cases") {
  // (A): [T0, W^(1)] = 0 is in the span of anything
  auto sysA = testsys::exampleA();
  auto cfA = canonical_fields(sysA);
  VectorField W1A = lie_bracket(cfA.T0, cfA.W0[0]);
  VectorField W2A = lie_bracket(cfA.T0, W1A);
  CHECK(in_module_span(W2A, {cfA.W0[0]}, sysA.domain));

  Marta M;
  // W1^(3) = 0 mod <W1^(1)>
  CHECK(in_module_span(M.W1_3, {M.W1_1}, M.sys.domain));
  // Y = [W1^(1), W2^(1)] escapes the six D^II generators near Sing
  VectorField Y = lie_bracket(M.W1_1, M.W2_1);
  auto rep = in_module_span_report(Y, M.dii(), M.sys.domain);
  CHECK_FALSE(rep.in_span);
  REQUIRE(!rep.witness.x.empty());
  // the recorded witness point must exhibit the rank jump
  auto gens = M.dii();
  int without = pointwise_rank(gens, rep.witness, M.sys.params);
  gens.push_back(Y);
  CHECK(pointwise_rank(gens, rep.witness, M.sys.params) == without + 1);
}

TEST_CASE("in_module_span: members are always in span, empty set has rank 0") {
  Marta M;
  auto gens = M.dii();
  for (const auto& g : gens) CHECK(in_module_span(g, gens, M.sys.domain));
  Point p{std::vector<double>(M.c.dim(), 0.3)};
  CHECK(pointwise_rank({}, p, M.sys.params) == 0);
}

TEST_CASE("is_involutive: worked cases") {
  // commuting constant generators of a linear system
  auto lin = linear_control_system({{0, 1}, {0, 0}}, {{0}, {1}});
  auto lcf = canonical_fields(lin);
  VectorField l1 = lie_bracket(lcf.T0, lcf.W0[0]);
  VectorField l2 = lie_bracket(lcf.T0, l1);
  CHECK(is_involutive({lcf.W0[0], l1, l2}, lin.domain).involutive);

  // (C): {dw1, -e^{w1} dq} is involutive
  auto sysC = testsys::exampleC();
  auto cfC = canonical_fields(sysC);
  VectorField W1C = lie_bracket(cfC.T0, cfC.W0[0]);
  CHECK(is_involutive({cfC.W0[0], W1C}, sysC.domain).involutive);

  // (B): full generator set fails on a box containing w = 0,
  // witness pair (W0_1, W2^(1))
  auto sysB = testsys::exampleB();
  auto cfB = canonical_fields(sysB);
  VectorField W11 = lie_bracket(cfB.T0, cfB.W0[0]);
  VectorField W21 = lie_bracket(cfB.T0, cfB.W0[1]);
  std::vector<VectorField> gens = {cfB.W0[0], W11, cfB.W0[1], W21};
  auto rep = is_involutive(gens, sysB.domain);
  CHECK_FALSE(rep.involutive);
  CHECK(rep.pair_i == 0);
  CHECK(rep.pair_j == 3);
}

TEST_CASE("rank bounds and monotonicity") {
  Marta M;
  auto gens = M.dii();
  auto prof = generic_rank(gens, M.sys.domain);
  CHECK(prof.generic <= std::min(M.c.dim(), static_cast<int>(gens.size())));

  // monotone under adding fields
  std::vector<VectorField> some(gens.begin(), gens.begin() + 3);
  auto small = generic_rank(some, M.sys.domain);
  CHECK(small.generic <= prof.generic);

  // duplicates are allowed and do not change the rank
  auto dup = gens;
  dup.push_back(gens[0]);
  CHECK(generic_rank(dup, M.sys.domain).generic == prof.generic);
}

TEST_CASE("constant families have constant rank everywhere") {
  auto lin = linear_control_system({{0, 1, 0}, {0, 0, 1}, {0, 0, 0}}, {{0}, {0}, {1}});
  auto cf = canonical_fields(lin);
  std::vector<VectorField> gens = {cf.W0[0]};
  VectorField b = cf.W0[0];
  for (int k = 0; k < 3; ++k) {
    b = lie_bracket(cf.T0, b);
    gens.push_back(b);
  }
  auto prof = generic_rank(gens, lin.domain);
  CHECK(prof.generic == prof.min_observed);
  CHECK(prof.generic == 4);  // Kalman chain spans q-block plus the w-direction
}

TEST_SUITE_END();
