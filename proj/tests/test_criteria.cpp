#include <doctest.h>

#include <Eigen/Dense>

#include "ctrl/criteria.hpp"
#include "systems.hpp"
#include "test_util.hpp"

using namespace ctrl;

TEST_SUITE_BEGIN("criteria");

namespace {

// exact integer matrix rank by fraction-free (Bareiss) elimination; the
// independent oracle for the SVD-based Kalman rank
int exact_rank_int(std::vector<std::vector<long long>> M) {
  if (M.empty()) return 0;
  const int rows = static_cast<int>(M.size());
  const int cols = static_cast<int>(M[0].size());
  std::vector<std::vector<__int128>> a(rows, std::vector<__int128>(cols));
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a[i][j] = M[i][j];
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
      for (int c = col + 1; c < cols; ++c)
        a[r][c] = (a[rank][col] * a[r][c] - a[r][col] * a[rank][c]) / prev;
      a[r][col] = 0;
    }
    prev = a[rank][col];
    ++rank;
  }
  return rank;
}

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  Eigen::MatrixXd K(n, n * m);
  Eigen::MatrixXd block = B;
  for (int l = 0; l < n; ++l) {
    K.middleCols(l * m, m) = block;
    block = A * block;
  }
  return K;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> random_pair(Rng& rng, int n, int m) {
  Eigen::MatrixXd A(n, n), B(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = static_cast<double>(static_cast<long long>(rng.below(7)) - 3);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) B(i, j) = static_cast<double>(static_cast<long long>(rng.below(7)) - 3);
  return {A, B};
}

}  // namespace

TEST_CASE("good_first_kind: worked verdicts") {
  auto C = testsys::exampleC();
  auto sc = stratify(C);
  Point pc{{0.3, 0.1, 0.4}};
  auto vc = good_first_kind(C, pc, sc);
  CHECK(vc.kind == GoodnessKind::First);

  auto A = testsys::exampleA();
  auto sa = stratify(A);
  Point pa{{0.3, 0.1, 0.0}};  // w1 = 0
  auto va = good_first_kind(A, pa, sa);
  CHECK(va.kind == GoodnessKind::Inconclusive);
  CHECK_FALSE(va.first.constant_rank);
  Point pa2{{0.3, 0.1, 0.5}};
  CHECK(good_first_kind(A, pa2, sa).kind == GoodnessKind::First);

  auto M = testsys::marta();
  auto sm = stratify(M);
  Point sing{{0.2, 0.1, -0.3, 0.5, 0.0, 0.0}};
  CHECK(good_first_kind(M, sing, sm).kind == GoodnessKind::Inconclusive);
  Point generic{{0.2, 0.1, -0.3, 0.5, 0.4, -0.2}};
  CHECK(good_first_kind(M, generic, sm).kind == GoodnessKind::First);
}

TEST_CASE("good_second_kind: worked verdicts and witnesses") {
  auto B = testsys::exampleB();
  auto sb = stratify(B);
  Point w0{{0.2, 0.3, 0.0, 0.0}};
  auto vb = good_second_kind(B, w0, sb);
  REQUIRE(vb.kind == GoodnessKind::Second);
  CHECK(vb.stratum_depth == 2);
  REQUIRE(vb.type_b.size() == 1);
  CHECK(vb.type_b[0].beta == 1);
  CHECK(vb.type_b[0].sub_label == "W0_1");
  CHECK(vb.type_b[0].full_label == "W_2^(1)");
  CHECK(vb.type_b[0].sub_first_kind.involutive);

  auto M = testsys::marta();
  auto sm = stratify(M);
  Point sing{{0.2, 0.1, -0.3, 0.5, 0.0, 0.0}};
  auto vm = good_second_kind(M, sing, sm);
  REQUIRE(vm.kind == GoodnessKind::Second);
  CHECK(vm.closure_rank == 5);
  REQUIRE(!vm.type_b.empty());
  CHECK(vm.type_b[0].beta == 1);

  for (double Aval : {0.0, 1.0}) {
    CAPTURE(Aval);
    auto S = testsys::sleigh(Aval);
    auto ss = stratify(S);
    Point ssing{{0.1, 0.2, -0.1, 0.4, 0.0, 0.0, 0.0, 0.0}};
    auto vs = good_second_kind(S, ssing, ss);
    REQUIRE(vs.kind == GoodnessKind::Second);
    CHECK(vs.closure_rank == 7);
    CHECK(vs.type_b[0].beta == 1);
  }

  // (A) at w1 = 0: the only sub-distribution is the full one and it is not
  // first-kind good there, so no type-(b) bracket exists
  auto A = testsys::exampleA();
  auto sa = stratify(A);
  Point pa{{0.3, 0.1, 0.0}};
  auto va = good_second_kind(A, pa, sa);
  CHECK(va.kind == GoodnessKind::Inconclusive);
}

TEST_CASE("kalman: identity, block-triangular and the exact oracle") {
  Eigen::MatrixXd A0 = Eigen::MatrixXd::Zero(3, 3);
  Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
  auto r = kalman(A0, I3);
  CHECK(r.n_max == 3);
  CHECK(r.controllable);

  // invariant-subspace construction: B supported on the top block,
  // A lower-left block zero
  Eigen::MatrixXd A(4, 4);
  A << 1, 2, 3, -1, 0, 1, 1, 2, 0, 0, 2, 1, 0, 0, 0, -1;
  A(2, 0) = A(2, 1) = A(3, 0) = A(3, 1) = 0;
  Eigen::MatrixXd B(4, 1);
  B << 1, -1, 0, 0;
  auto rb = kalman(A, B);
  CHECK(rb.n_max < 4);
  CHECK_FALSE(rb.controllable);

  Rng rng(911);
  for (int it = 0; it < 60; ++it) {
    int n = 1 + static_cast<int>(rng.below(5));
    int m = 1 + static_cast<int>(rng.below(3));
    auto [Am, Bm] = random_pair(rng, n, m);
    auto res = kalman(Am, Bm);
    Eigen::MatrixXd K = controllability_matrix(Am, Bm);
    std::vector<std::vector<long long>> Ki(n, std::vector<long long>(K.cols()));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < K.cols(); ++j) Ki[i][j] = static_cast<long long>(std::llround(K(i, j)));
    CHECK(res.n_max == exact_rank_int(Ki));
  }
}

TEST_CASE("kalman: similarity invariance") {
  Rng rng(912);
  for (int it = 0; it < 50; ++it) {
    int n = 2 + static_cast<int>(rng.below(3));
    int m = 1 + static_cast<int>(rng.below(2));
    auto [Am, Bm] = random_pair(rng, n, m);
    Eigen::MatrixXd R(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) R(i, j) = rng.range(-1, 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(R);
    Eigen::MatrixXd S = qr.householderQ();
    auto base = kalman(Am, Bm);
    auto moved = kalman(S * Am * S.transpose(), S * Bm);
    CHECK(base.n_max == moved.n_max);
  }
}

TEST_CASE("equilibria: worked systems") {
  auto B = testsys::exampleB();
  auto eb = equilibria(B, {0.4});
  REQUIRE(!eb.points.empty());
  // the zero control is an equilibrium and sorts first
  CHECK(std::fabs(eb.points[0].w[0]) < 1e-9);
  CHECK(std::fabs(eb.points[0].w[1]) < 1e-9);

  auto C = testsys::exampleC();
  CHECK(equilibria(C, {0.0}).points.empty());

  auto S = testsys::sleigh(1.0);
  auto es = equilibria(S, {0.0, 0.0, 0.0, 0.0, 0.0});
  REQUIRE(es.points.size() == 1);
  CHECK(std::fabs(es.points[0].w[0]) < 1e-9);
  CHECK(std::fabs(es.points[0].w[1]) < 1e-9);

  auto M = testsys::marta();
  auto em = equilibria(M, {0.3, -0.2, 0.7});
  REQUIRE(em.points.size() == 1);
  CHECK(std::fabs(em.points[0].w[0]) < 1e-8);

  // time-dependent dynamics are refused
  auto T = testsys::make_system("tdep", 1, 1, {"t*w1"}, {{-1, 1}});
  CHECK_THROWS_AS(equilibria(T, {0.5}), EquilibriaError);
}

TEST_CASE("hyper_accessibility: worked verdicts") {
  auto B = testsys::exampleB();
  auto hb = hyper_accessibility(B);
  CHECK(hb.hyper_accessible == Verdict3::Established);
  CHECK(hb.pi_q_full_everywhere);

  auto A = testsys::exampleA();
  auto ha = hyper_accessibility(A);
  CHECK(ha.hyper_accessible == Verdict3::NotEstablished);
  CHECK_FALSE(ha.all_points_good);  // Sing points are inconclusive

  auto C = testsys::exampleC();
  CHECK(hyper_accessibility(C).hyper_accessible == Verdict3::Established);

  auto S = testsys::sleigh(1.0);
  auto hs = hyper_accessibility(S);
  CHECK(hs.hyper_accessible == Verdict3::Established);
  REQUIRE(hs.strata.size() == 1);
  CHECK(hs.strata[0].pi_q_rank == 5);
}

TEST_CASE("hyper_accessibility: shrinking the box never rescues example (A)") {
  auto A = testsys::exampleA();
  for (double half : {0.5, 0.25, 0.1}) {
    CAPTURE(half);
    Domain d = A.domain;
    d.box[A.chart().w_index(1)] = {-half, half};
    CHECK(hyper_accessibility(A, &d).hyper_accessible == Verdict3::NotEstablished);
  }
}

TEST_CASE("stlc_at: worked verdicts") {
  auto B = testsys::exampleB();
  auto vb = stlc_at(B, {0.0});
  CHECK(vb.stlc == Verdict3::Established);

  auto C = testsys::exampleC();
  auto vc = stlc_at(C, {0.0});
  CHECK(vc.stlc == Verdict3::NotEstablished);
  CHECK(vc.equilibria.points.empty());

  auto S = testsys::sleigh(0.0);
  auto vs = stlc_at(S, {0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(vs.stlc == Verdict3::Established);
}

TEST_CASE("multi-stratum system: good everywhere, projection defeats hyper-accessibility") {
  // q' = q1*w1: the closure drops to rank 1 on {q1 = 0}, the state cannot
  // leave that slice, and the q-projection rank there is 0
  auto toy = testsys::make_system("toy", 1, 1, {"q1*w1"}, {{-1, 1}});
  auto strat = stratify(toy);
  REQUIRE(strat.strata.size() == 2);
  CHECK(strat.strata[0].closure_rank == 2);
  CHECK(strat.strata[1].closure_rank == 1);
  CHECK(strat.strata[1].predicate.zero_vars == std::vector<int>{toy.chart().q_index(1)});

  auto hyper = hyper_accessibility(toy, strat);
  CHECK(hyper.all_points_good);  // first kind on both strata
  CHECK_FALSE(hyper.pi_q_full_everywhere);
  CHECK(hyper.hyper_accessible == Verdict3::NotEstablished);

  // short-circuit contract: points certified first never carry second-kind
  // evidence (good_second_kind was not consulted)
  for (const auto& sg : hyper.strata)
    for (const auto& v : sg.verdicts)
      if (v.kind == GoodnessKind::First) CHECK(v.type_b.empty());
}

TEST_CASE("stlc agrees with kalman on random linear systems") {
  Rng rng(913);
  int done = 0;
  while (done < 20) {
    int n = 1 + static_cast<int>(rng.below(3));
    int m = 1 + static_cast<int>(rng.below(2));
    std::vector<std::vector<double>> A(n, std::vector<double>(n));
    std::vector<std::vector<double>> B(n, std::vector<double>(m));
    Eigen::MatrixXd Am(n, n), Bm(n, m);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Am(i, j) = A[i][j] = static_cast<double>(static_cast<long long>(rng.below(5)) - 2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) Bm(i, j) = B[i][j] = static_cast<double>(static_cast<long long>(rng.below(5)) - 2);
    auto sys = linear_control_system(A, B);
    auto kr = kalman(Am, Bm);
    auto sv = stlc_at(sys, std::vector<double>(n, 0.0));
    CHECK((sv.stlc == Verdict3::Established) == kr.controllable);
    ++done;
  }
}

TEST_SUITE_END();
