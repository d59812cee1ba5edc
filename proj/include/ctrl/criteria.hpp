#pragma once

// The decision layer: goodness of the first and second kind, the Kalman rank
// test, equilibrium detection, hyper-accessibility and STLC verdicts.  The
// criteria are sufficient conditions, so failures yield "not established",
// never "refuted".

#include <Eigen/Dense>

#include "ctrl/strata.hpp"

namespace ctrl {

enum class Verdict3 { Established, Refuted, NotEstablished };
std::string to_string(Verdict3);

struct CriteriaConfig {
  int goodness_points = 16;  // samples per stratum, plus user probes
  int span_trials = kSpanTrials;
  int rank_trials = kRankTrials;
  uint64_t seed = kDefaultSeed;
  double tol = kRankTol;
  double local_box_frac = 0.125;   // half-width of the box around p, as a
                                   // fraction of each coordinate extent
  double stlc_box_halfwidth = 0.25;
  int newton_starts = 32;
  int newton_iters = 100;
  double newton_residual = 1e-10;
  int max_bracket_depth = kMaxBracketDepth;
};

// Sampling box around p.  Coordinates where p is away from zero keep zero
// outside the box (a sufficiently small neighbourhood of p does not meet the
// coordinate hyperplane), so germ-at-p queries see only p's own degeneracies.
Domain local_domain(const Domain& d, const Point& p, double frac);

enum class GoodnessKind { First, Second, Inconclusive };
std::string to_string(GoodnessKind);

struct FirstKindEvidence {
  bool constant_rank = false;
  bool involutive = false;
  int rank = 0;
  int samples = 0;
  InvolutivityReport involutivity;
};

struct TypeBWitness {
  std::string sub_label;      // adapted generator of the sub-distribution
  std::string full_label;     // adapted generator of the full distribution
  std::string bracket_label;  // [sub, full]
  int beta = 0;
  VectorField bracket;
  FirstKindEvidence sub_first_kind;
  int sub_stratum_index = 0;
};

struct GoodnessVerdict {
  GoodnessKind kind = GoodnessKind::Inconclusive;
  Point at;
  int stratum_index = 0;
  FirstKindEvidence first;           // first-kind certificate (or its failure)
  int stratum_depth = 0;             // second-kind condition (1)
  int closure_rank = 0;              // m-bold of the second criterion
  std::vector<std::string> type_a;   // adapted generators in the spanning set
  std::vector<TypeBWitness> type_b;  // brackets completing the span
  std::string failure;               // which condition failed, when inconclusive
};

GoodnessVerdict good_first_kind(const ControlSystem&, const Point& p, const Stratification&,
                                const CriteriaConfig& = {});

// Consulted only where the first criterion failed (short-circuit contract).
GoodnessVerdict good_second_kind(const ControlSystem&, const Point& p, const Stratification&,
                                 const CriteriaConfig& = {});

struct KalmanResult {
  int n_max = 0;
  bool controllable = false;
  std::vector<int> rank_sequence;  // n_ell for ell = 0..n-1
};

KalmanResult kalman(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

struct Equilibrium {
  std::vector<double> w;
  double residual = 0.0;
};

struct EquilibriaResult {
  std::vector<Equilibrium> points;
  int starts = 0;
  double residual_tol = 0.0;
};

struct EquilibriaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Multi-start damped Gauss-Newton roots of w -> f(q0, w); refuses (throws
// EquilibriaError) when f still depends on t at q0.
EquilibriaResult equilibria(const ControlSystem&, const std::vector<double>& q0,
                            const CriteriaConfig& = {});

struct StratumGoodness {
  int stratum_index = 0;
  int points_checked = 0;
  int first_kind = 0;
  int second_kind = 0;
  int inconclusive = 0;
  int pi_q_rank = 0;   // rank of the q-block rows of the closure matrix
  bool pi_q_full = false;
  std::vector<GoodnessVerdict> verdicts;
};

struct SystemVerdict {
  Verdict3 hyper_accessible = Verdict3::NotEstablished;
  bool all_points_good = false;
  bool pi_q_full_everywhere = false;
  int n = 0;
  std::vector<StratumGoodness> strata;
  std::string note;
};

// Samples goodness per stratum (first kind, then second) and the pi^Q rank
// of the closure; asserts hyper-accessibility iff every sampled point is good
// and the projection rank equals n on every stratum.
SystemVerdict hyper_accessibility(const ControlSystem&, const Stratification&,
                                  const CriteriaConfig& = {});
SystemVerdict hyper_accessibility(const ControlSystem&, const Domain* d = nullptr,
                                  const CriteriaConfig& = {});

struct StlcVerdict {
  Verdict3 stlc = Verdict3::NotEstablished;
  std::vector<double> q0;
  SystemVerdict hyper;
  EquilibriaResult equilibria;
  std::string note;
};

// STLC asserted iff hyper-accessibility is established on a box around q0
// and q0 admits an equilibrium control.
StlcVerdict stlc_at(const ControlSystem&, const std::vector<double>& q0,
                    const CriteriaConfig& = {});

// rank of the q-block rows of the evaluation matrix of `fields` at p
int pi_q_rank(const std::vector<VectorField>& fields, const Point& p, const ParamMap& params,
              double tol = kRankTol);

}  // namespace ctrl
