#pragma once

// Numerical validation: trajectory integration, Monte-Carlo reachable
// clouds, ball-coverage tests, and minimum-energy steering of linear
// systems.

#include <Eigen/Dense>

#include "ctrl/fields.hpp"
#include "ctrl/sampling.hpp"

namespace ctrl {

// Piecewise-constant control: value values[k] on [knots[k], knots[k+1]).
struct ControlSignal {
  std::vector<double> knots;                // 0 = t0 < ... < tK = T
  std::vector<std::vector<double>> values;  // one m-vector per subinterval

  double horizon() const { return knots.empty() ? 0.0 : knots.back(); }
  const std::vector<double>& value_at(double t) const;
  void validate(const ControlSystem&) const;  // breakpoints + K membership
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // q per step

  const std::vector<double>& endpoint() const { return states.back(); }
};

struct IntegrationError : std::runtime_error {
  double blame_lo = 0.0, blame_hi = 0.0;  // subinterval where the state left R^n
  IntegrationError(const std::string& msg, double lo, double hi)
      : std::runtime_error(msg), blame_lo(lo), blame_hi(hi) {}
};

// Classical fixed-step RK4 on each constant-control subinterval; the
// trajectory is sampled at every step.
Trajectory integrate(const ControlSystem& sys, const std::vector<double>& q0,
                     const ControlSignal& u, double dt);

inline double default_dt(double T) { return 1e-3 * T; }
inline constexpr int kDefaultSegments = 6;

struct ReachCloud {
  double horizon = 0.0;
  std::vector<double> q0;
  std::vector<std::vector<double>> endpoints;
  std::vector<ControlSignal> signals;  // endpoints are reproducible from these
  uint64_t seed = 0;
  double dt = 0.0;
  int segments = 0;
};

// n_samples random piecewise-constant signals (values uniform in K, between
// 1 and `segments` pieces), integrated in parallel; per-trajectory RNG
// streams split deterministically from the seed, so the cloud is identical
// regardless of thread count.
ReachCloud reach_cloud(const ControlSystem& sys, const std::vector<double>& q0, double T,
                       int n_samples, int segments = kDefaultSegments,
                       uint64_t seed = kDefaultSeed, double dt = -1.0);

struct CoverReport {
  bool covered = false;
  int grid_nodes = 0;
  int misses = 0;
  std::vector<double> worst_node;
  double worst_distance = 0.0;
};

// True iff every node of the per-axis 5-point grid of the closed ball
// B(q0, r) has a cloud endpoint within Euclidean distance delta.
CoverReport covers_ball_report(const ReachCloud& cloud, const std::vector<double>& q0, double r,
                               double delta);
bool covers_ball(const ReachCloud& cloud, const std::vector<double>& q0, double r, double delta);

struct SteeringError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SteerResult {
  ControlSignal u;
  std::vector<double> endpoint;  // from integrating the expression system
  double error = 0.0;            // |q(T) - q1|
};

// Minimum-energy steering of q' = Aq + Bw from q0 to q1 in time T: the
// continuous Gramian control discretized consistently over `segments`
// constant pieces (per-segment propagators from the matrix exponential, the
// discrete Gramian solved for the boundary mismatch).  Throws SteeringError
// when the pair is uncontrollable or the Gramian is numerically singular.
SteerResult steer_linear(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                         const std::vector<double>& q0, const std::vector<double>& q1, double T,
                         int segments = 64);

// Scaling-and-squaring Pade approximation of the matrix exponential.
Eigen::MatrixXd expm(const Eigen::MatrixXd&);

// newline-delimited records "seed,sample_index,t=T,q1,...,qn"
std::string cloud_export(const ReachCloud&);

}  // namespace ctrl
