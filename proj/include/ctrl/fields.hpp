#pragma once

// Vector fields on the extended space-time M = R x Q x K, the canonical
// fields T0 = d/dt + f^i d/dq^i and W0_a = d/dw^a of a control system, and
// the Lie bracket.

#include <optional>
#include <string>
#include <vector>

#include "ctrl/expr.hpp"

namespace ctrl {

struct Interval {
  double lo = -1.0;
  double hi = 1.0;
};

// Real-analytic control system dq^i/dt = f^i(t, q, w) with controls ranging
// in the open box K.
struct ControlSystem {
  std::string name;
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  std::vector<Expr> f;        // n expressions over (t, q1..qn, w1..wm)
  std::vector<Interval> K;    // m control intervals
  ParamMap params;
  Domain domain;              // default sampling box (w-box inside K)
  std::vector<std::vector<double>> probes;  // full chart points

  Chart chart() const { return Chart{n, m}; }
  void validate() const;  // throws std::invalid_argument
};

struct Point {
  std::vector<double> x;  // chart order (t, q1..qn, w1..wm)
};

// (1+n+m) component expressions ordered (dt, dq1..dqn, dw1..dwm).
struct VectorField {
  Chart chart;
  std::vector<Expr> comp;
  std::string label;

  bool is_structurally_zero() const;
};

VectorField zero_field(const Chart&, std::string label = "0");

// T0 = dt + sum_i f^i dq^i and W0_a = dw^a.
struct CanonicalFields {
  VectorField T0;
  std::vector<VectorField> W0;
};
CanonicalFields canonical_fields(const ControlSystem&);

// [X,Y]^k = sum_j (X^j d_j Y^k - Y^j d_j X^k), components simplified.
// Throws std::invalid_argument on a chart mismatch.
VectorField lie_bracket(const VectorField& X, const VectorField& Y);

std::vector<double> eval_field(const VectorField&, const Point&, const ParamMap& params);

// Builds q' = A q + B w as a ControlSystem (states n = rows of A, controls
// m = cols of B); used by the Kalman cross-checks and steering tests.
ControlSystem linear_control_system(const std::vector<std::vector<double>>& A,
                                    const std::vector<std::vector<double>>& B,
                                    Interval control_box = {-1.0, 1.0});

}  // namespace ctrl
