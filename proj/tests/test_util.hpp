#pragma once

// Shared test helpers: a random expression generator for property tests and
// the finite-difference oracles used to pin derivative and bracket values.

#include <cmath>
#include <vector>

#include "ctrl/expr.hpp"
#include "ctrl/fields.hpp"
#include "ctrl/sampling.hpp"

namespace ctrl::testutil {

struct ExprGenOptions {
  int max_depth = 6;
  bool transcendental = true;  // allow sin/cos/exp nodes
  int max_power = 3;
};

inline Expr random_expr(Rng& rng, const Chart& chart, int depth, const ExprGenOptions& opt) {
  auto leaf = [&]() -> Expr {
    if (rng.below(3) == 0) {
      long long num = static_cast<long long>(rng.below(5)) - 2;
      long long den = 1 + static_cast<long long>(rng.below(2));
      if (num == 0) num = 1;
      return Expr::rational(Rat(num, den));
    }
    return Expr::var(static_cast<int>(rng.below(chart.dim())));
  };
  if (depth <= 0) return leaf();
  switch (rng.below(opt.transcendental ? 7 : 4)) {
    case 0:
      return leaf();
    case 1: {
      std::vector<Expr> kids;
      size_t k = 2 + rng.below(2);
      for (size_t i = 0; i < k; ++i) kids.push_back(random_expr(rng, chart, depth - 1, opt));
      return Expr::sum(std::move(kids));
    }
    case 2: {
      std::vector<Expr> kids;
      size_t k = 2 + rng.below(2);
      for (size_t i = 0; i < k; ++i) kids.push_back(random_expr(rng, chart, depth - 1, opt));
      return Expr::prod(std::move(kids));
    }
    case 3:
      return Expr::pow(random_expr(rng, chart, depth - 2, opt), 2 + rng.below(opt.max_power - 1));
    case 4:
      return Expr::sin(random_expr(rng, chart, depth - 2, opt));
    case 5:
      return Expr::cos(random_expr(rng, chart, depth - 2, opt));
    default:
      // keep exp arguments shallow so finite differences stay well conditioned
      return Expr::exp(random_expr(rng, chart, 1, ExprGenOptions{1, false, 2}));
  }
}

inline std::vector<double> random_point(Rng& rng, int dim, double lo = -1.0, double hi = 1.0) {
  std::vector<double> p(dim);
  for (auto& x : p) x = rng.range(lo, hi);
  return p;
}

// Central difference d/dv of e at p.
inline double fd_diff(const Expr& e, int var, const std::vector<double>& p, const ParamMap& params,
                      double h = 1e-5) {
  std::vector<double> hi = p, lo = p;
  hi[var] += h;
  lo[var] -= h;
  return (eval(e, hi, params) - eval(e, lo, params)) / (2.0 * h);
}

// Finite-difference directional-derivative formula (X.grad)Y - (Y.grad)X,
// the independent oracle for the symbolic Lie bracket.
inline std::vector<double> fd_bracket(const VectorField& X, const VectorField& Y,
                                      const std::vector<double>& p, const ParamMap& params,
                                      double h = 1e-5) {
  const int dim = X.chart.dim();
  Point pt{p};
  std::vector<double> xv = eval_field(X, pt, params);
  std::vector<double> yv = eval_field(Y, pt, params);
  std::vector<double> out(dim, 0.0);
  for (int k = 0; k < dim; ++k) {
    double acc = 0.0;
    for (int j = 0; j < dim; ++j) {
      if (xv[j] != 0.0) acc += xv[j] * fd_diff(Y.comp[k], j, p, params, h);
      if (yv[j] != 0.0) acc -= yv[j] * fd_diff(X.comp[k], j, p, params, h);
    }
    out[k] = acc;
  }
  return out;
}

// Random polynomial vector field with zero dt component, degree <= 2 terms.
inline VectorField random_poly_field(Rng& rng, const Chart& chart, const std::string& label) {
  VectorField X = zero_field(chart, label);
  ExprGenOptions opt{3, false, 2};
  for (int k = 1; k < chart.dim(); ++k) {
    if (rng.below(2) == 0) continue;
    X.comp[k] = simplify(random_expr(rng, chart, 2, opt));
  }
  return X;
}

}  // namespace ctrl::testutil
