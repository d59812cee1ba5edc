#include "ctrl/fields.hpp"

#include <cmath>
#include <set>

namespace ctrl {

void ControlSystem::validate() const {
  if (n < 1 || m < 1) throw std::invalid_argument("system needs n >= 1 and m >= 1");
  if (static_cast<int>(f.size()) != n)
    throw std::invalid_argument("expected " + std::to_string(n) + " state equations");
  if (static_cast<int>(K.size()) != m)
    throw std::invalid_argument("expected " + std::to_string(m) + " control intervals");
  for (const auto& k : K)
    if (!(k.lo < k.hi)) throw std::invalid_argument("control region K must be a nonempty box");
  Chart c = chart();
  for (int i = 0; i < n; ++i) {
    std::set<int> vars;
    collect_vars(f[i], vars);
    for (int v : vars)
      if (v < 0 || v >= c.dim())
        throw std::invalid_argument("f" + std::to_string(i + 1) + " references an undeclared variable");
    std::set<std::string> ps;
    collect_params(f[i], ps);
    for (const auto& p : ps)
      if (!params.count(p))
        throw std::invalid_argument("f" + std::to_string(i + 1) + " references undeclared parameter '" +
                                    p + "'");
  }
  domain.validate();
  for (int a = 1; a <= m; ++a) {
    const auto& b = domain.box[c.w_index(a)];
    if (b[0] < K[a - 1].lo || b[1] > K[a - 1].hi)
      throw std::invalid_argument("sampling box for w" + std::to_string(a) + " must lie inside K");
  }
  for (const auto& p : probes) {
    if (static_cast<int>(p.size()) != c.dim())
      throw std::invalid_argument("probe point has wrong dimension");
    for (int a = 1; a <= m; ++a) {
      double w = p[c.w_index(a)];
      if (w < K[a - 1].lo || w > K[a - 1].hi)
        throw std::invalid_argument("probe point leaves the control region K");
    }
  }
}

bool VectorField::is_structurally_zero() const {
  for (const auto& c : comp)
    if (!c.is_zero_literal()) return false;
  return true;
}

VectorField zero_field(const Chart& chart, std::string label) {
  VectorField X;
  X.chart = chart;
  X.comp.assign(chart.dim(), Expr());
  X.label = std::move(label);
  return X;
}

CanonicalFields canonical_fields(const ControlSystem& sys) {
  sys.validate();
  Chart c = sys.chart();
  CanonicalFields out;
  out.T0 = zero_field(c, "T0");
  out.T0.comp[0] = Expr::integer(1);
  for (int i = 1; i <= sys.n; ++i) out.T0.comp[c.q_index(i)] = simplify(sys.f[i - 1]);
  for (int a = 1; a <= sys.m; ++a) {
    VectorField W = zero_field(c, "W0_" + std::to_string(a));
    W.comp[c.w_index(a)] = Expr::integer(1);
    out.W0.push_back(std::move(W));
  }
  return out;
}

VectorField lie_bracket(const VectorField& X, const VectorField& Y) {
  if (!(X.chart == Y.chart)) throw std::invalid_argument("lie_bracket: chart mismatch");
  const int dim = X.chart.dim();
  VectorField Z = zero_field(X.chart, "[" + X.label + "," + Y.label + "]");
  for (int k = 0; k < dim; ++k) {
    std::vector<Expr> terms;
    for (int j = 0; j < dim; ++j) {
      if (!X.comp[j].is_zero_literal() && !Y.comp[k].is_zero_literal())
        terms.push_back(Expr::prod({X.comp[j], diff(Y.comp[k], j)}));
      if (!Y.comp[j].is_zero_literal() && !X.comp[k].is_zero_literal())
        terms.push_back(Expr::prod({Expr::integer(-1), Y.comp[j], diff(X.comp[k], j)}));
    }
    Z.comp[k] = simplify(Expr::sum(std::move(terms)));
  }
  return Z;
}

std::vector<double> eval_field(const VectorField& X, const Point& p, const ParamMap& params) {
  std::vector<double> v(X.comp.size());
  for (size_t k = 0; k < X.comp.size(); ++k) v[k] = eval(X.comp[k], p.x, params);
  return v;
}

namespace {

Rat rat_from_decimal(double x) {
  // exact for inputs with at most 9 decimal digits, which is all the
  // generators used by tests and the kalman-random fixture produce
  double scaled = std::round(x * 1e9);
  return Rat(static_cast<long long>(scaled), 1000000000LL);
}

}  // namespace

ControlSystem linear_control_system(const std::vector<std::vector<double>>& A,
                                    const std::vector<std::vector<double>>& B,
                                    Interval control_box) {
  const int n = static_cast<int>(A.size());
  const int m = n > 0 ? static_cast<int>(B[0].size()) : 0;
  ControlSystem sys;
  sys.name = "linear";
  sys.n = n;
  sys.m = m;
  Chart c{n, m};
  for (int i = 0; i < n; ++i) {
    std::vector<Expr> terms;
    for (int j = 0; j < n; ++j)
      terms.push_back(Expr::prod({Expr::rational(rat_from_decimal(A[i][j])), Expr::var(c.q_index(j + 1))}));
    for (int a = 0; a < m; ++a)
      terms.push_back(Expr::prod({Expr::rational(rat_from_decimal(B[i][a])), Expr::var(c.w_index(a + 1))}));
    sys.f.push_back(simplify(Expr::sum(std::move(terms))));
  }
  sys.K.assign(m, control_box);
  sys.domain.chart = c;
  sys.domain.box.assign(c.dim(), {-1.0, 1.0});
  sys.domain.box[0] = {0.0, 1.0};
  for (int a = 1; a <= m; ++a) sys.domain.box[c.w_index(a)] = {control_box.lo, control_box.hi};
  return sys;
}

}  // namespace ctrl
