#pragma once

// Immutable analytic expression trees over the chart variables of a control
// system: rational constants, named parameters, chart variables, sums,
// products, integer powers, sin, cos, exp.  Division is not representable.

#include <array>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctrl {

// Exact rational with int64 numerator/denominator, den > 0, reduced.
struct Rat {
  long long num = 0;
  long long den = 1;

  Rat() = default;
  Rat(long long n) : num(n), den(1) {}
  Rat(long long n, long long d);

  bool is_zero() const { return num == 0; }
  bool is_one() const { return num == 1 && den == 1; }
  bool is_integer() const { return den == 1; }
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

Rat operator+(const Rat&, const Rat&);
Rat operator-(const Rat&, const Rat&);
Rat operator*(const Rat&, const Rat&);
Rat rat_pow(const Rat&, long long k);  // k >= 0
bool operator==(const Rat&, const Rat&);
int compare(const Rat&, const Rat&);

// Chart of the extended space-time R x Q x K: variable 0 is t, 1..n are
// q1..qn, n+1..n+m are w1..wm.
struct Chart {
  int n = 0;
  int m = 0;

  int dim() const { return 1 + n + m; }
  int t_index() const { return 0; }
  int q_index(int i) const { return i; }      // 1-based i
  int w_index(int a) const { return n + a; }  // 1-based a
  bool is_q(int v) const { return v >= 1 && v <= n; }
  bool is_w(int v) const { return v > n && v <= n + m; }
  std::string var_name(int v) const;
  // Returns -1 when the identifier is not a chart variable of this chart.
  int var_index(const std::string& name) const;
  bool operator==(const Chart& o) const { return n == o.n && m == o.m; }
};

class Expr {
 public:
  enum class Kind { Rational, Param, Var, Sum, Prod, Pow, Sin, Cos, Exp };

  Expr();  // rational 0

  static Expr rational(const Rat& r);
  static Expr integer(long long v) { return rational(Rat(v)); }
  static Expr param(std::string name);
  static Expr var(int index);
  static Expr sum(std::vector<Expr> terms);
  static Expr prod(std::vector<Expr> factors);
  static Expr pow(Expr base, long long k);  // k >= 0
  static Expr sin(Expr arg);
  static Expr cos(Expr arg);
  static Expr exp(Expr arg);

  Kind kind() const;
  const Rat& rat() const;
  const std::string& param_name() const;
  int var_index() const;
  long long exponent() const;
  const std::vector<Expr>& children() const;  // Sum/Prod terms; [base] / [arg] otherwise

  bool is_rational() const { return kind() == Kind::Rational; }
  bool is_zero_literal() const { return is_rational() && rat().is_zero(); }
  bool is_one_literal() const { return is_rational() && rat().is_one(); }

 private:
  struct Node;
  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Total canonical order; 0 iff structurally equal.
int compare(const Expr&, const Expr&);
bool structurally_equal(const Expr& a, const Expr& b);

// Canonical form: flattened, constants folded, like terms/factors merged,
// zero/one identities applied.  Idempotent.  No trig rewriting.
Expr simplify(const Expr&);

// Partial derivative with respect to chart variable `var`; simplified.
Expr diff(const Expr&, int var);

// Replaces every occurrence of the chart variable by an expression.
Expr substitute(const Expr&, int var, const Expr& replacement);

void collect_vars(const Expr&, std::set<int>& out);
// Variables with at least one occurrence outside sin/cos/exp arguments;
// these are the coordinates whose vanishing can degenerate a coefficient.
void collect_algebraic_vars(const Expr&, std::set<int>& out);
void collect_params(const Expr&, std::set<std::string>& out);

// Convenience constructors used all over bracket computations.
Expr operator+(const Expr&, const Expr&);
Expr operator-(const Expr&, const Expr&);
Expr operator*(const Expr&, const Expr&);
Expr operator-(const Expr&);

struct ParseError : std::runtime_error {
  size_t position;
  ParseError(const std::string& msg, size_t pos) : std::runtime_error(msg), position(pos) {}
};

// Recursive-descent parser for the fixture grammar.  Numbers are decimal
// literals stored as exact rationals; '/' is rejected with a clear error.
Expr parse_expr(const std::string& text, const Chart& chart,
                const std::set<std::string>& param_names = {});

// Round-trippable printer: parse_expr(to_string(e, chart), chart) is
// structurally equal to e for every simplified expression the library
// produces.  The chartless overload prints variables as x<i>.
std::string to_string(const Expr&);
std::string to_string(const Expr&, const Chart& chart);

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using ParamMap = std::map<std::string, double>;

// Exact rational arithmetic on constant subtrees, IEEE double elsewhere.
// `point` is indexed by chart variable index.
double eval(const Expr&, const std::vector<double>& point, const ParamMap& params = {});

// Per-variable closed sampling box over a chart, plus the parameter values
// needed to evaluate expressions drawn from the owning system.
struct Domain {
  Chart chart;
  std::vector<std::array<double, 2>> box;  // size chart.dim(), lo < hi
  ParamMap params;

  void validate() const;  // throws std::invalid_argument on a bad box
  bool contains_zero(int var) const {
    return box[var][0] <= 0.0 && 0.0 <= box[var][1];
  }
};

struct ZeroTest {
  bool zero = true;
  std::vector<double> witness;  // point with |value| >= tol when zero == false
  double witness_value = 0.0;
  int trials = 0;
  uint64_t seed = 0;
};

inline constexpr int kZeroTestTrials = 12;
inline constexpr double kZeroTestTol = 1e-9;
inline constexpr uint64_t kDefaultSeed = 20240756;

// Probabilistic identity test: true iff |eval| < tol at `trials` uniform
// points of d.  Analytic functions vanish on measure-zero sets, so a false
// accept has vanishing probability; a `false` always carries a witness.
ZeroTest is_zero_report(const Expr&, const Domain& d, int trials = kZeroTestTrials,
                        double tol = kZeroTestTol, uint64_t seed = kDefaultSeed);
bool is_zero(const Expr&, const Domain& d, int trials = kZeroTestTrials,
             double tol = kZeroTestTol, uint64_t seed = kDefaultSeed);

// Flat postfix program for fast repeated evaluation; parameters are bound
// at compile time.
class Compiled {
 public:
  Compiled() = default;
  Compiled(const Expr&, const ParamMap& params);
  double operator()(const double* point) const;
  double operator()(const std::vector<double>& point) const { return (*this)(point.data()); }

 private:
  enum class Op : uint8_t { Const, Load, Add, Mul, PowI, Sin, Cos, Exp, Neg };
  struct Ins {
    Op op;
    int arg = 0;
    double c = 0.0;
  };
  std::vector<Ins> code_;
  int stack_need_ = 1;
};

}  // namespace ctrl
