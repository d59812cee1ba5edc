#include "ctrl/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "ctrl/sampling.hpp"

namespace ctrl {

// ---------------------------------------------------------------------------
// Rationals

namespace {

long long checked_ll(__int128 v, const char* what) {
  if (v > static_cast<__int128>(INT64_MAX) || v < static_cast<__int128>(INT64_MIN))
    throw std::overflow_error(std::string("rational overflow in ") + what);
  return static_cast<long long>(v);
}

}  // namespace

Rat::Rat(long long n, long long d) {
  if (d == 0) throw std::invalid_argument("rational with zero denominator");
  if (d < 0) {
    n = -n;
    d = -d;
  }
  long long g = std::gcd(n < 0 ? -n : n, d);
  if (g > 1) {
    n /= g;
    d /= g;
  }
  num = n;
  den = d;
}

Rat operator+(const Rat& a, const Rat& b) {
  __int128 n = static_cast<__int128>(a.num) * b.den + static_cast<__int128>(b.num) * a.den;
  __int128 d = static_cast<__int128>(a.den) * b.den;
  // reduce in 128 bits before the range check
  auto gcd128 = [](__int128 x, __int128 y) {
    if (x < 0) x = -x;
    while (y != 0) {
      __int128 t = x % y;
      x = y;
      y = t;
    }
    return x;
  };
  __int128 gg = gcd128(n, d);
  if (gg > 1) {
    n /= gg;
    d /= gg;
  }
  Rat r;
  r.num = checked_ll(n, "+");
  r.den = checked_ll(d, "+");
  return r;
}

Rat operator-(const Rat& a, const Rat& b) { return a + Rat(-b.num, b.den); }

Rat operator*(const Rat& a, const Rat& b) {
  auto gcd128 = [](__int128 x, __int128 y) {
    if (x < 0) x = -x;
    while (y != 0) {
      __int128 t = x % y;
      x = y;
      y = t;
    }
    return x;
  };
  __int128 n = static_cast<__int128>(a.num) * b.num;
  __int128 d = static_cast<__int128>(a.den) * b.den;
  __int128 gg = gcd128(n, d);
  if (gg > 1) {
    n /= gg;
    d /= gg;
  }
  Rat r;
  r.num = checked_ll(n, "*");
  r.den = checked_ll(d, "*");
  return r;
}

Rat rat_pow(const Rat& a, long long k) {
  if (k < 0) throw std::invalid_argument("negative rational power");
  Rat r(1);
  Rat base = a;
  while (k > 0) {
    if (k & 1) r = r * base;
    base = base * base;
    k >>= 1;
  }
  return r;
}

bool operator==(const Rat& a, const Rat& b) { return a.num == b.num && a.den == b.den; }

int compare(const Rat& a, const Rat& b) {
  __int128 lhs = static_cast<__int128>(a.num) * b.den;
  __int128 rhs = static_cast<__int128>(b.num) * a.den;
  if (lhs < rhs) return -1;
  if (lhs > rhs) return 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Chart

std::string Chart::var_name(int v) const {
  if (v == 0) return "t";
  if (is_q(v)) return "q" + std::to_string(v);
  if (is_w(v)) return "w" + std::to_string(v - n);
  throw std::out_of_range("chart variable index " + std::to_string(v));
}

int Chart::var_index(const std::string& name) const {
  if (name == "t") return 0;
  if (name.size() >= 2 && (name[0] == 'q' || name[0] == 'w')) {
    bool digits = std::all_of(name.begin() + 1, name.end(), [](char c) { return std::isdigit(c); });
    if (digits) {
      int k = std::stoi(name.substr(1));
      if (name[0] == 'q' && k >= 1 && k <= n) return q_index(k);
      if (name[0] == 'w' && k >= 1 && k <= m) return w_index(k);
    }
  }
  return -1;
}

// ---------------------------------------------------------------------------
// Nodes

struct Expr::Node {
  Kind kind;
  Rat value;           // Rational
  std::string name;    // Param
  int var = -1;        // Var
  long long expo = 0;  // Pow
  std::vector<Expr> kids;
};

Expr::Expr() {
  static const std::shared_ptr<const Node> zero = [] {
    auto p = std::make_shared<Node>();
    p->kind = Kind::Rational;
    p->value = Rat(0);
    return p;
  }();
  node_ = zero;
}

Expr Expr::rational(const Rat& r) {
  auto p = std::make_shared<Node>();
  p->kind = Kind::Rational;
  p->value = r;
  return Expr(std::move(p));
}

Expr Expr::param(std::string name) {
  auto p = std::make_shared<Node>();
  p->kind = Kind::Param;
  p->name = std::move(name);
  return Expr(std::move(p));
}

Expr Expr::var(int index) {
  auto p = std::make_shared<Node>();
  p->kind = Kind::Var;
  p->var = index;
  return Expr(std::move(p));
}

Expr Expr::sum(std::vector<Expr> terms) {
  auto p = std::make_shared<Node>();
  p->kind = Kind::Sum;
  p->kids = std::move(terms);
  return Expr(std::move(p));
}

Expr Expr::prod(std::vector<Expr> factors) {
  auto p = std::make_shared<Node>();
  p->kind = Kind::Prod;
  p->kids = std::move(factors);
  return Expr(std::move(p));
}

Expr Expr::pow(Expr base, long long k) {
  if (k < 0) throw std::invalid_argument("negative powers are not representable");
  auto p = std::make_shared<Node>();
  p->kind = Kind::Pow;
  p->expo = k;
  p->kids.push_back(std::move(base));
  return Expr(std::move(p));
}

Expr Expr::sin(Expr arg) {
  auto p = std::make_shared<Node>();
  p->kind = Kind::Sin;
  p->kids.push_back(std::move(arg));
  return Expr(std::move(p));
}

Expr Expr::cos(Expr arg) {
  auto p = std::make_shared<Node>();
  p->kind = Kind::Cos;
  p->kids.push_back(std::move(arg));
  return Expr(std::move(p));
}

Expr Expr::exp(Expr arg) {
  auto p = std::make_shared<Node>();
  p->kind = Kind::Exp;
  p->kids.push_back(std::move(arg));
  return Expr(std::move(p));
}

Expr::Kind Expr::kind() const { return node_->kind; }
const Rat& Expr::rat() const { return node_->value; }
const std::string& Expr::param_name() const { return node_->name; }
int Expr::var_index() const { return node_->var; }
long long Expr::exponent() const { return node_->expo; }
const std::vector<Expr>& Expr::children() const { return node_->kids; }

// ---------------------------------------------------------------------------
// Canonical order

int compare(const Expr& a, const Expr& b) {
  auto rank = [](Expr::Kind k) {
    switch (k) {
      case Expr::Kind::Rational: return 0;
      case Expr::Kind::Param: return 1;
      case Expr::Kind::Var: return 2;
      case Expr::Kind::Pow: return 3;
      case Expr::Kind::Sin: return 4;
      case Expr::Kind::Cos: return 5;
      case Expr::Kind::Exp: return 6;
      case Expr::Kind::Prod: return 7;
      case Expr::Kind::Sum: return 8;
    }
    return 9;
  };
  if (rank(a.kind()) != rank(b.kind())) return rank(a.kind()) < rank(b.kind()) ? -1 : 1;
  switch (a.kind()) {
    case Expr::Kind::Rational:
      return compare(a.rat(), b.rat());
    case Expr::Kind::Param:
      return a.param_name().compare(b.param_name());
    case Expr::Kind::Var:
      return a.var_index() < b.var_index() ? -1 : (a.var_index() > b.var_index() ? 1 : 0);
    case Expr::Kind::Pow: {
      int c = compare(a.children()[0], b.children()[0]);
      if (c != 0) return c;
      return a.exponent() < b.exponent() ? -1 : (a.exponent() > b.exponent() ? 1 : 0);
    }
    case Expr::Kind::Sin:
    case Expr::Kind::Cos:
    case Expr::Kind::Exp:
      return compare(a.children()[0], b.children()[0]);
    case Expr::Kind::Prod:
    case Expr::Kind::Sum: {
      const auto& x = a.children();
      const auto& y = b.children();
      size_t k = std::min(x.size(), y.size());
      for (size_t i = 0; i < k; ++i) {
        int c = compare(x[i], y[i]);
        if (c != 0) return c;
      }
      if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
      return 0;
    }
  }
  return 0;
}

bool structurally_equal(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

// ---------------------------------------------------------------------------
// Simplification

namespace {

// A term split as rational coefficient times a coefficient-free monomial
// (the monomial is in canonical product form, or the literal 1).
struct SplitTerm {
  Rat coeff;
  Expr mono;  // never carries a rational factor
};

Expr rebuild_product(const Rat& coeff, std::vector<Expr> factors);
struct SplitTerm;
Expr simplify_sum(const std::vector<Expr>& kids);

// factors must already be simplified, non-rational, sorted, merged.
Expr make_product(const Rat& coeff, std::vector<Expr> factors) {
  if (coeff.is_zero()) return Expr();
  if (factors.empty()) return Expr::rational(coeff);
  if (coeff.is_one()) {
    if (factors.size() == 1) return factors[0];
    return Expr::prod(std::move(factors));
  }
  // distribute a scalar over a lone sum so that e + (-1)*e cancels
  if (factors.size() == 1 && factors[0].kind() == Expr::Kind::Sum) {
    std::vector<Expr> terms;
    for (const auto& t : factors[0].children())
      terms.push_back(Expr::prod({Expr::rational(coeff), t}));
    std::vector<Expr> simplified;
    simplified.reserve(terms.size());
    for (const auto& t : terms) simplified.push_back(simplify(t));
    return simplify_sum(simplified);
  }
  std::vector<Expr> kids;
  kids.reserve(factors.size() + 1);
  kids.push_back(Expr::rational(coeff));
  for (auto& f : factors) kids.push_back(std::move(f));
  return Expr::prod(std::move(kids));
}

SplitTerm split_term(const Expr& t) {
  // t is simplified
  if (t.kind() == Expr::Kind::Rational) return {t.rat(), Expr::integer(1)};
  if (t.kind() == Expr::Kind::Prod) {
    const auto& kids = t.children();
    if (!kids.empty() && kids[0].kind() == Expr::Kind::Rational) {
      std::vector<Expr> rest(kids.begin() + 1, kids.end());
      Expr mono = rest.size() == 1 ? rest[0] : Expr::prod(std::move(rest));
      return {kids[0].rat(), mono};
    }
  }
  return {Rat(1), t};
}

Expr simplify_impl(const Expr& e);

// Collects (base, exponent) pairs of a product; children simplified.
void collect_factors(const Expr& e, Rat& coeff, std::vector<std::pair<Expr, long long>>& out) {
  switch (e.kind()) {
    case Expr::Kind::Rational:
      coeff = coeff * e.rat();
      return;
    case Expr::Kind::Prod:
      for (const auto& k : e.children()) collect_factors(k, coeff, out);
      return;
    case Expr::Kind::Pow:
      out.emplace_back(e.children()[0], e.exponent());
      return;
    default:
      out.emplace_back(e, 1);
      return;
  }
}

Expr simplify_product(std::vector<Expr> kids) {
  Rat coeff(1);
  std::vector<std::pair<Expr, long long>> factors;
  for (const auto& k : kids) collect_factors(k, coeff, factors);
  if (coeff.is_zero()) return Expr();
  std::sort(factors.begin(), factors.end(),
            [](const auto& a, const auto& b) { return compare(a.first, b.first) < 0; });
  std::vector<std::pair<Expr, long long>> merged;
  for (auto& f : factors) {
    if (!merged.empty() && compare(merged.back().first, f.first) == 0)
      merged.back().second += f.second;
    else
      merged.push_back(f);
  }
  std::vector<Expr> out;
  for (auto& [base, k] : merged) {
    if (k == 0) continue;
    if (base.kind() == Expr::Kind::Rational) {
      coeff = coeff * rat_pow(base.rat(), k);
      continue;
    }
    out.push_back(k == 1 ? base : Expr::pow(base, k));
  }
  return make_product(coeff, std::move(out));
}

Expr simplify_sum(const std::vector<Expr>& kids) {
  std::vector<SplitTerm> terms;
  Rat constant(0);
  // children already simplified; flatten and split
  std::vector<Expr> queue(kids);
  for (size_t i = 0; i < queue.size(); ++i) {
    const Expr t = queue[i];  // copy: push_back below may reallocate the vector
    if (t.kind() == Expr::Kind::Sum) {
      for (const auto& k : t.children()) queue.push_back(k);
      continue;
    }
    if (t.kind() == Expr::Kind::Rational) {
      constant = constant + t.rat();
      continue;
    }
    terms.push_back(split_term(t));
  }
  std::sort(terms.begin(), terms.end(),
            [](const SplitTerm& a, const SplitTerm& b) { return compare(a.mono, b.mono) < 0; });
  std::vector<SplitTerm> merged;
  for (auto& t : terms) {
    if (!merged.empty() && compare(merged.back().mono, t.mono) == 0)
      merged.back().coeff = merged.back().coeff + t.coeff;
    else
      merged.push_back(t);
  }
  std::vector<Expr> out;
  if (!constant.is_zero()) out.push_back(Expr::rational(constant));
  for (auto& t : merged) {
    if (t.coeff.is_zero()) continue;
    if (t.mono.is_one_literal()) {
      out.push_back(Expr::rational(t.coeff));
      continue;
    }
    Rat c = t.coeff;
    std::vector<std::pair<Expr, long long>> fs;
    Rat dummy(1);
    collect_factors(t.mono, dummy, fs);
    c = c * dummy;
    std::vector<Expr> factors;
    for (auto& [base, k] : fs) factors.push_back(k == 1 ? base : Expr::pow(base, k));
    out.push_back(make_product(c, std::move(factors)));
  }
  if (out.empty()) return Expr();
  if (out.size() == 1) return out[0];
  return Expr::sum(std::move(out));
}

Expr simplify_impl(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Rational:
    case Expr::Kind::Param:
    case Expr::Kind::Var:
      return e;
    case Expr::Kind::Sin: {
      Expr a = simplify_impl(e.children()[0]);
      if (a.is_zero_literal()) return Expr();
      return Expr::sin(std::move(a));
    }
    case Expr::Kind::Cos: {
      Expr a = simplify_impl(e.children()[0]);
      if (a.is_zero_literal()) return Expr::integer(1);
      return Expr::cos(std::move(a));
    }
    case Expr::Kind::Exp: {
      Expr a = simplify_impl(e.children()[0]);
      if (a.is_zero_literal()) return Expr::integer(1);
      return Expr::exp(std::move(a));
    }
    case Expr::Kind::Pow: {
      Expr b = simplify_impl(e.children()[0]);
      long long k = e.exponent();
      if (k == 0) return Expr::integer(1);
      if (k == 1) return b;
      if (b.kind() == Expr::Kind::Rational) return Expr::rational(rat_pow(b.rat(), k));
      if (b.kind() == Expr::Kind::Pow) return simplify_impl(Expr::pow(b.children()[0], k * b.exponent()));
      if (b.kind() == Expr::Kind::Prod) {
        std::vector<Expr> kids;
        for (const auto& f : b.children()) kids.push_back(Expr::pow(f, k));
        return simplify_impl(Expr::prod(std::move(kids)));
      }
      return Expr::pow(std::move(b), k);
    }
    case Expr::Kind::Prod: {
      std::vector<Expr> kids;
      kids.reserve(e.children().size());
      for (const auto& c : e.children()) kids.push_back(simplify_impl(c));
      return simplify_product(std::move(kids));
    }
    case Expr::Kind::Sum: {
      std::vector<Expr> kids;
      kids.reserve(e.children().size());
      for (const auto& c : e.children()) kids.push_back(simplify_impl(c));
      return simplify_sum(kids);
    }
  }
  return e;
}

Expr rebuild_product(const Rat& coeff, std::vector<Expr> factors) {
  return make_product(coeff, std::move(factors));
}

}  // namespace

Expr simplify(const Expr& e) { return simplify_impl(e); }

// ---------------------------------------------------------------------------
// Differentiation

namespace {

Expr diff_raw(const Expr& e, int var) {
  switch (e.kind()) {
    case Expr::Kind::Rational:
    case Expr::Kind::Param:
      return Expr();
    case Expr::Kind::Var:
      return e.var_index() == var ? Expr::integer(1) : Expr();
    case Expr::Kind::Sum: {
      std::vector<Expr> kids;
      for (const auto& c : e.children()) kids.push_back(diff_raw(c, var));
      return Expr::sum(std::move(kids));
    }
    case Expr::Kind::Prod: {
      std::vector<Expr> terms;
      const auto& kids = e.children();
      for (size_t i = 0; i < kids.size(); ++i) {
        std::vector<Expr> fs;
        for (size_t j = 0; j < kids.size(); ++j) fs.push_back(j == i ? diff_raw(kids[j], var) : kids[j]);
        terms.push_back(Expr::prod(std::move(fs)));
      }
      return Expr::sum(std::move(terms));
    }
    case Expr::Kind::Pow: {
      const Expr& b = e.children()[0];
      long long k = e.exponent();
      return Expr::prod({Expr::integer(k), Expr::pow(b, k - 1), diff_raw(b, var)});
    }
    case Expr::Kind::Sin:
      return Expr::prod({Expr::cos(e.children()[0]), diff_raw(e.children()[0], var)});
    case Expr::Kind::Cos:
      return Expr::prod({Expr::integer(-1), Expr::sin(e.children()[0]), diff_raw(e.children()[0], var)});
    case Expr::Kind::Exp:
      return Expr::prod({e, diff_raw(e.children()[0], var)});
  }
  return Expr();
}

}  // namespace

Expr diff(const Expr& e, int var) { return simplify(diff_raw(e, var)); }

Expr substitute(const Expr& e, int var, const Expr& replacement) {
  switch (e.kind()) {
    case Expr::Kind::Rational:
    case Expr::Kind::Param:
      return e;
    case Expr::Kind::Var:
      return e.var_index() == var ? replacement : e;
    case Expr::Kind::Sum:
    case Expr::Kind::Prod: {
      std::vector<Expr> kids;
      for (const auto& c : e.children()) kids.push_back(substitute(c, var, replacement));
      return e.kind() == Expr::Kind::Sum ? Expr::sum(std::move(kids)) : Expr::prod(std::move(kids));
    }
    case Expr::Kind::Pow:
      return Expr::pow(substitute(e.children()[0], var, replacement), e.exponent());
    case Expr::Kind::Sin:
      return Expr::sin(substitute(e.children()[0], var, replacement));
    case Expr::Kind::Cos:
      return Expr::cos(substitute(e.children()[0], var, replacement));
    case Expr::Kind::Exp:
      return Expr::exp(substitute(e.children()[0], var, replacement));
  }
  return e;
}

void collect_vars(const Expr& e, std::set<int>& out) {
  if (e.kind() == Expr::Kind::Var) {
    out.insert(e.var_index());
    return;
  }
  for (const auto& c : e.children()) collect_vars(c, out);
}

void collect_algebraic_vars(const Expr& e, std::set<int>& out) {
  switch (e.kind()) {
    case Expr::Kind::Var:
      out.insert(e.var_index());
      return;
    case Expr::Kind::Sin:
    case Expr::Kind::Cos:
    case Expr::Kind::Exp:
      return;  // occurrences inside transcendental arguments do not count
    default:
      for (const auto& c : e.children()) collect_algebraic_vars(c, out);
      return;
  }
}

void collect_params(const Expr& e, std::set<std::string>& out) {
  if (e.kind() == Expr::Kind::Param) {
    out.insert(e.param_name());
    return;
  }
  for (const auto& c : e.children()) collect_params(c, out);
}

Expr operator+(const Expr& a, const Expr& b) { return simplify(Expr::sum({a, b})); }
Expr operator-(const Expr& a, const Expr& b) {
  return simplify(Expr::sum({a, Expr::prod({Expr::integer(-1), b})}));
}
Expr operator*(const Expr& a, const Expr& b) { return simplify(Expr::prod({a, b})); }
Expr operator-(const Expr& a) { return simplify(Expr::prod({Expr::integer(-1), a})); }

// ---------------------------------------------------------------------------
// Parser

namespace {

struct Parser {
  const std::string& text;
  const Chart& chart;
  const std::set<std::string>& params;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, pos); }

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool peek(char c) {
    skip_ws();
    return pos < text.size() && text[pos] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos;
      return true;
    }
    return false;
  }

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos != text.size()) fail("unexpected trailing input");
    return e;
  }

  // throwing calls are named before list construction: GCC 11 leaks braced
  // initializer elements when a later element's initializer throws (PR66139)
  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) {
        Expr t = term();
        e = Expr::sum({e, t});
      } else if (accept('-')) {
        Expr t = term();
        e = Expr::sum({e, Expr::prod({Expr::integer(-1), t})});
      } else {
        return e;
      }
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (accept('*')) {
        Expr f = factor();
        e = Expr::prod({e, f});
      } else if (peek('/')) {
        fail("division is not supported; rewrite without '/'");
      } else {
        return e;
      }
    }
  }

  Expr factor() {
    Expr b = base();
    skip_ws();
    if (accept('^')) {
      skip_ws();
      bool negative = accept('-');
      size_t at = pos;
      long long k = 0;
      bool any = false;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        k = k * 10 + (text[pos] - '0');
        ++pos;
        any = true;
      }
      if (!any) {
        pos = at;
        fail("expected an integer exponent after '^'");
      }
      if (negative) fail("negative exponents are not supported");
      return Expr::pow(b, k);
    }
    return b;
  }

  Expr base() {
    skip_ws();
    if (pos >= text.size()) fail("unexpected end of input");
    char c = text[pos];
    if (c == '(') {
      ++pos;
      Expr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (c == '-') {
      ++pos;
      Expr f = factor();
      return Expr::prod({Expr::integer(-1), f});
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  Expr number() {
    size_t start = pos;
    __int128 num = 0;
    __int128 den = 1;
    int digits = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      num = num * 10 + (text[pos] - '0');
      ++pos;
      ++digits;
    }
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      bool any = false;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        num = num * 10 + (text[pos] - '0');
        den *= 10;
        ++pos;
        ++digits;
        any = true;
      }
      if (!any) {
        pos = start;
        fail("expected digits after decimal point");
      }
    }
    if (digits > 18) {
      pos = start;
      fail("numeric literal has more than 18 digits");
    }
    return Expr::rational(Rat(checked_ll(num, "literal"), checked_ll(den, "literal")));
  }

  Expr identifier() {
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    std::string name = text.substr(start, pos - start);
    if (name == "sin" || name == "cos" || name == "exp") {
      if (!accept('(')) fail("expected '(' after " + name);
      Expr a = expr();
      if (!accept(')')) fail("expected ')'");
      if (name == "sin") return Expr::sin(a);
      if (name == "cos") return Expr::cos(a);
      return Expr::exp(a);
    }
    int v = chart.var_index(name);
    if (v >= 0) return Expr::var(v);
    if (params.count(name)) return Expr::param(name);
    pos = start;
    fail("unknown identifier '" + name + "'");
  }
};

}  // namespace

Expr parse_expr(const std::string& text, const Chart& chart, const std::set<std::string>& params) {
  Parser p{text, chart, params};
  return simplify(p.parse());
}

// ---------------------------------------------------------------------------
// Printer

namespace {

// Denominators are always 10-smooth (decimal literals, products, integer
// powers; no division), so every rational prints as a finite decimal.
std::string rat_to_string(const Rat& r) {
  if (r.den == 1) return std::to_string(r.num);
  long long den = r.den;
  int twos = 0, fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) throw std::logic_error("rational with non-decimal denominator in printer");
  int k = std::max(twos, fives);
  __int128 scaled = r.num;
  for (int i = 0; i < k - twos; ++i) scaled *= 2;
  for (int i = 0; i < k - fives; ++i) scaled *= 5;
  bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string digits;
  if (scaled == 0) digits = "0";
  while (scaled > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(scaled % 10)));
    scaled /= 10;
  }
  while (static_cast<int>(digits.size()) <= k) digits.push_back('0');
  std::reverse(digits.begin(), digits.end());
  digits.insert(digits.size() - k, ".");
  return (neg ? "-" : "") + digits;
}

void print_node(const Expr& e, std::ostream& os, const Chart* chart);

bool is_atom(const Expr& e) {
  switch (e.kind()) {
    case Expr::Kind::Param:
    case Expr::Kind::Var:
    case Expr::Kind::Sin:
    case Expr::Kind::Cos:
    case Expr::Kind::Exp:
      return true;
    case Expr::Kind::Rational:
      return e.rat().num >= 0;
    default:
      return false;
  }
}

void print_factor(const Expr& e, std::ostream& os, const Chart* chart) {
  if (is_atom(e) || e.kind() == Expr::Kind::Pow) {
    print_node(e, os, chart);
  } else {
    os << '(';
    print_node(e, os, chart);
    os << ')';
  }
}

void print_node(const Expr& e, std::ostream& os, const Chart* chart) {
  switch (e.kind()) {
    case Expr::Kind::Rational:
      os << rat_to_string(e.rat());
      return;
    case Expr::Kind::Param:
      os << e.param_name();
      return;
    case Expr::Kind::Var:
      os << (chart ? chart->var_name(e.var_index()) : "x" + std::to_string(e.var_index()));
      return;
    case Expr::Kind::Sin:
    case Expr::Kind::Cos:
    case Expr::Kind::Exp: {
      os << (e.kind() == Expr::Kind::Sin ? "sin" : e.kind() == Expr::Kind::Cos ? "cos" : "exp");
      os << '(';
      print_node(e.children()[0], os, chart);
      os << ')';
      return;
    }
    case Expr::Kind::Pow: {
      print_factor(e.children()[0], os, chart);
      os << '^' << e.exponent();
      return;
    }
    case Expr::Kind::Prod: {
      const auto& kids = e.children();
      size_t start = 0;
      if (!kids.empty() && kids[0].kind() == Expr::Kind::Rational) {
        const Rat& c = kids[0].rat();
        if (c.num == -1 && c.den == 1 && kids.size() > 1) {
          os << '-';
        } else {
          os << rat_to_string(c) << '*';
        }
        start = 1;
      }
      for (size_t i = start; i < kids.size(); ++i) {
        if (i > start) os << '*';
        print_factor(kids[i], os, chart);
      }
      return;
    }
    case Expr::Kind::Sum: {
      const auto& kids = e.children();
      for (size_t i = 0; i < kids.size(); ++i) {
        const Expr& t = kids[i];
        SplitTerm s = split_term(t);
        bool negative = s.coeff.num < 0;
        if (i == 0) {
          print_node(t, os, chart);
          continue;
        }
        os << (negative ? " - " : " + ");
        if (!negative) {
          print_node(t, os, chart);
        } else {
          Rat flipped(-s.coeff.num, s.coeff.den);
          std::vector<std::pair<Expr, long long>> fs;
          Rat dummy(1);
          collect_factors(s.mono, dummy, fs);
          std::vector<Expr> factors;
          for (auto& [b, k] : fs) factors.push_back(k == 1 ? b : Expr::pow(b, k));
          print_node(rebuild_product(flipped * dummy, std::move(factors)), os, chart);
        }
      }
      return;
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_node(e, os, nullptr);
  return os.str();
}

std::string to_string(const Expr& e, const Chart& chart) {
  std::ostringstream os;
  print_node(e, os, &chart);
  return os.str();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct Value {
  bool exact;
  Rat r;
  double d;
  static Value of(const Rat& r) { return {true, r, 0.0}; }
  static Value of(double d) { return {false, Rat(), d}; }
  double as_double() const { return exact ? r.to_double() : d; }
};

Value eval_impl(const Expr& e, const std::vector<double>& point, const ParamMap& params) {
  switch (e.kind()) {
    case Expr::Kind::Rational:
      return Value::of(e.rat());
    case Expr::Kind::Param: {
      auto it = params.find(e.param_name());
      if (it == params.end()) throw EvalError("unassigned parameter '" + e.param_name() + "'");
      return Value::of(it->second);
    }
    case Expr::Kind::Var: {
      int v = e.var_index();
      if (v < 0 || v >= static_cast<int>(point.size()))
        throw EvalError("unassigned chart variable index " + std::to_string(v));
      return Value::of(point[v]);
    }
    case Expr::Kind::Sum: {
      bool exact = true;
      Rat acc(0);
      double dacc = 0.0;
      for (const auto& k : e.children()) {
        Value v = eval_impl(k, point, params);
        if (exact && v.exact) {
          acc = acc + v.r;
        } else {
          if (exact) {
            dacc = acc.to_double();
            exact = false;
          }
          dacc += v.as_double();
        }
      }
      return exact ? Value::of(acc) : Value::of(dacc);
    }
    case Expr::Kind::Prod: {
      bool exact = true;
      Rat acc(1);
      double dacc = 1.0;
      for (const auto& k : e.children()) {
        Value v = eval_impl(k, point, params);
        if (exact && v.exact) {
          acc = acc * v.r;
        } else {
          if (exact) {
            dacc = acc.to_double();
            exact = false;
          }
          dacc *= v.as_double();
        }
      }
      return exact ? Value::of(acc) : Value::of(dacc);
    }
    case Expr::Kind::Pow: {
      Value b = eval_impl(e.children()[0], point, params);
      if (b.exact) return Value::of(rat_pow(b.r, e.exponent()));
      double r = 1.0, base = b.d;
      for (long long k = e.exponent(); k > 0; --k) r *= base;
      return Value::of(r);
    }
    case Expr::Kind::Sin:
      return Value::of(std::sin(eval_impl(e.children()[0], point, params).as_double()));
    case Expr::Kind::Cos:
      return Value::of(std::cos(eval_impl(e.children()[0], point, params).as_double()));
    case Expr::Kind::Exp:
      return Value::of(std::exp(eval_impl(e.children()[0], point, params).as_double()));
  }
  throw EvalError("unreachable");
}

}  // namespace

double eval(const Expr& e, const std::vector<double>& point, const ParamMap& params) {
  return eval_impl(e, point, params).as_double();
}

// ---------------------------------------------------------------------------
// Domain and is_zero

void Domain::validate() const {
  if (static_cast<int>(box.size()) != chart.dim())
    throw std::invalid_argument("domain box size does not match chart dimension");
  for (size_t i = 0; i < box.size(); ++i)
    if (!(box[i][0] < box[i][1]))
      throw std::invalid_argument("domain box must have lower < upper in coordinate " +
                                  std::to_string(i));
}

ZeroTest is_zero_report(const Expr& e, const Domain& d, int trials, double tol, uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("is_zero requires trials >= 1");
  ZeroTest res;
  res.trials = trials;
  res.seed = seed;
  Expr s = simplify(e);
  if (s.is_zero_literal()) return res;
  Compiled prog(s, d.params);
  auto pts = uniform_points(d, trials, seed);
  for (const auto& p : pts) {
    double v = prog(p);
    if (!(std::fabs(v) < tol)) {
      res.zero = false;
      res.witness = p;
      res.witness_value = v;
      return res;
    }
  }
  return res;
}

bool is_zero(const Expr& e, const Domain& d, int trials, double tol, uint64_t seed) {
  return is_zero_report(e, d, trials, tol, seed).zero;
}

// ---------------------------------------------------------------------------
// Compiled programs

Compiled::Compiled(const Expr& e, const ParamMap& params) {
  int depth = 0, maxdepth = 0;
  auto push = [&](Ins ins, int arity) {
    depth += 1 - arity;
    maxdepth = std::max(maxdepth, depth);
    code_.push_back(ins);
  };
  std::function<void(const Expr&)> emit = [&](const Expr& x) {
    switch (x.kind()) {
      case Expr::Kind::Rational:
        push({Op::Const, 0, x.rat().to_double()}, 0);
        return;
      case Expr::Kind::Param: {
        auto it = params.find(x.param_name());
        if (it == params.end()) throw EvalError("unassigned parameter '" + x.param_name() + "'");
        push({Op::Const, 0, it->second}, 0);
        return;
      }
      case Expr::Kind::Var:
        push({Op::Load, x.var_index(), 0.0}, 0);
        return;
      case Expr::Kind::Sum: {
        bool first = true;
        for (const auto& k : x.children()) {
          emit(k);
          if (!first) push({Op::Add, 0, 0.0}, 2);
          first = false;
        }
        if (first) push({Op::Const, 0, 0.0}, 0);
        return;
      }
      case Expr::Kind::Prod: {
        bool first = true;
        for (const auto& k : x.children()) {
          emit(k);
          if (!first) push({Op::Mul, 0, 0.0}, 2);
          first = false;
        }
        if (first) push({Op::Const, 0, 1.0}, 0);
        return;
      }
      case Expr::Kind::Pow:
        emit(x.children()[0]);
        push({Op::PowI, static_cast<int>(x.exponent()), 0.0}, 1);
        return;
      case Expr::Kind::Sin:
        emit(x.children()[0]);
        push({Op::Sin, 0, 0.0}, 1);
        return;
      case Expr::Kind::Cos:
        emit(x.children()[0]);
        push({Op::Cos, 0, 0.0}, 1);
        return;
      case Expr::Kind::Exp:
        emit(x.children()[0]);
        push({Op::Exp, 0, 0.0}, 1);
        return;
    }
  };
  emit(e);
  stack_need_ = std::max(1, maxdepth);
  if (stack_need_ > 60) throw EvalError("expression too deeply nested to compile");
}

double Compiled::operator()(const double* point) const {
  double stack[64];
  double* sp = stack;
  for (const auto& ins : code_) {
    switch (ins.op) {
      case Op::Const:
        *sp++ = ins.c;
        break;
      case Op::Load:
        *sp++ = point[ins.arg];
        break;
      case Op::Add:
        sp[-2] += sp[-1];
        --sp;
        break;
      case Op::Mul:
        sp[-2] *= sp[-1];
        --sp;
        break;
      case Op::PowI: {
        double b = sp[-1], r = 1.0;
        for (int k = ins.arg; k > 0; --k) r *= b;
        sp[-1] = r;
        break;
      }
      case Op::Sin:
        sp[-1] = std::sin(sp[-1]);
        break;
      case Op::Cos:
        sp[-1] = std::cos(sp[-1]);
        break;
      case Op::Exp:
        sp[-1] = std::exp(sp[-1]);
        break;
      case Op::Neg:
        sp[-1] = -sp[-1];
        break;
    }
  }
  return sp[-1];
}

}  // namespace ctrl
