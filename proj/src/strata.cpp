#include "ctrl/strata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace ctrl {

namespace {

uint64_t sub_seed(uint64_t seed, int tag, int k = 0) {
  return seed ^ (0xd1342543de82ef95ULL * static_cast<uint64_t>(tag * 4096 + k + 1));
}

}  // namespace

// ---------------------------------------------------------------------------
// Predicate

bool Predicate::contains(const Point& p, double tol) const {
  for (int v : zero_vars)
    if (std::fabs(p.x[v]) > tol) return false;
  for (const auto& conj : excluded) {
    bool all = true;
    for (int v : conj)
      if (std::fabs(p.x[v]) > tol) {
        all = false;
        break;
      }
    if (all) return false;
  }
  return true;
}

std::string Predicate::text() const {
  auto conj_text = [&](const std::vector<int>& conj) {
    std::string s;
    for (size_t i = 0; i < conj.size(); ++i) {
      if (i) s += " & ";
      s += chart.var_name(conj[i]) + " = 0";
    }
    return s;
  };
  std::string s;
  if (zero_vars.empty())
    s = "true";
  else
    s = conj_text(zero_vars);
  for (const auto& conj : excluded) s += " \\ {" + conj_text(conj) + "}";
  if (implicit) s += " [implicit]";
  return s;
}

// ---------------------------------------------------------------------------
// Lie closure

std::vector<VectorField> LieClosure::fields() const {
  std::vector<VectorField> out;
  out.reserve(fields_by_depth.size());
  for (const auto& e : fields_by_depth) out.push_back(e.field);
  return out;
}

std::vector<VectorField> LieClosure::fields_up_to_depth(int r) const {
  std::vector<VectorField> out;
  for (const auto& e : fields_by_depth)
    if (e.depth <= r) out.push_back(e.field);
  return out;
}

LieClosure lie_closure(const GeneratorSet& gens, const Domain& d, int max_bracket_depth,
                       const StrataConfig& cfg) {
  LieClosure out;
  out.base = gens;
  for (const auto& g : gens.gens) {
    ClosureEntry e;
    e.field = g.field;
    e.depth = 1;
    e.label = g.label;
    out.fields_by_depth.push_back(std::move(e));
  }

  std::set<std::pair<size_t, size_t>> tested;
  std::vector<VectorField> current = out.fields();
  int round = 0;
  for (;;) {
    bool changed = false;
    const size_t sz = out.fields_by_depth.size();
    for (size_t i = 0; i < sz; ++i) {
      for (size_t j = i + 1; j < sz; ++j) {
        if (tested.count({i, j})) continue;
        int depth = out.fields_by_depth[i].depth + out.fields_by_depth[j].depth;
        if (depth > max_bracket_depth) continue;
        tested.insert({i, j});
        VectorField Z = lie_bracket(out.fields_by_depth[i].field, out.fields_by_depth[j].field);
        if (Z.is_structurally_zero()) continue;
        SpanTest t = in_module_span_report(Z, current, d, cfg.span_trials,
                                           sub_seed(cfg.seed, 1, static_cast<int>(i * 97 + j)),
                                           cfg.tol, gens.restriction);
        if (t.in_span) continue;
        ClosureEntry e;
        e.field = Z;
        e.depth = depth;
        e.label = Z.label;
        e.keep_evidence = t;
        out.fields_by_depth.push_back(std::move(e));
        current.push_back(out.fields_by_depth.back().field);
        changed = true;
      }
    }
    if (!changed) break;
    if (++round > 64) {
      out.diagnostic = "closure loop did not settle";
      break;
    }
  }
  for (const auto& e : out.fields_by_depth)
    if (e.depth == max_bracket_depth) out.reached_cap = true;
  if (out.reached_cap && out.diagnostic.empty())
    out.diagnostic = "bracket depth cap reached; deeper brackets untested";
  out.profile = generic_rank(current, d, cfg.rank_trials, sub_seed(cfg.seed, 2), cfg.tol,
                             gens.restriction);
  return out;
}

// ---------------------------------------------------------------------------
// Rank-drop analysis

namespace {

struct SymMatrix {
  std::vector<std::vector<Expr>> a;  // [row][col]
  int rows() const { return static_cast<int>(a.size()); }
  int cols() const { return a.empty() ? 0 : static_cast<int>(a[0].size()); }
};

void drop_row(SymMatrix& M, int r) { M.a.erase(M.a.begin() + r); }
void drop_col(SymMatrix& M, int c) {
  for (auto& row : M.a) row.erase(row.begin() + c);
}

// Elementary column operations with rational-constant pivots: each pivot
// contributes exactly one to the rank at every point, so the drop locus of
// the remaining block is the drop locus of the family.
int pivot_reduce(SymMatrix& M) {
  int offset = 0;
  for (;;) {
    // remove structurally zero rows and columns
    for (int r = M.rows() - 1; r >= 0; --r) {
      bool zero = true;
      for (const auto& e : M.a[r])
        if (!e.is_zero_literal()) {
          zero = false;
          break;
        }
      if (zero) drop_row(M, r);
    }
    for (int c = M.cols() - 1; c >= 0; --c) {
      bool zero = true;
      for (const auto& row : M.a)
        if (!row[c].is_zero_literal()) {
          zero = false;
          break;
        }
      if (zero) drop_col(M, c);
    }
    int pr = -1, pc = -1;
    for (int r = 0; r < M.rows() && pr < 0; ++r)
      for (int c = 0; c < M.cols() && pr < 0; ++c)
        if (M.a[r][c].is_rational() && !M.a[r][c].is_zero_literal()) {
          pr = r;
          pc = c;
        }
    if (pr < 0) return offset;
    Rat v = M.a[pr][pc].rat();
    Rat inv(v.den, v.num);
    for (int c = 0; c < M.cols(); ++c) {
      if (c == pc || M.a[pr][c].is_zero_literal()) continue;
      Expr factor = simplify(Expr::prod({Expr::rational(inv), M.a[pr][c]}));
      for (int r = 0; r < M.rows(); ++r) {
        if (r == pr) {
          M.a[r][c] = Expr();
          continue;
        }
        M.a[r][c] = simplify(Expr::sum(
            {M.a[r][c], Expr::prod({Expr::integer(-1), factor, M.a[r][pc]})}));
      }
    }
    drop_row(M, pr);
    drop_col(M, pc);
    ++offset;
  }
}

Expr sym_det(const SymMatrix& M, std::vector<int> rows, std::vector<int> cols) {
  if (rows.size() == 1) return M.a[rows[0]][cols[0]];
  std::vector<Expr> terms;
  std::vector<int> sub_rows(rows.begin() + 1, rows.end());
  for (size_t k = 0; k < cols.size(); ++k) {
    const Expr& e = M.a[rows[0]][cols[k]];
    if (e.is_zero_literal()) continue;
    std::vector<int> sub_cols;
    for (size_t j = 0; j < cols.size(); ++j)
      if (j != k) sub_cols.push_back(cols[j]);
    Expr minor = sym_det(M, sub_rows, sub_cols);
    Expr term = Expr::prod({e, minor});
    if (k % 2 == 1) term = Expr::prod({Expr::integer(-1), term});
    terms.push_back(term);
  }
  return simplify(Expr::sum(std::move(terms)));
}

// all size-k subsets of {0..n-1} in lexicographic order
std::vector<std::vector<int>> subsets(int n, int k) {
  std::vector<std::vector<int>> out;
  if (k > n || k <= 0) return out;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  for (;;) {
    out.push_back(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

// min and max of |e| over a snapped sample batch
std::pair<double, double> abs_range(const Expr& e, const Domain& d, uint64_t seed,
                                    const SampleRestriction& restrict_to) {
  std::set<int> vs;
  collect_vars(e, vs);
  auto pts = sample_points(d, 24, seed, std::vector<int>(vs.begin(), vs.end()),
                           restrict_to.pinned_zero, restrict_to.avoid_all_zero);
  Compiled prog(e, d.params);
  double lo = 1e300, hi = 0.0;
  for (const auto& p : pts) {
    double v = std::fabs(prog(p));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

bool nonvanishing_on(const Expr& e, const Domain& d, uint64_t seed,
                     const SampleRestriction& restrict_to) {
  auto [lo, hi] = abs_range(e, d, seed, restrict_to);
  return lo > 1e-7 * std::max(1.0, hi);
}

// splits a term into (rational, base -> exponent) form
void term_factors(const Expr& t, std::map<std::string, std::pair<Expr, long long>>& out) {
  if (t.kind() == Expr::Kind::Prod) {
    for (const auto& k : t.children()) term_factors(k, out);
    return;
  }
  if (t.kind() == Expr::Kind::Rational) return;
  Expr base = t;
  long long e = 1;
  if (t.kind() == Expr::Kind::Pow) {
    base = t.children()[0];
    e = t.exponent();
  }
  std::string key = to_string(base);
  auto it = out.find(key);
  if (it == out.end())
    out.emplace(key, std::make_pair(base, e));
  else
    it->second.second += e;
}

// greatest common monomial divisor of the terms of a sum; remainder is the
// cofactor sum.  For non-sums the whole expression is the common part.
Expr common_monomial(const Expr& e, Expr& remainder) {
  if (e.kind() != Expr::Kind::Sum) {
    remainder = Expr::integer(1);
    return e;
  }
  std::map<std::string, std::pair<Expr, long long>> common;
  bool first = true;
  for (const auto& t : e.children()) {
    std::map<std::string, std::pair<Expr, long long>> fs;
    term_factors(t, fs);
    if (first) {
      common = fs;
      first = false;
      continue;
    }
    for (auto it = common.begin(); it != common.end();) {
      auto jt = fs.find(it->first);
      if (jt == fs.end()) {
        it = common.erase(it);
      } else {
        it->second.second = std::min(it->second.second, jt->second.second);
        ++it;
      }
    }
  }
  if (common.empty()) {
    remainder = e;
    return Expr::integer(1);
  }
  std::vector<Expr> common_factors;
  for (auto& [key, be] : common)
    common_factors.push_back(be.second == 1 ? be.first : Expr::pow(be.first, be.second));
  // divide each term by the common monomial (exponent subtraction)
  std::vector<Expr> rem_terms;
  for (const auto& t : e.children()) {
    std::map<std::string, std::pair<Expr, long long>> fs;
    term_factors(t, fs);
    Rat coeff(1);
    if (t.kind() == Expr::Kind::Prod && t.children()[0].kind() == Expr::Kind::Rational)
      coeff = t.children()[0].rat();
    else if (t.kind() == Expr::Kind::Rational)
      coeff = t.rat();
    std::vector<Expr> left = {Expr::rational(coeff)};
    for (auto& [key, be] : fs) {
      long long exp = be.second;
      auto it = common.find(key);
      if (it != common.end()) exp -= it->second.second;
      if (exp > 0) left.push_back(exp == 1 ? be.first : Expr::pow(be.first, exp));
    }
    rem_terms.push_back(Expr::prod(std::move(left)));
  }
  remainder = simplify(Expr::sum(std::move(rem_terms)));
  return simplify(Expr::prod(std::move(common_factors)));
}

// candidate coordinate equations from one factored minor; returns false when
// some factor can vanish but yields no coordinate equation
bool candidates_from_minor(const Expr& minor, const Domain& d, uint64_t seed,
                           const SampleRestriction& restrict_to, std::set<int>& cands) {
  Expr remainder;
  Expr common = common_monomial(minor, remainder);
  std::vector<Expr> factors;
  if (common.kind() == Expr::Kind::Prod)
    factors = common.children();
  else
    factors.push_back(common);
  if (!remainder.is_one_literal()) factors.push_back(remainder);
  bool readable = true;
  for (const auto& f0 : factors) {
    Expr f = f0;
    if (f.kind() == Expr::Kind::Pow) f = f.children()[0];
    switch (f.kind()) {
      case Expr::Kind::Rational:
      case Expr::Kind::Exp:
        continue;  // never zero
      case Expr::Kind::Var: {
        int v = f.var_index();
        if (d.contains_zero(v))
          cands.insert(v);
        // a variable whose box misses zero cannot vanish
        continue;
      }
      case Expr::Kind::Sin: {
        const Expr& arg = f.children()[0];
        if (arg.kind() == Expr::Kind::Var) {
          int v = arg.var_index();
          double pi = 3.14159265358979323846;
          if (d.box[v][0] > -pi && d.box[v][1] < pi) {
            if (d.contains_zero(v)) cands.insert(v);
            continue;  // sin vanishes only at the coordinate zero here
          }
        }
        if (nonvanishing_on(f, d, seed, restrict_to)) continue;
        readable = false;
        continue;
      }
      default:
        if (nonvanishing_on(f, d, seed, restrict_to)) continue;
        readable = false;
        continue;
    }
  }
  return readable;
}

// rank of the family at every point of the coordinate locus V(S)
struct LocusRank {
  bool consistent_drop = false;  // rank < generic at every sample of the locus
  int rank = 0;                  // max rank over the locus samples
};

LocusRank rank_on_locus(const std::vector<VectorField>& fields, const Domain& d,
                        const std::vector<int>& locus, int generic, const StrataConfig& cfg,
                        const SampleRestriction& outer, uint64_t seed) {
  SampleRestriction r = outer;
  for (int v : locus)
    if (std::find(r.pinned_zero.begin(), r.pinned_zero.end(), v) == r.pinned_zero.end())
      r.pinned_zero.push_back(v);
  auto prof = generic_rank(fields, d, cfg.rank_trials, seed, cfg.tol, r);
  LocusRank out;
  out.rank = prof.generic;
  out.consistent_drop = prof.generic < generic;
  return out;
}

}  // namespace

DropAnalysis drop_locus(const std::vector<VectorField>& fields, const Domain& d,
                        const StrataConfig& cfg, const SampleRestriction& restrict_to) {
  DropAnalysis out;
  if (fields.empty()) return out;
  const Chart chart = fields[0].chart;
  auto prof = generic_rank(fields, d, cfg.rank_trials, sub_seed(cfg.seed, 10), cfg.tol,
                           restrict_to);
  out.generic_rank = prof.generic;

  // ---- symbolic minors of the pivot-reduced evaluation matrix
  SymMatrix M;
  M.a.assign(chart.dim(), std::vector<Expr>(fields.size()));
  for (size_t j = 0; j < fields.size(); ++j)
    for (int i = 0; i < chart.dim(); ++i) M.a[i][j] = fields[j].comp[i];
  int offset = pivot_reduce(M);
  int g_block = prof.generic - offset;

  std::set<int> candidates;
  bool all_readable = true;
  bool have_minors = false;
  if (g_block == 0) {
    // the whole block vanishes at generic points, hence identically
    out.minors_complete = true;
  } else if (g_block > 0 && g_block <= 4 && M.rows() <= 8 && M.cols() <= 12) {
    have_minors = true;
    auto row_sets = subsets(M.rows(), g_block);
    auto col_sets = subsets(M.cols(), g_block);
    int idx = 0;
    for (const auto& rs : row_sets) {
      for (const auto& cs : col_sets) {
        Expr det = sym_det(M, rs, cs);
        ++idx;
        if (det.is_zero_literal()) continue;
        Domain dz = d;
        if (!is_zero(det, dz, kZeroTestTrials, kZeroTestTol, sub_seed(cfg.seed, 11, idx)))
          out.minors.push_back(to_string(det, chart));
        else
          continue;
        if (nonvanishing_on(det, d, sub_seed(cfg.seed, 12, idx), restrict_to)) {
          // one everywhere-nonzero maximal minor rules out any rank drop
          out.minors_complete = true;
          out.sets.clear();
          return out;
        }
        if (!candidates_from_minor(det, d, sub_seed(cfg.seed, 13, idx), restrict_to, candidates))
          all_readable = false;
      }
    }
  }

  // drop pinned coordinates: they are zero on the whole validity domain
  for (int v : restrict_to.pinned_zero) candidates.erase(v);

  // ---- sampled classification: exact-zero coordinate patterns of the
  // snapped batch whose rank sits below the generic rank
  std::set<std::vector<int>> sampled_cands;
  {
    auto occ = occurring_vars(fields);
    for (const auto& [p, r] : prof.samples) {
      if (r >= prof.generic) continue;
      std::vector<int> zeros;
      for (int v : occ)
        if (p.x[v] == 0.0 &&
            std::find(restrict_to.pinned_zero.begin(), restrict_to.pinned_zero.end(), v) ==
                restrict_to.pinned_zero.end())
          zeros.push_back(v);
      if (!zeros.empty()) sampled_cands.insert(zeros);
    }
  }

  // ---- verify candidate conjunctions by sampling, smallest first
  std::vector<DropSet> accepted;
  auto already_covered = [&](const std::vector<int>& s) {
    for (const auto& a : accepted) {
      bool subset = true;
      for (int v : a.predicate.zero_vars)
        if (std::find(s.begin(), s.end(), v) == s.end()) {
          subset = false;
          break;
        }
      if (subset) return true;  // a smaller accepted set is contained in s
    }
    return false;
  };
  auto try_accept = [&](const std::vector<int>& s, DropSet::Source source) {
    if (s.empty() || already_covered(s)) return;
    auto lr = rank_on_locus(fields, d, s, prof.generic, cfg, restrict_to,
                            sub_seed(cfg.seed, 14, static_cast<int>(accepted.size() + s.size())));
    if (!lr.consistent_drop) return;
    DropSet ds;
    ds.predicate.chart = chart;
    ds.predicate.zero_vars = s;
    std::sort(ds.predicate.zero_vars.begin(), ds.predicate.zero_vars.end());
    ds.rank_on_set = lr.rank;
    ds.source = source;
    accepted.push_back(std::move(ds));
  };

  std::vector<int> cand_list(candidates.begin(), candidates.end());
  for (int size = 1; size <= std::min<int>(4, static_cast<int>(cand_list.size())); ++size) {
    for (const auto& pick : subsets(static_cast<int>(cand_list.size()), size)) {
      std::vector<int> s;
      for (int i : pick) s.push_back(cand_list[i]);
      try_accept(s, DropSet::Source::Minors);
    }
  }

  // minimize and verify the sampled patterns
  for (auto zeros : sampled_cands) {
    bool shrunk = true;
    while (shrunk && zeros.size() > 1) {
      shrunk = false;
      for (size_t i = 0; i < zeros.size(); ++i) {
        std::vector<int> reduced;
        for (size_t j = 0; j < zeros.size(); ++j)
          if (j != i) reduced.push_back(zeros[j]);
        auto lr = rank_on_locus(fields, d, reduced, prof.generic, cfg, restrict_to,
                                sub_seed(cfg.seed, 15, static_cast<int>(i + zeros.size() * 16)));
        if (lr.consistent_drop) {
          zeros = reduced;
          shrunk = true;
          break;
        }
      }
    }
    try_accept(zeros, DropSet::Source::Sampled);
  }

  std::sort(accepted.begin(), accepted.end(), [](const DropSet& a, const DropSet& b) {
    if (a.rank_on_set != b.rank_on_set) return a.rank_on_set > b.rank_on_set;
    return a.predicate.zero_vars < b.predicate.zero_vars;
  });
  // drop redundant supersets of an accepted subset (same or lower rank)
  std::vector<DropSet> final_sets;
  for (const auto& s : accepted) {
    bool redundant = false;
    for (const auto& kept : final_sets) {
      bool contains_kept = true;
      for (int v : kept.predicate.zero_vars)
        if (std::find(s.predicate.zero_vars.begin(), s.predicate.zero_vars.end(), v) ==
            s.predicate.zero_vars.end()) {
          contains_kept = false;
          break;
        }
      if (contains_kept && s.rank_on_set >= kept.rank_on_set) {
        redundant = true;
        break;
      }
    }
    if (!redundant) final_sets.push_back(s);
  }
  out.sets = std::move(final_sets);
  if (have_minors && all_readable && out.sets.empty() && sampled_cands.empty())
    out.minors_complete = true;
  for (auto& s : out.sets) {
    // deeper accepted loci are excluded from shallower strata below; mark
    // unreadable factorizations
    s.predicate.implicit = (s.source == DropSet::Source::Sampled) && !all_readable;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stratification

namespace {

StratumReport make_stratum(int index, const Predicate& pred, const GeneratorSet& dii,
                           const LieClosure& closure, const Domain& d, const StrataConfig& cfg) {
  StratumReport rep;
  rep.index = index;
  rep.predicate = pred;
  SampleRestriction r = pred.restriction();
  // merge the ambient restriction of the family
  for (int v : dii.restriction.pinned_zero)
    if (std::find(r.pinned_zero.begin(), r.pinned_zero.end(), v) == r.pinned_zero.end())
      r.pinned_zero.push_back(v);
  for (const auto& a : dii.restriction.avoid_all_zero) r.avoid_all_zero.push_back(a);

  auto dii_prof = generic_rank(dii.fields(), d, cfg.rank_trials, sub_seed(cfg.seed, 20, index),
                               cfg.tol, r);
  rep.dii_rank = dii_prof.generic;
  auto cl_prof = generic_rank(closure.fields(), d, cfg.rank_trials, sub_seed(cfg.seed, 21, index),
                              cfg.tol, r);
  rep.closure_rank = cl_prof.generic;
  rep.rank_consistent = (cl_prof.generic == cl_prof.min_observed);
  for (const auto& [p, rk] : cl_prof.samples)
    if (rep.witnesses.size() < 4) rep.witnesses.push_back(p);

  // leaf invariance: closure fields are tangent to the stratum equations
  rep.leaf_invariant = true;
  if (!pred.zero_vars.empty()) {
    auto pts = sample_points(d, cfg.rank_trials, sub_seed(cfg.seed, 22, index),
                             occurring_vars(closure.fields()), r.pinned_zero, r.avoid_all_zero);
    for (const auto& e : closure.fields_by_depth) {
      for (int v : pred.zero_vars) {
        const Expr& comp = e.field.comp[v];
        if (comp.is_zero_literal()) continue;
        Compiled prog(comp, d.params);
        for (const auto& p : pts)
          if (std::fabs(prog(p.data())) > 1e-7) {
            rep.leaf_invariant = false;
            break;
          }
        if (!rep.leaf_invariant) break;
      }
      if (!rep.leaf_invariant) break;
    }
  }
  return rep;
}

}  // namespace

const StratumReport& Stratification::stratum_of(const Point& p) const {
  for (const auto& s : strata) {
    if (s.index == 0) continue;  // check the specific loci first
    if (s.predicate.contains(p)) return s;
  }
  for (const auto& s : strata)
    if (s.predicate.contains(p)) return s;
  throw std::logic_error("point matches no stratum");
}

Stratification stratify_family(const GeneratorSet& gens, const Domain& d,
                               const StrataConfig& cfg) {
  Stratification out;
  out.dii = gens;
  out.closure = lie_closure(gens, d, cfg.max_bracket_depth, cfg);
  out.drops = drop_locus(out.closure.fields(), d, cfg, gens.restriction);

  const Chart chart = gens.gens.empty() ? Chart{0, 0} : gens.gens[0].field.chart;
  Predicate top;
  top.chart = chart;
  for (const auto& s : out.drops.sets) top.excluded.push_back(s.predicate.zero_vars);
  out.strata.push_back(make_stratum(0, top, out.dii, out.closure, d, cfg));

  int index = 1;
  for (size_t i = 0; i < out.drops.sets.size(); ++i) {
    Predicate pred = out.drops.sets[i].predicate;
    pred.chart = chart;
    for (size_t j = 0; j < out.drops.sets.size(); ++j) {
      if (j == i) continue;
      // exclude strictly deeper loci contained in this one
      const auto& other = out.drops.sets[j].predicate.zero_vars;
      bool contains_this = std::includes(other.begin(), other.end(), pred.zero_vars.begin(),
                                         pred.zero_vars.end());
      if (contains_this && other.size() > pred.zero_vars.size())
        pred.excluded.push_back(other);
    }
    out.strata.push_back(make_stratum(index++, pred, out.dii, out.closure, d, cfg));
  }
  for (auto& s : out.strata) s.depth = stratum_depth(out.closure, s, d, cfg);
  return out;
}

Stratification stratify(const ControlSystem& sys, const Domain* d, const StrataConfig& cfg) {
  const Domain& dom = d ? *d : sys.domain;
  SecondaryConfig scfg;
  scfg.span_trials = cfg.span_trials;
  scfg.seed = cfg.seed;
  scfg.tol = cfg.tol;
  GeneratorSet dii = secondary_distribution(sys, &dom, scfg);
  return stratify_family(dii, dom, cfg);
}

int stratum_depth(const LieClosure& closure, const StratumReport& stratum, const Domain& d,
                  const StrataConfig& cfg) {
  int max_depth = 0;
  for (const auto& e : closure.fields_by_depth) max_depth = std::max(max_depth, e.depth);
  SampleRestriction r = stratum.predicate.restriction();
  for (int v : closure.base.restriction.pinned_zero)
    if (std::find(r.pinned_zero.begin(), r.pinned_zero.end(), v) == r.pinned_zero.end())
      r.pinned_zero.push_back(v);
  for (const auto& a : closure.base.restriction.avoid_all_zero) r.avoid_all_zero.push_back(a);
  for (int depth = 1; depth <= max_depth; ++depth) {
    auto prof = generic_rank(closure.fields_up_to_depth(depth), d, cfg.rank_trials,
                             sub_seed(cfg.seed, 30, stratum.index * 8 + depth), cfg.tol, r);
    if (prof.min_observed == stratum.closure_rank && prof.generic == stratum.closure_rank)
      return depth;
  }
  return max_depth;
}

}  // namespace ctrl
