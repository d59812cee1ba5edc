#include "ctrl/secondary.hpp"

#include <algorithm>
#include <map>

namespace ctrl {

namespace {

std::string chain_label(int beta, int depth) {
  if (depth == 0) return "W0_" + std::to_string(beta);
  return "W_" + std::to_string(beta) + "^(" + std::to_string(depth) + ")";
}

uint64_t sub_seed(uint64_t seed, int depth, int beta) {
  return seed ^ (0x9e3779b97f4a7c15ULL * static_cast<uint64_t>(depth * 64 + beta + 1));
}

}  // namespace

int default_max_depth(const ControlSystem& sys) { return 2 * (sys.n + sys.m) + 2; }

std::vector<VectorField> GeneratorSet::fields() const {
  std::vector<VectorField> out;
  out.reserve(gens.size());
  for (const auto& g : gens) out.push_back(g.field);
  return out;
}

const GenEntry* GeneratorSet::find(int beta, int depth) const {
  for (const auto& g : gens)
    if (g.beta == beta && g.depth == depth) return &g;
  return nullptr;
}

BracketChain iterated_brackets(const ControlSystem& sys, int beta, int max_depth, const Domain* d,
                               const SecondaryConfig& cfg, const SampleRestriction& restrict_to) {
  if (beta < 1 || beta > sys.m) throw std::invalid_argument("control index out of range");
  const Domain& dom = d ? *d : sys.domain;
  if (max_depth < 0) max_depth = cfg.max_depth >= 0 ? cfg.max_depth : default_max_depth(sys);
  auto cf = canonical_fields(sys);

  BracketChain chain;
  chain.beta = beta;
  VectorField raw = cf.W0[beta - 1];
  raw.label = chain_label(beta, 0);
  chain.kept.emplace_back(0, raw);
  std::vector<VectorField> accepted = {raw};

  for (int k = 1; k <= max_depth; ++k) {
    raw = lie_bracket(cf.T0, raw);
    raw.label = chain_label(beta, k);
    DropRecord rec;
    rec.beta = beta;
    rec.depth = k;
    rec.label = raw.label;
    if (raw.is_structurally_zero()) {
      rec.structurally_zero = true;
      chain.stop = rec;
      return chain;
    }
    SpanTest t = in_module_span_report(raw, accepted, dom, cfg.span_trials,
                                       sub_seed(cfg.seed, k, beta), cfg.tol, restrict_to);
    if (t.in_span) {
      rec.span = t;
      chain.stop = rec;
      return chain;
    }
    chain.kept.emplace_back(k, raw);
    accepted.push_back(raw);
  }
  chain.reached_cap = true;
  return chain;
}

GeneratorSet secondary_distribution(const ControlSystem& sys, const Domain* d,
                                    const SecondaryConfig& cfg,
                                    const SampleRestriction& restrict_to) {
  const Domain& dom = d ? *d : sys.domain;
  const int max_depth = cfg.max_depth >= 0 ? cfg.max_depth : default_max_depth(sys);
  auto cf = canonical_fields(sys);

  GeneratorSet out;
  out.domain = dom;
  out.restriction = restrict_to;
  out.T0 = cf.T0;

  std::vector<VectorField> accepted;
  // depth 0: the canonical W0_beta, pointwise independent unit directions
  std::vector<VectorField> raw(sys.m);
  std::vector<bool> alive(sys.m, true);
  for (int b = 1; b <= sys.m; ++b) {
    raw[b - 1] = cf.W0[b - 1];
    raw[b - 1].label = chain_label(b, 0);
    GenEntry e;
    e.field = raw[b - 1];
    e.beta = b;
    e.depth = 0;
    e.label = raw[b - 1].label;
    e.keep_evidence =
        in_module_span_report(e.field, accepted, dom, cfg.span_trials, sub_seed(cfg.seed, 0, b),
                              cfg.tol, restrict_to);
    accepted.push_back(e.field);
    out.gens.push_back(std::move(e));
  }

  // depth-synchronous sweep: at each depth bracket every live chain with T0
  // and keep what escapes the span of everything accepted so far.  Once a
  // whole depth stays inside the span, deeper brackets remain in the
  // generated module and the sweep stops.
  for (int k = 1; k <= max_depth; ++k) {
    bool any_new = false;
    bool any_alive = false;
    for (int b = 1; b <= sys.m; ++b) {
      if (!alive[b - 1]) continue;
      raw[b - 1] = lie_bracket(cf.T0, raw[b - 1]);
      raw[b - 1].label = chain_label(b, k);
      DropRecord rec;
      rec.beta = b;
      rec.depth = k;
      rec.label = raw[b - 1].label;
      if (raw[b - 1].is_structurally_zero()) {
        rec.structurally_zero = true;
        alive[b - 1] = false;
        out.dropped.push_back(std::move(rec));
        continue;
      }
      any_alive = true;
      SpanTest t = in_module_span_report(raw[b - 1], accepted, dom, cfg.span_trials,
                                         sub_seed(cfg.seed, k, b), cfg.tol, restrict_to);
      if (t.in_span) {
        rec.span = t;
        out.dropped.push_back(std::move(rec));
        continue;
      }
      GenEntry e;
      e.field = raw[b - 1];
      e.beta = b;
      e.depth = k;
      e.label = raw[b - 1].label;
      e.keep_evidence = t;
      accepted.push_back(e.field);
      out.gens.push_back(std::move(e));
      any_new = true;
    }
    if (!any_alive) break;
    if (!any_new) break;  // whole depth inside the span: fixpoint
    if (k == max_depth) out.reached_cap = true;
  }
  return out;
}

GeneratorSet sub_distribution(const ControlSystem& sys, int beta, const Domain* d,
                              const SecondaryConfig& cfg, const SampleRestriction& restrict_to) {
  const Domain& dom = d ? *d : sys.domain;
  BracketChain chain = iterated_brackets(sys, beta, -1, &dom, cfg, restrict_to);
  auto cf = canonical_fields(sys);

  GeneratorSet out;
  out.domain = dom;
  out.restriction = restrict_to;
  out.T0 = cf.T0;
  out.reached_cap = chain.reached_cap;
  std::vector<VectorField> accepted;
  for (const auto& [k, f] : chain.kept) {
    GenEntry e;
    e.field = f;
    e.beta = beta;
    e.depth = k;
    e.label = f.label;
    e.keep_evidence = in_module_span_report(f, accepted, dom, cfg.span_trials,
                                            sub_seed(cfg.seed, k, beta), cfg.tol, restrict_to);
    accepted.push_back(f);
    out.gens.push_back(std::move(e));
  }
  if (chain.stop) out.dropped.push_back(*chain.stop);
  return out;
}

std::vector<VectorField> AdaptedTable::fields() const {
  std::vector<VectorField> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.field);
  return out;
}

std::vector<VectorField> AdaptedTable::row0_fields() const {
  std::vector<VectorField> out;
  for (const auto& e : entries)
    if (e.ell == 0) out.push_back(e.field);
  return out;
}

AdaptedTable adapted_generators(const ControlSystem& sys, const Domain* d,
                                const SecondaryConfig& cfg,
                                const SampleRestriction& restrict_to) {
  const Domain& dom = d ? *d : sys.domain;
  const int max_depth = cfg.max_depth >= 0 ? cfg.max_depth : default_max_depth(sys);
  auto cf = canonical_fields(sys);

  AdaptedTable table;
  table.domain = dom;
  table.restriction = restrict_to;

  GeneratorSet full = secondary_distribution(sys, &dom, cfg, restrict_to);
  if (full.reached_cap) {
    table.diagnostic = "bracket chains did not stabilise within depth " +
                       std::to_string(max_depth);
    return table;
  }

  // terminal depth of each control under the cross-beta reduction
  std::vector<int> a_beta(sys.m, 0);
  for (const auto& g : full.gens) a_beta[g.beta - 1] = std::max(a_beta[g.beta - 1], g.depth);
  table.nu = *std::max_element(a_beta.begin(), a_beta.end());
  table.R.assign(table.nu + 1, 0);

  // fill blocks: for each control with terminal depth a, the rows are the
  // raw 0..a fold brackets of its W0
  std::vector<std::vector<VectorField>> raw_chain(sys.m);
  for (int b = 1; b <= sys.m; ++b) {
    VectorField f = cf.W0[b - 1];
    f.label = chain_label(b, 0);
    raw_chain[b - 1].push_back(f);
    for (int k = 1; k <= a_beta[b - 1] + 1; ++k) {
      f = lie_bracket(cf.T0, f);
      f.label = chain_label(b, k);
      raw_chain[b - 1].push_back(f);
    }
  }
  for (int a = 0; a <= table.nu; ++a) {
    int j = 0;
    for (int b = 1; b <= sys.m; ++b) {
      if (a_beta[b - 1] != a) continue;
      ++j;
      for (int ell = 0; ell <= a; ++ell) {
        AdaptedEntry e;
        e.field = raw_chain[b - 1][ell];
        e.ell = ell;
        e.a = a;
        e.j = j;
        e.beta = b;
        e.label = "W_{" + std::to_string(ell) + "(" + std::to_string(a) + ")" +
                  std::to_string(j) + "}";
        table.entries.push_back(std::move(e));
      }
    }
    table.R[a] = j;
  }

  // condition (1): the row-0 fields are the W0_beta themselves, pointwise
  // independent of rank m at every sample point
  auto row0 = table.row0_fields();
  auto prof = generic_rank(row0, dom, cfg.span_trials, sub_seed(cfg.seed, 61, 0), cfg.tol,
                           restrict_to);
  if (prof.min_observed != sys.m) {
    table.diagnostic = "row-0 fields fail pointwise independence";
    return table;
  }

  // condition (3): the (a+1)-fold bracket of every row-0 field must fall
  // back into the table.  Checked first against the blocks b <= a (the
  // strict reading) and, failing that, against the full tuple.
  auto all_fields = table.fields();
  bool strict = true;
  for (int a = 0; a <= table.nu; ++a) {
    for (int b = 1; b <= sys.m; ++b) {
      if (a_beta[b - 1] != a) continue;
      const VectorField& overflow = raw_chain[b - 1][a + 1];
      if (overflow.is_structurally_zero()) continue;
      std::vector<VectorField> lower;
      for (const auto& e : table.entries)
        if (e.a <= a) lower.push_back(e.field);
      SpanTest t_lower = in_module_span_report(overflow, lower, dom, cfg.span_trials,
                                               sub_seed(cfg.seed, 62, b), cfg.tol, restrict_to);
      if (t_lower.in_span) {
        table.condition3.push_back(t_lower);
        continue;
      }
      strict = false;
      SpanTest t_all = in_module_span_report(overflow, all_fields, dom, cfg.span_trials,
                                             sub_seed(cfg.seed, 63, b), cfg.tol, restrict_to);
      table.condition3.push_back(t_all);
      if (!t_all.in_span) {
        table.diagnostic = "overflow bracket " + overflow.label +
                           " escapes the adapted tuple; greedy table not certified";
        return table;
      }
    }
  }
  table.strict_triangular = strict;
  table.certified = true;
  return table;
}

}  // namespace ctrl
