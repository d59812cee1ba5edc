#pragma once

// Lie closure (bracket-generated distribution), rank-drop loci, decomposition
// into strata by closure rank, and stratum depth.

#include <optional>
#include <string>
#include <vector>

#include "ctrl/secondary.hpp"

namespace ctrl {

inline constexpr int kMaxBracketDepth = 4;

// Conjunction of coordinate equations {var = 0}, minus an excluded list of
// deeper loci.  All rank-drop sets produced by the paper's examples are
// coordinate subspaces; anything else is reported by sample classification
// with `implicit` set.
struct Predicate {
  Chart chart;
  std::vector<int> zero_vars;               // conjunction: every listed var == 0
  std::vector<std::vector<int>> excluded;   // none of these conjunctions may hold
  bool implicit = false;

  bool contains(const Point& p, double tol = 1e-9) const;
  std::string text() const;
  SampleRestriction restriction() const { return {zero_vars, excluded}; }
};

struct ClosureEntry {
  VectorField field;
  int depth = 1;  // number of V^II factors; original generators have depth 1
  std::string label;
  SpanTest keep_evidence;
};

struct LieClosure {
  std::vector<ClosureEntry> fields_by_depth;  // generators first, then new brackets
  GeneratorSet base;
  RankProfile profile;
  bool reached_cap = false;  // cap hit without a bracket fixpoint
  std::string diagnostic;

  std::vector<VectorField> fields() const;
  std::vector<VectorField> fields_up_to_depth(int r) const;
};

struct StrataConfig {
  int max_bracket_depth = kMaxBracketDepth;
  int span_trials = kSpanTrials;
  int rank_trials = kRankTrials;
  uint64_t seed = kDefaultSeed;
  double tol = kRankTol;
};

LieClosure lie_closure(const GeneratorSet& gens, const Domain& d,
                       int max_bracket_depth = kMaxBracketDepth, const StrataConfig& cfg = {});

// One rank-drop set of a family, with the rank it drops to.
struct DropSet {
  Predicate predicate;
  int rank_on_set = 0;
  enum class Source { Minors, Sampled } source = Source::Minors;
};

struct DropAnalysis {
  int generic_rank = 0;
  std::vector<DropSet> sets;          // ordered by decreasing rank_on_set
  std::vector<std::string> minors;    // printed nontrivial reduced minors
  bool minors_complete = false;       // a nonvanishing minor rules out any drop
};

// Candidate rank-drop equations from symbolic maximal-order minors of the
// (pivot-reduced) evaluation matrix, each candidate verified by sampling on
// the candidate set; snapped-sample classification fills in loci whose
// minors do not factor into coordinate equations.
DropAnalysis drop_locus(const std::vector<VectorField>& fields, const Domain& d,
                        const StrataConfig& cfg = {},
                        const SampleRestriction& restrict_to = {});

struct StratumReport {
  int index = 0;
  Predicate predicate;
  int dii_rank = 0;           // rank of D^II on the stratum
  int closure_rank = 0;       // rank of the Lie closure on the stratum
  int depth = 0;              // stratum depth mu_j
  bool leaf_invariant = true; // closure fields tangent to the stratum locus
  bool rank_consistent = true;
  std::vector<Point> witnesses;
};

struct Stratification {
  GeneratorSet dii;
  LieClosure closure;
  DropAnalysis drops;
  std::vector<StratumReport> strata;

  const StratumReport& stratum_of(const Point& p) const;
};

// U0 = top-rank locus of the Lie closure, U1 = next, ...; each stratum is
// checked for leaf invariance and carries its D^II/closure ranks and depth.
Stratification stratify(const ControlSystem& sys, const Domain* d = nullptr,
                        const StrataConfig& cfg = {});

// Stratification of an arbitrary generator family (used for secondary
// sub-distributions by the second goodness criterion).
Stratification stratify_family(const GeneratorSet& gens, const Domain& d,
                               const StrataConfig& cfg = {});

// Smallest r such that the depth-<= r closure members already achieve the
// stratum's closure rank at all stratum samples.
int stratum_depth(const LieClosure& closure, const StratumReport& stratum, const Domain& d,
                  const StrataConfig& cfg = {});

}  // namespace ctrl
