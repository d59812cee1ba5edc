#pragma once

// The secondary distribution (V^II, D^II) of a control system: per-control
// iterated T0-bracket chains, the cross-control span-reduced generator set,
// secondary sub-distributions, and T0-adapted generator tables.

#include <optional>
#include <string>
#include <vector>

#include "ctrl/funlinalg.hpp"

namespace ctrl {

struct SecondaryConfig {
  int max_depth = -1;  // < 0: use 2*(n+m)+2
  int span_trials = kSpanTrials;
  uint64_t seed = kDefaultSeed;
  double tol = kRankTol;
};

int default_max_depth(const ControlSystem&);

struct GenEntry {
  VectorField field;
  int beta = 0;   // source control index, 1-based
  int depth = 0;  // iterated-T0-bracket count; depth 0 entries are the W0_beta
  std::string label;
  SpanTest keep_evidence;  // sample where the field raised the pointwise rank
};

struct DropRecord {
  int beta = 0;
  int depth = 0;
  std::string label;
  bool structurally_zero = false;
  SpanTest span;  // in-span evidence when not structurally zero
};

struct GeneratorSet {
  std::vector<GenEntry> gens;
  std::vector<DropRecord> dropped;
  Domain domain;
  SampleRestriction restriction;
  VectorField T0;
  bool reached_cap = false;

  std::vector<VectorField> fields() const;
  const GenEntry* find(int beta, int depth) const;
};

struct BracketChain {
  int beta = 0;
  std::vector<std::pair<int, VectorField>> kept;  // (depth, field)
  std::optional<DropRecord> stop;                 // first bracket inside the chain span
  bool reached_cap = false;
};

// W_beta^(0) = W0_beta, W_beta^(k) = [T0, W_beta^(k-1)], stopping at
// max_depth or at the first bracket that passes in_module_span against the
// previously accepted generators of this call.
BracketChain iterated_brackets(const ControlSystem& sys, int beta, int max_depth = -1,
                               const Domain* d = nullptr, const SecondaryConfig& cfg = {},
                               const SampleRestriction& restrict_to = {});

// Union over beta of the bracket chains, cross-beta span-reduction applied in
// increasing depth order (then increasing beta); a later bracket already in
// the span of all earlier accepted generators is dropped and recorded.  The
// process stops at the first depth whose brackets are all in the accepted
// span: deeper brackets then stay inside the generated module.
GeneratorSet secondary_distribution(const ControlSystem& sys, const Domain* d = nullptr,
                                    const SecondaryConfig& cfg = {},
                                    const SampleRestriction& restrict_to = {});

// Chain of a single control index, span-reduced.
GeneratorSet sub_distribution(const ControlSystem& sys, int beta, const Domain* d = nullptr,
                              const SecondaryConfig& cfg = {},
                              const SampleRestriction& restrict_to = {});

struct AdaptedEntry {
  VectorField field;
  int ell = 0;  // row: the ell-fold T0-bracket of the row-0 field
  int a = 0;    // block
  int j = 1;    // column inside the block
  int beta = 0;
  std::string label;  // W_{ell(a)j}
};

struct AdaptedTable {
  int nu = 0;
  std::vector<int> R;  // R[a], 0 <= a <= nu; sum R[a] = m
  std::vector<AdaptedEntry> entries;
  bool certified = false;
  // true when condition (3) holds against blocks b <= a alone; when false but
  // certified, the overflow brackets close into the full tuple instead
  bool strict_triangular = false;
  std::string diagnostic;
  std::vector<SpanTest> condition3;  // per-block overflow evidence
  Domain domain;
  SampleRestriction restriction;

  std::vector<VectorField> fields() const;
  std::vector<VectorField> row0_fields() const;
};

// Greedy construction: terminal depths a_beta from the cross-beta reduction
// define nu and the block sizes R_a; rows are filled by bracketing.
// Condition (3) is verified, not assumed; certification failure is reported
// in `diagnostic`, never silent.
AdaptedTable adapted_generators(const ControlSystem& sys, const Domain* d = nullptr,
                                const SecondaryConfig& cfg = {},
                                const SampleRestriction& restrict_to = {});

}  // namespace ctrl
