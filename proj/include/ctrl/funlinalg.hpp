#pragma once

// Rank and span computations for finite families of vector fields over the
// ring of analytic functions: pointwise rank, generic rank profiles, module
// membership and involutivity.  Ranks are numeric (singular-value
// thresholding) at deterministic sample batches; the batches mix uniform
// points with coordinate-zero snapped points so that membership and rank
// queries see the measure-zero degenerate loci as well.

#include <cstdint>
#include <vector>

#include "ctrl/fields.hpp"
#include "ctrl/sampling.hpp"

namespace ctrl {

inline constexpr double kRankTol = 1e-8;
inline constexpr int kRankTrials = 24;
inline constexpr int kSpanTrials = 24;

// Extra constraints for sampling on a stratum: pinned coordinates are exactly
// zero, and no sample may have every coordinate of an avoid-set zero.
struct SampleRestriction {
  std::vector<int> pinned_zero;
  std::vector<std::vector<int>> avoid_all_zero;
};

std::vector<int> occurring_vars(const std::vector<VectorField>& fields);

std::vector<Point> rank_sample_batch(const std::vector<VectorField>& fields, const Domain& d,
                                     int count, uint64_t seed,
                                     const SampleRestriction& restrict_to = {});

int pointwise_rank(const std::vector<VectorField>& fields, const Point& p, const ParamMap& params,
                   double tol = kRankTol);

struct RankProfile {
  int generic = 0;       // max over samples
  int min_observed = 0;  // min over samples
  std::vector<std::pair<Point, int>> samples;
  std::vector<Point> drop_hints;  // samples where rank < generic
  int trials = 0;
  uint64_t seed = 0;
  double tol = kRankTol;
};

RankProfile generic_rank(const std::vector<VectorField>& fields, const Domain& d,
                         int trials = kRankTrials, uint64_t seed = kDefaultSeed,
                         double tol = kRankTol, const SampleRestriction& restrict_to = {});

struct SpanTest {
  bool in_span = true;
  Point witness;       // sample where appending X raised the rank (on failure)
  int rank_without = 0;
  int rank_with = 0;
  int trials = 0;
  uint64_t seed = 0;
};

// True iff appending X to gens does not raise the pointwise rank at any
// sample of d.  Probabilistic-complete: a `true` can be a false accept with
// vanishing probability, so callers record trials and seed.
SpanTest in_module_span_report(const VectorField& X, const std::vector<VectorField>& gens,
                               const Domain& d, int trials = kSpanTrials,
                               uint64_t seed = kDefaultSeed, double tol = kRankTol,
                               const SampleRestriction& restrict_to = {});
bool in_module_span(const VectorField& X, const std::vector<VectorField>& gens, const Domain& d,
                    int trials = kSpanTrials, uint64_t seed = kDefaultSeed, double tol = kRankTol,
                    const SampleRestriction& restrict_to = {});

struct InvolutivityReport {
  bool involutive = true;
  int pair_i = -1;  // offending pair on failure
  int pair_j = -1;
  SpanTest failure;
};

InvolutivityReport is_involutive(const std::vector<VectorField>& gens, const Domain& d,
                                 int trials = kSpanTrials, uint64_t seed = kDefaultSeed,
                                 double tol = kRankTol, const SampleRestriction& restrict_to = {});

}  // namespace ctrl
