#pragma once

// Deterministic, platform-independent sampling used by every probabilistic
// test in the library.  std:: distributions are implementation-defined, so
// uniform doubles are produced from a splitmix64 stream directly.

#include <cstdint>
#include <vector>

#include "ctrl/expr.hpp"

namespace ctrl {

struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t seed) : state(seed) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}
  // Independent deterministic substream (per-trajectory, per-module, ...).
  static Rng stream(uint64_t seed, uint64_t stream_id) {
    SplitMix64 mix(seed ^ (0x632be59bd9b4e019ULL * (stream_id + 1)));
    return Rng(mix.next());
  }
  uint64_t next() { return gen_.next(); }
  double uniform() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  uint64_t below(uint64_t n) { return gen_.next() % n; }

 private:
  SplitMix64 gen_;
};

// Uniform points in the box of d.
std::vector<std::vector<double>> uniform_points(const Domain& d, int count, uint64_t seed);

// Mixed batch for rank/span queries: uniform points interleaved with points
// whose coordinates are snapped to exact zero along subsets of `snap_vars`
// (empty mask first, then the full mask, singletons, pairs, ... while the
// budget lasts, then random masks).  Degenerate loci such as {q5 = w2 = 0}
// are measure zero, so plain uniform sampling would never represent them;
// the snapped points make rank and span queries sensitive to them.
//
// `pinned_zero` coordinates are zero in every sample; no sample has all
// coordinates of any `avoid_all_zero` set simultaneously zero.
std::vector<std::vector<double>> sample_points(
    const Domain& d, int count, uint64_t seed, const std::vector<int>& snap_vars,
    const std::vector<int>& pinned_zero = {},
    const std::vector<std::vector<int>>& avoid_all_zero = {});

}  // namespace ctrl
