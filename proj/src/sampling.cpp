#include "ctrl/sampling.hpp"

#include <algorithm>

namespace ctrl {

std::vector<std::vector<double>> uniform_points(const Domain& d, int count, uint64_t seed) {
  d.validate();
  Rng rng = Rng::stream(seed, 0x11);
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::vector<double> p(d.box.size());
    for (size_t v = 0; v < d.box.size(); ++v) p[v] = rng.range(d.box[v][0], d.box[v][1]);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

// Enumerates subsets of `vars` in the order {}, all, singletons, pairs,
// triples, ... (lexicographic within a size), which front-loads the masks
// that matter for the coordinate-subspace loci seen in practice.
std::vector<std::vector<int>> mask_sequence(const std::vector<int>& vars, size_t budget) {
  std::vector<std::vector<int>> masks;
  masks.push_back({});
  if (!vars.empty()) masks.push_back(vars);
  for (size_t sz = 1; sz < vars.size() && masks.size() < budget; ++sz) {
    std::vector<int> idx(sz);
    for (size_t i = 0; i < sz; ++i) idx[i] = static_cast<int>(i);
    for (;;) {
      std::vector<int> mask;
      for (int i : idx) mask.push_back(vars[i]);
      masks.push_back(std::move(mask));
      if (masks.size() >= budget) break;
      int i = static_cast<int>(sz) - 1;
      while (i >= 0 && idx[i] == static_cast<int>(vars.size() - sz + i)) --i;
      if (i < 0) break;
      ++idx[i];
      for (size_t j = i + 1; j < sz; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return masks;
}

}  // namespace

std::vector<std::vector<double>> sample_points(const Domain& d, int count, uint64_t seed,
                                               const std::vector<int>& snap_vars,
                                               const std::vector<int>& pinned_zero,
                                               const std::vector<std::vector<int>>& avoid_all_zero) {
  d.validate();
  Rng rng = Rng::stream(seed, 0x22);
  // caller order is a priority order; keep it
  std::vector<int> snappable;
  for (int v : snap_vars) {
    if (v < 0 || v >= static_cast<int>(d.box.size())) continue;
    if (!d.contains_zero(v)) continue;
    if (std::find(pinned_zero.begin(), pinned_zero.end(), v) != pinned_zero.end()) continue;
    if (std::find(snappable.begin(), snappable.end(), v) == snappable.end()) snappable.push_back(v);
  }

  auto masks = mask_sequence(snappable, static_cast<size_t>(count));
  std::vector<std::vector<double>> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    std::vector<int> mask;
    if (i < static_cast<int>(masks.size())) {
      mask = masks[i];
    } else {
      for (int v : snappable)
        if (rng.below(2) == 0) mask.push_back(v);
    }
    // break any forbidden all-zero combination by releasing one coordinate
    auto is_zeroed = [&](int v) {
      return std::find(pinned_zero.begin(), pinned_zero.end(), v) != pinned_zero.end() ||
             std::find(mask.begin(), mask.end(), v) != mask.end();
    };
    for (const auto& bad : avoid_all_zero) {
      if (bad.empty()) continue;
      bool all = std::all_of(bad.begin(), bad.end(), is_zeroed);
      if (!all) continue;
      for (auto it = bad.rbegin(); it != bad.rend(); ++it) {
        auto pos = std::find(mask.begin(), mask.end(), *it);
        if (pos != mask.end()) {
          mask.erase(pos);
          break;
        }
      }
    }
    std::vector<double> p(d.box.size());
    for (size_t v = 0; v < d.box.size(); ++v) {
      if (is_zeroed(static_cast<int>(v)))
        p[v] = 0.0;
      else
        p[v] = rng.range(d.box[v][0], d.box[v][1]);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace ctrl
