#include "ctrl/funlinalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <set>

namespace ctrl {

namespace {

using Eigen::MatrixXd;

struct CompiledFamily {
  std::vector<std::vector<Compiled>> fields;  // [field][component]
  int dim = 0;

  CompiledFamily(const std::vector<VectorField>& fs, const ParamMap& params) {
    if (fs.empty()) return;
    dim = fs[0].chart.dim();
    for (const auto& f : fs) {
      if (f.chart.dim() != dim) throw std::invalid_argument("fields over different charts");
      std::vector<Compiled> comps;
      comps.reserve(f.comp.size());
      for (const auto& c : f.comp) comps.emplace_back(c, params);
      fields.push_back(std::move(comps));
    }
  }

  MatrixXd evaluate(const std::vector<double>& x) const {
    MatrixXd M(dim, static_cast<int>(fields.size()));
    for (size_t j = 0; j < fields.size(); ++j)
      for (int i = 0; i < dim; ++i) M(i, j) = fields[j][i](x.data());
    return M;
  }
};

int svd_rank(const MatrixXd& M, double tol) {
  if (M.rows() == 0 || M.cols() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  double threshold = tol * std::max(1.0, sv(0));
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++r;
  return r;
}

}  // namespace

std::vector<int> occurring_vars(const std::vector<VectorField>& fields) {
  std::set<int> vars, algebraic;
  for (const auto& f : fields) {
    for (const auto& c : f.comp) {
      collect_vars(c, vars);
      collect_algebraic_vars(c, algebraic);
    }
  }
  // coordinates with algebraic occurrences first: their vanishing is what
  // degenerates the evaluation matrix, so they deserve the mask budget
  std::vector<int> out(algebraic.begin(), algebraic.end());
  for (int v : vars)
    if (!algebraic.count(v)) out.push_back(v);
  return out;
}

std::vector<Point> rank_sample_batch(const std::vector<VectorField>& fields, const Domain& d,
                                     int count, uint64_t seed,
                                     const SampleRestriction& restrict_to) {
  auto raw = sample_points(d, count, seed, occurring_vars(fields), restrict_to.pinned_zero,
                           restrict_to.avoid_all_zero);
  std::vector<Point> out;
  out.reserve(raw.size());
  for (auto& p : raw) out.push_back(Point{std::move(p)});
  return out;
}

int pointwise_rank(const std::vector<VectorField>& fields, const Point& p, const ParamMap& params,
                   double tol) {
  if (fields.empty()) return 0;
  CompiledFamily fam(fields, params);
  return svd_rank(fam.evaluate(p.x), tol);
}

RankProfile generic_rank(const std::vector<VectorField>& fields, const Domain& d, int trials,
                         uint64_t seed, double tol, const SampleRestriction& restrict_to) {
  if (trials < 1) throw std::invalid_argument("generic_rank requires trials >= 1");
  RankProfile prof;
  prof.trials = trials;
  prof.seed = seed;
  prof.tol = tol;
  if (fields.empty()) return prof;
  CompiledFamily fam(fields, d.params);
  auto pts = rank_sample_batch(fields, d, trials, seed, restrict_to);
  prof.generic = 0;
  prof.min_observed = fields[0].chart.dim() + 1;
  for (const auto& p : pts) {
    int r = svd_rank(fam.evaluate(p.x), tol);
    prof.samples.emplace_back(p, r);
    prof.generic = std::max(prof.generic, r);
    prof.min_observed = std::min(prof.min_observed, r);
  }
  for (const auto& [p, r] : prof.samples)
    if (r < prof.generic) prof.drop_hints.push_back(p);
  return prof;
}

SpanTest in_module_span_report(const VectorField& X, const std::vector<VectorField>& gens,
                               const Domain& d, int trials, uint64_t seed, double tol,
                               const SampleRestriction& restrict_to) {
  SpanTest res;
  res.trials = trials;
  res.seed = seed;
  if (X.is_structurally_zero()) return res;
  std::vector<VectorField> all = gens;
  all.push_back(X);
  CompiledFamily fam(all, d.params);
  auto pts = rank_sample_batch(all, d, trials, seed, restrict_to);
  const int k = static_cast<int>(gens.size());
  for (const auto& p : pts) {
    MatrixXd M = fam.evaluate(p.x);
    int without = svd_rank(M.leftCols(k), tol);
    int with = svd_rank(M, tol);
    if (with > without) {
      res.in_span = false;
      res.witness = p;
      res.rank_without = without;
      res.rank_with = with;
      return res;
    }
  }
  return res;
}

bool in_module_span(const VectorField& X, const std::vector<VectorField>& gens, const Domain& d,
                    int trials, uint64_t seed, double tol, const SampleRestriction& restrict_to) {
  return in_module_span_report(X, gens, d, trials, seed, tol, restrict_to).in_span;
}

InvolutivityReport is_involutive(const std::vector<VectorField>& gens, const Domain& d, int trials,
                                 uint64_t seed, double tol, const SampleRestriction& restrict_to) {
  InvolutivityReport rep;
  for (size_t i = 0; i < gens.size(); ++i) {
    for (size_t j = i + 1; j < gens.size(); ++j) {
      VectorField b = lie_bracket(gens[i], gens[j]);
      if (b.is_structurally_zero()) continue;
      SpanTest t = in_module_span_report(b, gens, d, trials, seed, tol, restrict_to);
      if (!t.in_span) {
        rep.involutive = false;
        rep.pair_i = static_cast<int>(i);
        rep.pair_j = static_cast<int>(j);
        rep.failure = t;
        return rep;
      }
    }
  }
  return rep;
}

}  // namespace ctrl
