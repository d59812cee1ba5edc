#include "ctrl/criteria.hpp"

#include <algorithm>
#include <cmath>

namespace ctrl {

namespace {

uint64_t sub_seed(uint64_t seed, int tag, int k = 0) {
  return seed ^ (0xa0761d6478bd642fULL * static_cast<uint64_t>(tag * 8192 + k + 1));
}

StrataConfig strata_cfg(const CriteriaConfig& cfg) {
  StrataConfig s;
  s.max_bracket_depth = cfg.max_bracket_depth;
  s.span_trials = cfg.span_trials;
  s.rank_trials = cfg.rank_trials;
  s.seed = cfg.seed;
  s.tol = cfg.tol;
  return s;
}

SecondaryConfig secondary_cfg(const CriteriaConfig& cfg) {
  SecondaryConfig s;
  s.span_trials = cfg.span_trials;
  s.seed = cfg.seed;
  s.tol = cfg.tol;
  return s;
}

}  // namespace

std::string to_string(Verdict3 v) {
  switch (v) {
    case Verdict3::Established: return "established";
    case Verdict3::Refuted: return "refuted";
    case Verdict3::NotEstablished: return "not established";
  }
  return "?";
}

std::string to_string(GoodnessKind k) {
  switch (k) {
    case GoodnessKind::First: return "first";
    case GoodnessKind::Second: return "second";
    case GoodnessKind::Inconclusive: return "inconclusive";
  }
  return "?";
}

Domain local_domain(const Domain& d, const Point& p, double frac) {
  Domain out = d;
  for (size_t v = 0; v < d.box.size(); ++v) {
    double extent = d.box[v][1] - d.box[v][0];
    double r = frac * extent;
    // keep zero out of coordinates where p sits away from it
    if (std::fabs(p.x[v]) > 1e-9) r = std::min(r, 0.5 * std::fabs(p.x[v]));
    double lo = std::max(d.box[v][0], p.x[v] - r);
    double hi = std::min(d.box[v][1], p.x[v] + r);
    if (!(lo < hi)) {  // p on (or outside) the box edge
      lo = p.x[v] - r;
      hi = p.x[v] + r;
    }
    out.box[v] = {lo, hi};
  }
  return out;
}

int pi_q_rank(const std::vector<VectorField>& fields, const Point& p, const ParamMap& params,
              double tol) {
  if (fields.empty()) return 0;
  const Chart& c = fields[0].chart;
  Eigen::MatrixXd M(c.n, static_cast<int>(fields.size()));
  for (size_t j = 0; j < fields.size(); ++j)
    for (int i = 1; i <= c.n; ++i) M(i - 1, j) = eval(fields[j].comp[i], p.x, params);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  double threshold = tol * std::max(1.0, sv(0));
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > threshold) ++r;
  return r;
}

// ---------------------------------------------------------------------------
// First criterion

namespace {

// constant rank + involutivity of a family near p, restricted to a stratum
FirstKindEvidence first_kind_for(const std::vector<VectorField>& fields, const Point& p,
                                 const Predicate& stratum_pred,
                                 const SampleRestriction& ambient, const Domain& base_domain,
                                 const ParamMap& params, const CriteriaConfig& cfg, int seed_tag) {
  FirstKindEvidence ev;
  Domain local = local_domain(base_domain, p, cfg.local_box_frac);
  SampleRestriction r = stratum_pred.restriction();
  for (int v : ambient.pinned_zero)
    if (std::find(r.pinned_zero.begin(), r.pinned_zero.end(), v) == r.pinned_zero.end())
      r.pinned_zero.push_back(v);
  for (const auto& a : ambient.avoid_all_zero) r.avoid_all_zero.push_back(a);

  auto pts = rank_sample_batch(fields, local, cfg.goodness_points,
                               sub_seed(cfg.seed, 40, seed_tag), r);
  pts.push_back(p);
  int lo = 1 << 20, hi = 0;
  for (const auto& q : pts) {
    int rk = pointwise_rank(fields, q, params, cfg.tol);
    lo = std::min(lo, rk);
    hi = std::max(hi, rk);
  }
  ev.samples = static_cast<int>(pts.size());
  ev.rank = hi;
  ev.constant_rank = (lo == hi);
  if (!ev.constant_rank) return ev;
  ev.involutivity = is_involutive(fields, local, cfg.span_trials, sub_seed(cfg.seed, 41, seed_tag),
                                  cfg.tol, r);
  ev.involutive = ev.involutivity.involutive;
  return ev;
}

}  // namespace

GoodnessVerdict good_first_kind(const ControlSystem& sys, const Point& p,
                                const Stratification& strat, const CriteriaConfig& cfg) {
  GoodnessVerdict v;
  v.at = p;
  const StratumReport& st = strat.stratum_of(p);
  v.stratum_index = st.index;
  v.first = first_kind_for(strat.dii.fields(), p, st.predicate, strat.dii.restriction,
                           strat.dii.domain, sys.params, cfg, st.index);
  if (v.first.constant_rank && v.first.involutive) {
    v.kind = GoodnessKind::First;
  } else {
    v.kind = GoodnessKind::Inconclusive;
    v.failure = v.first.constant_rank ? "restricted distribution is not involutive near p"
                                      : "restricted distribution has non-constant rank near p";
  }
  return v;
}

// ---------------------------------------------------------------------------
// Second criterion

GoodnessVerdict good_second_kind(const ControlSystem& sys, const Point& p,
                                 const Stratification& strat, const CriteriaConfig& cfg) {
  GoodnessVerdict v;
  v.at = p;
  const StratumReport& st = strat.stratum_of(p);
  v.stratum_index = st.index;
  v.stratum_depth = st.depth;
  v.closure_rank = st.closure_rank;
  if (st.depth != 2) {
    v.failure = "stratum depth is " + std::to_string(st.depth) + ", criterion needs 2";
    return v;
  }

  Domain local = local_domain(strat.dii.domain, p, cfg.local_box_frac);
  SecondaryConfig scfg = secondary_cfg(cfg);
  AdaptedTable full = adapted_generators(sys, &local, scfg, strat.dii.restriction);
  if (!full.certified) {
    v.failure = "no certified adapted table near p: " + full.diagnostic;
    return v;
  }

  // greedy spanning set at p: adapted generators first
  const int want = st.closure_rank;
  std::vector<VectorField> span_set;
  auto rank_now = [&]() { return pointwise_rank(span_set, p, sys.params, cfg.tol); };
  int current = 0;
  for (const auto& e : full.entries) {
    span_set.push_back(e.field);
    int r = rank_now();
    if (r > current) {
      current = r;
      v.type_a.push_back(e.label);
    } else {
      span_set.pop_back();
    }
    if (current == want) break;
  }

  if (current < want) {
    // brackets of sub-distribution adapted generators against full adapted
    // generators, for controls whose sub-distribution is first-kind good at p
    for (int beta = 1; beta <= sys.m && current < want; ++beta) {
      GeneratorSet sub = sub_distribution(sys, beta, &local, scfg, strat.dii.restriction);
      if (sub.reached_cap) continue;
      Stratification sub_strat = stratify_family(sub, local, strata_cfg(cfg));
      const StratumReport* sub_st = nullptr;
      try {
        sub_st = &sub_strat.stratum_of(p);
      } catch (const std::logic_error&) {
        continue;
      }
      FirstKindEvidence sub_ev =
          first_kind_for(sub.fields(), p, sub_st->predicate, sub.restriction, local, sys.params,
                         cfg, 100 + beta);
      if (!(sub_ev.constant_rank && sub_ev.involutive)) continue;

      for (const auto& s : sub.gens) {
        for (const auto& f : full.entries) {
          if (current == want) break;
          VectorField Z = lie_bracket(s.field, f.field);
          if (Z.is_structurally_zero()) continue;
          span_set.push_back(Z);
          int r = rank_now();
          if (r > current) {
            current = r;
            TypeBWitness w;
            w.sub_label = s.label;
            w.full_label = f.field.label;  // chain-style name; f.label is the table slot
            w.bracket_label = Z.label;
            w.beta = beta;
            w.bracket = Z;
            w.sub_first_kind = sub_ev;
            w.sub_stratum_index = sub_st->index;
            v.type_b.push_back(std::move(w));
          } else {
            span_set.pop_back();
          }
        }
        if (current == want) break;
      }
    }
  }

  if (current == want && !v.type_b.empty()) {
    v.kind = GoodnessKind::Second;
  } else if (current == want) {
    v.failure = "adapted generators span alone; no type-(b) bracket involved";
  } else {
    v.failure = "no spanning set of rank " + std::to_string(want) +
                " from adapted generators and sub-distribution brackets at p";
  }
  return v;
}

// ---------------------------------------------------------------------------
// Kalman test

KalmanResult kalman(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows())
    throw std::invalid_argument("kalman: inconsistent matrix dimensions");
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  KalmanResult res;
  Eigen::MatrixXd block = B;
  Eigen::MatrixXd stacked(n, n * m);
  for (int l = 0; l < n; ++l) {
    stacked.middleCols(l * m, m) = block;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked.leftCols((l + 1) * m));
    const auto& sv = svd.singularValues();
    double threshold = 1e-10 * std::max(1.0, sv.size() ? sv(0) : 0.0);
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) > threshold) ++r;
    res.rank_sequence.push_back(r);
    block = A * block;
  }
  res.n_max = res.rank_sequence.empty() ? 0 : res.rank_sequence.back();
  res.controllable = (res.n_max == n);
  return res;
}

// ---------------------------------------------------------------------------
// Equilibria

EquilibriaResult equilibria(const ControlSystem& sys, const std::vector<double>& q0,
                            const CriteriaConfig& cfg) {
  sys.validate();
  if (static_cast<int>(q0.size()) != sys.n)
    throw std::invalid_argument("equilibria: q0 has wrong dimension");
  Chart c = sys.chart();

  // refuse time-dependent dynamics at q0
  for (int i = 0; i < sys.n; ++i) {
    Expr dt = diff(sys.f[i], c.t_index());
    for (int j = 1; j <= sys.n; ++j) {
      Rat r(static_cast<long long>(std::llround(q0[j - 1] * 1e9)), 1000000000LL);
      dt = simplify(substitute(dt, c.q_index(j), Expr::rational(r)));
    }
    if (!is_zero(dt, sys.domain, kZeroTestTrials, kZeroTestTol, sub_seed(cfg.seed, 50, i)))
      throw EquilibriaError("f" + std::to_string(i + 1) +
                            " depends on t at q0; no equilibrium analysis");
  }

  // compiled residual and Jacobian in the control variables
  std::vector<Compiled> F;
  std::vector<std::vector<Compiled>> J(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    F.emplace_back(sys.f[i], sys.params);
    for (int a = 1; a <= sys.m; ++a) J[i].emplace_back(diff(sys.f[i], c.w_index(a)), sys.params);
  }
  auto assemble = [&](const Eigen::VectorXd& w, Eigen::VectorXd& Fv, Eigen::MatrixXd& Jv) {
    std::vector<double> x(c.dim(), 0.0);
    for (int j = 1; j <= sys.n; ++j) x[c.q_index(j)] = q0[j - 1];
    for (int a = 1; a <= sys.m; ++a) x[c.w_index(a)] = w(a - 1);
    for (int i = 0; i < sys.n; ++i) {
      Fv(i) = F[i](x.data());
      for (int a = 0; a < sys.m; ++a) Jv(i, a) = J[i][a](x.data());
    }
  };

  // uniform grid of starts over K (plus the centre and zero when inside)
  std::vector<Eigen::VectorXd> starts;
  int per_axis = std::max(2, static_cast<int>(std::ceil(
                                  std::pow(static_cast<double>(cfg.newton_starts),
                                           1.0 / static_cast<double>(sys.m)))));
  std::vector<int> idx(sys.m, 0);
  for (;;) {
    Eigen::VectorXd w(sys.m);
    for (int a = 0; a < sys.m; ++a) {
      double lo = sys.K[a].lo, hi = sys.K[a].hi;
      w(a) = lo + (hi - lo) * (idx[a] + 0.5) / per_axis;
    }
    starts.push_back(w);
    int a = 0;
    while (a < sys.m && ++idx[a] == per_axis) idx[a++] = 0;
    if (a == sys.m) break;
  }
  {
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.m);
    bool inside = true;
    for (int a = 0; a < sys.m; ++a)
      if (!(sys.K[a].lo < 0.0 && 0.0 < sys.K[a].hi)) inside = false;
    if (inside) starts.push_back(zero);
  }

  EquilibriaResult out;
  out.starts = static_cast<int>(starts.size());
  out.residual_tol = cfg.newton_residual;
  Eigen::VectorXd Fv(sys.n);
  Eigen::MatrixXd Jv(sys.n, sys.m);
  for (const auto& s : starts) {
    Eigen::VectorXd w = s;
    assemble(w, Fv, Jv);
    double res = Fv.norm();
    for (int it = 0; it < cfg.newton_iters && res >= cfg.newton_residual; ++it) {
      Eigen::VectorXd step =
          Jv.completeOrthogonalDecomposition().solve(Fv);
      if (!step.allFinite()) break;
      double lambda = 1.0;
      bool improved = false;
      for (int h = 0; h < 12; ++h, lambda *= 0.5) {
        Eigen::VectorXd cand = w - lambda * step;
        for (int a = 0; a < sys.m; ++a)
          cand(a) = std::clamp(cand(a), sys.K[a].lo, sys.K[a].hi);
        assemble(cand, Fv, Jv);
        double cres = Fv.norm();
        if (cres < res) {
          w = cand;
          res = cres;
          improved = true;
          break;
        }
      }
      if (!improved) break;
      assemble(w, Fv, Jv);
      res = Fv.norm();
    }
    if (res < cfg.newton_residual) {
      bool interior = true;
      for (int a = 0; a < sys.m; ++a)
        if (!(w(a) > sys.K[a].lo + 1e-9 && w(a) < sys.K[a].hi - 1e-9)) interior = false;
      if (!interior) continue;
      bool dup = false;
      for (const auto& e : out.points) {
        double dist = 0.0;
        for (int a = 0; a < sys.m; ++a) dist += (e.w[a] - w(a)) * (e.w[a] - w(a));
        if (std::sqrt(dist) < 1e-6) {
          dup = true;
          break;
        }
      }
      if (!dup) {
        Equilibrium e;
        e.w.assign(w.data(), w.data() + sys.m);
        e.residual = res;
        out.points.push_back(std::move(e));
      }
    }
  }
  std::sort(out.points.begin(), out.points.end(), [](const Equilibrium& a, const Equilibrium& b) {
    double na = 0, nb = 0;
    for (double x : a.w) na += x * x;
    for (double x : b.w) nb += x * x;
    return na < nb;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Hyper-accessibility and STLC

SystemVerdict hyper_accessibility(const ControlSystem& sys, const Stratification& strat,
                                  const CriteriaConfig& cfg) {
  SystemVerdict out;
  out.n = sys.n;
  bool all_good = true;
  bool pi_full = true;
  auto closure_fields = strat.closure.fields();

  for (const auto& st : strat.strata) {
    StratumGoodness sg;
    sg.stratum_index = st.index;

    SampleRestriction r = st.predicate.restriction();
    for (int v : strat.dii.restriction.pinned_zero)
      if (std::find(r.pinned_zero.begin(), r.pinned_zero.end(), v) == r.pinned_zero.end())
        r.pinned_zero.push_back(v);
    for (const auto& a : strat.dii.restriction.avoid_all_zero) r.avoid_all_zero.push_back(a);
    auto pts = rank_sample_batch(closure_fields, strat.dii.domain, cfg.goodness_points,
                                 sub_seed(cfg.seed, 60, st.index), r);
    for (const auto& probe : sys.probes) {
      Point p{probe};
      if (st.predicate.contains(p)) pts.push_back(p);
    }

    sg.pi_q_rank = 0;
    bool stratum_pi_full = true;
    for (const auto& p : pts) {
      int pq = pi_q_rank(closure_fields, p, sys.params, cfg.tol);
      sg.pi_q_rank = std::max(sg.pi_q_rank, pq);
      if (pq != sys.n) stratum_pi_full = false;

      GoodnessVerdict gv = good_first_kind(sys, p, strat, cfg);
      if (gv.kind != GoodnessKind::First) gv = good_second_kind(sys, p, strat, cfg);
      switch (gv.kind) {
        case GoodnessKind::First: ++sg.first_kind; break;
        case GoodnessKind::Second: ++sg.second_kind; break;
        case GoodnessKind::Inconclusive:
          ++sg.inconclusive;
          all_good = false;
          break;
      }
      ++sg.points_checked;
      sg.verdicts.push_back(std::move(gv));
    }
    sg.pi_q_full = stratum_pi_full;
    if (!stratum_pi_full) pi_full = false;
    out.strata.push_back(std::move(sg));
  }

  out.all_points_good = all_good;
  out.pi_q_full_everywhere = pi_full;
  out.hyper_accessible =
      (all_good && pi_full) ? Verdict3::Established : Verdict3::NotEstablished;
  if (out.hyper_accessible == Verdict3::NotEstablished) {
    out.note = all_good ? "projection rank below n on some stratum"
                        : "some sampled points are not certified good";
  }
  return out;
}

SystemVerdict hyper_accessibility(const ControlSystem& sys, const Domain* d,
                                  const CriteriaConfig& cfg) {
  Stratification strat = stratify(sys, d, strata_cfg(cfg));
  return hyper_accessibility(sys, strat, cfg);
}

StlcVerdict stlc_at(const ControlSystem& sys, const std::vector<double>& q0,
                    const CriteriaConfig& cfg) {
  StlcVerdict out;
  out.q0 = q0;
  Chart c = sys.chart();
  Domain box = sys.domain;
  for (int j = 1; j <= sys.n; ++j) {
    box.box[c.q_index(j)] = {q0[j - 1] - cfg.stlc_box_halfwidth,
                             q0[j - 1] + cfg.stlc_box_halfwidth};
  }
  out.hyper = hyper_accessibility(sys, &box, cfg);
  out.equilibria = equilibria(sys, q0, cfg);
  if (out.hyper.hyper_accessible == Verdict3::Established && !out.equilibria.points.empty()) {
    out.stlc = Verdict3::Established;
  } else {
    out.stlc = Verdict3::NotEstablished;
    out.note = out.equilibria.points.empty() ? "no equilibrium control at q0"
                                             : "hyper-accessibility not established near q0";
  }
  return out;
}

}  // namespace ctrl
