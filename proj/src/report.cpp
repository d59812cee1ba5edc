#include "ctrl/report.hpp"

#include <algorithm>

namespace ctrl {

CriteriaConfig AnalyzeOptions::criteria() const {
  CriteriaConfig c;
  c.goodness_points = goodness_points;
  c.span_trials = span_trials;
  c.rank_trials = rank_trials;
  c.seed = seed;
  c.tol = tol;
  c.max_bracket_depth = max_bracket_depth;
  return c;
}

StrataConfig AnalyzeOptions::strata() const {
  StrataConfig s;
  s.max_bracket_depth = max_bracket_depth;
  s.span_trials = span_trials;
  s.rank_trials = rank_trials;
  s.seed = seed;
  s.tol = tol;
  return s;
}

SecondaryConfig AnalyzeOptions::secondary() const {
  SecondaryConfig s;
  s.span_trials = span_trials;
  s.seed = seed;
  s.tol = tol;
  return s;
}

namespace {

json point_json(const Point& p) { return json(p.x); }

json field_json(const VectorField& f, const Chart& chart) {
  json comps = json::array();
  for (const auto& c : f.comp) comps.push_back(to_string(c, chart));
  return json{{"label", f.label}, {"components", comps}};
}

json span_json(const SpanTest& t) {
  json j{{"in_span", t.in_span}, {"trials", t.trials}, {"seed", t.seed}};
  if (!t.in_span) {
    j["witness"] = t.witness.x;
    j["rank_without"] = t.rank_without;
    j["rank_with"] = t.rank_with;
  }
  return j;
}

json prov_entry(const std::string& op, uint64_t seed, int trials, double tol) {
  return json{{"op", op}, {"seed", seed}, {"trials", trials}, {"tol", tol}};
}

json goodness_json(const GoodnessVerdict& v) {
  json j;
  j["point"] = v.at.x;
  j["stratum"] = v.stratum_index;
  j["kind"] = to_string(v.kind);
  if (v.first.samples > 0) {
    json f{{"constant_rank", v.first.constant_rank},
           {"rank", v.first.rank},
           {"involutive", v.first.involutive},
           {"samples", v.first.samples}};
    if (!v.first.involutivity.involutive) {
      f["offending_pair"] = json::array({v.first.involutivity.pair_i, v.first.involutivity.pair_j});
    }
    j["first_criterion"] = f;
  }
  if (v.kind == GoodnessKind::Second) {
    json b = json::array();
    for (const auto& w : v.type_b) {
      b.push_back(json{{"bracket", w.bracket_label},
                       {"sub_generator", w.sub_label},
                       {"full_generator", w.full_label},
                       {"beta", w.beta},
                       {"sub_stratum", w.sub_stratum_index},
                       {"sub_first_kind_rank", w.sub_first_kind.rank}});
    }
    j["second_criterion"] = json{{"stratum_depth", v.stratum_depth},
                                 {"closure_rank", v.closure_rank},
                                 {"type_a", v.type_a},
                                 {"type_b", b}};
  }
  if (v.kind == GoodnessKind::Inconclusive) j["failure"] = v.failure;
  return j;
}

}  // namespace

json system_echo(const LoadedSystem& ls) {
  const ControlSystem& sys = ls.system;
  json j;
  j["name"] = sys.name;
  j["n"] = sys.n;
  j["m"] = sys.m;
  j["f"] = ls.f_text;
  json K = json::array();
  for (const auto& k : sys.K) K.push_back(json::array({k.lo, k.hi}));
  j["K"] = K;
  j["params"] = sys.params;
  json box = json::array();
  for (const auto& b : sys.domain.box) box.push_back(json::array({b[0], b[1]}));
  j["domain"] = box;
  json probes = json::array();
  for (const auto& p : sys.probes) probes.push_back(p);
  j["probes"] = probes;
  if (!ls.note.empty()) j["note"] = ls.note;
  return j;
}

json generators_section(const GeneratorSet& gens, const Chart& chart) {
  json j;
  json list = json::array();
  for (const auto& g : gens.gens) {
    json e = field_json(g.field, chart);
    e["beta"] = g.beta;
    e["depth"] = g.depth;
    if (g.depth > 0) e["keep_evidence"] = span_json(g.keep_evidence);
    list.push_back(std::move(e));
  }
  j["accepted"] = list;
  json dropped = json::array();
  for (const auto& d : gens.dropped) {
    json e{{"label", d.label}, {"beta", d.beta}, {"depth", d.depth}};
    if (d.structurally_zero)
      e["reason"] = "structurally zero";
    else {
      e["reason"] = "in span of accepted generators";
      e["span_evidence"] = span_json(d.span);
    }
    dropped.push_back(std::move(e));
  }
  j["dropped"] = dropped;
  j["reached_cap"] = gens.reached_cap;
  return j;
}

json strata_section(const Stratification& strat, const Chart& chart) {
  json j;
  json closure = json::array();
  for (const auto& e : strat.closure.fields_by_depth) {
    json f = field_json(e.field, chart);
    f["depth"] = e.depth;
    closure.push_back(std::move(f));
  }
  j["closure"] = json{{"fields", closure},
                      {"generic_rank", strat.closure.profile.generic},
                      {"min_rank", strat.closure.profile.min_observed},
                      {"reached_cap", strat.closure.reached_cap}};
  if (!strat.closure.diagnostic.empty()) j["closure"]["diagnostic"] = strat.closure.diagnostic;

  json drops = json::array();
  for (const auto& s : strat.drops.sets) {
    drops.push_back(json{{"predicate", s.predicate.text()},
                         {"rank", s.rank_on_set},
                         {"source", s.source == DropSet::Source::Minors ? "minors" : "sampled"}});
  }
  j["closure_rank_drops"] = drops;
  if (!strat.drops.minors.empty()) j["nontrivial_minors"] = strat.drops.minors;

  json strata = json::array();
  for (const auto& s : strat.strata) {
    json e{{"index", s.index},
           {"predicate", s.predicate.text()},
           {"dii_rank", s.dii_rank},
           {"closure_rank", s.closure_rank},
           {"depth", s.depth},
           {"leaf_invariant", s.leaf_invariant},
           {"rank_consistent", s.rank_consistent}};
    json w = json::array();
    for (const auto& p : s.witnesses) w.push_back(point_json(p));
    e["witnesses"] = w;
    strata.push_back(std::move(e));
  }
  j["strata"] = strata;
  return j;
}

json adapted_section(const AdaptedTable& table, const Chart& chart) {
  json j;
  j["certified"] = table.certified;
  if (!table.certified) {
    j["diagnostic"] = table.diagnostic;
    return j;
  }
  j["nu"] = table.nu;
  j["R"] = table.R;
  j["strict_triangular"] = table.strict_triangular;
  json entries = json::array();
  for (const auto& e : table.entries) {
    json f = field_json(e.field, chart);
    f["slot"] = e.label;
    f["ell"] = e.ell;
    f["a"] = e.a;
    f["j"] = e.j;
    f["beta"] = e.beta;
    entries.push_back(std::move(f));
  }
  j["entries"] = entries;
  return j;
}

json verdicts_section(const SystemVerdict& hyper, const std::vector<StlcVerdict>& stlc) {
  json j;
  json per_stratum = json::array();
  for (const auto& sg : hyper.strata) {
    json e{{"stratum", sg.stratum_index},
           {"points_checked", sg.points_checked},
           {"first_kind", sg.first_kind},
           {"second_kind", sg.second_kind},
           {"inconclusive", sg.inconclusive},
           {"pi_q_rank", sg.pi_q_rank},
           {"pi_q_full", sg.pi_q_full}};
    json verdicts = json::array();
    for (const auto& v : sg.verdicts) verdicts.push_back(goodness_json(v));
    e["points"] = verdicts;
    per_stratum.push_back(std::move(e));
  }
  j["goodness"] = per_stratum;
  j["essentially_good_sampled"] = hyper.all_points_good;
  j["pi_q_full_everywhere"] = hyper.pi_q_full_everywhere;
  j["hyper_accessible"] = to_string(hyper.hyper_accessible);
  if (!hyper.note.empty()) j["hyper_note"] = hyper.note;

  json stlc_list = json::array();
  for (const auto& s : stlc) {
    json e{{"q0", s.q0}, {"stlc", to_string(s.stlc)}};
    json eq = json::array();
    for (const auto& p : s.equilibria.points)
      eq.push_back(json{{"w", p.w}, {"residual", p.residual}});
    e["equilibria"] = eq;
    e["equilibria_starts"] = s.equilibria.starts;
    if (!s.note.empty()) e["note"] = s.note;
    stlc_list.push_back(std::move(e));
  }
  j["stlc"] = stlc_list;
  return j;
}

json analyze_report(const LoadedSystem& ls, const AnalyzeOptions& opt) {
  const ControlSystem& sys = ls.system;
  const Chart chart = sys.chart();
  json prov = json::array();
  json report;
  report["system"] = system_echo(ls);

  GeneratorSet dii = secondary_distribution(sys, nullptr, opt.secondary());
  prov.push_back(prov_entry("secondary_distribution", opt.seed, opt.span_trials, opt.tol));
  report["generators"] = generators_section(dii, chart);

  Stratification strat = stratify_family(dii, sys.domain, opt.strata());
  prov.push_back(prov_entry("stratify", opt.seed, opt.rank_trials, opt.tol));
  report["strata"] = strata_section(strat, chart);

  auto dii_drops = drop_locus(dii.fields(), sys.domain, opt.strata());
  prov.push_back(prov_entry("drop_locus(D^II)", opt.seed, opt.rank_trials, opt.tol));
  json dd = json::array();
  for (const auto& s : dii_drops.sets)
    dd.push_back(json{{"predicate", s.predicate.text()},
                      {"rank", s.rank_on_set},
                      {"source", s.source == DropSet::Source::Minors ? "minors" : "sampled"}});
  report["strata"]["dii_generic_rank"] = dii_drops.generic_rank;
  report["strata"]["dii_rank_drops"] = dd;

  // adapted generators are local, so one table per stratum (on a single
  // stratum this is the table on the full box)
  json adapted = json::array();
  for (const auto& st : strat.strata) {
    SampleRestriction r = st.predicate.restriction();
    AdaptedTable table = adapted_generators(sys, nullptr, opt.secondary(), r);
    prov.push_back(prov_entry("adapted_generators", opt.seed, opt.span_trials, opt.tol));
    json e = adapted_section(table, chart);
    e["stratum"] = st.index;
    e["valid_on"] = st.predicate.text();
    adapted.push_back(std::move(e));
  }
  report["adapted"] = adapted;

  SystemVerdict hyper = hyper_accessibility(sys, strat, opt.criteria());
  prov.push_back(prov_entry("hyper_accessibility", opt.seed, opt.goodness_points, opt.tol));

  // STLC at the probe states (deduplicated q-parts), else at the box centre
  std::vector<std::vector<double>> q0s;
  for (const auto& p : sys.probes) {
    std::vector<double> q0(p.begin() + 1, p.begin() + 1 + sys.n);
    bool dup = false;
    for (const auto& q : q0s) {
      double d = 0;
      for (int i = 0; i < sys.n; ++i) d += (q[i] - q0[i]) * (q[i] - q0[i]);
      if (d < 1e-16) dup = true;
    }
    if (!dup) q0s.push_back(std::move(q0));
  }
  if (q0s.empty()) {
    std::vector<double> centre(sys.n);
    for (int i = 1; i <= sys.n; ++i)
      centre[i - 1] = 0.5 * (sys.domain.box[chart.q_index(i)][0] + sys.domain.box[chart.q_index(i)][1]);
    q0s.push_back(std::move(centre));
  }
  std::vector<StlcVerdict> stlc;
  for (const auto& q0 : q0s) {
    try {
      stlc.push_back(stlc_at(sys, q0, opt.criteria()));
      prov.push_back(prov_entry("stlc_at", opt.seed, opt.goodness_points, opt.tol));
    } catch (const EquilibriaError& e) {
      StlcVerdict v;
      v.q0 = q0;
      v.stlc = Verdict3::NotEstablished;
      v.note = e.what();
      stlc.push_back(std::move(v));
    }
  }
  report["verdicts"] = verdicts_section(hyper, stlc);
  report["simulation"] = json::object();
  report["provenance"] =
      json{{"seed", opt.seed},
           {"tol", opt.tol},
           {"goodness_points", opt.goodness_points},
           {"span_trials", opt.span_trials},
           {"rank_trials", opt.rank_trials},
           {"max_bracket_depth", opt.max_bracket_depth},
           {"calls", prov}};
  return report;
}

json brackets_report(const LoadedSystem& ls, int beta, int max_depth, const AnalyzeOptions& opt) {
  const ControlSystem& sys = ls.system;
  const Chart chart = sys.chart();
  json report;
  report["system"] = system_echo(ls);
  GeneratorSet sub = sub_distribution(sys, beta, nullptr, opt.secondary());
  if (max_depth >= 0) {
    BracketChain chain = iterated_brackets(sys, beta, max_depth, nullptr, opt.secondary());
    json kept = json::array();
    for (const auto& [k, f] : chain.kept) {
      json e = field_json(f, chart);
      e["depth"] = k;
      kept.push_back(std::move(e));
    }
    report["chain"] = json{{"beta", beta}, {"kept", kept}, {"reached_cap", chain.reached_cap}};
  }
  report["generators"] = generators_section(sub, chart);
  report["provenance"] = json{{"seed", opt.seed}, {"span_trials", opt.span_trials}};
  return report;
}

json strata_report(const LoadedSystem& ls, const AnalyzeOptions& opt) {
  const ControlSystem& sys = ls.system;
  json report;
  report["system"] = system_echo(ls);
  Stratification strat = stratify(sys, nullptr, opt.strata());
  report["strata"] = strata_section(strat, sys.chart());
  auto dii_drops = drop_locus(strat.dii.fields(), sys.domain, opt.strata());
  json dd = json::array();
  for (const auto& s : dii_drops.sets)
    dd.push_back(json{{"predicate", s.predicate.text()},
                      {"rank", s.rank_on_set},
                      {"source", s.source == DropSet::Source::Minors ? "minors" : "sampled"}});
  report["strata"]["dii_generic_rank"] = dii_drops.generic_rank;
  report["strata"]["dii_rank_drops"] = dd;
  report["provenance"] = json{{"seed", opt.seed}, {"rank_trials", opt.rank_trials}};
  return report;
}

json goodness_report(const LoadedSystem& ls, const std::vector<Point>& points,
                     const AnalyzeOptions& opt) {
  const ControlSystem& sys = ls.system;
  json report;
  report["system"] = system_echo(ls);
  Stratification strat = stratify(sys, nullptr, opt.strata());
  json verdicts = json::array();
  for (const auto& p : points) {
    GoodnessVerdict v = good_first_kind(sys, p, strat, opt.criteria());
    if (v.kind != GoodnessKind::First) v = good_second_kind(sys, p, strat, opt.criteria());
    verdicts.push_back(goodness_json(v));
  }
  report["verdicts"] = json{{"points", verdicts}};
  report["provenance"] = json{{"seed", opt.seed}, {"goodness_points", opt.goodness_points}};
  return report;
}

json kalman_report(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  auto res = kalman(A, B);
  json j;
  j["n"] = static_cast<int>(A.rows());
  j["m"] = static_cast<int>(B.cols());
  j["rank_sequence"] = res.rank_sequence;
  j["n_max"] = res.n_max;
  j["controllable"] = res.controllable;
  return j;
}

SimulationOutput simulate_report(const LoadedSystem& ls, const SimulateOptions& opt) {
  const ControlSystem& sys = ls.system;
  const Chart chart = sys.chart();
  std::vector<double> q0 = opt.q0;
  if (q0.empty()) {
    q0.resize(sys.n);
    for (int i = 1; i <= sys.n; ++i)
      q0[i - 1] = 0.5 * (sys.domain.box[chart.q_index(i)][0] + sys.domain.box[chart.q_index(i)][1]);
  }
  SimulationOutput out;
  out.cloud = reach_cloud(sys, q0, opt.T, opt.samples, opt.segments, opt.seed, opt.dt);
  json sim;
  sim["q0"] = q0;
  sim["T"] = opt.T;
  sim["samples"] = opt.samples;
  sim["segments"] = opt.segments;
  sim["seed"] = opt.seed;
  sim["dt"] = out.cloud.dt;
  json mins = json::array(), maxs = json::array();
  for (int i = 0; i < sys.n; ++i) {
    double lo = 1e300, hi = -1e300;
    for (const auto& e : out.cloud.endpoints) {
      lo = std::min(lo, e[i]);
      hi = std::max(hi, e[i]);
    }
    mins.push_back(lo);
    maxs.push_back(hi);
  }
  sim["endpoint_min"] = mins;
  sim["endpoint_max"] = maxs;
  if (opt.r > 0) {
    auto rep = covers_ball_report(out.cloud, q0, opt.r, opt.delta);
    sim["covers_ball"] = json{{"r", opt.r},
                              {"delta", opt.delta},
                              {"covered", rep.covered},
                              {"grid_nodes", rep.grid_nodes},
                              {"misses", rep.misses}};
  }
  json report;
  report["system"] = system_echo(ls);
  report["simulation"] = sim;
  out.report = std::move(report);
  return out;
}

}  // namespace ctrl
