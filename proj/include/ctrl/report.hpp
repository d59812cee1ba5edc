#pragma once

// Machine-readable reports: the full analysis pipeline and the per-command
// fragments, serialized as JSON with stable key order so that fixture
// reports are byte-stable under a fixed seed.

#include <json.hpp>

#include "ctrl/criteria.hpp"
#include "ctrl/reach.hpp"
#include "ctrl/systemfile.hpp"

namespace ctrl {

using json = nlohmann::ordered_json;

struct AnalyzeOptions {
  uint64_t seed = kDefaultSeed;
  double tol = kRankTol;
  int goodness_points = 16;
  int span_trials = kSpanTrials;
  int rank_trials = kRankTrials;
  int max_bracket_depth = kMaxBracketDepth;

  CriteriaConfig criteria() const;
  StrataConfig strata() const;
  SecondaryConfig secondary() const;
};

struct SimulateOptions {
  double T = 1.0;
  int samples = 1000;
  int segments = kDefaultSegments;
  uint64_t seed = kDefaultSeed;
  double dt = -1.0;
  std::vector<double> q0;  // empty: q-box centres
  double r = 0.0;          // > 0: run covers_ball with these
  double delta = 0.0;
};

json system_echo(const LoadedSystem&);
json generators_section(const GeneratorSet&, const Chart&);
json strata_section(const Stratification&, const Chart&);
json adapted_section(const AdaptedTable&, const Chart&);
json verdicts_section(const SystemVerdict&, const std::vector<StlcVerdict>&);

// Full pipeline: secondary -> strata -> adapted -> goodness/hyper -> STLC at
// the probe states.  Module failures become structured report entries.
json analyze_report(const LoadedSystem&, const AnalyzeOptions& = {});

json brackets_report(const LoadedSystem&, int beta, int max_depth = -1,
                     const AnalyzeOptions& = {});
json strata_report(const LoadedSystem&, const AnalyzeOptions& = {});
json goodness_report(const LoadedSystem&, const std::vector<Point>& points,
                     const AnalyzeOptions& = {});
json kalman_report(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

struct SimulationOutput {
  json report;
  ReachCloud cloud;
};
SimulationOutput simulate_report(const LoadedSystem&, const SimulateOptions&);

}  // namespace ctrl
