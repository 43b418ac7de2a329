#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gatherplan/collector_plan.hpp"

namespace gatherplan {

struct ConfigEvaluation {
  SegMethod method = SegMethod::BAP;
  int n_c = 0;
  bool feasible = false;
  double est_t_refresh = 0.0;  // time units
  double est_n_goals = 0.0;    // goals per cycle
  double t_norm = 0.0;
  double n_norm = 0.0;
  double utility = -1.0;       // -1 marks an infeasible configuration
};

struct SweepResult {
  std::vector<ConfigEvaluation> evaluations;  // (method, n_c) in sweep order
  int best = -1;
  double alpha = 0.5;
  double beta = 0.5;
};

// Closed-form mission estimates for an assembled plan.
// n_c >= 1: refresh = mean over collectors of (period/2 + geodesic time from
// the route's halfway cell to the OC) plus half the mean worker residence
// (estimate_worker_time); goals = per segment the largest g <= k whose L-bar
// tour fits the worker budget (collector period minus the tau*k transfer
// reserve).
// n_c = 0: refresh = mean worker out-and-back tour (a goal requested at the
// cycle start reaches the OC when the full tour ends); goals analogous, with
// the cycle set by the slowest worker.
std::pair<double, double> estimate_config(const Scenario& sc, const DeploymentPlan& plan);

// Min-max across the feasible evaluations: t_norm = (t - min)/(max - min),
// 0 when all equal; n_norm likewise but 1 when all equal.
void normalize(std::vector<ConfigEvaluation>& evals);

// U = alpha*(1 - t_norm) + beta*n_norm
double utility(double t_norm, double n_norm, double alpha, double beta);

// Evaluate every (method, n_c <= max_collectors) pair, normalize, score, and
// pick the argmax (ties: smaller n_c, then BAP < PAP < RAP). Configurations
// that fail to assemble score U = -1. max_collectors -1 means min(8, N-1).
// GATHERPLAN_THREADS caps the parallel fan-out (0 or unset = hardware).
SweepResult sweep(const Scenario& sc, const std::vector<SegMethod>& methods,
                  int max_collectors = -1, double alpha = 0.5, double beta = 0.5);

// Re-assemble the winning configuration with its estimate and utility fields
// filled in; deterministic, so it is exactly the plan the sweep scored.
DeploymentPlan assemble_best(const Scenario& sc, const SweepResult& result);

// One row per evaluation: method, n_c, feasibility, raw and normalized
// metrics, utility.
std::string sweep_to_csv(const SweepResult& result);

}  // namespace gatherplan
