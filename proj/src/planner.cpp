#include "gatherplan/planner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "gatherplan/fmm.hpp"

namespace gatherplan {

namespace {

// largest g <= k whose tour time fits the budget under the L-bar model
int feasible_goals(double lbar, double tour_fixed, double budget, const Scenario& sc) {
  for (int g = sc.goals_per_segment_per_cycle; g >= 0; --g) {
    const double tour = (g * lbar + tour_fixed) / sc.agent_speed;
    if (tour <= budget + 1e-9) return g;
  }
  return 0;
}

int sweep_threads(size_t jobs) {
  unsigned n = 0;
  if (const char* env = std::getenv("GATHERPLAN_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed > 0) n = static_cast<unsigned>(parsed);
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return static_cast<int>(std::min<size_t>(n, jobs));
}

}  // namespace

std::pair<double, double> estimate_config(const Scenario& sc, const DeploymentPlan& plan) {
  const double tau = sc.transfer_time_per_goal;
  const int k = sc.goals_per_segment_per_cycle;
  const double v = sc.agent_speed;

  if (plan.n_c == 0) {
    // out-and-back tours to the OC; the cycle is set by the slowest worker
    std::vector<double> out(static_cast<size_t>(plan.n_w), 0.0);
    std::vector<double> lbars(static_cast<size_t>(plan.n_w), 0.0);
    std::vector<double> dists(static_cast<size_t>(plan.n_w), 0.0);
    double cycle = 0.0, refresh_sum = 0.0;
    for (int s = 1; s <= plan.n_w; ++s) {
      auto [lbar, d] = segment_tour_terms(sc, plan.segmentation, s, sc.oc);
      lbars[static_cast<size_t>(s) - 1] = lbar;
      dists[static_cast<size_t>(s) - 1] = d;
      out[static_cast<size_t>(s) - 1] = (k * lbar + 2.0 * d) / v + tau * k;
      cycle = std::max(cycle, out[static_cast<size_t>(s) - 1]);
      // a goal is requested at the cycle start and reaches the OC when its
      // worker finishes the whole out-and-back tour
      refresh_sum += out[static_cast<size_t>(s) - 1];
    }
    double goals = 0.0;
    for (int s = 1; s <= plan.n_w; ++s)
      goals += feasible_goals(lbars[static_cast<size_t>(s) - 1],
                              2.0 * dists[static_cast<size_t>(s) - 1], cycle - tau * k, sc);
    return {plan.n_w > 0 ? refresh_sum / plan.n_w : 0.0, goals};
  }

  // half a loop until the last pickup plus the haul home from the route's
  // halfway point: period/2 + time(mid-route cell -> OC)
  const ArrivalField oc_field =
      fmm_solve(sc.grid, SpeedField::uniform(sc.grid), std::vector<CellPos>{sc.oc}).arrival;
  double collector_term = 0.0;
  const double h = sc.grid.cell_size;
  for (const CollectorRoute& route : plan.routes) {
    const double half_len = 0.5 * route.travel_time * v;
    CellPos mid = sc.oc;
    double walked = 0.0;
    bool found = false;
    for (const auto& leg : route.legs) {
      for (size_t i = 0; i + 1 < leg.size() && !found; ++i) {
        const CellPos a = leg[i], b = leg[i + 1];
        walked += (a.col != b.col && a.row != b.row) ? h * std::sqrt(2.0) : h;
        if (walked >= half_len) {
          mid = b;
          found = true;
        }
      }
      if (found) break;
    }
    collector_term += route.period / 2.0 + oc_field.at(mid) / v;
  }
  collector_term /= static_cast<double>(plan.n_c);

  double residence_sum = 0.0, goals = 0.0;
  for (const CollectorGroup& group : plan.groups) {
    const double budget = plan.routes[static_cast<size_t>(group.id)].period - tau * k;
    for (size_t mi = 0; mi < group.members.size(); ++mi) {
      const int s = group.members[mi];
      const CellPos meeting = group.meeting[mi];
      residence_sum += estimate_worker_time(sc, plan.segmentation, s, meeting) / 2.0;
      auto [lbar, d] = segment_tour_terms(sc, plan.segmentation, s, meeting);
      goals += feasible_goals(lbar, d, budget, sc);
    }
  }
  return {collector_term + residence_sum / plan.n_w, goals};
}

void normalize(std::vector<ConfigEvaluation>& evals) {
  double t_min = kInfTime, t_max = -kInfTime, n_min = kInfTime, n_max = -kInfTime;
  for (const ConfigEvaluation& e : evals) {
    if (!e.feasible) continue;
    t_min = std::min(t_min, e.est_t_refresh);
    t_max = std::max(t_max, e.est_t_refresh);
    n_min = std::min(n_min, e.est_n_goals);
    n_max = std::max(n_max, e.est_n_goals);
  }
  for (ConfigEvaluation& e : evals) {
    if (!e.feasible) continue;
    e.t_norm = t_max > t_min ? (e.est_t_refresh - t_min) / (t_max - t_min) : 0.0;
    e.n_norm = n_max > n_min ? (e.est_n_goals - n_min) / (n_max - n_min) : 1.0;
  }
}

double utility(double t_norm, double n_norm, double alpha, double beta) {
  return alpha * (1.0 - t_norm) + beta * n_norm;
}

SweepResult sweep(const Scenario& sc, const std::vector<SegMethod>& methods, int max_collectors,
                  double alpha, double beta) {
  if (methods.empty()) throw std::invalid_argument("sweep: no methods requested");
  if (max_collectors < 0) max_collectors = std::min(kMaxCollectors, sc.n_agents - 1);
  max_collectors = std::min(max_collectors, sc.n_agents - 1);

  SweepResult result;
  result.alpha = alpha;
  result.beta = beta;
  for (SegMethod m : {SegMethod::BAP, SegMethod::PAP, SegMethod::RAP}) {
    if (std::find(methods.begin(), methods.end(), m) == methods.end()) continue;
    for (int n_c = 0; n_c <= max_collectors; ++n_c) {
      ConfigEvaluation e;
      e.method = m;
      e.n_c = n_c;
      result.evaluations.push_back(e);
    }
  }

  std::atomic<size_t> next{0};
  auto evaluate = [&]() {
    for (size_t i = next.fetch_add(1); i < result.evaluations.size(); i = next.fetch_add(1)) {
      ConfigEvaluation& e = result.evaluations[i];
      try {
        const DeploymentPlan plan = assemble_plan(sc, e.method, e.n_c);
        std::tie(e.est_t_refresh, e.est_n_goals) = estimate_config(sc, plan);
        e.feasible = true;
      } catch (const std::exception&) {
        e.feasible = false;
      }
    }
  };
  const int n_threads = sweep_threads(result.evaluations.size());
  if (n_threads <= 1) {
    evaluate();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(evaluate);
    for (std::thread& t : pool) t.join();
  }

  normalize(result.evaluations);
  for (ConfigEvaluation& e : result.evaluations)
    e.utility = e.feasible ? utility(e.t_norm, e.n_norm, alpha, beta) : -1.0;

  // argmax; ties prefer fewer collectors, then BAP < PAP < RAP — which is
  // exactly the evaluation order, so strict improvement suffices per method
  // block and across blocks we re-compare with the tie rule
  for (size_t i = 0; i < result.evaluations.size(); ++i) {
    if (result.best < 0) {
      result.best = static_cast<int>(i);
      continue;
    }
    const ConfigEvaluation& cur = result.evaluations[i];
    const ConfigEvaluation& best = result.evaluations[static_cast<size_t>(result.best)];
    const auto key = [](const ConfigEvaluation& e) {
      return std::make_tuple(-e.utility, e.n_c, static_cast<int>(e.method));
    };
    if (key(cur) < key(best)) result.best = static_cast<int>(i);
  }
  return result;
}

DeploymentPlan assemble_best(const Scenario& sc, const SweepResult& result) {
  if (result.best < 0 ||
      !result.evaluations[static_cast<size_t>(result.best)].feasible)
    throw ScenarioError("sweep selected no feasible configuration");
  const ConfigEvaluation& e = result.evaluations[static_cast<size_t>(result.best)];
  DeploymentPlan plan = assemble_plan(sc, e.method, e.n_c);
  plan.est_t_refresh = e.est_t_refresh;
  plan.est_n_goals = e.est_n_goals;
  plan.utility = e.utility;
  return plan;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "method,n_c,feasible,est_t_refresh,est_n_goals,t_norm,n_norm,utility\n";
  for (const ConfigEvaluation& e : result.evaluations)
    out << to_string(e.method) << ',' << e.n_c << ',' << (e.feasible ? 1 : 0) << ','
        << e.est_t_refresh << ',' << e.est_n_goals << ',' << e.t_norm << ',' << e.n_norm << ','
        << e.utility << '\n';
  return out.str();
}

}  // namespace gatherplan
