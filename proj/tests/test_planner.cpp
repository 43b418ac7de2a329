#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gatherplan/planner.hpp"
#include "gatherplan/sim.hpp"
#include "oracles.hpp"

using namespace gatherplan;

namespace {

Scenario corridor_sc(int n_agents, int width, double comm = 2.5, int k = 1, double tau = 1.0) {
  std::ostringstream text;
  text << "n_agents = " << n_agents << "\ncomm_range = " << comm
       << "\nagent_speed = 1\ncell_size = 1\ngoals_per_segment_per_cycle = " << k
       << "\ntransfer_time_per_goal = " << tau << "\nseed = 5\n\nO"
       << std::string(static_cast<size_t>(width) - 1, '.') << "\n";
  return load_scenario(text.str());
}

LabelField cells_as_segment(const GridMap& grid, const std::vector<CellPos>& cells) {
  LabelField lf{grid.width, grid.height,
                std::vector<int32_t>(static_cast<size_t>(grid.width) * grid.height, 0)};
  for (CellPos c : cells) lf.label[static_cast<size_t>(grid.index(c))] = 1;
  return lf;
}

std::vector<CellPos> line_cells(int from_col, int to_col) {
  std::vector<CellPos> cells;
  const int step = from_col <= to_col ? 1 : -1;
  for (int c = from_col;; c += step) {
    cells.push_back({c, 0});
    if (c == to_col) break;
  }
  return cells;
}

// same micro fixtures as the mission tests (9x1 two-worker direct-to-OC and
// 31x1 single-collector loop); estimates have closed forms on both
DeploymentPlan micro_a_plan(const Scenario& sc) {
  DeploymentPlan plan;
  plan.method = SegMethod::PAP;
  plan.n_c = 0;
  plan.n_w = 2;
  LabelField lf = cells_as_segment(sc.grid, {{6, 0}});
  lf.label[4] = 2;
  plan.segmentation = {SegMethod::PAP, 2, lf, {{6, 0}, {4, 0}}, true};
  plan.association = {-1, -1};
  return plan;
}

DeploymentPlan micro_b_plan(const Scenario& sc, int goal_col = 13) {
  DeploymentPlan plan;
  plan.method = SegMethod::PAP;
  plan.n_c = 1;
  plan.n_w = 1;
  plan.segmentation = {SegMethod::PAP, 1, cells_as_segment(sc.grid, {{goal_col, 0}}),
                       {{goal_col, 0}}, true};
  plan.groups = {{0, {1}, {{10, 0}}}};
  CollectorRoute route;
  route.id = 0;
  route.waypoints = {{0, 0}, {10, 0}, {0, 0}};
  route.legs = {line_cells(0, 10), line_cells(10, 0)};
  route.travel_time = 20.0;
  route.period = 21.0;
  plan.routes = {route};
  plan.association = {0};
  return plan;
}

double recomputed_utility(const ConfigEvaluation& e, double alpha, double beta) {
  return utility(e.t_norm, e.n_norm, alpha, beta);
}

}  // namespace

TEST_SUITE("utility") {
  TEST_CASE("boundary and arithmetic cases") {
    CHECK(utility(0.0, 1.0, 0.5, 0.5) == doctest::Approx(1.0));
    CHECK(utility(1.0, 0.0, 0.5, 0.5) == doctest::Approx(0.0));
    CHECK(utility(0.4, 0.7, 0.5, 0.5) == doctest::Approx(0.65));  // 0.5*0.6 + 0.5*0.7
  }
}

TEST_SUITE("normalize") {
  std::vector<ConfigEvaluation> three_evals() {
    std::vector<ConfigEvaluation> evals(3);
    for (int i = 0; i < 3; ++i) {
      evals[static_cast<size_t>(i)].method = SegMethod::BAP;
      evals[static_cast<size_t>(i)].n_c = i;
      evals[static_cast<size_t>(i)].feasible = true;
      evals[static_cast<size_t>(i)].est_t_refresh = 10.0 * (i + 1);  // 10, 20, 30
      evals[static_cast<size_t>(i)].est_n_goals = 5.0 * (i + 1);     // 5, 10, 15
    }
    return evals;
  }

  TEST_CASE("min-max maps {10,20,30} to {0,0.5,1}") {
    auto evals = three_evals();
    normalize(evals);
    CHECK(evals[0].t_norm == doctest::Approx(0.0));
    CHECK(evals[1].t_norm == doctest::Approx(0.5));
    CHECK(evals[2].t_norm == doctest::Approx(1.0));
    CHECK(evals[0].n_norm == doctest::Approx(0.0));
    CHECK(evals[1].n_norm == doctest::Approx(0.5));
    CHECK(evals[2].n_norm == doctest::Approx(1.0));
  }

  TEST_CASE("single evaluation degenerates to t_norm 0 and n_norm 1") {
    std::vector<ConfigEvaluation> evals(1);
    evals[0].feasible = true;
    evals[0].est_t_refresh = 17.0;
    evals[0].est_n_goals = 3.0;
    normalize(evals);
    CHECK(evals[0].t_norm == doctest::Approx(0.0));
    CHECK(evals[0].n_norm == doctest::Approx(1.0));
  }

  TEST_CASE("normalization preserves the ordering of raw values") {
    auto evals = three_evals();
    evals[0].est_t_refresh = 12.0;
    evals[1].est_t_refresh = 3.0;
    evals[2].est_t_refresh = 29.0;
    normalize(evals);
    CHECK(evals[1].t_norm < evals[0].t_norm);
    CHECK(evals[0].t_norm < evals[2].t_norm);
  }

  TEST_CASE("infeasible evaluations do not distort the pools") {
    auto evals = three_evals();
    ConfigEvaluation rogue;
    rogue.feasible = false;
    rogue.est_t_refresh = 1e9;
    rogue.est_n_goals = 1e9;
    evals.push_back(rogue);
    normalize(evals);
    CHECK(evals[0].t_norm == doctest::Approx(0.0));
    CHECK(evals[2].t_norm == doctest::Approx(1.0));
    CHECK(evals[2].n_norm == doctest::Approx(1.0));
  }

  TEST_CASE("affine rescaling of raw times leaves t_norm and U unchanged") {
    auto evals = three_evals();
    normalize(evals);
    std::vector<double> u_before;
    for (const auto& e : evals) u_before.push_back(recomputed_utility(e, 0.5, 0.5));

    auto scaled = three_evals();
    for (auto& e : scaled) e.est_t_refresh = 3.25 * e.est_t_refresh + 7.0;
    normalize(scaled);
    for (size_t i = 0; i < evals.size(); ++i) {
      CHECK(scaled[i].t_norm == doctest::Approx(evals[i].t_norm));
      CHECK(recomputed_utility(scaled[i], 0.5, 0.5) == doctest::Approx(u_before[i]));
    }
  }

  TEST_CASE("improving one configuration's raw numbers never lowers its U") {
    auto evals = three_evals();
    normalize(evals);
    const double u_old = recomputed_utility(evals[1], 0.5, 0.5);
    auto better = three_evals();
    better[1].est_t_refresh -= 5.0;
    better[1].est_n_goals += 2.0;
    normalize(better);
    CHECK(recomputed_utility(better[1], 0.5, 0.5) >= u_old - 1e-12);
  }
}

TEST_SUITE("estimate_config") {
  TEST_CASE("k = 0 estimates zero goals") {
    Scenario sc = corridor_sc(2, 9);
    sc.goals_per_segment_per_cycle = 0;  // below the file-format floor; direct struct
    const auto [t, n] = estimate_config(sc, micro_a_plan(sc));
    CHECK(n == doctest::Approx(0.0));
    CHECK(t > 0.0);
  }

  TEST_CASE("single 1-cell segment at the OC with tau 0 estimates zero refresh") {
    Scenario sc = corridor_sc(2, 9);
    sc.transfer_time_per_goal = 0.0;
    DeploymentPlan plan;
    plan.method = SegMethod::PAP;
    plan.n_c = 0;
    plan.n_w = 1;
    plan.segmentation = {SegMethod::PAP, 1, cells_as_segment(sc.grid, {{0, 0}}), {{0, 0}},
                         true};
    plan.association = {-1};
    const auto [t, n] = estimate_config(sc, plan);
    CHECK(t == doctest::Approx(0.0));
    CHECK(n == doctest::Approx(1.0));
  }

  TEST_CASE("direct-to-OC micro matches closed-form arithmetic") {
    // worker 0: Lbar 0, d 6 -> out-and-back 13; worker 1: d 4 -> 9.
    // cycle = 13; a goal requested at the cycle start reaches the OC when the
    // full out-and-back finishes, so refresh = mean(13, 9) = 11.
    const Scenario sc = corridor_sc(2, 9);
    const auto [t, n] = estimate_config(sc, micro_a_plan(sc));
    CHECK(t == doctest::Approx(11.0));
    CHECK(n == doctest::Approx(2.0));
  }

  TEST_CASE("collector-loop micro matches closed-form arithmetic") {
    // period/2 = 10.5; the route's halfway cell is the turnaround (10,0),
    // 10 units from the OC; residence ((0 + 3)/1 + 1)/2 = 2 -> 22.5; one
    // goal fits the 20-unit budget.
    const Scenario sc = corridor_sc(2, 31);
    const auto [t, n] = estimate_config(sc, micro_b_plan(sc));
    CHECK(t == doctest::Approx(22.5));
    CHECK(n == doctest::Approx(1.0));
  }
}

TEST_SUITE("sweep") {
  Scenario yard_sc() {
    // 20x20 yard with a cross of walls, 4 agents
    std::ostringstream text;
    text << "n_agents = 4\ncomm_range = 6\nagent_speed = 1\ncell_size = 1\n"
         << "goals_per_segment_per_cycle = 2\ntransfer_time_per_goal = 1\nseed = 11\n\n";
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 20; ++c) {
        const bool wall = (r == 10 && c > 3 && c < 16 && c != 9 && c != 10);
        if (r == 9 && c == 9)
          text << 'O';
        else
          text << (wall ? '#' : '.');
      }
      text << '\n';
    }
    return load_scenario(text.str());
  }

  TEST_CASE("full sweep dimensions, ordering, and best invariant") {
    const Scenario sc = yard_sc();
    const SweepResult res = sweep(sc, {SegMethod::BAP, SegMethod::PAP, SegMethod::RAP});
    // max_c = min(8, n_agents - 1) = 3 -> 4 collector counts x 3 methods
    REQUIRE(res.evaluations.size() == 12);
    size_t i = 0;
    for (SegMethod m : {SegMethod::BAP, SegMethod::PAP, SegMethod::RAP})
      for (int n_c = 0; n_c <= 3; ++n_c, ++i) {
        CHECK(res.evaluations[i].method == m);
        CHECK(res.evaluations[i].n_c == n_c);
      }
    REQUIRE(res.best >= 0);
    double u_max = -2.0;
    for (const auto& e : res.evaluations) {
      if (e.feasible) {
        CHECK(e.utility >= -1e-12);
        CHECK(e.utility <= 1.0 + 1e-12);
      } else {
        CHECK(e.utility == doctest::Approx(-1.0));
      }
      u_max = std::max(u_max, e.utility);
    }
    CHECK(res.evaluations[static_cast<size_t>(res.best)].utility == doctest::Approx(u_max));
    // tie rule: nothing earlier in (n_c, method-order) attains a strictly
    // equal utility before best
    for (int j = 0; j < res.best; ++j) {
      const auto& e = res.evaluations[static_cast<size_t>(j)];
      const auto& b = res.evaluations[static_cast<size_t>(res.best)];
      if (e.utility == doctest::Approx(b.utility)) {
        const bool later = e.n_c > b.n_c || (e.n_c == b.n_c && e.method > b.method);
        CHECK(later);
      }
    }
  }

  TEST_CASE("single-pair sweep selects that pair") {
    const Scenario sc = yard_sc();
    const SweepResult res = sweep(sc, {SegMethod::PAP}, 0);
    REQUIRE(res.evaluations.size() == 1);
    CHECK(res.best == 0);
    CHECK(res.evaluations[0].method == SegMethod::PAP);
    CHECK(res.evaluations[0].n_c == 0);
    CHECK(res.evaluations[0].t_norm == doctest::Approx(0.0));
    CHECK(res.evaluations[0].n_norm == doctest::Approx(1.0));
    CHECK(res.evaluations[0].utility == doctest::Approx(1.0));
  }

  TEST_CASE("thread count does not change the result") {
    const Scenario sc = yard_sc();
    setenv("GATHERPLAN_THREADS", "1", 1);
    const SweepResult serial = sweep(sc, {SegMethod::BAP, SegMethod::PAP, SegMethod::RAP});
    setenv("GATHERPLAN_THREADS", "4", 1);
    const SweepResult parallel = sweep(sc, {SegMethod::BAP, SegMethod::PAP, SegMethod::RAP});
    unsetenv("GATHERPLAN_THREADS");
    REQUIRE(serial.evaluations.size() == parallel.evaluations.size());
    CHECK(serial.best == parallel.best);
    for (size_t i = 0; i < serial.evaluations.size(); ++i) {
      CHECK(serial.evaluations[i].method == parallel.evaluations[i].method);
      CHECK(serial.evaluations[i].n_c == parallel.evaluations[i].n_c);
      CHECK(serial.evaluations[i].feasible == parallel.evaluations[i].feasible);
      CHECK(serial.evaluations[i].utility == doctest::Approx(parallel.evaluations[i].utility));
      CHECK(serial.evaluations[i].est_t_refresh ==
            doctest::Approx(parallel.evaluations[i].est_t_refresh));
    }
  }

  TEST_CASE("assemble_best reproduces the selected configuration") {
    const Scenario sc = yard_sc();
    const SweepResult res = sweep(sc, {SegMethod::BAP, SegMethod::PAP});
    const DeploymentPlan via_best = assemble_best(sc, res);
    const auto& chosen = res.evaluations[static_cast<size_t>(res.best)];
    DeploymentPlan direct = assemble_plan(sc, chosen.method, chosen.n_c);
    CHECK(via_best.est_t_refresh == doctest::Approx(chosen.est_t_refresh));
    CHECK(via_best.utility == doctest::Approx(chosen.utility));
    direct.est_t_refresh = via_best.est_t_refresh;
    direct.est_n_goals = via_best.est_n_goals;
    direct.utility = via_best.utility;
    CHECK(plan_to_json(via_best, "h") == plan_to_json(direct, "h"));
  }

  TEST_CASE("sweep CSV carries one row per evaluation") {
    const Scenario sc = yard_sc();
    const SweepResult res = sweep(sc, {SegMethod::PAP}, 1);
    const std::string csv = sweep_to_csv(res);
    CHECK(csv.find("method,n_c,feasible,est_t_refresh,est_n_goals,t_norm,n_norm,utility") !=
          std::string::npos);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows
  }
}
