#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "gatherplan/collector_plan.hpp"

namespace gatherplan {

struct GoalRequest {
  int id = -1;
  CellPos position;
  int segment = 0;
  long long t_request = 0;  // tick of the requesting cycle's start
};

// unbiased bounded draw; the stdlib distributions are not portable across
// implementations, this is
uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound);

// fresh engine for (mission seed, cycle); goal draws are a pure function of it
std::mt19937_64 cycle_rng(uint64_t seed, long long cycle);

// k goals per segment, sampled uniformly without replacement from the
// segment's cells (ascending segment order, ids from id_base)
std::vector<GoalRequest> generate_goals(std::mt19937_64& rng, const Segmentation& seg, int k,
                                        long long t_request, int id_base = 0);

struct SyncWindow {
  int worker_id = -1;
  int collector_id = -1;
  std::vector<CellPos> region;      // segment cells in comm during the window
  long long t_open = 0;             // ticks relative to the cycle start
  long long t_close = -1;
  long long required_contact = 0;   // ticks, ceil(tau * cargo / tick_time)
  bool feasible = false;
};

// collector's position at each of `ticks` ticks when it starts its loop at
// tick 0 and never dwells; the basis for sync windows
std::vector<CellPos> route_schedule(const CollectorRoute& route, long long ticks);

// longest contiguous contact interval between the segment and its collector's
// schedule (ties: earliest), with the in-comm region cells; cargo_size sets
// required_contact. Infeasible when the interval is shorter than required.
SyncWindow compute_sync_window(const Scenario& sc, const DeploymentPlan& plan, int segment_id,
                               int cargo_size);

struct WorkerCyclePlan {
  std::vector<int> goal_ids;     // tour order
  std::vector<CellPos> path;     // start .. end, inclusive
  CellPos end;
  bool window_missed = false;    // no region cell reachable before the deadline
};

// Cheapest-insertion tour from `start` to the nearest window cell whose exact
// walk fits before t_close - required_contact. A goal joins the tour only
// while total ticks stay within `budget_ticks` and the deadline; the bare
// start->end walk itself is exempt from the budget. When insertion strands
// goals on an instance of at most seven, an exact search over full-tour
// orders adopts the shortest feasible complete order instead.
WorkerCyclePlan plan_worker_cycle(const Scenario& sc, CellPos start,
                                  const std::vector<GoalRequest>& pending,
                                  const SyncWindow& window, long long budget_ticks);

// exact tick count to walk `path` under the movement rule: at most one cell
// per tick, one tick of budget accrues per tick, axis steps cost 1 budget and
// diagonal steps sqrt(2)
long long ticks_to_traverse(const std::vector<CellPos>& path);

enum class Role { Collector, Worker };

enum class Phase {
  // workers
  ToSegment,
  Gathering,
  ToSync,
  Transferring,
  Idle,
  // collectors
  Looping,
  Uploading,
};

struct CargoItem {
  int goal_id;
  long long t_gathered;
};

struct AgentState {
  int id = 0;
  Role role = Role::Worker;
  CellPos position;
  std::vector<CellPos> path;   // path[path_pos] == position
  size_t path_pos = 0;
  double move_budget = 0.0;
  std::vector<CargoItem> cargo;
  Phase phase = Phase::Idle;
  long long contact = 0;       // accumulated in-comm ticks toward a transfer
  // worker bookkeeping, reset each cycle
  std::vector<int> planned_goals;
  CellPos sync_end;
  bool fallback = false;       // rendezvous at the static meeting point
  bool handoff_done = false;

  bool moving() const { return path_pos + 1 < path.size(); }
};

struct GoalRecord {
  GoalRequest request;
  long long t_gathered = -1;
  long long t_delivered = -1;
};

struct MissionMetrics {
  std::vector<GoalRecord> goals;
  std::vector<int> delivered_per_cycle;
  long long ticks_per_cycle = 0;
  int n_cycles = 0;
  double tick_time = 0.0;
  double t_refresh_mean = 0.0;  // time units, over delivered goals
  double n_goals_rate = 0.0;    // delivered per cycle
};

std::string metrics_to_csv(const MissionMetrics& m);

// Deterministic mission state. Collectors are agents 0..n_c-1 in route order;
// worker n_c+i serves segment i+1. Everyone starts at the OC.
struct World {
  long long tick = 0;
  long long cycle = -1;
  std::vector<AgentState> agents;
  std::vector<GoalRequest> pending;   // this cycle's ungathered goals
  std::vector<GoalRecord> records;    // every goal ever requested
  std::vector<int> delivered_per_cycle;
};

class MissionSim {
 public:
  MissionSim(const Scenario& sc, const DeploymentPlan& plan, uint64_t seed,
             std::ostream* trace = nullptr);

  // one tick; runs the cycle-boundary bookkeeping first whenever
  // tick % ticks_per_cycle == 0
  void step();
  MissionMetrics run(int n_cycles);

  World& world() { return world_; }
  long long ticks_per_cycle() const { return ticks_per_cycle_; }
  const SyncWindow& window(int segment_id) const { return windows_.at(segment_id - 1); }

 private:
  void start_cycle(long long cycle);
  void move_agent(AgentState& agent);
  void run_transfers();
  void gather_at(AgentState& worker);
  void deliver(AgentState& agent);
  CellPos meeting_cell(int segment_id) const;
  void check_invariants() const;
  void trace_event(const std::string& line);

  Scenario sc_;
  DeploymentPlan plan_;
  uint64_t seed_;
  std::ostream* trace_;
  World world_;
  long long ticks_per_cycle_ = 0;
  double tick_time_ = 0.0;
  std::vector<std::vector<CellPos>> loops_;            // per collector
  std::vector<SyncWindow> windows_;                    // per segment, cargo-free base
  std::vector<std::vector<long long>> region_counts_;  // contact ticks per region cell
  std::vector<double> worker_budget_time_;        // per segment, time units
  int delivered_total_ = 0;
  int expired_total_ = 0;
};

MissionMetrics run_mission(const Scenario& sc, const DeploymentPlan& plan, int n_cycles,
                           uint64_t seed, std::ostream* trace = nullptr);

}  // namespace gatherplan
