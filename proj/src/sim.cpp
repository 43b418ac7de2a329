#include "gatherplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace gatherplan {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr long long kFarTick = std::numeric_limits<long long>::max() / 4;

long long ceil_ticks(double x) {
  return static_cast<long long>(std::ceil(x - 1e-9));
}

double step_cost(CellPos a, CellPos b) {
  return (a.col != b.col && a.row != b.row) ? kSqrt2 : 1.0;
}

ArrivalField unit_solve(const GridMap& grid, CellPos source) {
  const SpeedField speed = SpeedField::uniform(grid);
  const CellPos sources[] = {source};
  return fmm_solve(grid, speed, sources).arrival;
}

std::string cargo_ids_json(const std::vector<CargoItem>& cargo) {
  std::string out = "[";
  for (size_t i = 0; i < cargo.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(cargo[i].goal_id);
  }
  return out + "]";
}

struct WindowBase {
  SyncWindow win;
  std::vector<long long> counts;  // in-comm ticks per region cell within the window
};

long long plan_cycle_ticks(const Scenario& sc, const DeploymentPlan& plan) {
  double longest = 0.0;
  if (plan.n_c > 0) {
    for (const CollectorRoute& route : plan.routes) longest = std::max(longest, route.period);
  } else {
    // out-and-back cadence: slowest worker's round trip from the OC through
    // its estimated gathering tour
    const ArrivalField from_oc = unit_solve(sc.grid, sc.oc);
    for (int s = 1; s <= plan.n_w; ++s) {
      const CellPos centroid = plan.segmentation.centroids[static_cast<size_t>(s) - 1];
      const double back = from_oc.at(centroid) / sc.agent_speed;
      longest = std::max(longest, estimate_worker_time(sc, plan.segmentation, s, sc.oc) + back);
    }
  }
  return std::max<long long>(1, ceil_ticks(longest / sc.tick_time()));
}

WindowBase window_base(const Scenario& sc, const DeploymentPlan& plan, int segment_id) {
  if (segment_id < 1 || segment_id > plan.n_w)
    throw std::invalid_argument("window_base: segment id out of range");
  const GridMap& grid = sc.grid;
  WindowBase base;
  base.win.worker_id = plan.n_c + segment_id - 1;
  base.win.collector_id = plan.association[static_cast<size_t>(segment_id) - 1];

  const int reach = static_cast<int>(std::ceil(sc.comm_range / grid.cell_size)) + 1;
  auto in_comm_disk = [&](CellPos center, auto&& visit) {
    for (int row = std::max(0, center.row - reach);
         row <= std::min(grid.height - 1, center.row + reach); ++row)
      for (int col = std::max(0, center.col - reach);
           col <= std::min(grid.width - 1, center.col + reach); ++col) {
        const CellPos q{col, row};
        if (grid.is_free(q) && in_comm(sc, center, q)) visit(q);
      }
  };

  if (base.win.collector_id < 0) {
    // upload straight to the OC: it never moves, so the window spans the cycle
    base.win.t_open = 0;
    base.win.t_close = kFarTick;
    base.win.feasible = true;
    in_comm_disk(sc.oc, [&](CellPos q) { base.win.region.push_back(q); });
    base.counts.assign(base.win.region.size(), kFarTick);
    return base;
  }

  const CollectorRoute& route = plan.routes[static_cast<size_t>(base.win.collector_id)];
  const long long ticks = plan_cycle_ticks(sc, plan);
  const std::vector<CellPos> sched = route_schedule(route, ticks);

  // ticks with the collector in comm of at least one segment cell
  std::vector<char> contact(static_cast<size_t>(ticks), 0);
  for (long long t = 0; t < ticks; ++t) {
    bool hit = false;
    in_comm_disk(sched[static_cast<size_t>(t)], [&](CellPos q) {
      hit = hit || plan.segmentation.labels.at(q) == segment_id;
    });
    contact[static_cast<size_t>(t)] = hit ? 1 : 0;
  }

  // longest contiguous run, earliest on ties
  long long best_a = 0, best_b = -1;
  for (long long t = 0; t < ticks;) {
    if (!contact[static_cast<size_t>(t)]) {
      ++t;
      continue;
    }
    long long a = t;
    while (t < ticks && contact[static_cast<size_t>(t)]) ++t;
    if (t - 1 - a > best_b - best_a) {
      best_a = a;
      best_b = t - 1;
    }
  }
  if (best_b < best_a) {
    base.win.t_open = 0;
    base.win.t_close = -1;
    base.win.feasible = false;
    return base;
  }
  base.win.t_open = best_a;
  base.win.t_close = best_b;
  base.win.feasible = true;

  // every free cell in comm of the collector at some window tick
  std::map<int, long long> counts;  // keyed by linear cell index
  for (long long t = best_a; t <= best_b; ++t)
    in_comm_disk(sched[static_cast<size_t>(t)], [&](CellPos q) { ++counts[grid.index(q)]; });
  for (const auto& [idx, n] : counts) {
    base.win.region.push_back(grid.cell(idx));
    base.counts.push_back(n);
  }
  return base;
}

SyncWindow apply_cargo(const WindowBase& base, int cargo_size, double tau, double tick_time) {
  SyncWindow win = base.win;
  win.required_contact = ceil_ticks(tau * cargo_size / tick_time);
  if (!base.win.feasible) return win;
  win.region.clear();
  const long long need = std::max<long long>(win.required_contact, 1);
  for (size_t i = 0; i < base.win.region.size(); ++i)
    if (base.counts[i] >= need) win.region.push_back(base.win.region[i]);
  win.feasible = win.t_close - win.t_open >= win.required_contact && !win.region.empty();
  return win;
}

}  // namespace

uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  const uint64_t limit = std::numeric_limits<uint64_t>::max() -
                         std::numeric_limits<uint64_t>::max() % bound;
  uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return draw % bound;
}

std::mt19937_64 cycle_rng(uint64_t seed, long long cycle) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(cycle), static_cast<uint32_t>(cycle >> 32)};
  return std::mt19937_64(seq);
}

std::vector<GoalRequest> generate_goals(std::mt19937_64& rng, const Segmentation& seg, int k,
                                        long long t_request, int id_base) {
  if (k < 0) throw std::invalid_argument("generate_goals: negative k");
  std::vector<GoalRequest> goals;
  if (k == 0) return goals;
  const LabelField& labels = seg.labels;
  std::vector<std::vector<CellPos>> cells(static_cast<size_t>(seg.n_w));
  for (int idx = 0; idx < labels.width * labels.height; ++idx) {
    const int32_t s = labels.label[static_cast<size_t>(idx)];
    if (s >= 1)
      cells[static_cast<size_t>(s) - 1].push_back({idx % labels.width, idx / labels.width});
  }
  int id = id_base;
  for (int s = 1; s <= seg.n_w; ++s) {
    std::vector<CellPos>& pool = cells[static_cast<size_t>(s) - 1];
    if (static_cast<size_t>(k) > pool.size())
      throw ScenarioError("generate_goals: k exceeds the area of segment " + std::to_string(s));
    for (int i = 0; i < k; ++i) {
      const uint64_t j = i + uniform_below(rng, pool.size() - static_cast<uint64_t>(i));
      std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
      goals.push_back({id++, pool[static_cast<size_t>(i)], s, t_request});
    }
  }
  return goals;
}

std::vector<CellPos> route_schedule(const CollectorRoute& route, long long ticks) {
  std::vector<CellPos> loop;
  for (const std::vector<CellPos>& leg : route.legs)
    loop.insert(loop.end(), leg.begin() + (loop.empty() ? 0 : 1), leg.end());
  if (loop.empty()) loop.push_back(route.waypoints.front());

  std::vector<CellPos> sched;
  sched.reserve(static_cast<size_t>(ticks));
  size_t pos = 0;
  double budget = 0.0;
  for (long long t = 0; t < ticks; ++t) {
    if (pos + 1 < loop.size()) {
      budget += 1.0;
      const double cost = step_cost(loop[pos], loop[pos + 1]);
      if (budget + 1e-9 >= cost) {
        budget -= cost;
        ++pos;
      }
    }
    sched.push_back(loop[pos]);
  }
  return sched;
}

SyncWindow compute_sync_window(const Scenario& sc, const DeploymentPlan& plan, int segment_id,
                               int cargo_size) {
  return apply_cargo(window_base(sc, plan, segment_id), cargo_size, sc.transfer_time_per_goal,
                     sc.tick_time());
}

long long ticks_to_traverse(const std::vector<CellPos>& path) {
  long long ticks = 0;
  double budget = 0.0;
  for (size_t i = 0; i + 1 < path.size();) {
    ++ticks;
    budget += 1.0;
    const double cost = step_cost(path[i], path[i + 1]);
    if (budget + 1e-9 >= cost) {
      budget -= cost;
      ++i;
    }
  }
  return ticks;
}

WorkerCyclePlan plan_worker_cycle(const Scenario& sc, CellPos start,
                                  const std::vector<GoalRequest>& pending,
                                  const SyncWindow& window, long long budget_ticks) {
  if (!window.feasible) throw std::invalid_argument("plan_worker_cycle: infeasible window");
  const GridMap& grid = sc.grid;
  const double h = grid.cell_size;
  const long long deadline = window.t_close - window.required_contact;

  WorkerCyclePlan plan;
  const ArrivalField from_start = unit_solve(grid, start);

  // end: nearest-first over region cells, taking the first whose exact
  // cell-by-cell walk makes the deadline; the continuous field can land just
  // under a tick boundary that the quantized walk then overshoots
  struct EndCandidate {
    long long est;
    int index;
    CellPos cell;
  };
  std::vector<EndCandidate> candidates;
  for (const CellPos& r : window.region) {
    if (!from_start.reached(r)) continue;
    const long long est = ceil_ticks(from_start.at(r) / h);
    if (est > deadline) continue;  // the quantized walk can only be longer
    candidates.push_back({est, grid.index(r), r});
  }
  std::sort(candidates.begin(), candidates.end(), [](const EndCandidate& a, const EndCandidate& b) {
    return std::tie(a.est, a.index) < std::tie(b.est, b.index);
  });
  bool found = false;
  CellPos end{};
  ArrivalField from_end;
  for (const EndCandidate& c : candidates) {
    ArrivalField field = unit_solve(grid, c.cell);
    const GeodesicPath bare = extract_path(field, start);
    if (ticks_to_traverse(bare.cells) > deadline) continue;
    found = true;
    end = c.cell;
    from_end = std::move(field);
    break;
  }
  if (!found) {
    plan.window_missed = true;
    plan.path = {start};
    plan.end = start;
    return plan;
  }
  plan.end = end;

  // geodesic fields per tour point: 0 = start, 1..n = goals, n+1 = end
  std::vector<CellPos> points = {start};
  std::vector<int> point_goal = {-1};
  for (const GoalRequest& g : pending) {
    if (!from_start.reached(g.position)) continue;  // unreachable goal: skip
    points.push_back(g.position);
    point_goal.push_back(g.id);
  }
  points.push_back(end);
  point_goal.push_back(-1);
  const size_t n_pts = points.size();

  std::vector<ArrivalField> fields;
  fields.reserve(n_pts);
  fields.push_back(from_start);
  for (size_t i = 1; i + 1 < n_pts; ++i) fields.push_back(unit_solve(grid, points[i]));
  fields.push_back(std::move(from_end));

  std::vector<std::vector<double>> dist(n_pts, std::vector<double>(n_pts, 0.0));
  for (size_t a = 0; a < n_pts; ++a)
    for (size_t b = 0; b < n_pts; ++b)
      dist[a][b] = (fields[a].at(points[b]) + fields[b].at(points[a])) / 2.0;

  std::vector<size_t> tour = {0, n_pts - 1};
  std::vector<char> used(n_pts, 0);

  auto build = [&](std::vector<CellPos>& path, std::vector<int>& ids) {
    path = {start};
    ids.clear();
    for (size_t i = 1; i < tour.size(); ++i) {
      if (point_goal[tour[i]] >= 0) ids.push_back(point_goal[tour[i]]);
      if (points[tour[i]] == path.back()) continue;
      const GeodesicPath leg = extract_path(fields[tour[i]], path.back());
      path.insert(path.end(), leg.cells.begin() + 1, leg.cells.end());
    }
  };

  // the bare walk to the region is exempt from the gathering budget; its
  // deadline fit was already proven during end selection
  build(plan.path, plan.goal_ids);

  // cheapest insertion: try candidates by added geodesic time and commit the
  // first whose real quantized walk stays within the budget and the deadline
  while (true) {
    std::vector<std::tuple<double, int, size_t, size_t>> options;  // added, goal id, point, pos
    for (size_t p = 1; p + 1 < n_pts; ++p) {
      if (used[p]) continue;
      for (size_t at = 1; at < tour.size(); ++at) {
        const size_t a = tour[at - 1], b = tour[at];
        options.emplace_back(dist[a][p] + dist[p][b] - dist[a][b], point_goal[p], p, at);
      }
    }
    std::sort(options.begin(), options.end());
    bool done = true;
    for (const auto& opt : options) {
      const size_t p = std::get<2>(opt);
      const size_t at = std::get<3>(opt);
      tour.insert(tour.begin() + static_cast<std::ptrdiff_t>(at), p);
      std::vector<CellPos> trial_path;
      std::vector<int> trial_ids;
      build(trial_path, trial_ids);
      const long long exact = ticks_to_traverse(trial_path);
      if (exact <= deadline && exact <= budget_ticks) {
        used[p] = 1;
        plan.path = std::move(trial_path);
        plan.goal_ids = std::move(trial_ids);
        done = false;
        break;
      }
      tour.erase(tour.begin() + static_cast<std::ptrdiff_t>(at));
    }
    if (done) break;
  }

  // rescue pass: insertion order can strand goals that a different full
  // ordering would fit, so small instances get an exact search over every
  // full-tour order, keeping the shortest feasible one
  const size_t n_goals = n_pts - 2;
  bool stranded = false;
  for (size_t p = 1; p + 1 < n_pts; ++p) stranded = stranded || !used[p];
  if (stranded && n_goals <= 7) {
    const long long limit = std::min(deadline, budget_ticks);
    std::vector<size_t> order(n_goals);
    std::iota(order.begin(), order.end(), size_t{1});
    std::vector<CellPos> best_path;
    std::vector<int> best_ids;
    long long best_exact = kFarTick;
    do {
      double bound = fields[order.front()].at(points[0]);
      for (size_t i = 0; i + 1 < order.size(); ++i)
        bound += fields[order[i + 1]].at(points[order[i]]);
      bound += fields[n_pts - 1].at(points[order.back()]);
      // geodesic legs under-run the walked cells; the slack keeps borderline
      // orders alive through the quantization
      if (ceil_ticks(bound * 0.95 / h) > std::min(limit, best_exact)) continue;
      tour.assign(1, 0);
      tour.insert(tour.end(), order.begin(), order.end());
      tour.push_back(n_pts - 1);
      std::vector<CellPos> trial_path;
      std::vector<int> trial_ids;
      build(trial_path, trial_ids);
      const long long exact = ticks_to_traverse(trial_path);
      if (exact <= limit && exact < best_exact) {
        best_exact = exact;
        best_path = std::move(trial_path);
        best_ids = std::move(trial_ids);
      }
    } while (std::next_permutation(order.begin(), order.end()));
    if (best_exact < kFarTick) {
      plan.path = std::move(best_path);
      plan.goal_ids = std::move(best_ids);
    }
  }
  return plan;
}

MissionSim::MissionSim(const Scenario& sc, const DeploymentPlan& plan, uint64_t seed,
                       std::ostream* trace)
    : sc_(sc), plan_(plan), seed_(seed), trace_(trace) {
  if (plan.n_c + plan.n_w != sc.n_agents)
    throw std::invalid_argument("mission: plan agent count does not match the scenario");
  tick_time_ = sc.tick_time();
  ticks_per_cycle_ = plan_cycle_ticks(sc, plan);

  loops_.resize(static_cast<size_t>(plan.n_c));
  for (int c = 0; c < plan.n_c; ++c) {
    std::vector<CellPos>& loop = loops_[static_cast<size_t>(c)];
    for (const std::vector<CellPos>& leg : plan.routes[static_cast<size_t>(c)].legs)
      loop.insert(loop.end(), leg.begin() + (loop.empty() ? 0 : 1), leg.end());
    if (loop.empty()) loop.push_back(sc.oc);
  }

  windows_.reserve(static_cast<size_t>(plan.n_w));
  region_counts_.reserve(static_cast<size_t>(plan.n_w));
  for (int s = 1; s <= plan.n_w; ++s) {
    WindowBase base = window_base(sc, plan, s);
    windows_.push_back(base.win);
    region_counts_.emplace_back(base.counts.begin(), base.counts.end());
  }

  worker_budget_time_.assign(static_cast<size_t>(plan.n_w), 0.0);
  const double tau = sc.transfer_time_per_goal;
  const int k = sc.goals_per_segment_per_cycle;
  for (int s = 1; s <= plan.n_w; ++s) {
    const int c = plan.association[static_cast<size_t>(s) - 1];
    // pinned: a worker's travel budget is its collector's period minus the
    // transfer load for its own k goals (the whole cycle when uploading
    // straight to the OC)
    const double period = c >= 0 ? plan.routes[static_cast<size_t>(c)].period
                                 : static_cast<double>(ticks_per_cycle_) * tick_time_;
    worker_budget_time_[static_cast<size_t>(s) - 1] = std::max(0.0, period - tau * k);
  }

  world_.agents.resize(static_cast<size_t>(sc.n_agents));
  for (int i = 0; i < sc.n_agents; ++i) {
    AgentState& agent = world_.agents[static_cast<size_t>(i)];
    agent.id = i;
    agent.role = i < plan.n_c ? Role::Collector : Role::Worker;
    agent.position = sc.oc;
    agent.path = {sc.oc};
    agent.phase = agent.role == Role::Collector ? Phase::Looping : Phase::Idle;
    agent.sync_end = sc.oc;
  }
}

void MissionSim::trace_event(const std::string& line) {
  if (trace_) *trace_ << line << '\n';
}

void MissionSim::start_cycle(long long cycle) {
  World& w = world_;
  w.cycle = cycle;
  expired_total_ += static_cast<int>(w.pending.size());
  w.pending.clear();
  w.delivered_per_cycle.resize(static_cast<size_t>(cycle) + 1, 0);

  std::mt19937_64 rng = cycle_rng(seed_, cycle);
  std::vector<GoalRequest> goals =
      generate_goals(rng, plan_.segmentation, sc_.goals_per_segment_per_cycle, w.tick,
                     static_cast<int>(w.records.size()));
  std::string ids = "[";
  for (size_t i = 0; i < goals.size(); ++i) {
    if (i) ids += ",";
    ids += std::to_string(goals[i].id);
    w.records.push_back({goals[i], -1, -1});
  }
  w.pending = goals;
  trace_event("{\"t\":" + std::to_string(w.tick) + ",\"ev\":\"cycle\",\"cycle\":" +
              std::to_string(cycle) + ",\"goals\":" + ids + "]}");

  for (int c = 0; c < plan_.n_c; ++c) {
    AgentState& agent = w.agents[static_cast<size_t>(c)];
    // restart the loop only from a finished state; a late collector keeps
    // going and rejoins at the next boundary it is ready for
    if (!agent.moving() && agent.cargo.empty() && agent.position == sc_.oc) {
      agent.path = loops_[static_cast<size_t>(c)];
      agent.path_pos = 0;
      agent.move_budget = 0.0;
      agent.phase = Phase::Looping;
    }
  }

  const double tau = sc_.transfer_time_per_goal;
  for (int s = 1; s <= plan_.n_w; ++s) {
    AgentState& agent = w.agents[static_cast<size_t>(plan_.n_c + s - 1)];
    std::vector<GoalRequest> own;
    for (const GoalRequest& g : goals)
      if (g.segment == s) own.push_back(g);

    const int cargo_est = static_cast<int>(agent.cargo.size() + own.size());
    SyncWindow win = apply_cargo(
        {windows_[static_cast<size_t>(s) - 1], region_counts_[static_cast<size_t>(s) - 1]},
        cargo_est, tau, tick_time_);
    const long long budget =
        ceil_ticks(worker_budget_time_[static_cast<size_t>(s) - 1] / tick_time_);

    WorkerCyclePlan wp;
    agent.fallback = false;
    if (win.feasible) wp = plan_worker_cycle(sc_, agent.position, own, win, budget);
    if (!win.feasible || wp.window_missed) {
      // rendezvous fallback: gather what fits, then wait at the static
      // meeting point (the collector dwells there until the handoff)
      agent.fallback = true;
      SyncWindow fallback = win;
      fallback.t_open = 0;
      fallback.t_close = kFarTick;
      fallback.feasible = true;
      fallback.region = {meeting_cell(s)};
      wp = plan_worker_cycle(sc_, agent.position, own, fallback, budget);
    }
    agent.path = wp.path;
    agent.path_pos = 0;
    agent.move_budget = 0.0;
    agent.planned_goals = wp.goal_ids;
    agent.sync_end = wp.end;
    agent.handoff_done = false;
    agent.phase = wp.goal_ids.empty() ? Phase::ToSync : Phase::Gathering;
  }
}

void MissionSim::move_agent(AgentState& agent) {
  if (!agent.moving()) {
    agent.move_budget = 0.0;  // no banking while parked
    return;
  }
  if (agent.role == Role::Collector) {
    // dwell at a meeting waypoint while its fallback member still owes a handoff
    const CollectorGroup& group = plan_.groups[static_cast<size_t>(agent.id)];
    for (size_t mi = 0; mi < group.members.size(); ++mi) {
      if (agent.position != group.meeting[mi]) continue;
      const AgentState& member =
          world_.agents[static_cast<size_t>(plan_.n_c + group.members[mi] - 1)];
      if (member.fallback && !member.handoff_done) {
        agent.move_budget = 0.0;
        return;
      }
    }
  }
  agent.move_budget += 1.0;
  const double cost = step_cost(agent.path[agent.path_pos], agent.path[agent.path_pos + 1]);
  if (agent.move_budget + 1e-9 >= cost) {
    agent.move_budget -= cost;
    ++agent.path_pos;
    agent.position = agent.path[agent.path_pos];
    trace_event("{\"t\":" + std::to_string(world_.tick) + ",\"ev\":\"move\",\"agent\":" +
                std::to_string(agent.id) + ",\"pos\":[" + std::to_string(agent.position.col) +
                "," + std::to_string(agent.position.row) + "]}");
  }
}

CellPos MissionSim::meeting_cell(int segment_id) const {
  const int c = plan_.association[static_cast<size_t>(segment_id) - 1];
  if (c < 0) return sc_.oc;
  const CollectorGroup& group = plan_.groups[static_cast<size_t>(c)];
  for (size_t mi = 0; mi < group.members.size(); ++mi)
    if (group.members[mi] == segment_id) return group.meeting[mi];
  throw std::logic_error("meeting_cell: segment missing from its group");
}

void MissionSim::gather_at(AgentState& worker) {
  const int segment = worker.id - plan_.n_c + 1;
  World& w = world_;
  for (auto it = w.pending.begin(); it != w.pending.end();) {
    if (it->segment == segment && it->position == worker.position) {
      w.records[static_cast<size_t>(it->id)].t_gathered = w.tick;
      worker.cargo.push_back({it->id, w.tick});
      trace_event("{\"t\":" + std::to_string(w.tick) + ",\"ev\":\"gather\",\"agent\":" +
                  std::to_string(worker.id) + ",\"goal\":" + std::to_string(it->id) + "}");
      it = w.pending.erase(it);
    } else {
      ++it;
    }
  }
}

void MissionSim::deliver(AgentState& agent) {
  World& w = world_;
  trace_event("{\"t\":" + std::to_string(w.tick) + ",\"ev\":\"deliver\",\"agent\":" +
              std::to_string(agent.id) + ",\"goals\":" + cargo_ids_json(agent.cargo) + "}");
  for (const CargoItem& item : agent.cargo) {
    w.records[static_cast<size_t>(item.goal_id)].t_delivered = w.tick;
    ++w.delivered_per_cycle[static_cast<size_t>(w.cycle)];
    ++delivered_total_;
  }
  agent.cargo.clear();
  agent.contact = 0;
}

void MissionSim::run_transfers() {
  World& w = world_;
  const double tau = sc_.transfer_time_per_goal;
  std::vector<char> receiving(static_cast<size_t>(plan_.n_c), 0);

  for (int i = plan_.n_c; i < sc_.n_agents; ++i) {
    AgentState& worker = w.agents[static_cast<size_t>(i)];
    if (worker.cargo.empty()) {
      if (!worker.moving()) worker.handoff_done = true;
      continue;
    }
    const int c = plan_.association[static_cast<size_t>(i - plan_.n_c)];
    const CellPos target = c >= 0 ? w.agents[static_cast<size_t>(c)].position : sc_.oc;
    if (!in_comm(sc_, worker.position, target)) continue;
    ++worker.contact;
    worker.phase = Phase::Transferring;
    if (c >= 0) receiving[static_cast<size_t>(c)] = 1;
    const long long required =
        ceil_ticks(tau * static_cast<double>(worker.cargo.size()) / tick_time_);
    if (worker.contact < required) continue;
    if (c >= 0) {
      AgentState& collector = w.agents[static_cast<size_t>(c)];
      trace_event("{\"t\":" + std::to_string(w.tick) + ",\"ev\":\"transfer\",\"from\":" +
                  std::to_string(worker.id) + ",\"to\":" + std::to_string(collector.id) +
                  ",\"goals\":" + cargo_ids_json(worker.cargo) + "}");
      collector.cargo.insert(collector.cargo.end(), worker.cargo.begin(), worker.cargo.end());
      worker.cargo.clear();
    } else {
      deliver(worker);
    }
    worker.contact = 0;
    worker.handoff_done = true;
  }

  for (int c = 0; c < plan_.n_c; ++c) {
    AgentState& collector = w.agents[static_cast<size_t>(c)];
    if (receiving[static_cast<size_t>(c)]) collector.phase = Phase::Transferring;
    if (collector.cargo.empty()) continue;
    if (!in_comm(sc_, collector.position, sc_.oc)) continue;
    ++collector.contact;
    const long long required =
        ceil_ticks(tau * static_cast<double>(collector.cargo.size()) / tick_time_);
    if (collector.contact >= required) deliver(collector);
  }
}

void MissionSim::check_invariants() const {
  const World& w = world_;
  long long carried = 0;
  for (const AgentState& agent : w.agents) {
    if (!sc_.grid.is_free(agent.position)) {
      std::ostringstream dump;
      dump << "agent " << agent.id << " on a non-free cell (" << agent.position.col << ","
           << agent.position.row << ") at tick " << w.tick;
      throw std::logic_error(dump.str());
    }
    carried += static_cast<long long>(agent.cargo.size());
  }
  const long long placed = static_cast<long long>(w.pending.size()) + carried +
                           delivered_total_ + expired_total_;
  if (placed != static_cast<long long>(w.records.size()))
    throw std::logic_error("goal conservation violated at tick " + std::to_string(w.tick));
}

void MissionSim::step() {
  World& w = world_;
  if (w.tick % ticks_per_cycle_ == 0) start_cycle(w.tick / ticks_per_cycle_);

  for (int c = 0; c < plan_.n_c; ++c) {
    AgentState& agent = w.agents[static_cast<size_t>(c)];
    move_agent(agent);
    agent.phase = !agent.moving() && !agent.cargo.empty() && in_comm(sc_, agent.position, sc_.oc)
                      ? Phase::Uploading
                      : Phase::Looping;
  }
  for (int i = plan_.n_c; i < sc_.n_agents; ++i) {
    AgentState& worker = w.agents[static_cast<size_t>(i)];
    move_agent(worker);
    gather_at(worker);
    bool planned_left = false;
    for (int id : worker.planned_goals)
      planned_left = planned_left || w.records[static_cast<size_t>(id)].t_gathered < 0;
    const int segment = i - plan_.n_c + 1;
    if (worker.moving())
      worker.phase = !planned_left                                   ? Phase::ToSync
                     : plan_.segmentation.labels.at(worker.position) != segment
                         ? Phase::ToSegment
                         : Phase::Gathering;
    else
      worker.phase = worker.cargo.empty() ? Phase::Idle : Phase::ToSync;
  }

  run_transfers();
  check_invariants();
  ++w.tick;
}

MissionMetrics MissionSim::run(int n_cycles) {
  if (n_cycles < 0) throw std::invalid_argument("run: negative cycle count");
  if (world_.tick != 0) throw std::logic_error("run: mission already started");
  const long long total = ticks_per_cycle_ * n_cycles;
  for (long long t = 0; t < total; ++t) step();

  MissionMetrics m;
  m.goals = world_.records;
  m.delivered_per_cycle = world_.delivered_per_cycle;
  m.delivered_per_cycle.resize(static_cast<size_t>(std::max(0, n_cycles)), 0);
  m.ticks_per_cycle = ticks_per_cycle_;
  m.n_cycles = n_cycles;
  m.tick_time = tick_time_;
  long long delivered = 0, refresh = 0;
  for (const GoalRecord& rec : m.goals)
    if (rec.t_delivered >= 0) {
      ++delivered;
      refresh += rec.t_delivered - rec.request.t_request;
    }
  m.t_refresh_mean =
      delivered > 0 ? static_cast<double>(refresh) / static_cast<double>(delivered) * tick_time_
                    : 0.0;
  m.n_goals_rate = n_cycles > 0 ? static_cast<double>(delivered) / n_cycles : 0.0;
  return m;
}

std::string metrics_to_csv(const MissionMetrics& m) {
  std::ostringstream out;
  out << "goal_id,segment,col,row,t_request,t_gathered,t_delivered\n";
  for (const GoalRecord& rec : m.goals)
    out << rec.request.id << ',' << rec.request.segment << ',' << rec.request.position.col << ','
        << rec.request.position.row << ',' << rec.request.t_request << ',' << rec.t_gathered
        << ',' << rec.t_delivered << '\n';
  out << "summary,n_cycles=" << m.n_cycles << ",ticks_per_cycle=" << m.ticks_per_cycle
      << ",t_refresh_mean=" << m.t_refresh_mean << ",n_goals_rate=" << m.n_goals_rate << '\n';
  return out.str();
}

MissionMetrics run_mission(const Scenario& sc, const DeploymentPlan& plan, int n_cycles,
                           uint64_t seed, std::ostream* trace) {
  MissionSim sim(sc, plan, seed, trace);
  return sim.run(n_cycles);
}

}  // namespace gatherplan
