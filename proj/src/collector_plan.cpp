#include "gatherplan/collector_plan.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace gatherplan {

std::vector<std::vector<std::pair<int, double>>> AdjacencyGraph::neighbor_list() const {
  std::vector<std::vector<std::pair<int, double>>> nbrs(n_w + 1);
  for (size_t e = 0; e < edges.size(); ++e) {
    nbrs[edges[e][0]].push_back({edges[e][1], weights[e]});
    nbrs[edges[e][1]].push_back({edges[e][0], weights[e]});
  }
  for (auto& v : nbrs) std::sort(v.begin(), v.end());
  return nbrs;
}

bool AdjacencyGraph::connected() const {
  if (n_w <= 1) return true;
  auto nbrs = neighbor_list();
  std::vector<char> seen(n_w + 1, 0);
  std::deque<int> queue{1};
  seen[1] = 1;
  int count = 1;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (auto [v, w] : nbrs[u]) {
      if (seen[v]) continue;
      seen[v] = 1;
      ++count;
      queue.push_back(v);
    }
  }
  return count == n_w;
}

AdjacencyGraph build_adjacency(const Segmentation& seg, const GridMap& grid) {
  AdjacencyGraph g;
  g.n_w = seg.n_w;
  g.centroids = seg.centroids;
  std::set<std::array<int, 2>> pairs;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      int l = seg.labels.at({c, r});
      if (l == 0) continue;
      for (CellPos n : {CellPos{c + 1, r}, CellPos{c, r + 1}}) {
        if (!grid.in_bounds(n)) continue;
        int m = seg.labels.at(n);
        if (m != 0 && m != l) pairs.insert({std::min(l, m), std::max(l, m)});
      }
    }
  }
  std::vector<ArrivalField> fields;
  fields.reserve(seg.n_w);
  auto speed = SpeedField::uniform(grid);
  for (CellPos c : seg.centroids)
    fields.push_back(fmm_solve(grid, speed, std::vector<CellPos>{c}).arrival);
  for (auto [i, j] : pairs) {
    double a = fields[i - 1].at(seg.centroids[j - 1]);
    double b = fields[j - 1].at(seg.centroids[i - 1]);
    if (a == kInfTime || b == kInfTime)
      throw ScenarioError("segment centroids are not mutually reachable");
    g.edges.push_back({i, j});
    g.weights.push_back((a + b) / 2.0);
  }
  return g;
}

namespace {

std::vector<double> graph_dijkstra(const std::vector<std::vector<std::pair<int, double>>>& nbrs,
                                   int n_w, int src) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n_w + 1, inf);
  dist[src] = 0.0;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : nbrs[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        pq.push({d + w, v});
      }
    }
  }
  return dist;
}

}  // namespace

std::vector<CollectorGroup> group_segments(const AdjacencyGraph& graph, const Segmentation& seg,
                                           int n_c) {
  const int n_w = graph.n_w;
  if (n_c < 1 || n_c > n_w) throw std::invalid_argument("collector count out of range");
  if (!graph.connected()) throw std::invalid_argument("adjacency graph is disconnected");
  auto areas = segment_stats(seg);

  std::vector<CollectorGroup> groups;
  if (n_c == 1) {
    CollectorGroup g;
    g.id = 0;
    for (int s = 1; s <= n_w; ++s) {
      g.members.push_back(s);
      g.meeting.push_back(seg.centroids[s - 1]);
    }
    return {g};
  }

  auto nbrs = graph.neighbor_list();
  std::vector<std::vector<double>> dist(n_w + 1);
  for (int s = 1; s <= n_w; ++s) dist[s] = graph_dijkstra(nbrs, n_w, s);

  // seeds: greedy farthest-point over graph distance, anchored at the most
  // distant pair
  std::vector<int> seeds;
  {
    double best = -1.0;
    int s1 = 1, s2 = 1;
    for (int i = 1; i <= n_w; ++i)
      for (int j = i + 1; j <= n_w; ++j)
        if (dist[i][j] > best) {
          best = dist[i][j];
          s1 = i;
          s2 = j;
        }
    seeds = {s1, s2};
    while (static_cast<int>(seeds.size()) < n_c) {
      double far = -1.0;
      int pick = -1;
      for (int u = 1; u <= n_w; ++u) {
        if (std::find(seeds.begin(), seeds.end(), u) != seeds.end()) continue;
        double mind = std::numeric_limits<double>::infinity();
        for (int s : seeds) mind = std::min(mind, dist[s][u]);
        if (mind > far) {
          far = mind;
          pick = u;
        }
      }
      seeds.push_back(pick);
    }
  }

  std::vector<int> owner(n_w + 1, -1);
  std::vector<long long> garea(n_c, 0);
  for (int gi = 0; gi < n_c; ++gi) {
    owner[seeds[gi]] = gi;
    garea[gi] = areas[seeds[gi] - 1];
  }

  // growth: the lightest group with an unclaimed neighbor takes its cheapest one
  int claimed = n_c;
  while (claimed < n_w) {
    std::vector<int> order(n_c);
    for (int gi = 0; gi < n_c; ++gi) order[gi] = gi;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return garea[a] != garea[b] ? garea[a] < garea[b] : a < b; });
    bool grew = false;
    for (int gi : order) {
      double best_w = std::numeric_limits<double>::infinity();
      int best_u = -1;
      for (int u = 1; u <= n_w; ++u) {
        if (owner[u] != gi) continue;
        for (auto [v, w] : nbrs[u]) {
          if (owner[v] != -1) continue;
          if (w < best_w || (w == best_w && v < best_u)) {
            best_w = w;
            best_u = v;
          }
        }
      }
      if (best_u > 0) {
        owner[best_u] = gi;
        garea[gi] += areas[best_u - 1];
        ++claimed;
        grew = true;
        break;
      }
    }
    if (!grew) throw std::logic_error("group growth stalled on a connected graph");
  }

  // single-node improvement: move a border node into an adjacent group while
  // it strictly reduces the largest group area
  auto donor_stays_connected = [&](int gid, int skip) {
    int start = -1, size = 0;
    for (int u = 1; u <= n_w; ++u)
      if (owner[u] == gid && u != skip) {
        if (start < 0) start = u;
        ++size;
      }
    if (size == 0) return false;
    std::set<int> seen{start};
    std::deque<int> queue{start};
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (auto [v, w] : nbrs[u])
        if (owner[v] == gid && v != skip && !seen.count(v)) {
          seen.insert(v);
          queue.push_back(v);
        }
    }
    return static_cast<int>(seen.size()) == size;
  };
  for (int moves = 0; moves < 100; ++moves) {
    long long cur_max = *std::max_element(garea.begin(), garea.end());
    long long best_max = cur_max;
    int best_u = -1, best_to = -1;
    for (int u = 1; u <= n_w; ++u) {
      int from = owner[u];
      std::set<int> targets;
      for (auto [v, w] : nbrs[u])
        if (owner[v] != from) targets.insert(owner[v]);
      if (targets.empty()) continue;
      if (!donor_stays_connected(from, u)) continue;
      for (int to : targets) {
        long long new_max = 0;
        for (int gi = 0; gi < n_c; ++gi) {
          long long a = garea[gi];
          if (gi == from) a -= areas[u - 1];
          if (gi == to) a += areas[u - 1];
          new_max = std::max(new_max, a);
        }
        // ascending (u, to) scan: the first candidate wins ties; best_max
        // starts at cur_max so only strict reductions are accepted
        if (new_max < best_max) {
          best_max = new_max;
          best_u = u;
          best_to = to;
        }
      }
    }
    if (best_u < 0) break;
    garea[owner[best_u]] -= areas[best_u - 1];
    garea[best_to] += areas[best_u - 1];
    owner[best_u] = best_to;
  }

  groups.resize(n_c);
  for (int gi = 0; gi < n_c; ++gi) groups[gi].id = gi;
  for (int u = 1; u <= n_w; ++u) {
    groups[owner[u]].members.push_back(u);
    groups[owner[u]].meeting.push_back(seg.centroids[u - 1]);
  }
  for (auto& g : groups)
    if (g.members.empty()) throw std::logic_error("empty collector group after balancing");
  return groups;
}

namespace {

// caches the per-segment centroid solve and mean goal distance
class WorkerEstimator {
 public:
  WorkerEstimator(const Scenario& sc, const Segmentation& seg) : sc_(sc), seg_(seg) {}

  const ArrivalField& centroid_field(int segment_id) { return entry(segment_id).first; }

  double operator()(int segment_id, CellPos meeting) {
    auto [lbar, d] = terms(segment_id, meeting);
    double k = sc_.goals_per_segment_per_cycle;
    return (k * lbar + d) / sc_.agent_speed + sc_.transfer_time_per_goal * k;
  }

  std::pair<double, double> terms(int segment_id, CellPos meeting) {
    auto& [field, lbar] = entry(segment_id);
    double d = field.at(meeting);
    if (d == kInfTime) throw ScenarioError("meeting point unreachable from centroid");
    return {lbar, d};
  }

 private:
  std::pair<ArrivalField, double>& entry(int segment_id) {
    auto it = cache_.find(segment_id);
    if (it != cache_.end()) return it->second;
    if (segment_id < 1 || segment_id > seg_.n_w)
      throw std::invalid_argument("segment id out of range");
    CellPos c = seg_.centroids[segment_id - 1];
    auto res = fmm_solve(sc_.grid, SpeedField::uniform(sc_.grid), std::vector<CellPos>{c});
    double sum = 0.0;
    int count = 0;
    for (size_t i = 0; i < seg_.labels.label.size(); ++i) {
      if (seg_.labels.label[i] != segment_id) continue;
      sum += res.arrival.t[i];
      ++count;
    }
    auto [pos, ok] =
        cache_.emplace(segment_id, std::make_pair(std::move(res.arrival), sum / count));
    return pos->second;
  }

  const Scenario& sc_;
  const Segmentation& seg_;
  std::map<int, std::pair<ArrivalField, double>> cache_;
};

}  // namespace

double estimate_worker_time(const Scenario& sc, const Segmentation& seg, int segment_id,
                            CellPos meeting) {
  WorkerEstimator est(sc, seg);
  return est(segment_id, meeting);
}

std::pair<double, double> segment_tour_terms(const Scenario& sc, const Segmentation& seg,
                                             int segment_id, CellPos meeting) {
  WorkerEstimator est(sc, seg);
  return est.terms(segment_id, meeting);
}

CollectorRoute plan_route(const Scenario& sc, const Segmentation& seg, CollectorGroup& group) {
  if (group.members.empty()) throw std::invalid_argument("empty collector group");
  const GridMap& grid = sc.grid;
  auto speed = SpeedField::uniform(grid);
  const int g = static_cast<int>(group.members.size());

  // waypoint 0 is the OC, waypoint i+1 the i-th member's meeting point
  std::vector<CellPos> W(g + 1);
  W[0] = sc.oc;
  for (int i = 0; i < g; ++i) W[i + 1] = group.meeting[i];
  std::vector<ArrivalField> F(g + 1);
  for (int i = 0; i <= g; ++i)
    F[i] = fmm_solve(grid, speed, std::vector<CellPos>{W[i]}).arrival;

  std::vector<std::vector<double>> D(g + 1, std::vector<double>(g + 1, 0.0));
  for (int i = 0; i <= g; ++i)
    for (int j = i + 1; j <= g; ++j) {
      double a = F[i].at(W[j]), b = F[j].at(W[i]);
      if (a == kInfTime || b == kInfTime) throw ScenarioError("waypoint unreachable");
      D[i][j] = D[j][i] = (a + b) / 2.0;
    }

  // nearest-neighbor tour from the OC
  std::vector<int> tour;
  std::vector<char> used(g + 1, 0);
  int cur = 0;
  for (int step = 0; step < g; ++step) {
    int pick = -1;
    for (int j = 1; j <= g; ++j)
      if (!used[j] && (pick < 0 || D[cur][j] < D[cur][pick])) pick = j;
    used[pick] = 1;
    tour.push_back(pick);
    cur = pick;
  }

  // 2-opt, best improvement until no reversal shortens the cycle
  auto cycle_len = [&] {
    double len = D[0][tour.front()];
    for (int t = 0; t + 1 < g; ++t) len += D[tour[t]][tour[t + 1]];
    return len + D[tour.back()][0];
  };
  double cur_len = cycle_len();
  for (;;) {
    double best_delta = -1e-12;
    int best_i = -1, best_j = -1;
    for (int i = 0; i < g; ++i) {
      for (int j = i; j < g; ++j) {
        if (i == 0 && j == g - 1) continue;  // full reversal is a no-op
        int prev = (i == 0) ? 0 : tour[i - 1];
        int next = (j == g - 1) ? 0 : tour[j + 1];
        double delta = D[prev][tour[j]] + D[tour[i]][next] - D[prev][tour[i]] - D[tour[j]][next];
        if (delta < best_delta) {
          best_delta = delta;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_i < 0) break;
    std::reverse(tour.begin() + best_i, tour.begin() + best_j + 1);
    double new_len = cycle_len();
    if (new_len >= cur_len) throw std::logic_error("2-opt accepted a non-improving move");
    cur_len = new_len;
  }

  // route positions R[0..g+1], R.front() = R.back() = OC index 0
  std::vector<int> R{0};
  R.insert(R.end(), tour.begin(), tour.end());
  R.push_back(0);

  std::vector<std::vector<CellPos>> legs(g + 1);
  std::vector<double> leg_len(g + 1, 0.0);
  auto rebuild_leg = [&](int t) {
    auto path = extract_path(F[R[t + 1]], W[R[t]]);
    legs[t] = std::move(path.cells);
    leg_len[t] = path.length;
  };
  for (int t = 0; t <= g; ++t) rebuild_leg(t);
  auto travel_time = [&] {
    double len = 0.0;
    for (double l : leg_len) len += l;
    return len / sc.agent_speed;
  };
  const double transfer_load =
      sc.transfer_time_per_goal * sc.goals_per_segment_per_cycle * g;
  double travel = travel_time();
  double period = travel + transfer_load;

  // balance pass: overloaded members pull their meeting point toward the rest
  // of the route, shrinking the collector's detour
  WorkerEstimator worker(sc, seg);
  for (int mi = 0; mi < g; ++mi) {
    int segment = group.members[mi];
    int wp = mi + 1;
    if (worker(segment, W[wp]) <= period) continue;
    int rpos = -1;
    for (int t = 1; t <= g; ++t)
      if (R[t] == wp) rpos = t;
    // slide target: nearest route cell outside this segment (fallback: OC)
    const ArrivalField& from_centroid = worker.centroid_field(segment);
    CellPos target = sc.oc;
    double best = from_centroid.at(sc.oc);
    for (const auto& leg : legs)
      for (CellPos p : leg) {
        if (seg.labels.at(p) == segment) continue;
        double d = from_centroid.at(p);
        if (d < best || (d == best && grid.index(p) < grid.index(target))) {
          best = d;
          target = p;
        }
      }
    auto to_target = fmm_solve(grid, speed, std::vector<CellPos>{target});
    auto slide = extract_path(to_target.arrival, seg.centroids[segment - 1]);
    for (size_t step = 1; step < slide.cells.size(); ++step) {
      CellPos next = slide.cells[step];
      if (seg.labels.at(next) != segment) break;  // segment boundary reached
      W[wp] = next;
      F[wp] = fmm_solve(grid, speed, std::vector<CellPos>{next}).arrival;
      rebuild_leg(rpos - 1);
      rebuild_leg(rpos);
      travel = travel_time();
      period = travel + transfer_load;
      if (worker(segment, W[wp]) <= period) break;
    }
    group.meeting[mi] = W[wp];
  }

  CollectorRoute route;
  route.id = group.id;
  for (int t = 0; t < static_cast<int>(R.size()); ++t) route.waypoints.push_back(W[R[t]]);
  route.legs = std::move(legs);
  route.travel_time = travel;
  route.period = period;
  return route;
}

DeploymentPlan assemble_plan(const Scenario& sc, SegMethod method, int n_c) {
  int cap = std::min(kMaxCollectors, sc.n_agents - 1);
  if (n_c < 0 || n_c > cap)
    throw std::invalid_argument("collector count out of range for this team");
  DeploymentPlan plan;
  plan.method = method;
  plan.n_c = n_c;
  plan.n_w = sc.n_agents - n_c;
  switch (method) {
    case SegMethod::BAP: plan.segmentation = segment_bap(sc, plan.n_w); break;
    case SegMethod::PAP: plan.segmentation = segment_pap(sc, plan.n_w); break;
    case SegMethod::RAP: plan.segmentation = segment_rap(sc, plan.n_w); break;
  }
  plan.association.assign(plan.n_w, -1);
  if (n_c == 0) return plan;

  auto adjacency = build_adjacency(plan.segmentation, sc.grid);
  plan.groups = group_segments(adjacency, plan.segmentation, n_c);
  for (auto& group : plan.groups) {
    plan.routes.push_back(plan_route(sc, plan.segmentation, group));
    for (int m : group.members) plan.association[m - 1] = group.id;
  }
  return plan;
}

namespace {

nlohmann::json cell_json(CellPos p) { return nlohmann::json::array({p.col, p.row}); }

CellPos cell_from_json(const nlohmann::json& j) {
  return CellPos{j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

std::string plan_to_json(const DeploymentPlan& plan, const std::string& scenario_hash) {
  nlohmann::json j;
  j["scenario_hash"] = scenario_hash;
  j["method"] = to_string(plan.method);
  j["n_c"] = plan.n_c;
  j["n_w"] = plan.n_w;
  j["balanced"] = plan.segmentation.balanced;
  const LabelField& lf = plan.segmentation.labels;
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < lf.height; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < lf.width; ++c) row.push_back(lf.label[r * lf.width + c]);
    rows.push_back(std::move(row));
  }
  j["labels"] = std::move(rows);
  j["centroids"] = nlohmann::json::array();
  for (CellPos c : plan.segmentation.centroids) j["centroids"].push_back(cell_json(c));
  j["groups"] = nlohmann::json::array();
  for (const auto& g : plan.groups) {
    nlohmann::json jg;
    jg["id"] = g.id;
    jg["members"] = g.members;
    jg["meeting"] = nlohmann::json::array();
    for (CellPos m : g.meeting) jg["meeting"].push_back(cell_json(m));
    j["groups"].push_back(std::move(jg));
  }
  j["routes"] = nlohmann::json::array();
  for (const auto& r : plan.routes) {
    nlohmann::json jr;
    jr["id"] = r.id;
    jr["waypoints"] = nlohmann::json::array();
    for (CellPos w : r.waypoints) jr["waypoints"].push_back(cell_json(w));
    jr["legs"] = nlohmann::json::array();
    for (const auto& leg : r.legs) {
      nlohmann::json jl = nlohmann::json::array();
      for (CellPos p : leg) jl.push_back(cell_json(p));
      jr["legs"].push_back(std::move(jl));
    }
    jr["travel_time"] = r.travel_time;
    jr["period"] = r.period;
    j["routes"].push_back(std::move(jr));
  }
  j["association"] = plan.association;
  j["est_t_refresh"] = plan.est_t_refresh;
  j["est_n_goals"] = plan.est_n_goals;
  j["utility"] = plan.utility;
  return j.dump(2);
}

DeploymentPlan plan_from_json(const std::string& text, std::string* scenario_hash) {
  nlohmann::json j = nlohmann::json::parse(text);
  DeploymentPlan plan;
  if (scenario_hash) *scenario_hash = j.at("scenario_hash").get<std::string>();
  plan.method = parse_seg_method(j.at("method").get<std::string>());
  plan.n_c = j.at("n_c").get<int>();
  plan.n_w = j.at("n_w").get<int>();
  const auto& rows = j.at("labels");
  LabelField& lf = plan.segmentation.labels;
  lf.height = static_cast<int>(rows.size());
  lf.width = lf.height ? static_cast<int>(rows.at(0).size()) : 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != lf.width)
      throw std::invalid_argument("ragged label matrix in plan");
    for (const auto& v : row) lf.label.push_back(v.get<int>());
  }
  plan.segmentation.method = plan.method;
  plan.segmentation.n_w = plan.n_w;
  plan.segmentation.balanced = j.at("balanced").get<bool>();
  for (const auto& c : j.at("centroids"))
    plan.segmentation.centroids.push_back(cell_from_json(c));
  for (const auto& jg : j.at("groups")) {
    CollectorGroup g;
    g.id = jg.at("id").get<int>();
    g.members = jg.at("members").get<std::vector<int>>();
    for (const auto& m : jg.at("meeting")) g.meeting.push_back(cell_from_json(m));
    plan.groups.push_back(std::move(g));
  }
  for (const auto& jr : j.at("routes")) {
    CollectorRoute r;
    r.id = jr.at("id").get<int>();
    for (const auto& w : jr.at("waypoints")) r.waypoints.push_back(cell_from_json(w));
    for (const auto& jl : jr.at("legs")) {
      std::vector<CellPos> leg;
      for (const auto& p : jl) leg.push_back(cell_from_json(p));
      r.legs.push_back(std::move(leg));
    }
    r.travel_time = jr.at("travel_time").get<double>();
    r.period = jr.at("period").get<double>();
    plan.routes.push_back(std::move(r));
  }
  plan.association = j.at("association").get<std::vector<int>>();
  plan.est_t_refresh = j.at("est_t_refresh").get<double>();
  plan.est_n_goals = j.at("est_n_goals").get<double>();
  plan.utility = j.at("utility").get<double>();
  if (static_cast<int>(plan.association.size()) != plan.n_w)
    throw std::invalid_argument("association size mismatch in plan");
  return plan;
}

}  // namespace gatherplan
