#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "gatherplan/segmentation.hpp"

namespace gatherplan {

// Segment adjacency: nodes are segment ids 1..n_w, an edge joins two segments
// that share at least one pair of 4-adjacent free cells. Weights are the
// symmetrized geodesic centroid-to-centroid distances.
struct AdjacencyGraph {
  int n_w = 0;
  std::vector<CellPos> centroids;           // centroid of segment i+1
  std::vector<std::array<int, 2>> edges;    // segment id pairs, first < second
  std::vector<double> weights;              // aligned with edges

  std::vector<std::vector<std::pair<int, double>>> neighbor_list() const;
  bool connected() const;
};

struct CollectorGroup {
  int id = 0;
  std::vector<int> members;       // segment ids, ascending
  std::vector<CellPos> meeting;   // meeting point per member, same order
};

// Cyclic collector tour: waypoints = (OC, m_1, ..., m_g, OC), legs[i] is the
// geodesic cell path waypoints[i] -> waypoints[i+1] (inclusive of both ends).
struct CollectorRoute {
  int id = 0;
  std::vector<CellPos> waypoints;
  std::vector<std::vector<CellPos>> legs;
  double travel_time = 0.0;
  double period = 0.0;
};

struct DeploymentPlan {
  SegMethod method = SegMethod::BAP;
  int n_c = 0;
  int n_w = 0;
  Segmentation segmentation;
  std::vector<CollectorGroup> groups;
  std::vector<CollectorRoute> routes;
  std::vector<int> association;   // segment id-1 -> collector id, -1 means OC
  double est_t_refresh = 0.0;
  double est_n_goals = 0.0;
  double utility = 0.0;
};

AdjacencyGraph build_adjacency(const Segmentation& seg, const GridMap& grid);

// Partition segments into n_c connected groups of balanced total area.
// Meeting points start at the member centroids.
std::vector<CollectorGroup> group_segments(const AdjacencyGraph& graph,
                                           const Segmentation& seg, int n_c);

// Nearest-neighbor + 2-opt tour over the group's meeting points, then a
// balance pass that slides overloaded members' meeting points from their
// centroid toward the rest of the route (staying inside the segment).
// Updates the group's meeting points in place.
CollectorRoute plan_route(const Scenario& sc, const Segmentation& seg, CollectorGroup& group);

// (k * mean geodesic distance to centroid + d(centroid, meeting)) / v + tau*k
double estimate_worker_time(const Scenario& sc, const Segmentation& seg, int segment_id,
                            CellPos meeting);

// the L-bar and d terms of the worker-time model, both in meters
std::pair<double, double> segment_tour_terms(const Scenario& sc, const Segmentation& seg,
                                             int segment_id, CellPos meeting);

// Segment with n_w = n_agents - n_c workers, then group/route/associate.
// n_c = 0 associates every segment straight to the OC. Estimate and utility
// fields are left zeroed; the sweep fills them.
DeploymentPlan assemble_plan(const Scenario& sc, SegMethod method, int n_c);

inline constexpr int kMaxCollectors = 8;

std::string plan_to_json(const DeploymentPlan& plan, const std::string& scenario_hash);
DeploymentPlan plan_from_json(const std::string& text, std::string* scenario_hash = nullptr);

}  // namespace gatherplan
