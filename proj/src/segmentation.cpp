#include "gatherplan/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <stdexcept>

namespace gatherplan {

std::string to_string(SegMethod m) {
  switch (m) {
    case SegMethod::BAP: return "bap";
    case SegMethod::PAP: return "pap";
    case SegMethod::RAP: return "rap";
  }
  throw std::logic_error("bad SegMethod");
}

SegMethod parse_seg_method(const std::string& name) {
  if (name == "bap" || name == "BAP") return SegMethod::BAP;
  if (name == "pap" || name == "PAP") return SegMethod::PAP;
  if (name == "rap" || name == "RAP") return SegMethod::RAP;
  throw std::invalid_argument("unknown segmentation method: " + name);
}

namespace {

void validate_seed_count(const GridMap& grid, int n_w) {
  if (n_w < 1) throw std::invalid_argument("segment count must be >= 1");
  if (n_w > grid.free_count())
    throw std::invalid_argument("segment count exceeds free cell count");
}

// Greedy farthest-point sampling under the geodesic metric. `first` is the
// anchor; candidates restricted to `pool` when nonempty, else all free cells.
std::vector<CellPos> farthest_point_sample(const GridMap& grid, CellPos first, int n,
                                           const std::vector<CellPos>& pool) {
  std::vector<CellPos> picked{first};
  auto speed = SpeedField::uniform(grid);
  while (static_cast<int>(picked.size()) < n) {
    auto res = fmm_solve(grid, speed, picked);
    double best_t = -1.0;
    int best_idx = -1;
    auto consider = [&](CellPos p) {
      double t = res.arrival.at(p);
      if (t == kInfTime || t <= 0.0) return;  // unreachable, or already picked
      int idx = grid.index(p);
      if (t > best_t || (t == best_t && idx < best_idx)) {
        best_t = t;
        best_idx = idx;
      }
    };
    if (!pool.empty()) {
      for (CellPos p : pool) consider(p);
    } else {
      for (int i = 0; i < static_cast<int>(grid.occupancy.size()); ++i)
        if (grid.occupancy[i] == 0) consider(grid.cell(i));
    }
    if (best_idx < 0)
      throw std::invalid_argument("not enough mutually reachable cells for sampling");
    picked.push_back(grid.cell(best_idx));
  }
  return picked;
}

std::vector<int> areas_from_labels(const LabelField& labels, int n_w) {
  std::vector<int> areas(n_w, 0);
  for (int l : labels.label)
    if (l > 0) ++areas[l - 1];
  return areas;
}

// Shift fmm labels (0-based source ids) to segment ids 1..n_w and insist on a
// full partition of the free space.
LabelField to_segment_labels(const GridMap& grid, const FmmResult& res) {
  LabelField out = res.labels;
  for (size_t i = 0; i < out.label.size(); ++i) {
    if (grid.occupancy[i] != 0) {
      out.label[i] = 0;
    } else if (out.label[i] < 0) {
      throw ScenarioError("free space is not fully reachable from the seeds; "
                          "scenario is not operative");
    } else {
      ++out.label[i];
    }
  }
  return out;
}

}  // namespace

Segmentation segment_bap(const Scenario& sc, int n_w, std::vector<CellPos> seeds) {
  const GridMap& grid = sc.grid;
  validate_seed_count(grid, n_w);
  if (seeds.empty()) {
    auto from_oc = fmm_solve(grid, SpeedField::uniform(grid), std::vector<CellPos>{sc.oc});
    double best_t = -1.0;
    int anchor = -1;
    for (int i = 0; i < static_cast<int>(grid.occupancy.size()); ++i) {
      if (grid.occupancy[i] != 0) continue;
      double t = from_oc.arrival.t[i];
      if (t == kInfTime) continue;
      if (t > best_t || (t == best_t && i < anchor)) {
        best_t = t;
        anchor = i;
      }
    }
    seeds = farthest_point_sample(grid, grid.cell(anchor), n_w, {});
  } else {
    if (static_cast<int>(seeds.size()) != n_w)
      throw std::invalid_argument("seed count does not match n_w");
    for (CellPos s : seeds)
      if (!grid.is_free(s)) throw std::invalid_argument("seed on obstacle or out of bounds");
  }

  auto speed = SpeedField::uniform(grid);
  std::vector<double> mult(n_w, 1.0);
  const double mean = static_cast<double>(grid.free_count()) / n_w;
  Segmentation seg;
  seg.method = SegMethod::BAP;
  seg.n_w = n_w;
  seg.centroids = seeds;
  seg.balanced = false;
  for (int iter = 0; iter < 20; ++iter) {
    auto res = fmm_solve(grid, speed, seeds, mult);
    seg.labels = to_segment_labels(grid, res);
    auto areas = areas_from_labels(seg.labels, n_w);
    double worst = 0.0;
    for (int a : areas) worst = std::max(worst, std::abs(a - mean) / mean);
    if (worst < 0.10) {
      seg.balanced = true;
      break;
    }
    for (int i = 0; i < n_w; ++i)
      mult[i] = std::clamp(mult[i] * std::sqrt(mean / areas[i]), 0.25, 4.0);
  }

  // record each segment's representative cell with the same medoid
  // approximation relax_centroids uses; the growth seeds themselves sit at
  // farthest-point corners and misrepresent where a segment's mass lies
  std::vector<double> sum_col(n_w, 0.0), sum_row(n_w, 0.0);
  std::vector<int> count(n_w, 0);
  for (int i = 0; i < static_cast<int>(grid.occupancy.size()); ++i) {
    const int l = seg.labels.label[i];
    if (l <= 0) continue;
    const CellPos p = grid.cell(i);
    sum_col[static_cast<size_t>(l) - 1] += p.col;
    sum_row[static_cast<size_t>(l) - 1] += p.row;
    ++count[static_cast<size_t>(l) - 1];
  }
  std::vector<double> best(n_w, std::numeric_limits<double>::infinity());
  for (int i = 0; i < static_cast<int>(grid.occupancy.size()); ++i) {
    const int l = seg.labels.label[i];
    if (l <= 0) continue;
    const size_t s = static_cast<size_t>(l) - 1;
    const CellPos p = grid.cell(i);
    const double dc = p.col - sum_col[s] / count[s];
    const double dr = p.row - sum_row[s] / count[s];
    const double d2 = dc * dc + dr * dr;
    if (d2 < best[s]) {  // scan order breaks ties toward the smaller index
      best[s] = d2;
      seg.centroids[s] = p;
    }
  }
  return seg;
}

std::vector<CellPos> init_centroids_distant(const Scenario& sc, int n_w) {
  const GridMap& grid = sc.grid;
  validate_seed_count(grid, n_w);
  auto clearance = clearance_field(grid);

  // non-strict local maxima of clearance over the 8-neighborhood
  const int total = static_cast<int>(grid.occupancy.size());
  std::vector<char> is_max(total, 0);
  for (int i = 0; i < total; ++i) {
    if (grid.occupancy[i] != 0) continue;
    CellPos p = grid.cell(i);
    bool ok = true;
    for (int dr = -1; dr <= 1 && ok; ++dr)
      for (int dc = -1; dc <= 1 && ok; ++dc) {
        if (dr == 0 && dc == 0) continue;
        CellPos q{p.col + dc, p.row + dr};
        if (grid.is_free(q) && clearance.at(q) > clearance.t[i]) ok = false;
      }
    is_max[i] = ok;
  }
  // collapse equal-valued 8-connected plateaus to their smallest linear index
  std::vector<CellPos> candidates;
  std::vector<char> seen(total, 0);
  for (int i = 0; i < total; ++i) {
    if (!is_max[i] || seen[i]) continue;
    candidates.push_back(grid.cell(i));
    std::deque<int> queue{i};
    seen[i] = 1;
    while (!queue.empty()) {
      CellPos p = grid.cell(queue.front());
      queue.pop_front();
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          CellPos q{p.col + dc, p.row + dr};
          if (!grid.in_bounds(q)) continue;
          int j = grid.index(q);
          if (seen[j] || !is_max[j] || clearance.t[j] != clearance.t[i]) continue;
          seen[j] = 1;
          queue.push_back(j);
        }
    }
  }

  // anchor at the candidate of maximum clearance (tie: smallest linear index)
  CellPos anchor = candidates.front();
  for (CellPos c : candidates) {
    double cc = clearance.at(c), ca = clearance.at(anchor);
    if (cc > ca || (cc == ca && grid.index(c) < grid.index(anchor))) anchor = c;
  }
  if (static_cast<int>(candidates.size()) >= n_w)
    return farthest_point_sample(grid, anchor, n_w, candidates);
  return farthest_point_sample(grid, anchor, n_w, {});
}

std::vector<CellPos> relax_centroids(const Scenario& sc, std::vector<CellPos> centroids) {
  const GridMap& grid = sc.grid;
  if (centroids.empty()) throw std::invalid_argument("no centroids to relax");
  std::set<CellPos> unique(centroids.begin(), centroids.end());
  if (unique.size() != centroids.size())
    throw std::invalid_argument("duplicate centroids");
  for (CellPos c : centroids)
    if (!grid.is_free(c)) throw std::invalid_argument("centroid on obstacle or out of bounds");

  auto speed = SpeedField::uniform(grid);
  const int n = static_cast<int>(centroids.size());
  for (int iter = 0; iter < 25; ++iter) {
    auto res = fmm_solve(grid, speed, centroids);
    // per-region coordinate means
    std::vector<double> sum_col(n, 0.0), sum_row(n, 0.0);
    std::vector<int> count(n, 0);
    for (int i = 0; i < static_cast<int>(grid.occupancy.size()); ++i) {
      int l = res.labels.label[i];
      if (l < 0) continue;
      CellPos p = grid.cell(i);
      sum_col[l] += p.col;
      sum_row[l] += p.row;
      ++count[l];
    }
    // medoid approximation: region cell nearest to the region mean
    std::vector<CellPos> next = centroids;
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    for (int i = 0; i < static_cast<int>(grid.occupancy.size()); ++i) {
      int l = res.labels.label[i];
      if (l < 0) continue;
      CellPos p = grid.cell(i);
      double dc = p.col - sum_col[l] / count[l];
      double dr = p.row - sum_row[l] / count[l];
      double d2 = dc * dc + dr * dr;
      if (d2 < best[l]) {  // scan order breaks ties toward the smaller index
        best[l] = d2;
        next[l] = p;
      }
    }
    bool settled = true;
    for (int i = 0; i < n; ++i) {
      int move = std::max(std::abs(next[i].col - centroids[i].col),
                          std::abs(next[i].row - centroids[i].row));
      if (move > 1) settled = false;
    }
    centroids = std::move(next);
    if (settled) break;
  }
  return centroids;
}

namespace {

Segmentation voronoi_segmentation(const Scenario& sc, int n_w, SegMethod method,
                                  const SpeedField& speed) {
  auto centroids = relax_centroids(sc, init_centroids_distant(sc, n_w));
  auto res = fmm_solve(sc.grid, speed, centroids);
  Segmentation seg;
  seg.method = method;
  seg.n_w = n_w;
  seg.labels = to_segment_labels(sc.grid, res);
  seg.centroids = std::move(centroids);
  return seg;
}

}  // namespace

Segmentation segment_pap(const Scenario& sc, int n_w) {
  validate_seed_count(sc.grid, n_w);
  return voronoi_segmentation(sc, n_w, SegMethod::PAP, SpeedField::uniform(sc.grid));
}

SpeedField rap_speed_field(const GridMap& grid, double c0) {
  auto clearance = clearance_field(grid);
  SpeedField speed = SpeedField::uniform(grid);
  for (size_t i = 0; i < speed.f.size(); ++i) {
    if (grid.occupancy[i] != 0) continue;
    speed.f[i] = std::max(kRapSpeedFloor, std::min(1.0, clearance.t[i] / c0));
  }
  return speed;
}

Segmentation segment_rap(const Scenario& sc, int n_w) {
  validate_seed_count(sc.grid, n_w);
  return voronoi_segmentation(sc, n_w, SegMethod::RAP,
                              rap_speed_field(sc.grid, 2.0 * sc.grid.cell_size));
}

std::vector<int> segment_stats(const Segmentation& seg) {
  return areas_from_labels(seg.labels, seg.n_w);
}

}  // namespace gatherplan
