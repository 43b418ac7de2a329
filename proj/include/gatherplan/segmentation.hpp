#pragma once

#include <string>
#include <vector>

#include "gatherplan/fmm.hpp"
#include "gatherplan/scenario.hpp"

namespace gatherplan {

enum class SegMethod { BAP, PAP, RAP };

std::string to_string(SegMethod m);
SegMethod parse_seg_method(const std::string& name);

// Partition of the operative free space into n_w working segments.
// labels holds 1..n_w per free cell and 0 on obstacles; centroids[i] is a
// free cell labeled i+1.
struct Segmentation {
  SegMethod method = SegMethod::BAP;
  int n_w = 0;
  LabelField labels;
  std::vector<CellPos> centroids;
  bool balanced = true;  // BAP only: area loop met its 10% target before the cap
};

// Balanced-area partition: labeled multi-source fmm from n_w seeds, re-solved
// with per-seed speed multipliers (mean_area/area_i)^0.5 clamped to [0.25, 4]
// until the worst relative area deviation drops below 10% (or 20 solves).
// Empty `seeds` picks geodesic farthest-point samples, anchored at the free
// cell farthest from the OC. The recorded centroids are each final segment's
// medoid approximation (cell nearest its coordinate mean), not the raw seeds.
Segmentation segment_bap(const Scenario& sc, int n_w, std::vector<CellPos> seeds = {});

// n_w seeds placed away from obstacles: local maxima of the clearance field
// (8-neighborhood, plateaus collapsed to their smallest linear index), thinned
// by greedy geodesic farthest-point starting from the max-clearance candidate.
// Falls back to farthest-point over all free cells when there are fewer
// candidates than n_w.
std::vector<CellPos> init_centroids_distant(const Scenario& sc, int n_w);

// Lloyd relaxation: label by unit-speed multi-source solve, move each centroid
// to its region's cell nearest the region coordinate mean, repeat until no
// centroid moves by more than one cell (Chebyshev) or 25 iterations.
std::vector<CellPos> relax_centroids(const Scenario& sc, std::vector<CellPos> centroids);

// Geodesic Voronoi labeling from relaxed distant centroids.
Segmentation segment_pap(const Scenario& sc, int n_w);

// Same pipeline as segment_pap, but the final labeling solve slows the fronts
// near obstacles: F = min(1, clearance/c0) with c0 = 2*cell_size, floored at
// kRapSpeedFloor so wall-adjacent cells (clearance 0) stay reachable.
Segmentation segment_rap(const Scenario& sc, int n_w);

inline constexpr double kRapSpeedFloor = 0.05;

// Speed field used by segment_rap's final solve; exposed for inspection.
SpeedField rap_speed_field(const GridMap& grid, double c0);

// Per-segment cell counts, indexed by label-1. Sums to the free-cell count.
std::vector<int> segment_stats(const Segmentation& seg);

}  // namespace gatherplan
