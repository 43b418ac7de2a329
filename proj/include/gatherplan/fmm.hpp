#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "gatherplan/scenario.hpp"

namespace gatherplan {

constexpr double kInfTime = std::numeric_limits<double>::infinity();

/** Per-cell front propagation speed; obstacles carry 0. */
struct SpeedField {
  std::vector<double> f;

  static SpeedField uniform(const GridMap& grid, double speed = 1.0);
  double at(const GridMap& grid, CellPos p) const { return f[grid.index(p)]; }
};

/** Per-cell first-arrival time of the front, +inf where never reached. */
struct ArrivalField {
  int width = 0;
  int height = 0;
  double cell_size = 1.0;
  std::vector<double> t;

  double at(CellPos p) const { return t[p.row * width + p.col]; }
  bool reached(CellPos p) const { return at(p) < kInfTime; }
};

/** Which source's front arrived first; -1 where unreached. */
struct LabelField {
  int width = 0;
  int height = 0;
  std::vector<int32_t> label;

  int32_t at(CellPos p) const { return label[p.row * width + p.col]; }
};

struct FmmResult {
  ArrivalField arrival;
  LabelField labels;
};

/** First-order upwind fast marching from the given sources. Labels are the
 *  caller's source indices; competing fronts inherit the label of the
 *  neighbor that determined the arrival time. `source_speed_scale`, when
 *  nonempty, multiplies the cell speed per front (one factor per source),
 *  and fronts claim cells exclusively during the march.
 *  Boundary ties resolve toward the source with the smaller cell index, so
 *  the result does not depend on source order. */
FmmResult fmm_solve(const GridMap& grid, const SpeedField& speed,
                    std::span<const CellPos> sources,
                    std::span<const double> source_speed_scale = {});

struct GeodesicPath {
  std::vector<CellPos> cells;  // start first, a source cell last
  double length = 0.0;         // meters
};

/** Greedy steepest-descent over 8-neighbors from start to a zero-time cell.
 *  Throws std::invalid_argument if start was never reached. */
GeodesicPath extract_path(const ArrivalField& field, CellPos start);

/** Unit-speed arrival times from every border or obstacle-adjacent free
 *  cell; approximates distance to the nearest obstacle. */
ArrivalField clearance_field(const GridMap& grid);

/** Row-major CSV dumps; unreached cells print as `inf`, unlabeled as -1. */
std::string arrival_to_csv(const ArrivalField& field);
std::string labels_to_csv(const LabelField& field);

}  // namespace gatherplan
