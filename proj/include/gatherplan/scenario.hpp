#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gatherplan {

struct CellPos {
  int col = 0;
  int row = 0;

  bool operator==(const CellPos&) const = default;
  auto operator<=>(const CellPos&) const = default;
};

/** Occupancy grid. Row-major storage, cell (col, row) at index row*width+col. */
struct GridMap {
  int width = 0;
  int height = 0;
  double cell_size = 1.0;              // meters per cell edge
  std::vector<uint8_t> occupancy;      // 0 = free, 1 = obstacle

  int index(CellPos p) const { return p.row * width + p.col; }
  CellPos cell(int idx) const { return {idx % width, idx / width}; }
  bool in_bounds(CellPos p) const {
    return p.col >= 0 && p.col < width && p.row >= 0 && p.row < height;
  }
  bool is_free(CellPos p) const { return in_bounds(p) && occupancy[index(p)] == 0; }
  int free_count() const;
};

struct Scenario {
  GridMap grid;
  CellPos oc;                          // Operation Center cell
  int n_agents = 20;
  double comm_range = 10.0;            // meters
  double agent_speed = 1.0;            // meters per time-unit
  int goals_per_segment_per_cycle = 3; // k
  double transfer_time_per_goal = 1.0; // tau, time-units
  uint64_t rng_seed = 0;

  // One tick moves an agent one axis step.
  double tick_time() const { return grid.cell_size / agent_speed; }
};

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/** Parse a scenario file: `key = value` header lines, blank line, ASCII grid
 *  (`#` obstacle, `.` free, `O` the OC). Free cells unreachable from the OC
 *  are converted to obstacles. Throws ScenarioError on malformed input. */
Scenario load_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

/** Inverse of load_scenario over the operative scenario. */
std::string save_scenario(const Scenario& sc);

/** Euclidean center-to-center distance in cell units. */
double euclidean_cells(CellPos a, CellPos b);

/** All cells the segment between the two cell centers touches (supercover:
 *  corner grazes include both side cells). */
std::vector<CellPos> supercover_line(CellPos a, CellPos b);

/** True iff no obstacle cell lies on the supercover ray from a to b. */
bool line_of_sight(const GridMap& grid, CellPos a, CellPos b);

/** Range-and-LOS communication predicate (inclusive range bound). */
bool in_comm(const Scenario& sc, CellPos a, CellPos b);

/** FNV-1a hash of the canonical scenario text, as fixed-width hex. */
std::string scenario_hash(const Scenario& sc);

}  // namespace gatherplan
