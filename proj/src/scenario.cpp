#include "gatherplan/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <queue>
#include <sstream>

namespace gatherplan {

int GridMap::free_count() const {
  int n = 0;
  for (uint8_t o : occupancy) n += (o == 0);
  return n;
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ScenarioError("malformed header: bad numeric value for '" + key + "': " + value);
  }
}

void require_positive(const std::string& key, double v) {
  if (!(v > 0)) throw ScenarioError("non-positive parameter: " + key);
}

// 4-connected flood fill from the OC; unreachable free cells become obstacles.
void keep_operative_space(GridMap& grid, CellPos oc) {
  std::vector<uint8_t> seen(grid.occupancy.size(), 0);
  std::queue<int> q;
  q.push(grid.index(oc));
  seen[grid.index(oc)] = 1;
  while (!q.empty()) {
    int i = q.front();
    q.pop();
    CellPos p = grid.cell(i);
    const CellPos nb[4] = {{p.col + 1, p.row}, {p.col - 1, p.row},
                           {p.col, p.row + 1}, {p.col, p.row - 1}};
    for (CellPos n : nb) {
      if (!grid.is_free(n)) continue;
      int j = grid.index(n);
      if (!seen[j]) {
        seen[j] = 1;
        q.push(j);
      }
    }
  }
  for (size_t i = 0; i < grid.occupancy.size(); ++i)
    if (grid.occupancy[i] == 0 && !seen[i]) grid.occupancy[i] = 1;
}

}  // namespace

Scenario load_scenario(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Scenario sc;
  bool seen_cell_size = false;

  // header: key = value lines until the first blank line
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) break;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ScenarioError("malformed header line: '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ScenarioError("malformed header line: '" + t + "'");
    if (key == "n_agents") {
      double v = parse_number(key, value);
      sc.n_agents = static_cast<int>(v);
      if (sc.n_agents != v || sc.n_agents < 2)
        throw ScenarioError("n_agents must be an integer >= 2");
    } else if (key == "comm_range") {
      sc.comm_range = parse_number(key, value);
      require_positive(key, sc.comm_range);
    } else if (key == "agent_speed") {
      sc.agent_speed = parse_number(key, value);
      require_positive(key, sc.agent_speed);
    } else if (key == "cell_size") {
      sc.grid.cell_size = parse_number(key, value);
      require_positive(key, sc.grid.cell_size);
      seen_cell_size = true;
    } else if (key == "goals_per_segment_per_cycle") {
      double v = parse_number(key, value);
      sc.goals_per_segment_per_cycle = static_cast<int>(v);
      if (sc.goals_per_segment_per_cycle != v || sc.goals_per_segment_per_cycle < 1)
        throw ScenarioError("goals_per_segment_per_cycle must be an integer >= 1");
    } else if (key == "transfer_time_per_goal") {
      sc.transfer_time_per_goal = parse_number(key, value);
      if (sc.transfer_time_per_goal < 0)
        throw ScenarioError("non-positive parameter: transfer_time_per_goal");
    } else if (key == "seed") {
      sc.rng_seed = static_cast<uint64_t>(parse_number(key, value));
    } else {
      throw ScenarioError("malformed header: unknown key '" + key + "'");
    }
  }

  // grid rows
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    rows.push_back(t);
  }
  if (rows.empty()) throw ScenarioError("no grid rows");
  size_t width = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != width)
      throw ScenarioError("grid row length mismatch");

  GridMap& g = sc.grid;
  g.width = static_cast<int>(width);
  g.height = static_cast<int>(rows.size());
  if (!seen_cell_size) g.cell_size = 1.0;
  g.occupancy.assign(static_cast<size_t>(g.width) * g.height, 0);

  bool oc_found = false;
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      char ch = rows[r][c];
      switch (ch) {
        case '#':
          g.occupancy[g.index({c, r})] = 1;
          break;
        case '.':
          break;
        case 'O':
          if (oc_found) throw ScenarioError("duplicated OC");
          oc_found = true;
          sc.oc = {c, r};
          break;
        default:
          throw ScenarioError(std::string("unknown grid character '") + ch + "'");
      }
    }
  }
  if (!oc_found) throw ScenarioError("OC missing (no 'O' cell); OC on obstacle is not representable");
  if (!sc.grid.is_free(sc.oc)) throw ScenarioError("OC on obstacle");

  keep_operative_space(sc.grid, sc.oc);
  if (sc.grid.free_count() < 1) throw ScenarioError("no free cells");
  return sc;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ScenarioError("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return load_scenario(ss.str());
}

namespace {

std::string format_number(double v) {
  if (v == static_cast<long long>(v)) return std::to_string(static_cast<long long>(v));
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

}  // namespace

std::string save_scenario(const Scenario& sc) {
  std::ostringstream out;
  out << "n_agents = " << sc.n_agents << "\n";
  out << "comm_range = " << format_number(sc.comm_range) << "\n";
  out << "agent_speed = " << format_number(sc.agent_speed) << "\n";
  out << "cell_size = " << format_number(sc.grid.cell_size) << "\n";
  out << "goals_per_segment_per_cycle = " << sc.goals_per_segment_per_cycle << "\n";
  out << "transfer_time_per_goal = " << format_number(sc.transfer_time_per_goal) << "\n";
  out << "seed = " << sc.rng_seed << "\n";
  out << "\n";
  for (int r = 0; r < sc.grid.height; ++r) {
    for (int c = 0; c < sc.grid.width; ++c) {
      CellPos p{c, r};
      if (p == sc.oc)
        out << 'O';
      else
        out << (sc.grid.is_free(p) ? '.' : '#');
    }
    out << "\n";
  }
  return out.str();
}

double euclidean_cells(CellPos a, CellPos b) {
  double dc = a.col - b.col;
  double dr = a.row - b.row;
  return std::sqrt(dc * dc + dr * dr);
}

std::vector<CellPos> supercover_line(CellPos a, CellPos b) {
  std::vector<CellPos> out;
  int adx = std::abs(b.col - a.col);
  int ady = std::abs(b.row - a.row);
  int sx = b.col >= a.col ? 1 : -1;
  int sy = b.row >= a.row ? 1 : -1;
  int x = a.col, y = a.row;
  out.push_back({x, y});
  long ix = 0, iy = 0;  // gridline crossings stepped so far
  while (ix < adx || iy < ady) {
    // next crossing parameters: (2ix+1)/(2adx) horizontal vs (2iy+1)/(2ady) vertical
    long lhs = (2 * ix + 1) * static_cast<long>(ady);
    long rhs = (2 * iy + 1) * static_cast<long>(adx);
    if (iy >= ady || (ix < adx && lhs < rhs)) {
      x += sx;
      ++ix;
    } else if (ix >= adx || lhs > rhs) {
      y += sy;
      ++iy;
    } else {
      // exact corner: the segment touches both side cells
      out.push_back({x + sx, y});
      out.push_back({x, y + sy});
      x += sx;
      y += sy;
      ++ix;
      ++iy;
    }
    out.push_back({x, y});
  }
  return out;
}

bool line_of_sight(const GridMap& grid, CellPos a, CellPos b) {
  int adx = std::abs(b.col - a.col);
  int ady = std::abs(b.row - a.row);
  int sx = b.col >= a.col ? 1 : -1;
  int sy = b.row >= a.row ? 1 : -1;
  int x = a.col, y = a.row;
  if (!grid.is_free({x, y})) return false;
  long ix = 0, iy = 0;
  while (ix < adx || iy < ady) {
    long lhs = (2 * ix + 1) * static_cast<long>(ady);
    long rhs = (2 * iy + 1) * static_cast<long>(adx);
    if (iy >= ady || (ix < adx && lhs < rhs)) {
      x += sx;
      ++ix;
    } else if (ix >= adx || lhs > rhs) {
      y += sy;
      ++iy;
    } else {
      if (!grid.is_free({x + sx, y}) || !grid.is_free({x, y + sy})) return false;
      x += sx;
      y += sy;
      ++ix;
      ++iy;
    }
    if (!grid.is_free({x, y})) return false;
  }
  return true;
}

bool in_comm(const Scenario& sc, CellPos a, CellPos b) {
  if (euclidean_cells(a, b) * sc.grid.cell_size > sc.comm_range) return false;
  return line_of_sight(sc.grid, a, b);
}

std::string scenario_hash(const Scenario& sc) {
  std::string text = save_scenario(sc);
  uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace gatherplan
