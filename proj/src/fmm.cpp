#include "gatherplan/fmm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace gatherplan {

SpeedField SpeedField::uniform(const GridMap& grid, double speed) {
  SpeedField s;
  s.f.assign(grid.occupancy.size(), 0.0);
  for (size_t i = 0; i < grid.occupancy.size(); ++i)
    if (grid.occupancy[i] == 0) s.f[i] = speed;
  return s;
}

namespace {

struct Candidate {
  double t = kInfTime;
  long tie = -1;   // cell index of the winning source
  int label = -1;
};

// Upwind update restricted to finalized 4-neighbors of one front. `a` and `b`
// are the best horizontal / vertical times of that front.
double upwind_time(double a, double b, double step) {
  if (a > b) std::swap(a, b);
  if (b - a < step) {
    double s = a + b;
    return 0.5 * (s + std::sqrt(2.0 * step * step - (a - b) * (a - b)));
  }
  return a + step;
}

}  // namespace

FmmResult fmm_solve(const GridMap& grid, const SpeedField& speed,
                    std::span<const CellPos> sources,
                    std::span<const double> source_speed_scale) {
  if (sources.empty()) throw std::invalid_argument("fmm_solve: empty source set");
  if (!source_speed_scale.empty() && source_speed_scale.size() != sources.size())
    throw std::invalid_argument("fmm_solve: speed scale count mismatch");
  const size_t ncells = grid.occupancy.size();
  if (speed.f.size() != ncells) throw std::invalid_argument("fmm_solve: speed field size mismatch");

  FmmResult res;
  res.arrival.width = grid.width;
  res.arrival.height = grid.height;
  res.arrival.cell_size = grid.cell_size;
  res.arrival.t.assign(ncells, kInfTime);
  res.labels.width = grid.width;
  res.labels.height = grid.height;
  res.labels.label.assign(ncells, -1);

  std::vector<long> tie_key(sources.size());
  std::set<int> seen_sources;
  for (size_t s = 0; s < sources.size(); ++s) {
    CellPos p = sources[s];
    if (!grid.is_free(p)) throw std::invalid_argument("fmm_solve: source on obstacle");
    if (!(speed.f[grid.index(p)] > 0))
      throw std::invalid_argument("fmm_solve: source with zero speed");
    if (!seen_sources.insert(grid.index(p)).second)
      throw std::invalid_argument("fmm_solve: duplicate source cell");
    tie_key[s] = grid.index(p);
  }

  std::vector<uint8_t> done(ncells, 0);
  auto scale = [&](int label) {
    return source_speed_scale.empty() ? 1.0 : source_speed_scale[label];
  };

  // Best candidate for an unfinalized cell, grouped per front so that each
  // wavefront expands with its own speed and claims cells exclusively.
  auto compute = [&](CellPos p) -> Candidate {
    Candidate best;
    double f_cell = speed.f[grid.index(p)];
    if (!(f_cell > 0)) return best;
    const CellPos horiz[2] = {{p.col - 1, p.row}, {p.col + 1, p.row}};
    const CellPos vert[2] = {{p.col, p.row - 1}, {p.col, p.row + 1}};
    // collect labels present among finalized 4-neighbors
    int labels_here[4];
    int n_labels = 0;
    auto note_label = [&](CellPos n) {
      if (!grid.in_bounds(n) || !done[grid.index(n)]) return;
      int lb = res.labels.label[grid.index(n)];
      for (int i = 0; i < n_labels; ++i)
        if (labels_here[i] == lb) return;
      labels_here[n_labels++] = lb;
    };
    for (CellPos n : horiz) note_label(n);
    for (CellPos n : vert) note_label(n);
    for (int i = 0; i < n_labels; ++i) {
      int lb = labels_here[i];
      double a = kInfTime, b = kInfTime;
      for (CellPos n : horiz)
        if (grid.in_bounds(n) && done[grid.index(n)] && res.labels.label[grid.index(n)] == lb)
          a = std::min(a, res.arrival.t[grid.index(n)]);
      for (CellPos n : vert)
        if (grid.in_bounds(n) && done[grid.index(n)] && res.labels.label[grid.index(n)] == lb)
          b = std::min(b, res.arrival.t[grid.index(n)]);
      double step = grid.cell_size / (f_cell * scale(lb));
      double t = upwind_time(a, b, step);
      if (t < best.t || (t == best.t && tie_key[lb] < best.tie)) {
        best = {t, tie_key[lb], lb};
      }
    }
    return best;
  };

  using HeapEntry = std::tuple<double, long, int>;  // (time, source tie key, cell)
  std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>> heap;
  for (size_t s = 0; s < sources.size(); ++s) {
    int i = grid.index(sources[s]);
    res.arrival.t[i] = 0.0;
    res.labels.label[i] = static_cast<int>(s);
    heap.push({0.0, tie_key[s], i});
  }

  double last_finalized = 0.0;
  while (!heap.empty()) {
    auto [t, tie, i] = heap.top();
    heap.pop();
    if (done[i]) continue;
    CellPos p = grid.cell(i);
    if (res.arrival.t[i] != 0.0) {
      Candidate c = compute(p);
      res.arrival.t[i] = c.t;
      res.labels.label[i] = c.label;
    }
    done[i] = 1;
    if (res.arrival.t[i] + 1e-9 < last_finalized)
      throw std::logic_error("fmm_solve: non-monotone finalization order");
    last_finalized = res.arrival.t[i];

    const CellPos nb[4] = {{p.col + 1, p.row}, {p.col - 1, p.row},
                           {p.col, p.row + 1}, {p.col, p.row - 1}};
    for (CellPos n : nb) {
      if (!grid.in_bounds(n)) continue;
      int j = grid.index(n);
      if (done[j] || grid.occupancy[j] == 1) continue;
      Candidate c = compute(n);
      if (c.label >= 0 && c.t < res.arrival.t[j]) {
        res.arrival.t[j] = c.t;
        res.labels.label[j] = c.label;
        heap.push({c.t, c.tie, j});
      }
    }
  }

  // provisional values on never-finalized cells are not arrivals
  for (size_t i = 0; i < ncells; ++i) {
    if (!done[i]) {
      res.arrival.t[i] = kInfTime;
      res.labels.label[i] = -1;
    }
  }
  return res;
}

GeodesicPath extract_path(const ArrivalField& field, CellPos start) {
  if (!field.reached(start))
    throw std::invalid_argument("extract_path: start cell was never reached");
  GeodesicPath path;
  path.cells.push_back(start);
  CellPos cur = start;
  const double h = field.cell_size;
  while (field.at(cur) > 0.0) {
    CellPos best{-1, -1};
    double best_t = field.at(cur);
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        CellPos n{cur.col + dc, cur.row + dr};
        if (n.col < 0 || n.col >= field.width || n.row < 0 || n.row >= field.height) continue;
        double t = field.at(n);
        if (t < best_t || (t == best_t && best.col >= 0 &&
                           n.row * field.width + n.col < best.row * field.width + best.col)) {
          best = n;
          best_t = t;
        }
      }
    }
    if (best.col < 0)
      throw std::logic_error("extract_path: descent stalled before reaching a source");
    path.length += (best.col != cur.col && best.row != cur.row) ? h * std::sqrt(2.0) : h;
    cur = best;
    path.cells.push_back(cur);
  }
  return path;
}

ArrivalField clearance_field(const GridMap& grid) {
  std::vector<CellPos> sources;
  for (int r = 0; r < grid.height; ++r) {
    for (int c = 0; c < grid.width; ++c) {
      CellPos p{c, r};
      if (!grid.is_free(p)) continue;
      bool boundary = (c == 0 || r == 0 || c == grid.width - 1 || r == grid.height - 1);
      if (!boundary) {
        const CellPos nb[4] = {{c + 1, r}, {c - 1, r}, {c, r + 1}, {c, r - 1}};
        for (CellPos n : nb) {
          if (!grid.is_free(n)) {
            boundary = true;
            break;
          }
        }
      }
      if (boundary) sources.push_back(p);
    }
  }
  if (sources.empty()) {
    // no obstacles and no borders cannot happen on a finite grid
    throw std::logic_error("clearance_field: no boundary cells");
  }
  return fmm_solve(grid, SpeedField::uniform(grid), sources).arrival;
}

namespace {

std::string format_value(double v) {
  if (v == kInfTime) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string arrival_to_csv(const ArrivalField& field) {
  std::ostringstream out;
  for (int r = 0; r < field.height; ++r) {
    for (int c = 0; c < field.width; ++c) {
      if (c) out << ',';
      out << format_value(field.t[r * field.width + c]);
    }
    out << '\n';
  }
  return out.str();
}

std::string labels_to_csv(const LabelField& field) {
  std::ostringstream out;
  for (int r = 0; r < field.height; ++r) {
    for (int c = 0; c < field.width; ++c) {
      if (c) out << ',';
      out << field.label[r * field.width + c];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace gatherplan
