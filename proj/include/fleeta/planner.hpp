/*
 * planner.hpp
 *
 * Single-agent shortest paths on the grid: exact distance fields, A* under
 * multiplicative directed-edge penalties, and a penalty-based route
 * diversifier that proposes several alternative routes per task.
 */
#pragma once

#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "fleeta/grid.hpp"

namespace fleeta {

struct PlannerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoPath : PlannerError {
  using PlannerError::PlannerError;
};
struct OccupiedGoal : PlannerError {
  using PlannerError::PlannerError;
};

// A timed path.  cells[k] is occupied at timestep start_time + k; consecutive
// cells are identical (wait) or 4-adjacent.  Planner output contains no
// waits; executed trajectories and replayed plans may.
struct Path {
  std::vector<Cell> cells;
  int start_time = 0;

  int arrival_time() const {
    return start_time + static_cast<int>(cells.size()) - 1;
  }
  bool operator==(const Path&) const = default;
};

// True if the path is structurally valid on the map (non-empty, all cells
// free, consecutive cells identical or 4-adjacent).
bool path_valid(const GridMap& map, const Path& path);

// Exact unit-cost distance to `goal` from every free cell; occupied or
// unreachable cells hold +infinity.
struct CostField {
  int width = 0;
  int height = 0;
  std::vector<double> dist;

  static constexpr double kUnreachable =
      std::numeric_limits<double>::infinity();
  double at(const Cell& c) const { return dist[c.y * width + c.x]; }
};

CostField dijkstra_field(const GridMap& map, const Cell& goal);

// Multiplicative cost factors on directed grid edges; absent edges have
// factor 1.  Factors never drop below 1, so the Manhattan heuristic stays
// admissible.
class EdgePenalties {
 public:
  double factor(const Cell& from, const Cell& to) const;
  void multiply(const Cell& from, const Cell& to, double f);
  size_t size() const { return factors_.size(); }

 private:
  static uint64_t key(const Cell& from, const Cell& to);
  std::unordered_map<uint64_t, double> factors_;
};

// Minimal-cost path from start to goal where traversing directed edge (u,v)
// costs 1 * penalties.factor(u,v).  Ties are broken deterministically
// (toward smaller (y,x), then discovery order).  Throws NoPath when goal is
// unreachable, OccupiedCell when start or goal is occupied, OutOfBounds when
// either is outside the map.
Path astar(const GridMap& map, const Cell& start, const Cell& goal,
           const EdgePenalties& penalties = EdgePenalties());

// Up to k distinct routes.  The first is the plain A* path; after each
// iteration every directed edge used by any route found so far has its
// penalty factor multiplied by penalty_factor, diverting the next search.
// Duplicates are dropped.  Results are sorted by undiscounted length, then
// discovery order.
std::vector<Path> suggest_routes(const GridMap& map, const Cell& start,
                                 const Cell& goal, int k,
                                 double penalty_factor = 1.2);

}  // namespace fleeta
