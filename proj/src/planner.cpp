#include "fleeta/planner.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <set>

namespace fleeta {

bool path_valid(const GridMap& map, const Path& path) {
  if (path.cells.empty()) return false;
  for (const Cell& c : path.cells)
    if (!map.is_free(c)) return false;
  for (size_t k = 1; k < path.cells.size(); ++k) {
    int d = manhattan(path.cells[k - 1], path.cells[k]);
    if (d > 1) return false;
  }
  return true;
}

CostField dijkstra_field(const GridMap& map, const Cell& goal) {
  if (!map.in_bounds(goal)) throw OutOfBounds("distance field goal out of bounds");
  if (!map.is_free(goal)) throw OccupiedGoal("distance field goal is occupied");
  CostField field;
  field.width = map.width;
  field.height = map.height;
  field.dist.assign(map.size(), CostField::kUnreachable);
  // Unit edge costs: breadth-first expansion is exact.
  std::deque<int> queue{map.index(goal)};
  field.dist[map.index(goal)] = 0.0;
  while (!queue.empty()) {
    int idx = queue.front();
    queue.pop_front();
    double d = field.dist[idx];
    for (const Cell& n : neighbors(map, map.cell(idx))) {
      int ni = map.index(n);
      if (field.dist[ni] == CostField::kUnreachable) {
        field.dist[ni] = d + 1.0;
        queue.push_back(ni);
      }
    }
  }
  return field;
}

uint64_t EdgePenalties::key(const Cell& from, const Cell& to) {
  auto pack = [](const Cell& c) {
    return (static_cast<uint64_t>(static_cast<uint16_t>(c.y)) << 16) |
           static_cast<uint64_t>(static_cast<uint16_t>(c.x));
  };
  return (pack(from) << 32) | pack(to);
}

double EdgePenalties::factor(const Cell& from, const Cell& to) const {
  auto it = factors_.find(key(from, to));
  return it == factors_.end() ? 1.0 : it->second;
}

void EdgePenalties::multiply(const Cell& from, const Cell& to, double f) {
  if (f < 1.0)
    throw std::invalid_argument("edge penalty factors must be >= 1");
  auto [it, inserted] = factors_.try_emplace(key(from, to), f);
  if (!inserted) it->second *= f;
}

namespace {

struct OpenEntry {
  double f;
  int y;
  int x;
  uint64_t seq;
  int idx;
  // Min-heap: smaller f first, then smaller (y, x), then discovery order.
  bool operator>(const OpenEntry& o) const {
    if (f != o.f) return f > o.f;
    if (y != o.y) return y > o.y;
    if (x != o.x) return x > o.x;
    return seq > o.seq;
  }
};

}  // namespace

Path astar(const GridMap& map, const Cell& start, const Cell& goal,
           const EdgePenalties& penalties) {
  if (!map.in_bounds(start) || !map.in_bounds(goal))
    throw OutOfBounds("A* endpoint out of bounds");
  if (!map.is_free(start)) throw OccupiedCell("A* start is occupied");
  if (!map.is_free(goal)) throw OccupiedCell("A* goal is occupied");

  std::vector<double> g(map.size(), std::numeric_limits<double>::infinity());
  std::vector<int> parent(map.size(), -1);
  std::vector<uint8_t> closed(map.size(), 0);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, std::greater<>> open;
  uint64_t seq = 0;

  int si = map.index(start), gi = map.index(goal);
  g[si] = 0.0;
  open.push({static_cast<double>(manhattan(start, goal)), start.y, start.x,
             seq++, si});
  while (!open.empty()) {
    OpenEntry top = open.top();
    open.pop();
    if (closed[top.idx]) continue;
    closed[top.idx] = 1;
    if (top.idx == gi) break;
    Cell c = map.cell(top.idx);
    for (const Cell& n : neighbors(map, c)) {
      int ni = map.index(n);
      if (closed[ni]) continue;
      double ng = g[top.idx] + penalties.factor(c, n);
      if (ng < g[ni]) {
        g[ni] = ng;
        parent[ni] = top.idx;
        open.push({ng + manhattan(n, goal), n.y, n.x, seq++, ni});
      }
    }
  }
  if (!closed[gi]) throw NoPath("goal unreachable from start");

  Path path;
  for (int idx = gi; idx != -1; idx = parent[idx])
    path.cells.push_back(map.cell(idx));
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

std::vector<Path> suggest_routes(const GridMap& map, const Cell& start,
                                 const Cell& goal, int k,
                                 double penalty_factor) {
  if (k < 1) throw std::invalid_argument("suggest_routes requires k >= 1");
  if (penalty_factor < 1.0)
    throw std::invalid_argument("penalty factor must be >= 1");
  EdgePenalties penalties;
  std::vector<Path> routes;
  for (int iter = 0; iter < k; ++iter) {
    Path p = astar(map, start, goal, penalties);
    if (std::find(routes.begin(), routes.end(), p) == routes.end())
      routes.push_back(p);
    if (iter + 1 == k) break;
    // Penalize every directed edge used by any route found so far, making
    // the next search favour unexplored corridors.
    std::set<std::pair<int, int>> edges;
    for (const Path& r : routes)
      for (size_t i = 1; i < r.cells.size(); ++i)
        edges.insert({map.index(r.cells[i - 1]), map.index(r.cells[i])});
    for (const auto& [from, to] : edges)
      penalties.multiply(map.cell(from), map.cell(to), penalty_factor);
  }
  std::stable_sort(routes.begin(), routes.end(),
                   [](const Path& a, const Path& b) {
                     return a.cells.size() < b.cells.size();
                   });
  return routes;
}

}  // namespace fleeta
