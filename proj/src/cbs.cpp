#include "fleeta/cbs.hpp"

#include <algorithm>
#include <queue>
#include <unordered_set>

namespace fleeta {

namespace {

struct Constraints {
  std::unordered_set<uint64_t> vtx;   // (cell, t): may not occupy
  std::unordered_set<uint64_t> edge;  // (from, to, t): may not traverse at t
  static uint64_t vkey(int idx, int t) {
    return (static_cast<uint64_t>(idx) << 16) | static_cast<uint64_t>(t);
  }
  static uint64_t ekey(int from, int to, int t) {
    return (static_cast<uint64_t>(from) << 40) |
           (static_cast<uint64_t>(to) << 16) | static_cast<uint64_t>(t);
  }
};

struct StEntry {
  double f;
  int y;
  int x;
  uint64_t seq;
  int state;  // t * size + cell
  bool operator>(const StEntry& o) const {
    if (f != o.f) return f > o.f;
    if (y != o.y) return y > o.y;
    if (x != o.x) return x > o.x;
    return seq > o.seq;
  }
};

// Space-time A* under the agent's constraint set.  The agent rests at its
// goal, so arrival at time t is only accepted when no vertex constraint on
// the goal exists at any t' >= t.  Returns an empty path when infeasible.
Path low_level(const GridMap& map, const Cell& start, const Cell& goal,
               const CostField& h_field, const Constraints& cons,
               int horizon) {
  const int size = map.size();
  int latest_goal = -1;
  for (uint64_t key : cons.vtx)
    if (static_cast<int>(key >> 16) == map.index(goal))
      latest_goal = std::max(latest_goal, static_cast<int>(key & 0xFFFF));

  if (cons.vtx.count(Constraints::vkey(map.index(start), 0))) return {};
  std::vector<int> parent(static_cast<size_t>(size) * (horizon + 1), -2);
  std::priority_queue<StEntry, std::vector<StEntry>, std::greater<>> open;
  uint64_t seq = 0;
  auto push = [&](int cell, int t, int par) {
    int state = t * size + cell;
    if (parent[state] != -2) return;
    parent[state] = par;
    Cell c = map.cell(cell);
    open.push({static_cast<double>(t) + h_field.at(c), c.y, c.x, seq++,
               state});
  };
  push(map.index(start), 0, -1);
  int goal_state = -1;
  while (!open.empty()) {
    StEntry top = open.top();
    open.pop();
    int t = top.state / size, cell = top.state % size;
    if (cell == map.index(goal) && t > latest_goal) {
      goal_state = top.state;
      break;
    }
    if (t >= horizon) continue;
    Cell c = map.cell(cell);
    std::vector<Cell> cand = neighbors(map, c);
    cand.push_back(c);
    for (const Cell& n : cand) {
      int ni = map.index(n);
      if (cons.vtx.count(Constraints::vkey(ni, t + 1))) continue;
      if (ni != cell && cons.edge.count(Constraints::ekey(cell, ni, t)))
        continue;
      push(ni, t + 1, top.state);
    }
  }
  if (goal_state < 0) return {};
  Path path;
  for (int s = goal_state; s != -1; s = parent[s])
    path.cells.push_back(map.cell(s % size));
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

struct CtNode {
  std::vector<Constraints> cons;
  std::vector<Path> paths;
  long long soc = 0;
  int id = 0;
};

}  // namespace

JointPlan cbs(const GridMap& map, const std::vector<AgentTask>& tasks,
              const CbsLimits& limits) {
  const int n = static_cast<int>(tasks.size());
  if (n == 0) return {};
  if (n > limits.max_agents)
    throw std::invalid_argument("instance exceeds the CBS agent guard");
  if (map.width > limits.max_dim || map.height > limits.max_dim)
    throw std::invalid_argument("instance exceeds the CBS map-size guard");
  for (int i = 0; i < n; ++i) {
    if (!map.is_free(tasks[i].start) || !map.is_free(tasks[i].goal))
      throw std::invalid_argument("task endpoints must be free cells");
    for (int j = 0; j < i; ++j) {
      if (tasks[j].id == tasks[i].id)
        throw std::invalid_argument("agent ids must be unique");
      if (tasks[j].start == tasks[i].start)
        throw std::invalid_argument("agent starts must be distinct");
      if (tasks[j].goal == tasks[i].goal)
        throw Unsolvable("two agents rest on the same goal cell");
    }
  }
  const int horizon =
      limits.horizon > 0 ? limits.horizon : 2 * map.size() + 2;

  std::vector<CostField> fields;
  for (int i = 0; i < n; ++i)
    fields.push_back(dijkstra_field(map, tasks[i].goal));

  std::vector<CtNode> arena;
  // Min-heap on (sum of costs, node id).
  std::priority_queue<std::pair<long long, int>,
                      std::vector<std::pair<long long, int>>, std::greater<>>
      open;
  {
    CtNode root;
    root.cons.resize(n);
    for (int i = 0; i < n; ++i) {
      Path p = low_level(map, tasks[i].start, tasks[i].goal, fields[i],
                         root.cons[i], horizon);
      if (p.cells.empty())
        throw Unsolvable("agent " + std::to_string(tasks[i].id) +
                         " cannot reach its goal");
      root.soc += p.arrival_time();
      root.paths.push_back(std::move(p));
    }
    root.id = 0;
    arena.push_back(std::move(root));
    open.push({arena[0].soc, 0});
  }

  int expansions = 0;
  while (!open.empty()) {
    auto [soc, id] = open.top();
    open.pop();
    CtNode node = arena[id];  // by value: arena grows during expansion
    if (++expansions > limits.max_high_level_nodes)
      throw BudgetExceeded("CBS high-level node budget exhausted");
  reexamine:
    std::vector<Conflict> conflicts = detect_conflicts(node.paths);
    if (conflicts.empty())
      return {node.paths, node.soc};
    const Conflict& c = conflicts.front();

    // (agent, banned vertex or edge) per child.
    struct Ban {
      int agent;
      bool is_edge;
      Cell a, b;
      int t;
    };
    std::vector<Ban> bans;
    if (c.kind == ConflictKind::Vertex) {
      bans.push_back({c.agents[0], false, c.cells[0], {}, c.time});
      bans.push_back({c.agents[1], false, c.cells[0], {}, c.time});
    } else if (c.kind == ConflictKind::Edge) {
      bans.push_back({c.agents[0], true, c.cells[0], c.cells[1], c.time - 1});
      bans.push_back({c.agents[1], true, c.cells[0], c.cells[1], c.time - 1});
    } else if (c.kind == ConflictKind::Swapping) {
      bans.push_back({c.agents[0], true, c.cells[0], c.cells[1], c.time - 1});
      bans.push_back({c.agents[1], true, c.cells[1], c.cells[0], c.time - 1});
    } else {  // Cycle: one child per member, banning its rotation step
      for (size_t m = 0; m < c.agents.size(); ++m) {
        int agent = c.agents[m];
        const auto& cells = node.paths[agent].cells;
        auto pos = [&](int t) {
          return cells[std::min<size_t>(t, cells.size() - 1)];
        };
        bans.push_back({agent, true, pos(c.time - 1), pos(c.time),
                        c.time - 1});
      }
    }

    // Replan each banned agent once; the results serve first the bypass
    // test and then, if no bypass applies, the child nodes.
    std::vector<Path> replans(bans.size());
    for (size_t b = 0; b < bans.size(); ++b) {
      const Ban& ban = bans[b];
      Constraints cons = node.cons[ban.agent];
      if (ban.is_edge)
        cons.edge.insert(Constraints::ekey(map.index(ban.a),
                                           map.index(ban.b), ban.t));
      else
        cons.vtx.insert(Constraints::vkey(map.index(ban.a), ban.t));
      replans[b] = low_level(map, tasks[ban.agent].start,
                             tasks[ban.agent].goal, fields[ban.agent], cons,
                             horizon);
    }

    // Bypass: when some replanned path keeps the agent's cost and strictly
    // lowers the node's conflict count, adopt it in place of branching.
    // The node's constraint set is unchanged, so every solution below it
    // stays reachable and the cost ordering is untouched; without this,
    // equal-cost detours in open areas shift a conflict one cell at a time
    // and the tree grows exponentially along the plateau.
    for (size_t b = 0; b < bans.size(); ++b) {
      const Ban& ban = bans[b];
      if (replans[b].cells.empty()) continue;
      if (replans[b].arrival_time() !=
          node.paths[ban.agent].arrival_time())
        continue;
      std::vector<Path> trial = node.paths;
      trial[ban.agent] = replans[b];
      if (detect_conflicts(trial).size() < conflicts.size()) {
        node.paths[ban.agent] = std::move(replans[b]);
        goto reexamine;
      }
    }

    for (size_t b = 0; b < bans.size(); ++b) {
      const Ban& ban = bans[b];
      if (replans[b].cells.empty()) continue;  // infeasible branch
      CtNode child = node;
      if (ban.is_edge)
        child.cons[ban.agent].edge.insert(Constraints::ekey(
            map.index(ban.a), map.index(ban.b), ban.t));
      else
        child.cons[ban.agent].vtx.insert(
            Constraints::vkey(map.index(ban.a), ban.t));
      child.soc += replans[b].arrival_time() -
                   child.paths[ban.agent].arrival_time();
      child.paths[ban.agent] = std::move(replans[b]);
      child.id = static_cast<int>(arena.size());
      open.push({child.soc, child.id});
      arena.push_back(std::move(child));
    }
  }
  throw Unsolvable("constraint tree exhausted");
}

}  // namespace fleeta
