#include "fleeta/pibt.hpp"

#include <algorithm>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace fleeta {

namespace {

struct PibtState {
  const GridMap& map;
  std::vector<CostField> fields;
  std::vector<Cell> cur;
  std::vector<int> next;                     // cell index or -1 (undecided)
  std::unordered_set<int> other_goals;       // all goal cells, by cell index
  std::vector<int> own_goal;                 // goal cell index per agent
  std::unordered_map<int, int> occupied_now;   // cell index -> agent
  std::unordered_map<int, int> occupied_next;  // cell index -> agent
  std::unordered_set<int> chain;             // agents on the recursion stack

  explicit PibtState(const GridMap& m) : map(m) {}

  // Candidate next cells sorted by remaining distance.  Ties prefer cells
  // that are no other agent's goal, then the fixed neighbor order (up,
  // right, down, left) with the wait move last.  Without the goal-avoidance
  // tie-break, two agents whose goals lie on each other's shortest paths can
  // displace one another forever: the evictee retreats along the contested
  // corridor, parking on the other goal, and the duel repeats.  Sidestepping
  // costs nothing when the distance is tied and breaks the cycle.
  std::vector<Cell> candidates(int i) const {
    using Key = std::tuple<double, int, int>;
    std::vector<std::pair<Key, Cell>> scored;
    auto goal_penalty = [&](const Cell& c) {
      int ci = map.index(c);
      return (ci != own_goal[i] && other_goals.count(ci)) ? 1 : 0;
    };
    std::vector<Cell> nbs = neighbors(map, cur[i]);
    for (size_t k = 0; k < nbs.size(); ++k)
      scored.push_back({{fields[i].at(nbs[k]), goal_penalty(nbs[k]),
                         static_cast<int>(k)},
                        nbs[k]});
    scored.push_back({{fields[i].at(cur[i]), goal_penalty(cur[i]), 4}, cur[i]});
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Cell> out;
    for (auto& s : scored) out.push_back(s.second);
    return out;
  }

  bool plan_agent(int i) {
    chain.insert(i);
    for (const Cell& v : candidates(i)) {
      int vi = map.index(v);
      if (occupied_next.count(vi)) continue;
      auto now = occupied_now.find(vi);
      int occupant = (now != occupied_now.end() && now->second != i)
                         ? now->second
                         : -1;
      // Never step onto the current cell of an agent in the active chain:
      // that is either a swap with the parent or it closes a rotation.
      if (occupant >= 0 && chain.count(occupant)) continue;
      occupied_next[vi] = i;
      next[i] = vi;
      if (occupant >= 0 && next[occupant] < 0) {
        if (!plan_agent(occupant)) {
          // The occupant is stuck and stays, reclaiming the cell.
          if (next[i] == vi) next[i] = -1;
          continue;
        }
      }
      chain.erase(i);
      return true;
    }
    next[i] = map.index(cur[i]);
    occupied_next[next[i]] = i;  // may reclaim a cell a parent hoped to take
    chain.erase(i);
    return false;
  }
};

}  // namespace

ExecutionTrace pibt(const GridMap& map, const std::vector<AgentTask>& tasks,
                    int max_timesteps) {
  const int n = static_cast<int>(tasks.size());
  for (int i = 0; i < n; ++i) {
    if (!map.is_free(tasks[i].start) || !map.is_free(tasks[i].goal))
      throw std::invalid_argument("task endpoints must be free cells");
    for (int j = 0; j < i; ++j) {
      if (tasks[j].id == tasks[i].id)
        throw std::invalid_argument("agent ids must be unique");
      if (tasks[j].start == tasks[i].start)
        throw std::invalid_argument("agent starts must be distinct");
    }
  }

  ExecutionTrace trace;
  trace.positions.resize(n);
  trace.actual_arrival.assign(n, -1);
  if (n == 0) return trace;

  PibtState st(map);
  st.cur.resize(n);
  std::vector<long long> elapsed(n, 0);
  for (int i = 0; i < n; ++i) {
    st.own_goal.push_back(map.index(tasks[i].goal));
    st.other_goals.insert(map.index(tasks[i].goal));
    st.fields.push_back(dijkstra_field(map, tasks[i].goal));
    if (st.fields.back().at(tasks[i].start) == CostField::kUnreachable)
      throw NoPath("goal unreachable for agent " +
                   std::to_string(tasks[i].id));
    st.cur[i] = tasks[i].start;
    trace.positions[i].push_back(st.cur[i]);
  }

  int t_end = -1;
  for (int t = 0; t < max_timesteps; ++t) {
    bool all_home = true;
    for (int i = 0; i < n; ++i)
      all_home = all_home && (st.cur[i] == tasks[i].goal);
    if (all_home) {
      t_end = t;
      break;
    }
    // Plan one joint step: agents in descending priority order.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (elapsed[a] != elapsed[b]) return elapsed[a] > elapsed[b];
      return tasks[a].id < tasks[b].id;
    });
    st.next.assign(n, -1);
    st.occupied_now.clear();
    st.occupied_next.clear();
    st.chain.clear();
    for (int i = 0; i < n; ++i) st.occupied_now[map.index(st.cur[i])] = i;
    for (int i : order)
      if (st.next[i] < 0) st.plan_agent(i);
    for (int i = 0; i < n; ++i) {
      st.cur[i] = map.cell(st.next[i]);
      trace.positions[i].push_back(st.cur[i]);
      elapsed[i] = (st.cur[i] == tasks[i].goal) ? 0 : elapsed[i] + 1;
    }
  }
  if (t_end < 0) {
    std::vector<int> unfinished;
    for (int i = 0; i < n; ++i)
      if (!(st.cur[i] == tasks[i].goal)) unfinished.push_back(tasks[i].id);
    throw SimTimeout(std::move(unfinished));
  }

  // Settle time: the first timestep after which the agent never leaves its
  // goal again.
  for (int i = 0; i < n; ++i) {
    int settle = t_end;
    while (settle > 0 &&
           trace.positions[i][settle - 1] == tasks[i].goal)
      --settle;
    trace.actual_arrival[i] = settle;
  }
  return trace;
}

}  // namespace fleeta
