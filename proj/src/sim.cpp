#include "fleeta/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include <json.hpp>

#include "fleeta/hetgraph.hpp"
#include "fleeta/rng.hpp"

namespace fleeta {

namespace {

std::string join_ids(const std::vector<int>& ids) {
  std::string s;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(ids[i]);
  }
  return s;
}

}  // namespace

SimTimeout::SimTimeout(std::vector<int> unfinished_)
    : SimError("simulation timed out; unfinished agents: " +
               join_ids(unfinished_)),
      unfinished(std::move(unfinished_)) {}

const char* conflict_kind_name(ConflictKind kind) {
  switch (kind) {
    case ConflictKind::Vertex: return "vertex";
    case ConflictKind::Edge: return "edge";
    case ConflictKind::Swapping: return "swapping";
    case ConflictKind::Cycle: return "cycle";
  }
  return "?";
}

namespace {

uint64_t pack_cell(const Cell& c) {
  return (static_cast<uint64_t>(static_cast<uint32_t>(c.y)) << 32) |
         static_cast<uint32_t>(c.x);
}

bool conflict_order(const Conflict& a, const Conflict& b) {
  if (a.time != b.time) return a.time < b.time;
  if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  if (a.agents != b.agents) return a.agents < b.agents;
  auto key = [](const std::vector<Cell>& cs) {
    std::vector<std::pair<int, int>> k;
    for (const Cell& c : cs) k.emplace_back(c.y, c.x);
    return k;
  };
  return key(a.cells) < key(b.cells);
}

}  // namespace

std::vector<Conflict> detect_conflicts(const std::vector<Path>& paths) {
  const int n = static_cast<int>(paths.size());
  std::vector<Conflict> out;
  if (n == 0) return out;
  const int start = paths[0].start_time;
  int T = 0;
  for (const Path& p : paths) {
    if (p.cells.empty())
      throw std::invalid_argument("conflict detection on an empty path");
    if (p.start_time != start)
      throw std::invalid_argument("paths must be time-aligned");
    T = std::max(T, static_cast<int>(p.cells.size()) - 1);
  }
  auto pos = [&](int i, int t) -> const Cell& {
    const auto& cs = paths[i].cells;
    return cs[std::min<size_t>(t, cs.size() - 1)];
  };

  for (int t = 0; t <= T; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (pos(i, t) == pos(j, t))
          out.push_back({ConflictKind::Vertex, {i, j}, start + t,
                         {pos(i, t)}});

  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const Cell &a = pos(i, t), &b = pos(i, t + 1);
        const Cell &c = pos(j, t), &d = pos(j, t + 1);
        if (a == b || c == d) continue;  // at least one agent waits
        if (a == d && b == c)
          out.push_back({ConflictKind::Swapping, {i, j}, start + t + 1,
                         {a, b}});
        else if (a == c && b == d)
          out.push_back({ConflictKind::Edge, {i, j}, start + t + 1, {a, b}});
      }

    // Rotation cycles: follow the "moves into the cell of" successor chain;
    // each mover has at most one successor, so every cycle is found once.
    std::unordered_map<uint64_t, int> at_cell;  // source cell -> lowest agent
    for (int i = 0; i < n; ++i)
      if (!(pos(i, t) == pos(i, t + 1))) at_cell.try_emplace(pack_cell(pos(i, t)), i);
    std::vector<int> state(n, 0);  // 0 new, 1 on current walk, 2 done
    for (int i = 0; i < n; ++i) {
      if (state[i] != 0 || pos(i, t) == pos(i, t + 1)) continue;
      std::vector<int> walk;
      int cur = i;
      while (true) {
        if (state[cur] == 1) {  // closed a loop within this walk
          auto it = std::find(walk.begin(), walk.end(), cur);
          std::vector<int> cycle(it, walk.end());
          if (cycle.size() >= 3) {
            std::sort(cycle.begin(), cycle.end());
            std::vector<Cell> cells;
            for (int a : cycle) cells.push_back(pos(a, t));
            out.push_back({ConflictKind::Cycle, cycle, start + t + 1, cells});
          }
          break;
        }
        if (state[cur] == 2) break;
        state[cur] = 1;
        walk.push_back(cur);
        auto it = at_cell.find(pack_cell(pos(cur, t + 1)));
        if (it == at_cell.end() || it->second == cur) break;
        cur = it->second;
      }
      for (int a : walk) state[a] = 2;
    }
  }

  std::sort(out.begin(), out.end(), conflict_order);
  return out;
}

// ---------------------------------------------------------------------------
// Windowed local repair
// ---------------------------------------------------------------------------

namespace {

struct Reservations {
  std::unordered_map<uint64_t, int> vtx;   // (cell, tau) -> agent
  std::unordered_map<uint64_t, int> edge;  // (from, to, tau) -> agent
  static uint64_t vkey(int idx, int tau) {
    return (static_cast<uint64_t>(idx) << 9) | static_cast<uint64_t>(tau);
  }
  static uint64_t ekey(int from, int to, int tau) {
    return (static_cast<uint64_t>(from) << 34) |
           (static_cast<uint64_t>(to) << 9) | static_cast<uint64_t>(tau);
  }
};

// Pads a window to exactly `w` moves by resting at the final cell.
std::vector<Cell> pad_window(const Cell& cur, std::vector<Cell> moves, int w) {
  if (moves.empty()) moves.push_back(cur);
  while (static_cast<int>(moves.size()) < w) moves.push_back(moves.back());
  moves.resize(w);
  return moves;
}

bool window_feasible(const GridMap& map, const Cell& cur,
                     const std::vector<Cell>& moves, const Reservations& res) {
  Cell prev = cur;
  for (size_t tau = 0; tau < moves.size(); ++tau) {
    const Cell& next = moves[tau];
    if (res.vtx.count(Reservations::vkey(map.index(next),
                                         static_cast<int>(tau) + 1)))
      return false;
    if (!(next == prev) &&
        res.edge.count(Reservations::ekey(map.index(next), map.index(prev),
                                          static_cast<int>(tau))))
      return false;  // would swap across a reserved edge
    prev = next;
  }
  return true;
}

void reserve_window(const GridMap& map, int agent, const Cell& cur,
                    const std::vector<Cell>& moves, int w, Reservations& res) {
  Cell prev = cur;
  for (size_t tau = 0; tau < moves.size(); ++tau) {
    const Cell& next = moves[tau];
    res.vtx.emplace(Reservations::vkey(map.index(next),
                                       static_cast<int>(tau) + 1), agent);
    if (!(next == prev))
      res.edge.emplace(Reservations::ekey(map.index(prev), map.index(next),
                                          static_cast<int>(tau)), agent);
    prev = next;
  }
  // Hold the final cell for the rest of the window so later agents do not
  // plan through a spot this agent may still occupy.
  Cell last = moves.empty() ? cur : moves.back();
  for (int tau = static_cast<int>(moves.size()) + 1; tau <= w; ++tau)
    res.vtx.emplace(Reservations::vkey(map.index(last), tau), agent);
}

// Space-time replan within the window: forward dynamic program over
// (cell, tau) respecting reservations, then the deepest reachable layer is
// scanned for the cell closest to the agent's goal.  Returns >= 0 moves.
std::vector<Cell> window_replan(const GridMap& map, const Cell& cur,
                                const CostField& goal_dist, bool hold_first,
                                int w, const Reservations& res) {
  const int size = map.size();
  std::vector<std::vector<int>> parent(w + 1, std::vector<int>(size, -2));
  std::vector<std::vector<int>> frontier(w + 1);
  parent[0][map.index(cur)] = -1;
  frontier[0].push_back(map.index(cur));
  for (int tau = 0; tau < w; ++tau) {
    for (int idx : frontier[tau]) {
      Cell c = map.cell(idx);
      std::vector<Cell> cand = neighbors(map, c);
      cand.push_back(c);  // waiting is always a candidate move
      for (const Cell& n : cand) {
        if (tau == 0 && hold_first && !(n == c)) continue;
        int ni = map.index(n);
        if (parent[tau + 1][ni] != -2) continue;
        if (res.vtx.count(Reservations::vkey(ni, tau + 1))) continue;
        if (ni != idx &&
            res.edge.count(Reservations::ekey(ni, idx, tau)))
          continue;
        parent[tau + 1][ni] = idx;
        frontier[tau + 1].push_back(ni);
      }
    }
  }
  for (int tau = w; tau >= 1; --tau) {
    if (frontier[tau].empty()) continue;
    int best = -1;
    double best_d = 0;
    for (int idx : frontier[tau]) {
      Cell c = map.cell(idx);
      double d = goal_dist.at(c);
      if (best < 0 || d < best_d ||
          (d == best_d && cell_less(c, map.cell(best)))) {
        best = idx;
        best_d = d;
      }
    }
    std::vector<Cell> moves(tau);
    int idx = best;
    for (int k = tau; k >= 1; --k) {
      moves[k - 1] = map.cell(idx);
      idx = parent[k][idx];
    }
    return moves;
  }
  return {cur};  // boxed in: wait
}

}  // namespace

std::vector<std::vector<Cell>> whca_local_repair(
    const GridMap& map, const std::vector<WindowAgent>& agents, int window) {
  if (window < 1) throw std::invalid_argument("repair window must be >= 1");
  const int n = static_cast<int>(agents.size());
  for (int i = 0; i < n; ++i) {
    const WindowAgent& a = agents[i];
    if (!map.is_free(a.current))
      throw std::invalid_argument("agent on an occupied or out-of-map cell");
    if (static_cast<int>(a.moves.size()) > window)
      throw std::invalid_argument("intended window longer than the horizon");
    if (!a.parked && a.goal_dist == nullptr)
      throw std::invalid_argument("active agents need a distance field");
    for (int j = 0; j < i; ++j)
      if (!agents[j].parked && !a.parked &&
          agents[j].priority == a.priority)
        throw std::invalid_argument("agent priorities must be distinct");
  }

  // Parked agents are fixed obstacles; everyone else is processed in
  // descending priority and replans around the accumulated reservations.
  std::vector<int> order;
  for (int i = 0; i < n; ++i)
    if (agents[i].parked) order.push_back(i);
  std::vector<int> active;
  for (int i = 0; i < n; ++i)
    if (!agents[i].parked) active.push_back(i);
  std::sort(active.begin(), active.end(), [&](int a, int b) {
    return agents[a].priority > agents[b].priority;
  });
  order.insert(order.end(), active.begin(), active.end());

  Reservations res;
  std::vector<std::vector<Cell>> adjusted(n);
  for (int i : order) {
    const WindowAgent& a = agents[i];
    if (a.parked) {
      adjusted[i] = std::vector<Cell>(window, a.current);
      reserve_window(map, i, a.current, adjusted[i], window, res);
      continue;
    }
    std::vector<Cell> intended = pad_window(a.current, a.moves, window);
    if (a.hold_first) intended[0] = a.current;
    if (window_feasible(map, a.current, intended, res))
      adjusted[i] = intended;
    else
      adjusted[i] = window_replan(map, a.current, *a.goal_dist, a.hold_first,
                                  window, res);
    reserve_window(map, i, a.current, adjusted[i], window, res);
  }

  // Joint validation of the step that will actually execute.  Reservations
  // are optimistic about lower-priority agents, so a move can still target a
  // cell whose owner ended up staying; demote such movers to a wait until
  // the joint step is clean.  Waiting in place is always jointly safe.
  for (int round = 0; round <= n; ++round) {
    std::vector<Path> step(n);
    for (int i = 0; i < n; ++i)
      step[i] = Path{{agents[i].current, adjusted[i][0]}, 0};
    std::vector<Conflict> conflicts = detect_conflicts(step);
    if (conflicts.empty()) break;
    const Conflict& c = conflicts.front();
    int victim = -1;
    for (int i : c.agents) {
      if (adjusted[i][0] == agents[i].current) continue;  // already waiting
      if (victim < 0 || agents[i].priority < agents[victim].priority)
        victim = i;
    }
    if (victim < 0)
      throw SimError("unresolvable joint step (duplicate agent positions?)");
    adjusted[victim] = {agents[victim].current};
  }

  // Deeper window steps can still hide a rotation (reservations cannot see
  // one forming) or cross a demoted waiter; truncate every window just
  // before the earliest remaining conflict.  Only the first step executes,
  // so shorter windows cost nothing.
  {
    std::vector<Path> win(n);
    for (int i = 0; i < n; ++i) {
      win[i].cells.push_back(agents[i].current);
      win[i].cells.insert(win[i].cells.end(), adjusted[i].begin(),
                          adjusted[i].end());
    }
    std::vector<Conflict> conflicts = detect_conflicts(win);
    if (!conflicts.empty()) {
      int keep = std::max(1, conflicts.front().time - 1);
      for (int i = 0; i < n; ++i)
        if (static_cast<int>(adjusted[i].size()) > keep)
          adjusted[i].resize(keep);
    }
  }
  return adjusted;
}

// ---------------------------------------------------------------------------
// Executor
// ---------------------------------------------------------------------------

int advance_progress(const Path& plan, int k, const Cell& cur) {
  const auto& cs = plan.cells;
  const int len = static_cast<int>(cs.size());
  if (k + 1 < len && cs[k + 1] == cur) return k + 1;
  if (cs[k] == cur) return k;
  for (int j = k + 1; j < len; ++j)
    if (cs[j] == cur) return j;
  return k;  // off plan
}

namespace {

// First index from which the plan rests at its final cell forever.
int rest_index(const Path& plan) {
  int r = static_cast<int>(plan.cells.size()) - 1;
  while (r > 0 && plan.cells[r - 1] == plan.cells.back()) --r;
  return r;
}

}  // namespace

ExecutionTrace run(const GridMap& map, const std::vector<AgentTask>& tasks,
                   const std::vector<Path>& plans, const SimConfig& cfg) {
  const int n = static_cast<int>(tasks.size());
  if (plans.size() != tasks.size())
    throw std::invalid_argument("one plan per task required");
  if (cfg.noise_wait_prob < 0.0 || cfg.noise_wait_prob >= 1.0)
    throw std::invalid_argument("noise_wait_prob must be in [0, 1)");
  if (cfg.whca_window < 1 || cfg.max_timesteps < 1)
    throw std::invalid_argument("window and max_timesteps must be positive");
  for (int i = 0; i < n; ++i) {
    if (!path_valid(map, plans[i]))
      throw std::invalid_argument("plan " + std::to_string(i) +
                                  " is not a valid path on this map");
    if (plans[i].start_time != 0)
      throw std::invalid_argument("plans must be aligned to timestep 0");
    if (!(plans[i].cells.front() == tasks[i].start) ||
        !(plans[i].cells.back() == tasks[i].goal))
      throw std::invalid_argument("plan endpoints must match the task");
    for (int j = 0; j < i; ++j) {
      if (tasks[j].id == tasks[i].id)
        throw std::invalid_argument("agent ids must be unique");
      if (tasks[j].start == tasks[i].start)
        throw std::invalid_argument("agent starts must be distinct");
    }
  }

  ExecutionTrace trace;
  trace.config = cfg;
  trace.positions.resize(n);
  trace.actual_arrival.assign(n, -1);
  if (n == 0) return trace;

  const int W = cfg.whca_window;
  std::vector<CostField> fields(n);
  std::vector<std::mt19937_64> rngs;
  std::vector<Cell> cur(n);
  std::vector<int> progress(n, 0), rest_from(n);
  std::vector<bool> arrived(n, false);
  std::vector<std::vector<Cell>> pending(n);  // declared detours in progress
  // Arrived agents never move again, so routing treats their cells as
  // walls; otherwise an agent parked on the only doorway would trap anyone
  // routed through it (the static distance field cannot see the blockage).
  GridMap blocked = map;
  bool fields_stale = true;
  for (int i = 0; i < n; ++i) {
    rngs.push_back(make_rng(
        substream_seed(cfg.rng_seed, static_cast<uint64_t>(tasks[i].id))));
    cur[i] = tasks[i].start;
    rest_from[i] = rest_index(plans[i]);
    trace.positions[i].push_back(cur[i]);
    if (cur[i] == tasks[i].goal && progress[i] >= rest_from[i]) {
      arrived[i] = true;
      trace.actual_arrival[i] = 0;
      blocked.set(cur[i], kOccupied);
    }
  }

  // True when a parked agent sits on the not-yet-executed part of the plan.
  // Such a plan can never complete, and half-following it livelocks: the
  // repair pushes the agent off the doomed route whenever the blockage is
  // inside its window and the plan pulls it back whenever it is not.
  auto plan_blocked = [&](int i) {
    const auto& cs = plans[i].cells;
    for (int j = progress[i]; j < static_cast<int>(cs.size()); ++j)
      if (!blocked.is_free(cs[j])) return true;
    return false;
  };

  // Intended window: the plan suffix while on plan, otherwise the shortest
  // route back onto the earliest reachable remaining plan cell.  A plan
  // blocked by a parked agent is abandoned for a greedy descent of the
  // parked-aware distance field (a shortest route to the goal).
  auto derive_window = [&](int i, bool dead) -> std::vector<Cell> {
    const auto& cs = plans[i].cells;
    const int len = static_cast<int>(cs.size());
    int k = progress[i];
    if (dead) {
      std::vector<Cell> w;
      Cell c = cur[i];
      for (int s = 0; s < W; ++s) {
        Cell best = c;
        double best_d = fields[i].at(c);
        for (const Cell& nb : neighbors(blocked, c)) {
          double d = fields[i].at(nb);
          if (d < best_d) {  // strictly downhill; fixed order breaks ties
            best_d = d;
            best = nb;
          }
        }
        if (best == c) break;  // at the goal, or sealed off: rest
        w.push_back(best);
        c = best;
      }
      return pad_window(cur[i], std::move(w), W);
    }
    if (cs[k] == cur[i]) {
      std::vector<Cell> w(cs.begin() + std::min(k + 1, len - 1) + 0,
                          cs.begin() + std::min(k + 1 + W, len));
      if (k + 1 >= len) w.clear();
      return pad_window(cur[i], std::move(w), W);
    }
    // Off plan: breadth-first distances from the current cell, then rejoin
    // at the remaining plan cell that is nearest (ties to the earliest
    // index).
    std::vector<int> dist(map.size(), -1), par(map.size(), -1);
    std::deque<int> queue{map.index(cur[i])};
    dist[map.index(cur[i])] = 0;
    while (!queue.empty()) {
      int idx = queue.front();
      queue.pop_front();
      for (const Cell& nb : neighbors(blocked, map.cell(idx))) {
        int ni = map.index(nb);
        if (dist[ni] < 0) {
          dist[ni] = dist[idx] + 1;
          par[ni] = idx;
          queue.push_back(ni);
        }
      }
    }
    int best_j = -1;
    for (int j = k; j < len; ++j) {
      int d = dist[map.index(cs[j])];
      if (d < 0) continue;
      if (best_j < 0 || d < dist[map.index(cs[best_j])]) best_j = j;
    }
    if (best_j < 0) return pad_window(cur[i], {}, W);  // cornered: wait
    std::vector<Cell> back;
    for (int idx = map.index(cs[best_j]); idx != -1; idx = par[idx])
      back.push_back(map.cell(idx));
    std::reverse(back.begin(), back.end());
    std::vector<Cell> w(back.begin() + 1, back.end());
    for (int j = best_j + 1; j < len && static_cast<int>(w.size()) < W; ++j)
      w.push_back(cs[j]);
    return pad_window(cur[i], std::move(w), W);
  };

  for (int t = 0;; ++t) {
    bool all_done = true;
    for (int i = 0; i < n; ++i) all_done = all_done && arrived[i];
    if (all_done) break;
    if (t >= cfg.max_timesteps) {
      std::vector<int> unfinished;
      for (int i = 0; i < n; ++i)
        if (!arrived[i]) unfinished.push_back(tasks[i].id);
      throw SimTimeout(std::move(unfinished));
    }

    if (fields_stale) {
      for (int i = 0; i < n; ++i)
        if (!arrived[i]) fields[i] = dijkstra_field(blocked, tasks[i].goal);
      fields_stale = false;
    }

    std::vector<WindowAgent> wagents(n);
    std::vector<bool> forced_wait(n, false);
    for (int i = 0; i < n; ++i) {
      WindowAgent& a = wagents[i];
      a.current = cur[i];
      a.parked = arrived[i];
      if (arrived[i]) continue;
      a.goal_dist = &fields[i];
      bool forced = false;
      if (cfg.noise_wait_prob > 0.0) {
        forced = uniform01(rngs[i]) < cfg.noise_wait_prob;
        if (forced) ++trace.forced_waits;
      }
      forced_wait[i] = forced;
      const bool dead = plan_blocked(i);
      // A rerouted agent keeps declaring the rest of its detour until it is
      // used up.  Re-deriving intent from the plan every step instead would
      // tug the agent back toward the plan mid-detour, and lateness
      // priorities alternate between two blocked agents, so each one undoes
      // the other's progress forever (the declared moves stay checked and
      // repairable each step, so this stays safe).
      std::vector<Cell> w = pending[i].empty()
                                ? derive_window(i, dead)
                                : pad_window(cur[i], pending[i], W);
      if (forced) {
        w.insert(w.begin(), cur[i]);
        w.resize(W);
        a.hold_first = true;
      }
      a.moves = std::move(w);
      double remaining =
          (!dead && plans[i].cells[progress[i]] == cur[i])
              ? static_cast<double>(static_cast<int>(plans[i].cells.size()) -
                                    1 - progress[i])
              : fields[i].at(cur[i]);
      if (!std::isfinite(remaining))  // goal sealed off by parked agents
        remaining = static_cast<double>(map.size());
      a.priority = priority_feature(t, remaining, tasks[i].time_constraint,
                                    tasks[i].id);
    }

    std::vector<std::vector<Cell>> adjusted =
        whca_local_repair(map, wagents, W);
    bool changed = false;
    for (int i = 0; i < n; ++i)
      if (!arrived[i] && !(adjusted[i][0] == wagents[i].moves[0]))
        changed = true;
    if (changed) ++trace.resolved_conflict_count;

    for (int i = 0; i < n; ++i) {
      if (!arrived[i]) {
        bool deviated = false;
        for (size_t p = 0; p < adjusted[i].size(); ++p)
          if (!(adjusted[i][p] == wagents[i].moves[p])) deviated = true;
        if (deviated)
          pending[i].assign(adjusted[i].begin() + 1, adjusted[i].end());
        else if (!pending[i].empty() && !forced_wait[i])
          pending[i].erase(pending[i].begin());  // one declared move executed
        cur[i] = adjusted[i][0];
        progress[i] = advance_progress(plans[i], progress[i], cur[i]);
      }
      trace.positions[i].push_back(cur[i]);
      if (!arrived[i] && cur[i] == tasks[i].goal &&
          progress[i] >= rest_from[i]) {
        arrived[i] = true;
        trace.actual_arrival[i] = t + 1;
        blocked.set(cur[i], kOccupied);
        fields_stale = true;
      }
    }
  }

  // All agents are parked at their goals; positions share one length.
  return trace;
}

int makespan(const ExecutionTrace& trace) {
  int m = 0;
  for (size_t i = 0; i < trace.actual_arrival.size(); ++i) {
    if (trace.actual_arrival[i] < 0)
      throw IncompleteTrace("agent " + std::to_string(i) + " never arrived");
    m = std::max(m, trace.actual_arrival[i]);
  }
  return m;
}

long long sum_of_costs(const ExecutionTrace& trace) {
  long long s = 0;
  for (size_t i = 0; i < trace.actual_arrival.size(); ++i) {
    if (trace.actual_arrival[i] < 0)
      throw IncompleteTrace("agent " + std::to_string(i) + " never arrived");
    s += trace.actual_arrival[i];
  }
  return s;
}

std::string trace_to_json(const ExecutionTrace& trace) {
  nlohmann::ordered_json j;
  j["config"] = {{"noise_wait_prob", trace.config.noise_wait_prob},
                 {"rng_seed", trace.config.rng_seed},
                 {"whca_window", trace.config.whca_window},
                 {"max_timesteps", trace.config.max_timesteps}};
  j["arrivals"] = trace.actual_arrival;
  j["forced_waits"] = trace.forced_waits;
  j["resolved_conflicts"] = trace.resolved_conflict_count;
  j["makespan"] = makespan(trace);
  j["sum_of_costs"] = sum_of_costs(trace);
  nlohmann::ordered_json pos = nlohmann::ordered_json::array();
  for (const auto& agent : trace.positions) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (const Cell& c : agent) row.push_back({c.x, c.y});
    pos.push_back(std::move(row));
  }
  j["positions"] = std::move(pos);
  return j.dump(2) + "\n";
}

}  // namespace fleeta
