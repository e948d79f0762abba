#include <doctest.h>

#include "fleeta/rng.hpp"
#include "fleeta/sim.hpp"
#include "support/oracles.hpp"

using namespace fleeta;

namespace {

GridMap from_rows(const std::vector<std::string>& rows) {
  const int h = static_cast<int>(rows.size());
  const int w = static_cast<int>(rows[0].size());
  std::vector<uint8_t> occ;
  for (const auto& r : rows)
    for (char c : r) occ.push_back(c == '#' ? kOccupied : kFree);
  return GridMap(w, h, std::move(occ));
}

Path path_of(std::vector<Cell> cells, int start_time = 0) {
  return Path{std::move(cells), start_time};
}

// Random time-aligned paths with arbitrary (possibly colliding) moves; the
// brute-force checker and the production detector must agree on these.
std::vector<Path> random_paths(std::mt19937_64& rng, int max_agents, int dim,
                               int max_steps) {
  const int n = 2 + static_cast<int>(uniform_below(rng, max_agents - 1));
  std::vector<Path> paths(n);
  for (Path& p : paths) {
    const int steps = 1 + static_cast<int>(uniform_below(rng, max_steps));
    Cell c{static_cast<int>(uniform_below(rng, dim)),
           static_cast<int>(uniform_below(rng, dim))};
    p.cells.push_back(c);
    for (int t = 0; t < steps; ++t) {
      const int dir = static_cast<int>(uniform_below(rng, 5));
      Cell next = c;
      if (dir == 0) next.y -= 1;
      if (dir == 1) next.x += 1;
      if (dir == 2) next.y += 1;
      if (dir == 3) next.x -= 1;
      if (next.x < 0 || next.x >= dim || next.y < 0 || next.y >= dim)
        next = c;
      p.cells.push_back(next);
      c = next;
    }
  }
  return paths;
}

}  // namespace

TEST_CASE("sim: conflict taxonomy hand cases") {
  // Two agents converging on one cell: a single vertex conflict.
  auto vertex = detect_conflicts(
      {path_of({{0, 0}, {1, 0}}), path_of({{2, 0}, {1, 0}})});
  REQUIRE(vertex.size() == 1);
  CHECK(vertex[0].kind == ConflictKind::Vertex);
  CHECK(vertex[0].agents == std::vector<int>{0, 1});
  CHECK(vertex[0].time == 1);
  CHECK(vertex[0].cells == std::vector<Cell>{{1, 0}});

  // A head-on exchange is one swapping conflict, not two edge conflicts.
  auto swap = detect_conflicts(
      {path_of({{0, 0}, {1, 0}}), path_of({{1, 0}, {0, 0}})});
  REQUIRE(swap.size() == 1);
  CHECK(swap[0].kind == ConflictKind::Swapping);
  CHECK(swap[0].time == 1);

  // Two agents on the same directed edge: co-occupancy at both endpoints
  // plus the edge conflict itself.
  auto shared = detect_conflicts(
      {path_of({{0, 0}, {1, 0}}), path_of({{0, 0}, {1, 0}})});
  REQUIRE(shared.size() == 3);
  CHECK(shared[0].kind == ConflictKind::Vertex);
  CHECK(shared[0].time == 0);
  CHECK(shared[1].kind == ConflictKind::Vertex);
  CHECK(shared[1].time == 1);
  CHECK(shared[2].kind == ConflictKind::Edge);
  CHECK(shared[2].time == 1);
  CHECK(shared[2].cells == std::vector<Cell>{{0, 0}, {1, 0}});

  // Three agents rotating around an L-corner: one cycle conflict.
  auto cyc = detect_conflicts({path_of({{0, 0}, {1, 0}}),
                               path_of({{1, 0}, {1, 1}}),
                               path_of({{1, 1}, {0, 0}})});
  REQUIRE(cyc.size() == 1);
  CHECK(cyc[0].kind == ConflictKind::Cycle);
  CHECK(cyc[0].agents == std::vector<int>{0, 1, 2});
  CHECK(cyc[0].time == 1);
  CHECK(cyc[0].cells.size() == 3);

  // Four agents rotating around a square: still one cycle conflict.
  auto cyc4 = detect_conflicts(
      {path_of({{0, 0}, {1, 0}}), path_of({{1, 0}, {1, 1}}),
       path_of({{1, 1}, {0, 1}}), path_of({{0, 1}, {0, 0}})});
  REQUIRE(cyc4.size() == 1);
  CHECK(cyc4[0].kind == ConflictKind::Cycle);
  CHECK(cyc4[0].agents.size() == 4);

  // Disjoint paths and empty input are conflict-free.
  CHECK(detect_conflicts({path_of({{0, 0}, {1, 0}}),
                          path_of({{3, 3}, {3, 2}})})
            .empty());
  CHECK(detect_conflicts({}).empty());
}

TEST_CASE("sim: conflicts respect path start times and rest-at-end") {
  // Shifted start time shifts the reported conflict time.
  auto shifted = detect_conflicts(
      {path_of({{0, 0}, {1, 0}}, 5), path_of({{1, 0}, {0, 0}}, 5)});
  REQUIRE(shifted.size() == 1);
  CHECK(shifted[0].time == 6);

  // A short path rests at its final cell, so a later walk over that cell
  // still collides.
  auto rest = detect_conflicts(
      {path_of({{2, 0}}), path_of({{0, 0}, {1, 0}, {2, 0}})});
  REQUIRE(rest.size() >= 1);
  CHECK(rest[0].kind == ConflictKind::Vertex);
  CHECK(rest[0].time == 2);

  CHECK_THROWS_AS(
      detect_conflicts({path_of({{0, 0}}, 0), path_of({{1, 0}}, 2)}),
      std::invalid_argument);
}

TEST_CASE("sim: conflict ordering is (time, kind, agents)") {
  // Swap between agents 2,3 at t=1; vertex between 0,1 at t=2.
  auto out = detect_conflicts(
      {path_of({{0, 0}, {0, 1}, {0, 2}}), path_of({{0, 4}, {0, 3}, {0, 2}}),
       path_of({{3, 0}, {4, 0}, {4, 0}}), path_of({{4, 0}, {3, 0}, {3, 0}})});
  REQUIRE(out.size() == 2);
  CHECK(out[0].kind == ConflictKind::Swapping);
  CHECK(out[0].time == 1);
  CHECK(out[0].agents == std::vector<int>{2, 3});
  CHECK(out[1].kind == ConflictKind::Vertex);
  CHECK(out[1].time == 2);
  CHECK(out[1].agents == std::vector<int>{0, 1});
}

TEST_CASE("sim: detector matches the brute-force oracle on random instances") {
  auto rng = make_rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    auto paths = random_paths(rng, 6, 8, 12);
    auto got = detect_conflicts(paths);
    auto want = oracle::conflicts(paths);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) CHECK(got[i] == want[i]);
  }
}

TEST_CASE("sim: makespan and sum of costs") {
  ExecutionTrace trace;
  trace.actual_arrival = {3, 5, 4};
  CHECK(makespan(trace) == 5);
  CHECK(sum_of_costs(trace) == 12);

  trace.actual_arrival = {7};
  CHECK(makespan(trace) == 7);
  CHECK(sum_of_costs(trace) == 7);

  trace.actual_arrival.clear();
  CHECK(makespan(trace) == 0);
  CHECK(sum_of_costs(trace) == 0);

  trace.actual_arrival = {3, -1};
  CHECK_THROWS_AS(makespan(trace), IncompleteTrace);
  CHECK_THROWS_AS(sum_of_costs(trace), IncompleteTrace);
}

TEST_CASE("sim: plan progress bookkeeping") {
  Path plan = path_of({{0, 0}, {1, 0}, {2, 0}});
  CHECK(advance_progress(plan, 0, {1, 0}) == 1);   // stepped forward
  CHECK(advance_progress(plan, 0, {0, 0}) == 0);   // repair-imposed wait
  CHECK(advance_progress(plan, 0, {0, 1}) == 0);   // detour holds the index
  CHECK(advance_progress(plan, 0, {2, 0}) == 2);   // rejoin further along
  CHECK(advance_progress(plan, 2, {2, 0}) == 2);   // resting at the end

  Path waity = path_of({{0, 0}, {0, 0}, {1, 0}});
  CHECK(advance_progress(waity, 0, {0, 0}) == 1);  // in-plan wait advances
  CHECK(advance_progress(waity, 1, {1, 0}) == 2);
}

TEST_CASE("sim: single agent executes its plan verbatim at noise zero") {
  GridMap map = GridMap::empty(5, 5);
  Path plan = astar(map, {0, 0}, {4, 4});
  AgentTask task{0, {0, 0}, {4, 4}, 12};
  SimConfig cfg;
  cfg.rng_seed = 7;
  ExecutionTrace trace = run(map, {task}, {plan}, cfg);
  CHECK(trace.actual_arrival[0] ==
        static_cast<int>(plan.cells.size()) - 1);
  CHECK(trace.positions[0] == plan.cells);
  CHECK(trace.forced_waits == 0);
  CHECK(trace.resolved_conflict_count == 0);
}

TEST_CASE("sim: exhausting the step budget raises a timeout") {
  GridMap map = GridMap::empty(5, 5);
  Path plan = astar(map, {0, 0}, {4, 4});  // needs 8 steps
  AgentTask task{0, {0, 0}, {4, 4}, 12};
  SimConfig cfg;
  cfg.max_timesteps = 4;
  bool timed_out = false;
  try {
    run(map, {task}, {plan}, cfg);
  } catch (const SimTimeout& e) {
    timed_out = true;
    CHECK(e.unfinished == std::vector<int>{0});
  }
  CHECK(timed_out);

  // A certain wait every step can never finish, so probability 1 is invalid.
  cfg.noise_wait_prob = 1.0;
  CHECK_THROWS_AS(run(map, {task}, {plan}, cfg), std::invalid_argument);
}

TEST_CASE("sim: head-on swap resolves through a side pocket") {
  GridMap map = from_rows({".....",
                           "##.##"});
  std::vector<AgentTask> tasks = {{0, {0, 0}, {4, 0}, 6},
                                  {1, {4, 0}, {0, 0}, 6}};
  std::vector<Path> plans = {astar(map, {0, 0}, {4, 0}),
                             astar(map, {4, 0}, {0, 0})};
  SimConfig cfg;
  cfg.rng_seed = 1;
  ExecutionTrace trace = run(map, tasks, plans, cfg);

  CHECK(trace.actual_arrival[0] > 4);  // the initially lower-priority agent
  CHECK(trace.actual_arrival[1] >= 4);
  CHECK(trace.resolved_conflict_count >= 1);

  std::vector<Path> realized;
  for (const auto& cells : trace.positions) realized.push_back(path_of(cells));
  CHECK(detect_conflicts(realized).empty());
}

TEST_CASE("sim: execution is deterministic in the seed") {
  GridMap map = GridMap::empty(8, 8);
  std::vector<AgentTask> tasks = {{0, {0, 0}, {7, 7}, 30},
                                  {1, {7, 0}, {0, 7}, 30},
                                  {2, {0, 7}, {7, 0}, 30}};
  std::vector<Path> plans;
  for (const auto& t : tasks) plans.push_back(astar(map, t.start, t.goal));
  SimConfig cfg;
  cfg.noise_wait_prob = 0.2;
  cfg.rng_seed = 42;
  cfg.max_timesteps = 400;
  ExecutionTrace a = run(map, tasks, plans, cfg);
  ExecutionTrace b = run(map, tasks, plans, cfg);
  CHECK(a.positions == b.positions);
  CHECK(a.actual_arrival == b.actual_arrival);
  CHECK(a.forced_waits == b.forced_waits);
  CHECK(a.forced_waits > 0);

  SimConfig other = cfg;
  other.rng_seed = 43;
  ExecutionTrace c = run(map, tasks, plans, other);
  CHECK(a.positions != c.positions);
}

TEST_CASE("sim: noisy executions stay conflict-free and arrive late") {
  GridMap map = GridMap::empty(8, 8);
  std::vector<AgentTask> tasks = {{0, {0, 0}, {7, 7}, 40},
                                  {1, {7, 0}, {0, 7}, 40},
                                  {2, {3, 0}, {3, 7}, 40},
                                  {3, {0, 4}, {7, 4}, 40}};
  std::vector<Path> plans;
  for (const auto& t : tasks) plans.push_back(astar(map, t.start, t.goal));
  for (uint64_t seed = 0; seed < 5; ++seed) {
    SimConfig cfg;
    cfg.noise_wait_prob = 0.15;
    cfg.rng_seed = seed;
    cfg.max_timesteps = 500;
    ExecutionTrace trace = run(map, tasks, plans, cfg);
    std::vector<Path> realized;
    for (const auto& cells : trace.positions)
      realized.push_back(path_of(cells));
    CHECK(detect_conflicts(realized).empty());
    for (size_t i = 0; i < tasks.size(); ++i)
      CHECK(trace.actual_arrival[i] >= plans[i].arrival_time());
  }
}

TEST_CASE("sim: window repair keeps conflict-free intents unchanged") {
  GridMap map = GridMap::empty(6, 6);
  CostField f0 = dijkstra_field(map, {5, 0});
  CostField f1 = dijkstra_field(map, {5, 5});
  std::vector<WindowAgent> agents(2);
  agents[0] = {{0, 0}, {{1, 0}, {2, 0}, {3, 0}}, 1.0, false, false, &f0};
  agents[1] = {{0, 5}, {{1, 5}, {2, 5}, {3, 5}}, 2.0, false, false, &f1};
  auto adjusted = whca_local_repair(map, agents, 3);
  CHECK(adjusted[0] == std::vector<Cell>{{1, 0}, {2, 0}, {3, 0}});
  CHECK(adjusted[1] == std::vector<Cell>{{1, 5}, {2, 5}, {3, 5}});
}

TEST_CASE("sim: window repair yields the claimed cell to higher priority") {
  GridMap map = GridMap::empty(5, 5);
  CostField f0 = dijkstra_field(map, {2, 4});
  CostField f1 = dijkstra_field(map, {2, 0});
  std::vector<WindowAgent> agents(2);
  // Both want (2,2) on the first step.
  agents[0] = {{2, 1}, {{2, 2}, {2, 3}, {2, 4}}, 5.0, false, false, &f0};
  agents[1] = {{2, 3}, {{2, 2}, {2, 1}, {2, 0}}, 1.0, false, false, &f1};
  auto adjusted = whca_local_repair(map, agents, 3);
  CHECK(adjusted[0][0] == Cell{2, 2});      // higher priority keeps its move
  CHECK(!(adjusted[1][0] == Cell{2, 2}));   // lower priority gives way

  std::vector<Path> win(2);
  for (int i = 0; i < 2; ++i) {
    win[i].cells.push_back(agents[i].current);
    win[i].cells.insert(win[i].cells.end(), adjusted[i].begin(),
                        adjusted[i].end());
  }
  CHECK(detect_conflicts(win).empty());
}

TEST_CASE("sim: window repair routes a swap through a free pocket") {
  GridMap map = from_rows({".....",
                           "##.##"});
  CostField f0 = dijkstra_field(map, {4, 0});
  CostField f1 = dijkstra_field(map, {0, 0});
  std::vector<WindowAgent> agents(2);
  agents[0] = {{1, 0}, {{2, 0}, {3, 0}, {4, 0}}, 1.0, false, false, &f0};
  agents[1] = {{3, 0}, {{2, 0}, {1, 0}, {0, 0}}, 2.0, false, false, &f1};
  auto adjusted = whca_local_repair(map, agents, 3);
  CHECK(adjusted[1][0] == Cell{2, 0});  // higher priority holds the corridor

  std::vector<Path> win(2);
  for (int i = 0; i < 2; ++i) {
    win[i].cells.push_back(agents[i].current);
    win[i].cells.insert(win[i].cells.end(), adjusted[i].begin(),
                        adjusted[i].end());
  }
  CHECK(detect_conflicts(win).empty());

  // The loser either ducks into the pocket or retreats; it never pushes on.
  bool pocket_or_yield = true;
  for (const Cell& c : adjusted[0])
    if (c.x > 1 && !(c == Cell{2, 1})) pocket_or_yield = false;
  CHECK(pocket_or_yield);
}

TEST_CASE("sim: window repair treats parked agents as obstacles") {
  GridMap map = from_rows({"...",
                           "#.#",
                           "..."});
  CostField f0 = dijkstra_field(map, {1, 2});
  std::vector<WindowAgent> agents(2);
  agents[0] = {{1, 0}, {{1, 1}, {1, 2}}, 1.0, false, false, &f0};
  agents[1] = {{1, 1}, {}, 0.0, false, true, nullptr};  // parked in the door
  auto adjusted = whca_local_repair(map, agents, 2);
  // The parked agent never moves, and the only route runs through it, so
  // the mover marks time on the top row (which exact cells it idles on is
  // up to the replanner) without ever entering the doorway.
  CHECK(adjusted[1] == std::vector<Cell>{{1, 1}, {1, 1}});
  for (const Cell& c : adjusted[0]) {
    CHECK(!(c == Cell{1, 1}));
    CHECK(c.y == 0);
  }
  std::vector<Path> win(2);
  for (int i = 0; i < 2; ++i) {
    win[i].cells.push_back(agents[i].current);
    win[i].cells.insert(win[i].cells.end(), adjusted[i].begin(),
                        adjusted[i].end());
  }
  CHECK(detect_conflicts(win).empty());
}

TEST_CASE("sim: window repair input validation") {
  GridMap map = GridMap::empty(4, 4);
  CostField f = dijkstra_field(map, {3, 3});
  std::vector<WindowAgent> agents(2);
  agents[0] = {{0, 0}, {{1, 0}}, 1.0, false, false, &f};
  agents[1] = {{0, 1}, {{1, 1}}, 1.0, false, false, &f};
  CHECK_THROWS_AS(whca_local_repair(map, agents, 3), std::invalid_argument);
  agents[1].priority = 2.0;
  agents[1].goal_dist = nullptr;
  CHECK_THROWS_AS(whca_local_repair(map, agents, 3), std::invalid_argument);
  agents[1].goal_dist = &f;
  CHECK_THROWS_AS(whca_local_repair(map, agents, 0), std::invalid_argument);
}
