#include <doctest.h>

#include "fleeta/dataset.hpp"
#include "fleeta/pibt.hpp"
#include "fleeta/planner.hpp"

using namespace fleeta;

namespace {

std::vector<Path> realized_paths(const ExecutionTrace& trace) {
  std::vector<Path> out;
  for (const auto& cells : trace.positions) out.push_back(Path{cells, 0});
  return out;
}

}  // namespace

TEST_CASE("pibt: a single agent walks a shortest path") {
  GridMap map = GridMap::empty(6, 6);
  std::vector<AgentTask> tasks = {{0, {0, 0}, {5, 3}, 20}};
  ExecutionTrace trace = pibt(map, tasks);
  CHECK(trace.actual_arrival[0] == manhattan({0, 0}, {5, 3}));
  CHECK(trace.positions[0].front() == Cell{0, 0});
  CHECK(trace.positions[0].back() == Cell{5, 3});
}

TEST_CASE("pibt: one agent yields at a crossing") {
  GridMap map = GridMap::empty(5, 5);
  std::vector<AgentTask> tasks = {{0, {2, 0}, {2, 4}, 20},
                                  {1, {0, 2}, {4, 2}, 20}};
  ExecutionTrace trace = pibt(map, tasks);
  CHECK(trace.actual_arrival[0] >= 4);
  CHECK(trace.actual_arrival[1] >= 4);
  // Exactly one of the two can cross (2,2) unhindered.
  CHECK(trace.actual_arrival[0] + trace.actual_arrival[1] >= 8);
  CHECK(detect_conflicts(realized_paths(trace)).empty());
}

TEST_CASE("pibt: an opposed pair settles without swapping") {
  GridMap map = GridMap::empty(4, 4);
  std::vector<AgentTask> tasks = {{0, {0, 1}, {3, 1}, 20},
                                  {1, {3, 1}, {0, 1}, 20}};
  ExecutionTrace trace = pibt(map, tasks);
  CHECK(detect_conflicts(realized_paths(trace)).empty());
  CHECK(trace.positions[0].back() == Cell{3, 1});
  CHECK(trace.positions[1].back() == Cell{0, 1});
}

TEST_CASE("pibt: crowded open maps settle conflict-free") {
  GridMap map = GridMap::empty(8, 8);
  for (uint64_t seed = 0; seed < 50; ++seed) {
    auto tasks = sample_tasks(map, 8, seed);
    ExecutionTrace trace = pibt(map, tasks);
    for (size_t i = 0; i < tasks.size(); ++i) {
      CHECK(trace.actual_arrival[i] >= 0);
      CHECK(trace.positions[i].back() == tasks[i].goal);
    }
    CHECK(detect_conflicts(realized_paths(trace)).empty());
  }
}

TEST_CASE("pibt: output is deterministic") {
  GridMap map = GridMap::empty(8, 8);
  auto tasks = sample_tasks(map, 6, 11);
  ExecutionTrace a = pibt(map, tasks);
  ExecutionTrace b = pibt(map, tasks);
  CHECK(a.positions == b.positions);
  CHECK(a.actual_arrival == b.actual_arrival);
}
