/*
 * sim.hpp
 *
 * Multi-agent discrete-timestep execution on the grid.
 *
 * Conflict taxonomy over simultaneous motion (agents move in lock-step,
 * agents rest at - and keep occupying - their goal cell after arrival):
 *   Vertex    two agents occupy the same cell at the same timestep.
 *   Edge      two agents traverse the same directed edge at the same step.
 *   Swapping  two agents exchange cells across one edge in one step.
 *   Cycle     k >= 3 agents rotate positions simultaneously.
 * Vertex conflicts are reported at the co-occupancy timestep; Edge, Swapping
 * and Cycle conflicts at the timestep the offending transition completes.
 * A swap is reported once as Swapping, never as two Edge conflicts; a k-cycle
 * rotation is reported as a single Cycle conflict.
 *
 * The executor advances one timestep at a time: (1) per-agent forced waits
 * are sampled from independent per-agent RNG substreams, (2) each agent's
 * next few intended moves are checked and repaired with a windowed,
 * priority-ordered, space-time reservation scheme, (3) positions advance by
 * one step.  Executed steps never contain any of the four conflict kinds.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fleeta/planner.hpp"

namespace fleeta {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SimTimeout : SimError {
  std::vector<int> unfinished;  // agent ids still travelling
  explicit SimTimeout(std::vector<int> unfinished_);
};
struct IncompleteTrace : SimError {
  using SimError::SimError;
};

enum class ConflictKind { Vertex = 0, Edge = 1, Swapping = 2, Cycle = 3 };

const char* conflict_kind_name(ConflictKind kind);

struct Conflict {
  ConflictKind kind;
  std::vector<int> agents;  // ascending; 2 agents except Cycle (>= 3)
  int time = 0;
  std::vector<Cell> cells;  // involved cells, aligned with `agents` for Cycle
  bool operator==(const Conflict&) const = default;
};

// Complete conflict enumeration over time-aligned paths (agents rest at
// their final cell).  Deterministic ordering: (time, kind, lowest agent id).
std::vector<Conflict> detect_conflicts(const std::vector<Path>& paths);

struct AgentTask {
  int id = 0;
  Cell start;
  Cell goal;
  int time_constraint = 0;  // latest acceptable arrival timestep
};

struct SimConfig {
  double noise_wait_prob = 0.0;  // per-agent per-timestep forced-wait chance
  uint64_t rng_seed = 0;
  int whca_window = 5;
  int max_timesteps = 1000;
};

struct ExecutionTrace {
  // positions[i][t] for t = 0..makespan; agents rest at goal once arrived.
  std::vector<std::vector<Cell>> positions;
  std::vector<int> actual_arrival;   // first timestep resting at goal
  int resolved_conflict_count = 0;   // window repairs that changed a next move
  long long forced_waits = 0;        // total sampled forced waits
  SimConfig config;
};

// One agent's view of a repair window.
struct WindowAgent {
  Cell current;
  std::vector<Cell> moves;  // intended next cells, length <= window
  double priority = 0.0;    // pairwise distinct; larger value goes first
  bool hold_first = false;  // forced wait: first adjusted move stays put
  bool parked = false;      // resting at goal for the whole window
  const CostField* goal_dist = nullptr;  // distance-to-goal, for replanning
};

// Priority-ordered space-time repair over a W-step window.  Higher-priority
// agents keep their moves; lower-priority agents replan around the
// reservations (waits allowed) and fall back to waiting when boxed in.  The
// returned windows (one per agent, each of length >= 1, <= window) are
// mutually free of all four conflict kinds, and the first step of every
// window is always safe to execute jointly.
std::vector<std::vector<Cell>> whca_local_repair(
    const GridMap& map, const std::vector<WindowAgent>& agents, int window);

// Executes the given plans under forced-wait noise with windowed local
// repair.  plans[i] must start at tasks[i].start and end at tasks[i].goal;
// starts must be pairwise distinct.  Throws SimTimeout when some agent is
// still travelling after cfg.max_timesteps steps.
ExecutionTrace run(const GridMap& map, const std::vector<AgentTask>& tasks,
                   const std::vector<Path>& plans, const SimConfig& cfg);

// Largest / summed arrival timestep.  Throws IncompleteTrace when an agent
// never arrived.  An empty trace has makespan and sum-of-costs 0.
int makespan(const ExecutionTrace& trace);
long long sum_of_costs(const ExecutionTrace& trace);

// Plan-progress bookkeeping: smallest sensible plan index after stepping
// onto `cur` from index k.  In-plan waits advance the index, repair-imposed
// waits hold it, and detours hold it until the plan is rejoined.  Used by
// the executor and by trajectory labelling, which must agree exactly.
int advance_progress(const Path& plan, int k, const Cell& cur);

// One JSON document per run: config echo, per-agent arrivals, conflict
// counters, makespan, sum of costs, and the realized trajectories.
std::string trace_to_json(const ExecutionTrace& trace);

}  // namespace fleeta
