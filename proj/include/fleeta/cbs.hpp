/*
 * cbs.hpp
 *
 * Conflict-Based Search for small instances: a best-first high-level search
 * over constraint sets, with a space-time A* per agent underneath.  Agents
 * rest at (and keep occupying) their goals, and the solution is optimal in
 * sum of arrival times.  The high level splits on the first conflict in the
 * deterministic conflict ordering: two children for vertex / edge / swap
 * conflicts, one child per member for rotation cycles.
 *
 * Guard rails: instances are limited to 6 agents and 12x12 maps, the low
 * level to a fixed horizon, and the tree to a node budget (BudgetExceeded).
 * An exhausted tree or an unreachable goal yields Unsolvable.
 */
#pragma once

#include "fleeta/sim.hpp"

namespace fleeta {

struct CbsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Unsolvable : CbsError {
  using CbsError::CbsError;
};
struct BudgetExceeded : CbsError {
  using CbsError::CbsError;
};

struct CbsLimits {
  int max_agents = 6;
  int max_dim = 12;
  int max_high_level_nodes = 200000;
  int horizon = 0;  // 0: derived from the map size
};

struct JointPlan {
  std::vector<Path> paths;  // aligned with tasks, start at timestep 0
  long long sum_of_costs = 0;
};

JointPlan cbs(const GridMap& map, const std::vector<AgentTask>& tasks,
              const CbsLimits& limits = CbsLimits());

}  // namespace fleeta
