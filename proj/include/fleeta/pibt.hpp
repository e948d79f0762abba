/*
 * pibt.hpp
 *
 * Priority Inheritance with Backtracking, adapted to the conflict taxonomy
 * used here.  Per timestep every agent greedily descends its distance field;
 * when the desired cell is held by a lower-priority agent, that agent
 * inherits the priority and moves first, recursing as needed.  Priorities
 * grow while an agent is away from its goal and reset on arrival; ties break
 * toward the lower agent id.
 *
 * One deliberate deviation from the published rules: an agent may never move
 * onto the current cell of any agent in the active inheritance chain.  The
 * original formulation forbids only the parent's cell, which permits k >= 3
 * rotation cycles; those count as conflicts in this codebase, so the rule is
 * widened to the whole chain (follows behind departing agents stay legal).
 */
#pragma once

#include "fleeta/sim.hpp"

namespace fleeta {

// Plans and executes noise-free joint motion until every agent rests at its
// goal.  The result is trace-shaped: positions per timestep plus settle
// times.  Throws SimTimeout when the system has not converged within
// max_timesteps.
ExecutionTrace pibt(const GridMap& map, const std::vector<AgentTask>& tasks,
                    int max_timesteps = 1000);

}  // namespace fleeta
