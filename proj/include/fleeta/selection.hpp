#pragma once

// Third stage of the planning pipeline: score candidate paths by how much
// deadline buffer they leave the whole fleet, validate them against the
// per-robot time constraints, and run the sequential plan-commit loop that
// combines route suggestion, what-if graph prediction, and path selection.

#include <vector>

#include "fleeta/nn/model.hpp"
#include "fleeta/planner.hpp"
#include "fleeta/sim.hpp"

namespace fleeta {

struct SelectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LengthMismatch : SelectionError {
  using SelectionError::SelectionError;
};
// No candidate satisfies every time constraint; `fallback_index` is the
// cheapest invalid candidate, usable as a best-effort choice.
struct NoValidPath : SelectionError {
  int fallback_index;
  explicit NoValidPath(int index)
      : SelectionError("no candidate path meets all time constraints"),
        fallback_index(index) {}
};

// cost = sum_i (max(TC) - (TC_i - eta_i))^2.  Penalizes small buffers
// quadratically, so the preferred path maximizes slack fleet-wide.
double path_cost(const std::vector<double>& etas,
                 const std::vector<double>& time_constraints);

// Among candidates whose predicted arrivals all meet their constraints
// (eta <= TC, deadline inclusive), returns the index with the lowest cost;
// ties break toward the lower index.  Throws NoValidPath when every
// candidate violates some constraint.
int select_path(const std::vector<std::vector<double>>& candidate_etas,
                const std::vector<double>& time_constraints);

struct ConflictAwareConfig {
  int num_candidates = 3;  // suggested routes per agent
  int tile_size = 5;
  double t_scale = 100.0;
  long t_current = 0;
};

struct AgentDecision {
  int agent_id = 0;
  int candidate_index = 0;
  bool valid = false;    // false when the fallback of NoValidPath was used
  double cost = 0.0;     // buffer cost of the committed candidate
  std::vector<double> etas;  // predicted arrival per robot, task order
};

struct ConflictAwarePlan {
  std::vector<Path> plans;  // committed path per agent, task order
  std::vector<AgentDecision> decisions;
};

// Full selection loop: agents commit in task order.  Each agent suggests
// candidate routes, evaluates every candidate on a what-if graph (its
// candidate swapped into the current plan set, later agents on their naive
// paths) with the model running in closed-loop prediction, and commits the
// selected path before the next agent plans.
ConflictAwarePlan plan_conflict_aware(const GridMap& map,
                                      const std::vector<AgentTask>& tasks,
                                      const nn::ModelParams& params,
                                      const ConflictAwareConfig& config = {});

}  // namespace fleeta
