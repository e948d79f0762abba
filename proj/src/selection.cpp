#include "fleeta/selection.hpp"

#include <algorithm>

#include "fleeta/hetgraph.hpp"

namespace fleeta {

double path_cost(const std::vector<double>& etas,
                 const std::vector<double>& time_constraints) {
  if (etas.size() != time_constraints.size() || etas.empty())
    throw LengthMismatch("eta and constraint vectors must match");
  double top = *std::max_element(time_constraints.begin(),
                                 time_constraints.end());
  double cost = 0.0;
  for (size_t i = 0; i < etas.size(); ++i) {
    double term = top - (time_constraints[i] - etas[i]);
    cost += term * term;
  }
  return cost;
}

int select_path(const std::vector<std::vector<double>>& candidate_etas,
                const std::vector<double>& time_constraints) {
  if (candidate_etas.empty())
    throw SelectionError("select_path needs at least one candidate");
  int best_valid = -1, best_any = -1;
  double best_valid_cost = 0.0, best_any_cost = 0.0;
  for (size_t c = 0; c < candidate_etas.size(); ++c) {
    const auto& etas = candidate_etas[c];
    double cost = path_cost(etas, time_constraints);
    bool valid = true;
    for (size_t i = 0; i < etas.size(); ++i)
      if (etas[i] > time_constraints[i]) valid = false;
    if (best_any < 0 || cost < best_any_cost) {
      best_any = static_cast<int>(c);
      best_any_cost = cost;
    }
    if (valid && (best_valid < 0 || cost < best_valid_cost)) {
      best_valid = static_cast<int>(c);
      best_valid_cost = cost;
    }
  }
  if (best_valid < 0) throw NoValidPath(best_any);
  return best_valid;
}

ConflictAwarePlan plan_conflict_aware(const GridMap& map,
                                      const std::vector<AgentTask>& tasks,
                                      const nn::ModelParams& params,
                                      const ConflictAwareConfig& config) {
  ConflictAwarePlan result;
  if (tasks.empty()) return result;

  StaticLayer layer = build_static_layer(map, config.tile_size);
  std::vector<double> constraints;
  constraints.reserve(tasks.size());
  for (const AgentTask& task : tasks)
    constraints.push_back(static_cast<double>(task.time_constraint));

  // Everyone starts on their naive shortest path; agents then commit their
  // selected candidate one at a time.
  std::vector<Path> plans;
  plans.reserve(tasks.size());
  for (const AgentTask& task : tasks)
    plans.push_back(astar(map, task.start, task.goal));

  // Closed-loop predicted arrival per robot: the prediction attached to
  // each robot's final eta edge.
  auto predict_etas = [&](const std::vector<Path>& what_if) {
    HetGraph graph = build_dynamic_layer(layer, what_if, tasks,
                                         config.t_current, config.t_scale);
    nn::ForwardResult out =
        nn::forward_recurrent(graph, params, nn::Mode::DMS, false);
    std::vector<double> etas(tasks.size(), 0.0);
    std::vector<int> last_ts(tasks.size(), -1);
    for (size_t e = 0; e < graph.eta.size(); ++e) {
      const EtaEdge& edge = graph.eta[e];
      if (edge.timestamp > last_ts[edge.robot]) {
        last_ts[edge.robot] = edge.timestamp;
        etas[edge.robot] = out.predictions[e];
      }
    }
    return etas;
  };

  for (size_t a = 0; a < tasks.size(); ++a) {
    std::vector<Path> candidates = suggest_routes(
        map, tasks[a].start, tasks[a].goal, config.num_candidates);
    std::vector<std::vector<double>> candidate_etas;
    candidate_etas.reserve(candidates.size());
    std::vector<Path> what_if = plans;
    for (const Path& candidate : candidates) {
      what_if[a] = candidate;
      candidate_etas.push_back(predict_etas(what_if));
    }
    AgentDecision decision;
    decision.agent_id = tasks[a].id;
    try {
      decision.candidate_index = select_path(candidate_etas, constraints);
      decision.valid = true;
    } catch (const NoValidPath& e) {
      decision.candidate_index = e.fallback_index;
      decision.valid = false;
    }
    decision.etas = candidate_etas[decision.candidate_index];
    decision.cost = path_cost(decision.etas, constraints);
    plans[a] = candidates[decision.candidate_index];
    result.decisions.push_back(std::move(decision));
  }
  result.plans = std::move(plans);
  return result;
}

}  // namespace fleeta
