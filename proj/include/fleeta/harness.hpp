#pragma once

// Experiment harness: model training over a scenario dataset, pooled metric
// evaluation, the planner noise sweep, and deterministic CSV output helpers.

#include <cstdint>
#include <string>
#include <vector>

#include "fleeta/dataset.hpp"
#include "fleeta/nn/model.hpp"

namespace fleeta {

struct TrainLogRow {
  int epoch = 0;
  double lr = 0.0;
  double train_mape = 0.0;  // mean per-scenario loss over the epoch
};

struct TrainResult {
  nn::ModelParams params;
  std::vector<TrainLogRow> log;
};

// Sequential single-scenario updates (batch size one), one pass over the
// records per epoch.  Non-finite values abort with scenario and epoch
// context.
TrainResult train_model(const ScenarioDataset& data,
                        const nn::TrainConfig& config, int tile_size = 5,
                        double t_scale = 100.0);

struct Metrics {
  double mape = 0.0;
  double rmse = 0.0;
  double mae = 0.0;
  size_t edges = 0;
};

struct EvalReport {
  Metrics naive;  // stored naive arrivals vs labels
  Metrics model;  // closed-loop predictions vs labels, same edges
};

// Pools every labelled eta edge across the dataset's records.  Inference is
// closed-loop (the model feeds back its own predictions), which is the same
// computation for a teacher-forced or closed-loop trained checkpoint.
EvalReport evaluate(const nn::ModelParams& params, const ScenarioDataset& data,
                    int tile_size = 5, double t_scale = 100.0);

enum class PlannerKind { Naive, ConflictAware, Pibt, Cbs };

const char* planner_name(PlannerKind kind);

struct SweepPlanner {
  PlannerKind kind;
  const nn::ModelParams* params = nullptr;  // required for ConflictAware
};

struct SweepRow {
  std::string planner;
  double noise = 0.0;
  int seeds = 0;     // runs that finished
  int failures = 0;  // runs that timed out
  double mean_makespan = 0.0;
  double std_makespan = 0.0;
  double mean_soc = 0.0;
  double std_soc = 0.0;
};

// Replays each planner's plans through the executor across noise levels and
// seeds.  All planners see identical tasks and identical noise streams
// (streams keyed by noise level and seed index only).  Timeouts count as
// failures and are excluded from the means.
std::vector<SweepRow> noise_sweep(const GridMap& map,
                                  const std::vector<AgentTask>& tasks,
                                  const std::vector<SweepPlanner>& planners,
                                  const std::vector<double>& noise_levels,
                                  int n_seeds, uint64_t seed);

// ---- deterministic artifact helpers ----

uint64_t fnv1a64(const std::string& text);

// Shortest decimal representation that round-trips to the same double.
std::string format_real(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace fleeta
