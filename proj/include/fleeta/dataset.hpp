#pragma once

// Scenario datasets for training and evaluating the arrival-time model.
// Each record bundles a generated warehouse map, sampled tasks, the naive
// shortest-path plans, and the noise-free executed trajectories those plans
// produced.  Arrival labels are derived from the stored trajectories at
// graph-build time, so one dataset serves any tile size.

#include <cstdint>
#include <string>
#include <vector>

#include "fleeta/grid.hpp"
#include "fleeta/hetgraph.hpp"
#include "fleeta/planner.hpp"
#include "fleeta/sim.hpp"

namespace fleeta {

struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioRecord {
  std::string map_id;  // "s<seed>-m<index>", unique per generation seed
  GridMap map;
  std::vector<AgentTask> tasks;
  std::vector<Path> plans;  // naive A* path per task
  // Realized noise-free trajectory per agent (simulator output).
  std::vector<std::vector<Cell>> positions;
};

struct ScenarioDataset {
  uint64_t seed = 0;
  std::vector<ScenarioRecord> records;
};

struct DatasetParams {
  int n_maps = 1;
  int width = 24;
  int height = 24;
  int robots = 10;
  uint64_t seed = 0;
  double tc_factor = 1.5;  // time constraint = round(tc_factor * naive time)
};

// Samples `n` tasks on the map: pairwise-distinct free starts,
// pairwise-distinct free goals, and start != goal per agent.  Time
// constraints follow the tc_factor rule.  Throws GenerationFailed when the
// map has too few free cells.
std::vector<AgentTask> sample_tasks(const GridMap& map, int n, uint64_t seed,
                                    double tc_factor = 1.5);

// Deterministic dataset generation: per record, a generated map, sampled
// tasks, naive plans, and the noise-free execution that labels them.
ScenarioDataset gen_dataset(const DatasetParams& params);

void save_dataset(const ScenarioDataset& data, const std::string& path);
ScenarioDataset load_dataset(const std::string& path);

// Builds the record's labelled graph: static layer at `tile_size`, dynamic
// layer from the naive plans, and per-edge arrival labels replayed from the
// stored trajectories.
HetGraph record_graph(const ScenarioRecord& record, int tile_size,
                      double t_scale = 100.0);

}  // namespace fleeta
