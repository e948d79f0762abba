/*
 * hetgraph.hpp
 *
 * Spatio-temporal heterogeneous graph over a grid map and a set of robot
 * plans.  The map is divided into square tiles; each connected free region
 * inside a tile becomes one floor node (so a tile split by shelving yields
 * stacked nodes).  Floor nodes are linked where free cells are 4-adjacent
 * across node boundaries, and every node carries a self-loop.  Each robot is
 * one node whose scalar feature encodes its scheduling priority.  A robot's
 * plan is run-length grouped into "eta" edges: one edge per consecutive stay
 * inside a floor node, carrying naive duration / naive arrival / a per-robot
 * timestamp that orders the sequence.
 */
#pragma once

#include <string>
#include <vector>

#include "fleeta/sim.hpp"

namespace fleeta {

struct HetGraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IdOverflow : HetGraphError {
  using HetGraphError::HetGraphError;
};
struct UnmappedCell : HetGraphError {
  using HetGraphError::HetGraphError;
};

struct FloorNode {
  int id = 0;
  int tile_x = 0;
  int tile_y = 0;
  int component = 0;            // index within the tile (row-major discovery)
  std::vector<double> patch;    // tile occupancy, N*N, out-of-map cells = 1
};

struct StaticLayer {
  int tile_size = 0;
  int width = 0;   // map dimensions, for cell lookups
  int height = 0;
  int tiles_x = 0;
  int tiles_y = 0;
  std::vector<FloorNode> floors;
  // Directed association edges between floor nodes, self-loops included,
  // sorted and duplicate-free.
  std::vector<std::pair<int, int>> assoc;
  std::vector<int> cell_to_node;  // -1 for occupied cells

  int node_at(const Cell& c) const { return cell_to_node[c.y * width + c.x]; }
};

StaticLayer build_static_layer(const GridMap& map, int tile_size);

// Scheduling priority: round(t_current + t_path - t_constraint) plus the
// agent id scaled down by id_modulus, which keeps priorities pairwise
// distinct without disturbing the integer part.  t_path is the remaining
// naive travel time, so the integer part is the predicted lateness.  Throws
// IdOverflow when agent_id does not fit below id_modulus.
double priority_feature(double t_current, double t_path, double t_constraint,
                        int agent_id, int id_modulus = 10000);

struct RobotNode {
  int agent_id = 0;
  double priority = 0.0;
};

struct EtaEdge {
  int robot = 0;      // index into HetGraph::robots
  int floor = 0;      // FloorNode::id
  int timestamp = 0;  // per-robot sequence position: 0, 1, 2, ...
  double naive_duration = 0;  // timesteps spent inside the floor node
  double naive_arrival = 0;   // timestep the node's last cell is reached
  double label = 0;           // simulated arrival (when has_label)
  bool has_label = false;
};

// One run of consecutive plan cells inside a single floor node; cell indices
// [first, last] of the plan.
struct PlanRun {
  int floor = 0;
  int first = 0;
  int last = 0;
};

// Tile-grouping of a plan.  A leading run holding only the start cell is
// dropped (the robot exits that tile on its first move, so the run's
// waypoint is already reached at departure time).
std::vector<PlanRun> plan_runs(const StaticLayer& layer, const Path& plan);

struct HetGraph {
  StaticLayer static_layer;
  std::vector<RobotNode> robots;
  std::vector<EtaEdge> eta;
  int t_max = 0;          // largest eta timestamp
  double t_scale = 100.0; // divisor applied to time features before encoding
};

// Builds the dynamic layer on top of a static layer: one robot node and one
// run-length eta edge sequence per plan.  Revisiting a floor node creates a
// new eta edge.  Throws UnmappedCell when a plan cell lies outside the
// layer's free space and IdOverflow for out-of-range agent ids.
HetGraph build_dynamic_layer(const StaticLayer& layer,
                             const std::vector<Path>& plans,
                             const std::vector<AgentTask>& tasks,
                             long t_current, double t_scale = 100.0);

// Actual arrival label per plan run, derived from a realized trajectory:
// the first timestep at which execution progress covers the run's last plan
// cell.  Runs the execution skipped entirely resolve to the final timestep.
std::vector<double> edge_arrival_labels(const StaticLayer& layer,
                                        const Path& plan,
                                        const std::vector<Cell>& realized);

// Node/edge tables as a JSON document (debugging and golden tests).
std::string hetgraph_to_json(const HetGraph& graph);

}  // namespace fleeta
