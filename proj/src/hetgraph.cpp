#include "fleeta/hetgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <json.hpp>

namespace fleeta {

StaticLayer build_static_layer(const GridMap& map, int tile_size) {
  if (tile_size < 1) throw std::invalid_argument("tile size must be >= 1");
  StaticLayer layer;
  layer.tile_size = tile_size;
  layer.width = map.width;
  layer.height = map.height;
  layer.tiles_x = (map.width + tile_size - 1) / tile_size;
  layer.tiles_y = (map.height + tile_size - 1) / tile_size;
  layer.cell_to_node.assign(map.size(), -1);

  for (int ty = 0; ty < layer.tiles_y; ++ty)
    for (int tx = 0; tx < layer.tiles_x; ++tx) {
      const int x0 = tx * tile_size, y0 = ty * tile_size;
      // Tile occupancy patch; cells hanging over the map edge count as
      // occupied.
      std::vector<double> patch(static_cast<size_t>(tile_size) * tile_size,
                                1.0);
      for (int dy = 0; dy < tile_size; ++dy)
        for (int dx = 0; dx < tile_size; ++dx) {
          Cell c{x0 + dx, y0 + dy};
          if (map.in_bounds(c))
            patch[dy * tile_size + dx] =
                (map.occupancy[map.index(c)] == kFree) ? 0.0 : 1.0;
        }
      // Connected free regions within the tile, discovered in row-major
      // order; each becomes one stacked floor node.
      int component = 0;
      for (int dy = 0; dy < tile_size; ++dy)
        for (int dx = 0; dx < tile_size; ++dx) {
          Cell seed{x0 + dx, y0 + dy};
          if (!map.is_free(seed) || layer.cell_to_node[map.index(seed)] >= 0)
            continue;
          int id = static_cast<int>(layer.floors.size());
          std::deque<Cell> queue{seed};
          layer.cell_to_node[map.index(seed)] = id;
          while (!queue.empty()) {
            Cell c = queue.front();
            queue.pop_front();
            for (const Cell& nb : neighbors(map, c)) {
              if (nb.x < x0 || nb.x >= x0 + tile_size || nb.y < y0 ||
                  nb.y >= y0 + tile_size)
                continue;  // component is local to the tile
              if (layer.cell_to_node[map.index(nb)] < 0) {
                layer.cell_to_node[map.index(nb)] = id;
                queue.push_back(nb);
              }
            }
          }
          layer.floors.push_back({id, tx, ty, component++, patch});
        }
    }

  // Association edges: free adjacency across node boundaries, both
  // directions, plus one self-loop per node.
  std::vector<std::pair<int, int>> assoc;
  for (const FloorNode& f : layer.floors) assoc.emplace_back(f.id, f.id);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      Cell c{x, y};
      if (!map.is_free(c)) continue;
      int a = layer.cell_to_node[map.index(c)];
      for (const Cell& nb : neighbors(map, c)) {
        int b = layer.cell_to_node[map.index(nb)];
        if (a != b) assoc.emplace_back(a, b);
      }
    }
  std::sort(assoc.begin(), assoc.end());
  assoc.erase(std::unique(assoc.begin(), assoc.end()), assoc.end());
  layer.assoc = std::move(assoc);
  return layer;
}

double priority_feature(double t_current, double t_path, double t_constraint,
                        int agent_id, int id_modulus) {
  if (id_modulus < 1) throw std::invalid_argument("id modulus must be >= 1");
  if (agent_id < 0 || agent_id >= id_modulus)
    throw IdOverflow("agent id " + std::to_string(agent_id) +
                     " does not fit below modulus " +
                     std::to_string(id_modulus));
  double base =
      static_cast<double>(std::llround(t_current + t_path - t_constraint));
  return base + static_cast<double>(agent_id) / id_modulus;
}

std::vector<PlanRun> plan_runs(const StaticLayer& layer, const Path& plan) {
  std::vector<PlanRun> runs;
  for (int k = 0; k < static_cast<int>(plan.cells.size()); ++k) {
    const Cell& c = plan.cells[k];
    if (c.x < 0 || c.x >= layer.width || c.y < 0 || c.y >= layer.height ||
        layer.node_at(c) < 0)
      throw UnmappedCell("plan cell (" + std::to_string(c.x) + ", " +
                         std::to_string(c.y) + ") maps to no floor node");
    int node = layer.node_at(c);
    if (!runs.empty() && runs.back().floor == node)
      runs.back().last = k;
    else
      runs.push_back({node, k, k});
  }
  // A leading single-cell run is the robot's current position with nothing
  // left to traverse: its waypoint is reached at time zero, which carries no
  // information and breaks percentage-error losses.  Drop it unless it is
  // the whole plan.
  if (runs.size() > 1 && runs.front().first == 0 && runs.front().last == 0)
    runs.erase(runs.begin());
  return runs;
}

HetGraph build_dynamic_layer(const StaticLayer& layer,
                             const std::vector<Path>& plans,
                             const std::vector<AgentTask>& tasks,
                             long t_current, double t_scale) {
  if (plans.size() != tasks.size())
    throw std::invalid_argument("one plan per task required");
  if (t_scale <= 0) throw std::invalid_argument("t_scale must be positive");
  HetGraph g;
  g.static_layer = layer;
  g.t_scale = t_scale;
  g.t_max = 0;
  for (size_t i = 0; i < plans.size(); ++i) {
    double t_path = static_cast<double>(plans[i].cells.size()) - 1;
    g.robots.push_back(
        {tasks[i].id,
         priority_feature(static_cast<double>(t_current), t_path,
                          tasks[i].time_constraint, tasks[i].id)});
    std::vector<PlanRun> runs = plan_runs(layer, plans[i]);
    for (size_t r = 0; r < runs.size(); ++r) {
      EtaEdge e;
      e.robot = static_cast<int>(i);
      e.floor = runs[r].floor;
      e.timestamp = static_cast<int>(r);
      e.naive_duration = runs[r].last - runs[r].first + 1;
      e.naive_arrival =
          static_cast<double>(t_current + plans[i].start_time + runs[r].last);
      g.eta.push_back(e);
      g.t_max = std::max(g.t_max, e.timestamp);
    }
  }
  return g;
}

std::vector<double> edge_arrival_labels(const StaticLayer& layer,
                                        const Path& plan,
                                        const std::vector<Cell>& realized) {
  if (realized.empty() || !(realized.front() == plan.cells.front()))
    throw std::invalid_argument(
        "realized trajectory must start at the plan's first cell");
  std::vector<PlanRun> runs = plan_runs(layer, plan);
  // Progress index over time, replayed with the executor's own rule.
  std::vector<int> progress(realized.size());
  progress[0] = 0;
  for (size_t t = 1; t < realized.size(); ++t)
    progress[t] = advance_progress(plan, progress[t - 1], realized[t]);
  std::vector<double> labels;
  labels.reserve(runs.size());
  const double last_t = static_cast<double>(realized.size()) - 1;
  for (const PlanRun& run : runs) {
    double label = last_t;
    for (size_t t = 0; t < realized.size(); ++t)
      if (progress[t] >= run.last) {
        label = static_cast<double>(t) + plan.start_time;
        break;
      }
    labels.push_back(label);
  }
  return labels;
}

std::string hetgraph_to_json(const HetGraph& g) {
  nlohmann::ordered_json j;
  j["tile_size"] = g.static_layer.tile_size;
  j["t_scale"] = g.t_scale;
  j["t_max"] = g.t_max;
  nlohmann::ordered_json floors = nlohmann::ordered_json::array();
  for (const FloorNode& f : g.static_layer.floors)
    floors.push_back({{"id", f.id},
                      {"tile", {f.tile_x, f.tile_y}},
                      {"component", f.component},
                      {"patch", f.patch}});
  j["floor_nodes"] = std::move(floors);
  nlohmann::ordered_json assoc = nlohmann::ordered_json::array();
  for (const auto& [a, b] : g.static_layer.assoc) assoc.push_back({a, b});
  j["assoc_edges"] = std::move(assoc);
  nlohmann::ordered_json robots = nlohmann::ordered_json::array();
  for (const RobotNode& r : g.robots)
    robots.push_back({{"agent_id", r.agent_id}, {"priority", r.priority}});
  j["robot_nodes"] = std::move(robots);
  nlohmann::ordered_json eta = nlohmann::ordered_json::array();
  for (const EtaEdge& e : g.eta) {
    nlohmann::ordered_json row = {{"robot", e.robot},
                                  {"floor", e.floor},
                                  {"timestamp", e.timestamp},
                                  {"naive_duration", e.naive_duration},
                                  {"naive_arrival", e.naive_arrival}};
    if (e.has_label) row["label"] = e.label;
    eta.push_back(std::move(row));
  }
  j["eta_edges"] = std::move(eta);
  return j.dump(2) + "\n";
}

}  // namespace fleeta
