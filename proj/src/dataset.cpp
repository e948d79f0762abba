#include "fleeta/dataset.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fleeta/rng.hpp"

namespace fleeta {

std::vector<AgentTask> sample_tasks(const GridMap& map, int n, uint64_t seed,
                                    double tc_factor) {
  if (n < 1) throw GenerationFailed("need at least one task");
  std::vector<Cell> free_cells;
  for (int idx = 0; idx < map.size(); ++idx)
    if (map.occupancy[idx] == kFree) free_cells.push_back(map.cell(idx));
  if (static_cast<size_t>(n) > free_cells.size())
    throw GenerationFailed("more robots than free cells");

  auto rng = make_rng(seed);
  // Rejection sampling over the free-cell list; bounded so a pathological
  // request fails loudly instead of spinning.
  auto draw_one = [&](const std::vector<Cell>& used, const Cell* avoid) {
    for (long attempt = 0; attempt < 1000L * n + 1000; ++attempt) {
      Cell c = free_cells[uniform_below(rng, free_cells.size())];
      bool taken = avoid && *avoid == c;
      for (const Cell& prev : used)
        if (prev == c) taken = true;
      if (!taken) return c;
    }
    throw GenerationFailed("could not sample distinct task endpoints");
  };

  std::vector<Cell> starts, goals;
  for (int i = 0; i < n; ++i) starts.push_back(draw_one(starts, nullptr));
  for (int i = 0; i < n; ++i) goals.push_back(draw_one(goals, &starts[i]));

  std::vector<AgentTask> tasks(n);
  for (int i = 0; i < n; ++i) {
    tasks[i].id = i;
    tasks[i].start = starts[i];
    tasks[i].goal = goals[i];
    int naive = astar(map, starts[i], goals[i]).arrival_time();
    tasks[i].time_constraint =
        static_cast<int>(std::llround(tc_factor * naive));
  }
  return tasks;
}

ScenarioDataset gen_dataset(const DatasetParams& params) {
  if (params.n_maps < 1) throw GenerationFailed("need at least one map");
  ScenarioDataset data;
  data.seed = params.seed;
  for (int m = 0; m < params.n_maps; ++m) {
    WarehouseGenParams gen;
    gen.seed = substream_seed(params.seed, static_cast<uint64_t>(m));
    gen.width = params.width;
    gen.height = params.height;
    GridMap map = generate_warehouse_map(gen);

    // A rare task draw is unfinishable: agents parked at their goals can
    // seal off another goal's last doorway mid-run.  Such draws carry no
    // arrival labels, so they are rejected and the tasks redrawn.
    constexpr int kMaxDraws = 50;
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxDraws)
        throw GenerationFailed("map " + std::to_string(m) + ": no completable task draw in " +
                               std::to_string(kMaxDraws) + " attempts");
      std::vector<AgentTask> tasks = sample_tasks(
          map, params.robots,
          substream_seed(params.seed, 1000000u + static_cast<uint64_t>(m) +
                                          4000000u * static_cast<uint64_t>(attempt)),
          params.tc_factor);
      std::vector<Path> plans;
      plans.reserve(tasks.size());
      for (const AgentTask& task : tasks)
        plans.push_back(astar(map, task.start, task.goal));
      SimConfig cfg;
      cfg.noise_wait_prob = 0.0;
      cfg.rng_seed = substream_seed(params.seed, 2000000u + static_cast<uint64_t>(m));
      ExecutionTrace trace;
      try {
        trace = run(map, tasks, plans, cfg);
      } catch (const SimTimeout&) {
        continue;
      }
      ScenarioRecord record{
          "s" + std::to_string(params.seed) + "-m" + std::to_string(m),
          std::move(map), std::move(tasks), std::move(plans),
          std::move(trace.positions)};
      data.records.push_back(std::move(record));
      break;
    }
  }
  return data;
}

namespace {

nlohmann::ordered_json cell_json(const Cell& c) {
  return nlohmann::ordered_json::array({c.x, c.y});
}

Cell cell_from_json(const nlohmann::json& j) {
  return Cell{j.at(0).get<int>(), j.at(1).get<int>()};
}

std::vector<std::string> map_rows(const GridMap& map) {
  std::vector<std::string> rows(map.height);
  for (int y = 0; y < map.height; ++y) {
    rows[y].resize(map.width);
    for (int x = 0; x < map.width; ++x)
      rows[y][x] = map.occupancy[y * map.width + x] == kFree ? '.' : '#';
  }
  return rows;
}

GridMap map_from_rows(int width, int height,
                      const std::vector<std::string>& rows) {
  std::vector<uint8_t> occupancy;
  occupancy.reserve(static_cast<size_t>(width) * height);
  for (const std::string& row : rows) {
    if (static_cast<int>(row.size()) != width)
      throw DatasetError("map row width mismatch");
    for (char ch : row) {
      if (ch != '.' && ch != '#') throw DatasetError("bad map character");
      occupancy.push_back(ch == '.' ? kFree : kOccupied);
    }
  }
  return GridMap(width, height, std::move(occupancy));
}

}  // namespace

void save_dataset(const ScenarioDataset& data, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["format"] = "fleeta-dataset";
  doc["version"] = 1;
  doc["seed"] = data.seed;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const ScenarioRecord& record : data.records) {
    nlohmann::ordered_json r;
    r["map_id"] = record.map_id;
    r["map"] = {{"width", record.map.width},
                {"height", record.map.height},
                {"rows", map_rows(record.map)}};
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    for (const AgentTask& task : record.tasks)
      tasks.push_back({{"id", task.id},
                       {"start", cell_json(task.start)},
                       {"goal", cell_json(task.goal)},
                       {"time_constraint", task.time_constraint}});
    r["tasks"] = std::move(tasks);
    nlohmann::ordered_json plans = nlohmann::ordered_json::array();
    for (const Path& plan : record.plans) {
      nlohmann::ordered_json cells = nlohmann::ordered_json::array();
      for (const Cell& c : plan.cells) cells.push_back(cell_json(c));
      plans.push_back(
          {{"start_time", plan.start_time}, {"cells", std::move(cells)}});
    }
    r["plans"] = std::move(plans);
    nlohmann::ordered_json positions = nlohmann::ordered_json::array();
    for (const auto& traj : record.positions) {
      nlohmann::ordered_json cells = nlohmann::ordered_json::array();
      for (const Cell& c : traj) cells.push_back(cell_json(c));
      positions.push_back(std::move(cells));
    }
    r["positions"] = std::move(positions);
    records.push_back(std::move(r));
  }
  doc["records"] = std::move(records);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot open dataset for writing: " + path);
  out << doc.dump(2) << "\n";
}

ScenarioDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("malformed dataset " + path + ": " + e.what());
  }
  try {
    if (doc.value("format", "") != "fleeta-dataset" ||
        doc.value("version", -1) != 1)
      throw DatasetError("unsupported dataset format in " + path);
    ScenarioDataset data;
    data.seed = doc.at("seed").get<uint64_t>();
    for (const auto& r : doc.at("records")) {
      const auto& m = r.at("map");
      ScenarioRecord record{
          r.at("map_id").get<std::string>(),
          map_from_rows(m.at("width").get<int>(), m.at("height").get<int>(),
                        m.at("rows").get<std::vector<std::string>>()),
          {},
          {},
          {}};
      for (const auto& t : r.at("tasks")) {
        AgentTask task;
        task.id = t.at("id").get<int>();
        task.start = cell_from_json(t.at("start"));
        task.goal = cell_from_json(t.at("goal"));
        task.time_constraint = t.at("time_constraint").get<int>();
        record.tasks.push_back(task);
      }
      for (const auto& p : r.at("plans")) {
        Path plan;
        plan.start_time = p.at("start_time").get<int>();
        for (const auto& c : p.at("cells"))
          plan.cells.push_back(cell_from_json(c));
        record.plans.push_back(std::move(plan));
      }
      for (const auto& traj : r.at("positions")) {
        std::vector<Cell> cells;
        for (const auto& c : traj) cells.push_back(cell_from_json(c));
        record.positions.push_back(std::move(cells));
      }
      data.records.push_back(std::move(record));
    }
    return data;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("malformed dataset " + path + ": " + e.what());
  }
}

HetGraph record_graph(const ScenarioRecord& record, int tile_size,
                      double t_scale) {
  StaticLayer layer = build_static_layer(record.map, tile_size);
  HetGraph graph =
      build_dynamic_layer(layer, record.plans, record.tasks, 0, t_scale);
  for (size_t r = 0; r < record.plans.size(); ++r) {
    std::vector<double> labels =
        edge_arrival_labels(layer, record.plans[r], record.positions[r]);
    for (EtaEdge& edge : graph.eta) {
      if (edge.robot != static_cast<int>(r)) continue;
      if (edge.timestamp >= static_cast<int>(labels.size()))
        throw DatasetError("label count does not match the plan runs");
      edge.label = labels[edge.timestamp];
      edge.has_label = true;
    }
  }
  return graph;
}

}  // namespace fleeta
