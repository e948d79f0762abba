#include "fleeta/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "fleeta/cbs.hpp"
#include "fleeta/pibt.hpp"
#include "fleeta/rng.hpp"
#include "fleeta/selection.hpp"

namespace fleeta {

TrainResult train_model(const ScenarioDataset& data,
                        const nn::TrainConfig& config, int tile_size,
                        double t_scale) {
  if (data.records.empty())
    throw DatasetError("training needs a non-empty dataset");
  std::vector<HetGraph> graphs;
  graphs.reserve(data.records.size());
  for (const ScenarioRecord& record : data.records)
    graphs.push_back(record_graph(record, tile_size, t_scale));

  TrainResult result{nn::init_params(tile_size * tile_size, config.seed), {}};
  long long adam_updates = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss = 0.0;
    for (size_t s = 0; s < graphs.size(); ++s) {
      try {
        nn::zero_grad(result.params);
        epoch_loss += nn::backward(graphs[s], result.params, config.mode);
        nn::adam_step(result.params, config, epoch, adam_updates);
        nn::check_finite(result.params, "after update");
      } catch (const nn::NaNDetected& e) {
        throw nn::NaNDetected("epoch " + std::to_string(epoch) +
                              ", scenario " + data.records[s].map_id + ": " +
                              e.what());
      }
    }
    result.log.push_back({epoch, nn::learning_rate(config, epoch),
                          epoch_loss / static_cast<double>(graphs.size())});
  }
  return result;
}

EvalReport evaluate(const nn::ModelParams& params, const ScenarioDataset& data,
                    int tile_size, double t_scale) {
  std::vector<double> labels, naive, model;
  for (const ScenarioRecord& record : data.records) {
    HetGraph graph = record_graph(record, tile_size, t_scale);
    nn::ForwardResult out =
        nn::forward_recurrent(graph, params, nn::Mode::DMS, false);
    for (size_t e = 0; e < graph.eta.size(); ++e) {
      if (!graph.eta[e].has_label)
        throw DatasetError("evaluation needs labelled edges");
      labels.push_back(graph.eta[e].label);
      naive.push_back(graph.eta[e].naive_arrival);
      model.push_back(out.predictions[e]);
    }
  }
  EvalReport report;
  report.naive = {nn::mape(naive, labels), nn::rmse(naive, labels),
                  nn::mae(naive, labels), labels.size()};
  report.model = {nn::mape(model, labels), nn::rmse(model, labels),
                  nn::mae(model, labels), labels.size()};
  return report;
}

const char* planner_name(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::Naive:
      return "naive";
    case PlannerKind::ConflictAware:
      return "conflict-aware";
    case PlannerKind::Pibt:
      return "pibt";
    case PlannerKind::Cbs:
      return "cbs";
  }
  return "?";
}

std::vector<SweepRow> noise_sweep(const GridMap& map,
                                  const std::vector<AgentTask>& tasks,
                                  const std::vector<SweepPlanner>& planners,
                                  const std::vector<double>& noise_levels,
                                  int n_seeds, uint64_t seed) {
  std::vector<SweepRow> rows;
  for (const SweepPlanner& planner : planners) {
    std::vector<Path> plans;
    switch (planner.kind) {
      case PlannerKind::Naive:
        for (const AgentTask& task : tasks)
          plans.push_back(astar(map, task.start, task.goal));
        break;
      case PlannerKind::ConflictAware: {
        if (!planner.params)
          throw std::invalid_argument(
              "the conflict-aware planner needs model parameters");
        plans = plan_conflict_aware(map, tasks, *planner.params).plans;
        break;
      }
      case PlannerKind::Pibt: {
        ExecutionTrace trace = pibt(map, tasks);
        for (const auto& traj : trace.positions)
          plans.push_back(Path{traj, 0});
        break;
      }
      case PlannerKind::Cbs:
        // Included only when the desk-scale guard admits the instance and a
        // solution is found; otherwise the planner contributes no rows.
        try {
          plans = cbs(map, tasks).paths;
        } catch (const std::invalid_argument&) {
          continue;
        } catch (const CbsError&) {
          continue;
        }
        break;
    }
    for (size_t ni = 0; ni < noise_levels.size(); ++ni) {
      SweepRow row;
      row.planner = planner_name(planner.kind);
      row.noise = noise_levels[ni];
      std::vector<double> makespans, socs;
      for (int s = 0; s < n_seeds; ++s) {
        SimConfig cfg;
        cfg.noise_wait_prob = noise_levels[ni];
        cfg.rng_seed =
            substream_seed(seed, static_cast<uint64_t>(ni) * 1000003u +
                                     static_cast<uint64_t>(s));
        try {
          ExecutionTrace trace = run(map, tasks, plans, cfg);
          makespans.push_back(static_cast<double>(makespan(trace)));
          socs.push_back(static_cast<double>(sum_of_costs(trace)));
        } catch (const SimTimeout&) {
          ++row.failures;
        }
      }
      row.seeds = static_cast<int>(makespans.size());
      auto mean_std = [](const std::vector<double>& xs, double& mean,
                         double& std_dev) {
        if (xs.empty()) {
          mean = std_dev = 0.0;
          return;
        }
        mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        std_dev = std::sqrt(var / static_cast<double>(xs.size()));
      };
      mean_std(makespans, row.mean_makespan, row.std_makespan);
      mean_std(socs, row.mean_soc, row.std_soc);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

uint64_t fnv1a64(const std::string& text) {
  uint64_t hash = 14695981039346656037ull;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, end);
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open CSV for writing: " + path);
  auto write_row = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      out << cells[i];
    }
    out << '\n';
  };
  write_row(header);
  for (const auto& row : rows) write_row(row);
}

}  // namespace fleeta
