// Command-line front end for the warehouse-fleet laboratory: map and dataset
// generation, model training and evaluation, the planner noise sweep, the
// one-shot conflict-aware planner, and plain plan execution.
//
// Every command writes into a run directory: config.json echoes the exact
// flags (plus the FNV-1a hash stamped into every CSV row), and results land
// next to it.  All commands are deterministic functions of their flags, so
// a rerun reproduces every output byte for byte.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fleeta/cbs.hpp"
#include "fleeta/dataset.hpp"
#include "fleeta/harness.hpp"
#include "fleeta/pibt.hpp"
#include "fleeta/rng.hpp"
#include "fleeta/selection.hpp"

namespace {

using fleeta::fnv1a64;
using fleeta::format_real;
using nlohmann::ordered_json;

// Writes config.json (flag echo + its own hash) and returns the hash string
// stamped into CSV rows.
std::string write_config(const std::string& out_dir, ordered_json config) {
  std::filesystem::create_directories(out_dir);
  std::string hash = std::to_string(fnv1a64(config.dump()));
  config["config_hash"] = hash;
  std::ofstream out(out_dir + "/config.json", std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write config.json under " + out_dir);
  out << config.dump(2) << "\n";
  return hash;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

fleeta::GridMap scenario_map(uint64_t seed, int width, int height) {
  fleeta::WarehouseGenParams params;
  params.seed = fleeta::substream_seed(seed, 0);
  params.width = width;
  params.height = height;
  return fleeta::generate_warehouse_map(params);
}

std::vector<fleeta::AgentTask> scenario_tasks(const fleeta::GridMap& map,
                                              int robots, uint64_t seed,
                                              double tc_factor) {
  return fleeta::sample_tasks(map, robots,
                              fleeta::substream_seed(seed, 1), tc_factor);
}

fleeta::nn::TrainConfig parse_mode(fleeta::nn::TrainConfig config,
                                   const std::string& mode) {
  if (mode == "ims")
    config.mode = fleeta::nn::Mode::IMS;
  else if (mode == "dms")
    config.mode = fleeta::nn::Mode::DMS;
  else
    throw CLI::ValidationError("--mode must be ims or dms");
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale warehouse fleet laboratory"};
  app.require_subcommand(1);

  // ---- gen-maps ----
  auto* gen_maps = app.add_subcommand("gen-maps", "generate warehouse maps");
  struct {
    uint64_t seed = 0;
    int count = 1, width = 32, height = 32;
    std::string out;
  } gm;
  gen_maps->add_option("--seed", gm.seed, "generation seed")->required();
  gen_maps->add_option("--count", gm.count, "number of maps");
  gen_maps->add_option("--width", gm.width, "map width");
  gen_maps->add_option("--height", gm.height, "map height");
  gen_maps->add_option("--out", gm.out, "run directory")->required();

  // ---- gen-dataset ----
  auto* gen_ds = app.add_subcommand("gen-dataset", "generate a scenario dataset");
  struct {
    uint64_t seed = 0;
    int maps = 10, width = 24, height = 24, robots = 10;
    double tc_factor = 1.5;
    std::string out;
  } gd;
  gen_ds->add_option("--seed", gd.seed, "generation seed")->required();
  gen_ds->add_option("--maps", gd.maps, "number of scenarios");
  gen_ds->add_option("--width", gd.width, "map width");
  gen_ds->add_option("--height", gd.height, "map height");
  gen_ds->add_option("--robots", gd.robots, "robots per scenario");
  gen_ds->add_option("--tc-factor", gd.tc_factor, "time-constraint factor");
  gen_ds->add_option("--out", gd.out, "run directory")->required();

  // ---- train ----
  auto* train = app.add_subcommand("train", "train the arrival-time model");
  struct {
    std::string dataset, mode = "dms", out;
    uint64_t seed = 0;
    int epochs = 20, tile_size = 5;
    double t_scale = 100.0, lr = 0.001;
  } tr;
  train->add_option("--dataset", tr.dataset, "dataset JSON")->required();
  train->add_option("--mode", tr.mode, "ims or dms");
  train->add_option("--epochs", tr.epochs, "training epochs");
  train->add_option("--seed", tr.seed, "init seed")->required();
  train->add_option("--tile-size", tr.tile_size, "floor tile size");
  train->add_option("--t-scale", tr.t_scale, "time feature divisor");
  train->add_option("--lr", tr.lr, "initial learning rate");
  train->add_option("--out", tr.out, "run directory")->required();

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  struct {
    std::string dataset, checkpoint, label = "model", out;
    int tile_size = 5;
    double t_scale = 100.0;
  } ev;
  eval_cmd->add_option("--dataset", ev.dataset, "dataset JSON")->required();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint")
      ->required();
  eval_cmd->add_option("--label", ev.label, "row label for the model");
  eval_cmd->add_option("--tile-size", ev.tile_size, "floor tile size");
  eval_cmd->add_option("--t-scale", ev.t_scale, "time feature divisor");
  eval_cmd->add_option("--out", ev.out, "run directory")->required();

  // ---- noise-sweep ----
  auto* sweep = app.add_subcommand("noise-sweep",
                                   "replay planners across noise levels");
  struct {
    uint64_t seed = 0;
    int width = 16, height = 16, robots = 8, sweep_seeds = 20, tile_size = 5;
    double tc_factor = 1.5, t_scale = 100.0;
    std::vector<double> noise{0.0, 1e-5, 1e-4};
    std::vector<std::string> planners{"naive", "pibt"};
    std::string checkpoint, out;
  } sw;
  sweep->add_option("--seed", sw.seed, "scenario + noise seed")->required();
  sweep->add_option("--width", sw.width, "map width");
  sweep->add_option("--height", sw.height, "map height");
  sweep->add_option("--robots", sw.robots, "number of robots");
  sweep->add_option("--noise", sw.noise, "noise levels")->expected(-1);
  sweep->add_option("--sweep-seeds", sw.sweep_seeds, "noise seeds per level");
  sweep->add_option("--planners", sw.planners,
                    "subset of naive,conflict-aware,pibt,cbs")
      ->expected(-1);
  sweep->add_option("--checkpoint", sw.checkpoint,
                    "model for the conflict-aware planner");
  sweep->add_option("--tile-size", sw.tile_size, "floor tile size");
  sweep->add_option("--tc-factor", sw.tc_factor, "time-constraint factor");
  sweep->add_option("--t-scale", sw.t_scale, "time feature divisor");
  sweep->add_option("--out", sw.out, "run directory")->required();

  // ---- plan ----
  auto* plan_cmd = app.add_subcommand(
      "plan", "one-shot conflict-aware path selection for a scenario");
  struct {
    uint64_t seed = 0;
    int width = 24, height = 24, robots = 10, candidates = 3, tile_size = 5;
    double tc_factor = 1.5, t_scale = 100.0;
    std::string checkpoint, out;
  } pl;
  plan_cmd->add_option("--seed", pl.seed, "scenario seed")->required();
  plan_cmd->add_option("--width", pl.width, "map width");
  plan_cmd->add_option("--height", pl.height, "map height");
  plan_cmd->add_option("--robots", pl.robots, "number of robots");
  plan_cmd->add_option("--candidates", pl.candidates, "routes per agent");
  plan_cmd->add_option("--checkpoint", pl.checkpoint,
                       "model checkpoint (default: untrained = naive)");
  plan_cmd->add_option("--tile-size", pl.tile_size, "floor tile size");
  plan_cmd->add_option("--tc-factor", pl.tc_factor, "time-constraint factor");
  plan_cmd->add_option("--t-scale", pl.t_scale, "time feature divisor");
  plan_cmd->add_option("--out", pl.out, "run directory")->required();

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate",
                                     "execute plans under forced-wait noise");
  struct {
    uint64_t seed = 0;
    int width = 16, height = 16, robots = 8;
    double noise = 0.0, tc_factor = 1.5;
    std::string planner = "naive", out;
  } sm;
  sim_cmd->add_option("--seed", sm.seed, "scenario + noise seed")->required();
  sim_cmd->add_option("--width", sm.width, "map width");
  sim_cmd->add_option("--height", sm.height, "map height");
  sim_cmd->add_option("--robots", sm.robots, "number of robots");
  sim_cmd->add_option("--noise", sm.noise, "forced-wait probability");
  sim_cmd->add_option("--planner", sm.planner, "naive or pibt");
  sim_cmd->add_option("--tc-factor", sm.tc_factor, "time-constraint factor");
  sim_cmd->add_option("--out", sm.out, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_maps) {
      std::string hash = write_config(
          gm.out, {{"command", "gen-maps"}, {"seed", gm.seed},
                   {"count", gm.count}, {"width", gm.width},
                   {"height", gm.height}});
      for (int i = 0; i < gm.count; ++i) {
        fleeta::WarehouseGenParams params;
        params.seed = fleeta::substream_seed(gm.seed, i);
        params.width = gm.width;
        params.height = gm.height;
        char name[32];
        std::snprintf(name, sizeof(name), "map-%03d.grid", i);
        write_text(gm.out + "/" + name,
                   fleeta::save_map(fleeta::generate_warehouse_map(params)));
      }
      std::cout << "wrote " << gm.count << " maps to " << gm.out
                << " (config " << hash << ")\n";
    } else if (*gen_ds) {
      std::string hash = write_config(
          gd.out, {{"command", "gen-dataset"}, {"seed", gd.seed},
                   {"maps", gd.maps}, {"width", gd.width},
                   {"height", gd.height}, {"robots", gd.robots},
                   {"tc_factor", gd.tc_factor}});
      fleeta::DatasetParams params{gd.maps,   gd.width, gd.height,
                                   gd.robots, gd.seed,  gd.tc_factor};
      fleeta::save_dataset(fleeta::gen_dataset(params),
                           gd.out + "/dataset.json");
      std::cout << "wrote " << gd.maps << " scenarios to " << gd.out
                << "/dataset.json (config " << hash << ")\n";
    } else if (*train) {
      std::string hash = write_config(
          tr.out, {{"command", "train"}, {"dataset", tr.dataset},
                   {"mode", tr.mode}, {"epochs", tr.epochs},
                   {"seed", tr.seed}, {"tile_size", tr.tile_size},
                   {"t_scale", tr.t_scale}, {"lr", tr.lr}});
      fleeta::nn::TrainConfig config;
      config.epochs = tr.epochs;
      config.seed = tr.seed;
      config.lr = tr.lr;
      config = parse_mode(config, tr.mode);
      fleeta::ScenarioDataset data = fleeta::load_dataset(tr.dataset);
      fleeta::TrainResult result =
          fleeta::train_model(data, config, tr.tile_size, tr.t_scale);
      fleeta::nn::save_checkpoint(result.params, tr.out + "/checkpoint.json");
      std::vector<std::vector<std::string>> rows;
      for (const fleeta::TrainLogRow& row : result.log)
        rows.push_back({std::to_string(row.epoch), format_real(row.lr),
                        format_real(row.train_mape), hash});
      fleeta::write_csv(tr.out + "/train_log.csv",
                        {"epoch", "lr", "train_mape", "config_hash"}, rows);
      std::cout << "trained " << tr.epochs << " epochs; final train MAPE "
                << format_real(result.log.back().train_mape) << " (config "
                << hash << ")\n";
    } else if (*eval_cmd) {
      std::string hash = write_config(
          ev.out, {{"command", "eval"}, {"dataset", ev.dataset},
                   {"checkpoint", ev.checkpoint}, {"label", ev.label},
                   {"tile_size", ev.tile_size}, {"t_scale", ev.t_scale}});
      fleeta::ScenarioDataset data = fleeta::load_dataset(ev.dataset);
      fleeta::nn::ModelParams params =
          fleeta::nn::load_checkpoint(ev.checkpoint);
      fleeta::EvalReport report =
          fleeta::evaluate(params, data, ev.tile_size, ev.t_scale);
      auto metric_row = [&](const std::string& label,
                            const fleeta::Metrics& m) {
        return std::vector<std::string>{label, format_real(m.mape),
                                        format_real(m.rmse),
                                        format_real(m.mae),
                                        std::to_string(m.edges), hash};
      };
      fleeta::write_csv(ev.out + "/eval.csv",
                        {"model", "mape", "rmse", "mae", "edges",
                         "config_hash"},
                        {metric_row("naive", report.naive),
                         metric_row(ev.label, report.model)});
      std::cout << "naive MAPE " << format_real(report.naive.mape) << ", "
                << ev.label << " MAPE " << format_real(report.model.mape)
                << " (config " << hash << ")\n";
    } else if (*sweep) {
      std::string hash = write_config(
          sw.out,
          {{"command", "noise-sweep"}, {"seed", sw.seed},
           {"width", sw.width}, {"height", sw.height},
           {"robots", sw.robots}, {"noise", sw.noise},
           {"sweep_seeds", sw.sweep_seeds}, {"planners", sw.planners},
           {"checkpoint", sw.checkpoint}, {"tile_size", sw.tile_size},
           {"tc_factor", sw.tc_factor}, {"t_scale", sw.t_scale}});
      fleeta::GridMap map = scenario_map(sw.seed, sw.width, sw.height);
      std::vector<fleeta::AgentTask> tasks =
          scenario_tasks(map, sw.robots, sw.seed, sw.tc_factor);
      fleeta::nn::ModelParams params =
          sw.checkpoint.empty()
              ? fleeta::nn::init_params(sw.tile_size * sw.tile_size, sw.seed)
              : fleeta::nn::load_checkpoint(sw.checkpoint);
      std::vector<fleeta::SweepPlanner> planners;
      for (const std::string& name : sw.planners) {
        if (name == "naive")
          planners.push_back({fleeta::PlannerKind::Naive, nullptr});
        else if (name == "conflict-aware")
          planners.push_back({fleeta::PlannerKind::ConflictAware, &params});
        else if (name == "pibt")
          planners.push_back({fleeta::PlannerKind::Pibt, nullptr});
        else if (name == "cbs")
          planners.push_back({fleeta::PlannerKind::Cbs, nullptr});
        else
          throw CLI::ValidationError("unknown planner " + name);
      }
      std::vector<fleeta::SweepRow> rows = fleeta::noise_sweep(
          map, tasks, planners, sw.noise, sw.sweep_seeds, sw.seed);
      for (const fleeta::SweepPlanner& planner : planners) {
        std::string name = fleeta::planner_name(planner.kind);
        bool present = false;
        for (const fleeta::SweepRow& row : rows) present |= row.planner == name;
        if (!present)
          std::cerr << "note: " << name
                    << " contributed no rows (guard or no solution)\n";
      }
      std::vector<std::vector<std::string>> csv;
      for (const fleeta::SweepRow& row : rows)
        csv.push_back({row.planner, format_real(row.noise),
                       std::to_string(row.seeds), std::to_string(row.failures),
                       format_real(row.mean_makespan),
                       format_real(row.std_makespan),
                       format_real(row.mean_soc), format_real(row.std_soc),
                       hash});
      fleeta::write_csv(sw.out + "/sweep.csv",
                        {"planner", "noise", "seeds", "failures",
                         "mean_makespan", "std_makespan", "mean_soc",
                         "std_soc", "config_hash"},
                        csv);
      std::cout << "swept " << rows.size() << " (planner, noise) pairs"
                << " (config " << hash << ")\n";
    } else if (*plan_cmd) {
      std::string hash = write_config(
          pl.out, {{"command", "plan"}, {"seed", pl.seed},
                   {"width", pl.width}, {"height", pl.height},
                   {"robots", pl.robots}, {"candidates", pl.candidates},
                   {"checkpoint", pl.checkpoint}, {"tile_size", pl.tile_size},
                   {"tc_factor", pl.tc_factor}, {"t_scale", pl.t_scale}});
      fleeta::GridMap map = scenario_map(pl.seed, pl.width, pl.height);
      std::vector<fleeta::AgentTask> tasks =
          scenario_tasks(map, pl.robots, pl.seed, pl.tc_factor);
      fleeta::nn::ModelParams params =
          pl.checkpoint.empty()
              ? fleeta::nn::init_params(pl.tile_size * pl.tile_size, pl.seed)
              : fleeta::nn::load_checkpoint(pl.checkpoint);
      fleeta::ConflictAwareConfig config;
      config.num_candidates = pl.candidates;
      config.tile_size = pl.tile_size;
      config.t_scale = pl.t_scale;
      fleeta::ConflictAwarePlan result =
          fleeta::plan_conflict_aware(map, tasks, params, config);
      ordered_json doc;
      doc["map"] = fleeta::save_map(map);
      ordered_json agents = ordered_json::array();
      for (size_t i = 0; i < tasks.size(); ++i) {
        const fleeta::AgentDecision& d = result.decisions[i];
        ordered_json cells = ordered_json::array();
        for (const fleeta::Cell& c : result.plans[i].cells)
          cells.push_back({c.x, c.y});
        agents.push_back({{"id", tasks[i].id},
                          {"candidate", d.candidate_index},
                          {"met_constraints", d.valid},
                          {"cost", d.cost},
                          {"path", std::move(cells)}});
      }
      doc["agents"] = std::move(agents);
      write_text(pl.out + "/plan.json", doc.dump(2) + "\n");
      std::cout << "planned " << tasks.size() << " agents (config " << hash
                << ")\n";
    } else if (*sim_cmd) {
      std::string hash = write_config(
          sm.out, {{"command", "simulate"}, {"seed", sm.seed},
                   {"width", sm.width}, {"height", sm.height},
                   {"robots", sm.robots}, {"noise", sm.noise},
                   {"planner", sm.planner}, {"tc_factor", sm.tc_factor}});
      fleeta::GridMap map = scenario_map(sm.seed, sm.width, sm.height);
      std::vector<fleeta::AgentTask> tasks =
          scenario_tasks(map, sm.robots, sm.seed, sm.tc_factor);
      std::vector<fleeta::Path> plans;
      if (sm.planner == "naive") {
        for (const fleeta::AgentTask& task : tasks)
          plans.push_back(fleeta::astar(map, task.start, task.goal));
      } else if (sm.planner == "pibt") {
        fleeta::ExecutionTrace trace = fleeta::pibt(map, tasks);
        for (const auto& traj : trace.positions)
          plans.push_back(fleeta::Path{traj, 0});
      } else {
        throw CLI::ValidationError("--planner must be naive or pibt");
      }
      fleeta::SimConfig config;
      config.noise_wait_prob = sm.noise;
      config.rng_seed = fleeta::substream_seed(sm.seed, 2);
      fleeta::ExecutionTrace trace = fleeta::run(map, tasks, plans, config);
      write_text(sm.out + "/trace.json", fleeta::trace_to_json(trace));
      std::cout << "simulated " << tasks.size() << " agents, makespan "
                << fleeta::makespan(trace) << ", sum of costs "
                << fleeta::sum_of_costs(trace) << " (config " << hash
                << ")\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
