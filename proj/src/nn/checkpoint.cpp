#include <fstream>

#include <json.hpp>

#include "fleeta/nn/model.hpp"

namespace fleeta::nn {

namespace {
constexpr int kCheckpointVersion = 1;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["format"] = "fleeta-model";
  doc["version"] = kCheckpointVersion;
  doc["dim"] = kDim;
  doc["heads"] = kHeads;
  doc["patch_dim"] = params.patch_dim;
  nlohmann::ordered_json blocks;
  params.for_each([&](const std::string& name, const Param& block) {
    nlohmann::ordered_json entry;
    entry["rows"] = block.rows;
    entry["cols"] = block.cols;
    entry["data"] = block.w;
    blocks[name] = std::move(entry);
  });
  doc["blocks"] = std::move(blocks);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NnError("cannot open checkpoint for writing: " + path);
  out << doc.dump(2) << "\n";
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NnError("cannot open checkpoint: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw NnError("malformed checkpoint " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "fleeta-model" ||
      doc.value("version", -1) != kCheckpointVersion)
    throw NnError("unsupported checkpoint format in " + path);
  if (doc.value("dim", -1) != kDim || doc.value("heads", -1) != kHeads)
    throw ShapeMismatch("checkpoint was written for a different model size");
  ModelParams params = init_params(doc.at("patch_dim").get<int>(), 0);
  const auto& blocks = doc.at("blocks");
  params.for_each([&](const std::string& name, Param& block) {
    if (!blocks.contains(name))
      throw ShapeMismatch("checkpoint is missing block " + name);
    const auto& entry = blocks.at(name);
    if (entry.at("rows").get<int>() != block.rows ||
        entry.at("cols").get<int>() != block.cols)
      throw ShapeMismatch("checkpoint block " + name + " has the wrong shape");
    auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != block.w.size())
      throw ShapeMismatch("checkpoint block " + name + " has the wrong size");
    block.w = std::move(data);
  });
  return params;
}

}  // namespace fleeta::nn
