#include "scout/run_config.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scout/error.hpp"
#include "scout/serialize.hpp"

namespace scout {

using nlohmann::json;

namespace {

AdjacencyMode parse_adjacency(const std::string& s) {
  if (s == "binary") return AdjacencyMode::Binary;
  if (s == "kernel") return AdjacencyMode::Kernel;
  fail(ErrorCode::InvalidConfig, "unknown adjacency mode '" + s + "'");
}

DataConfig data_from_json(const json& j) {
  DataConfig d;
  d.csv = j.value("csv", d.csv);
  d.source_hz = j.value("source_hz", d.source_hz);
  d.target_hz = j.value("target_hz", d.target_hz);
  d.t_obs = j.value("t_obs", d.t_obs);
  d.t_pred = j.value("t_pred", d.t_pred);
  d.stride = j.value("stride", d.stride);
  if (j.contains("adjacency")) d.adjacency = parse_adjacency(j.at("adjacency").get<std::string>());
  d.radius = j.value("radius", d.radius);
  d.train_frac = j.value("train_frac", d.train_frac);
  d.val_frac = j.value("val_frac", d.val_frac);
  d.test_recordings = j.value("test_recordings", d.test_recordings);
  d.val_recordings = j.value("val_recordings", d.val_recordings);
  d.split_seed = j.value("split_seed", d.split_seed);
  return d;
}

json data_to_json(const DataConfig& d) {
  return json{{"csv", d.csv},
              {"source_hz", d.source_hz},
              {"target_hz", d.target_hz},
              {"t_obs", d.t_obs},
              {"t_pred", d.t_pred},
              {"stride", d.stride},
              {"adjacency", d.adjacency == AdjacencyMode::Binary ? "binary" : "kernel"},
              {"radius", d.radius},
              {"train_frac", d.train_frac},
              {"val_frac", d.val_frac},
              {"test_recordings", d.test_recordings},
              {"val_recordings", d.val_recordings},
              {"split_seed", d.split_seed}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.lr = j.value("lr", t.lr);
  t.batch_size = j.value("batch_size", t.batch_size);
  t.weight_decay = j.value("weight_decay", t.weight_decay);
  t.max_epochs = j.value("max_epochs", t.max_epochs);
  t.early_stop_patience = j.value("early_stop_patience", t.early_stop_patience);
  t.seed = j.value("seed", t.seed);
  t.beta1 = j.value("beta1", t.beta1);
  t.beta2 = j.value("beta2", t.beta2);
  t.eps = j.value("eps", t.eps);
  return t;
}

json train_to_json(const TrainConfig& t) {
  return json{{"lr", t.lr},
              {"batch_size", t.batch_size},
              {"weight_decay", t.weight_decay},
              {"max_epochs", t.max_epochs},
              {"early_stop_patience", t.early_stop_patience},
              {"seed", t.seed},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"eps", t.eps}};
}

LossConfig loss_from_json(const json& j) {
  LossConfig l;
  l.delta = j.value("delta", l.delta);
  l.alpha = j.value("alpha", l.alpha);
  l.beta = j.value("beta", l.beta);
  return l;
}

json loss_to_json(const LossConfig& l) {
  return json{{"delta", l.delta}, {"alpha", l.alpha}, {"beta", l.beta}};
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoFailure, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidConfig, path + ": " + e.what());
  }
  RunConfig cfg;
  if (j.contains("data")) cfg.data = data_from_json(j.at("data"));
  if (j.contains("model")) cfg.model = model_config_from_json(j.at("model"));
  if (j.contains("loss")) cfg.loss = loss_from_json(j.at("loss"));
  if (j.contains("train")) cfg.train = train_from_json(j.at("train"));
  // The model consumes windows the data section defines.
  cfg.model.t_obs = cfg.data.t_obs;
  cfg.model.t_pred = cfg.data.t_pred;
  cfg.loss.validate();
  cfg.train.validate();
  cfg.model.validate();
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j{{"data", data_to_json(cfg.data)},
         {"model", model_config_to_json(cfg.model)},
         {"loss", loss_to_json(cfg.loss)},
         {"train", train_to_json(cfg.train)}};
  return j.dump(1, '\t');
}

std::string fnv1a_hex(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

void write_manifest(const RunManifest& manifest, const std::string& dir) {
  std::filesystem::create_directories(dir);
  json j;
  j["command"] = manifest.command;
  j["config_path"] = manifest.config_path;
  j["config_hash"] = manifest.config_hash;
  j["seed"] = manifest.seed;
  j["inputs"] = manifest.inputs;
  j["outputs"] = manifest.outputs;
  j["code_version"] = "scout 0.1.0";
  const auto now = std::chrono::system_clock::now();
  j["timestamp_unix"] =
      std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  const std::string path = dir + "/manifest.json";
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
  out << j.dump(1, '\t') << "\n";
}

}  // namespace scout
