#pragma once

#include <string>
#include <vector>

#include "scout/graph.hpp"
#include "scout/loss.hpp"
#include "scout/model.hpp"
#include "scout/train.hpp"

namespace scout {

struct DataConfig {
  std::string csv;
  double source_hz = 25.0;
  double target_hz = 2.5;
  int t_obs = 8;
  int t_pred = 12;
  int stride = 8;
  AdjacencyMode adjacency = AdjacencyMode::Kernel;
  double radius = kDefaultNeighborRadius;
  // Fractional split by recording id, or an explicit held-out-scenario
  // assignment when the recording lists are non-empty.
  double train_frac = 0.6;
  double val_frac = 0.2;
  std::vector<std::string> test_recordings;
  std::vector<std::string> val_recordings;
  uint64_t split_seed = 7;
};

// One run = one config file with data/model/loss/train sections; CLI flags
// override individual keys (flag > file > default).
struct RunConfig {
  DataConfig data;
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
};

RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& cfg);

// FNV-1a over the raw config bytes, hex-encoded; stamped into manifests and
// metric reports so artifacts can be traced to their configuration.
std::string fnv1a_hex(const std::string& bytes);
std::string hash_file(const std::string& path);

// Every command drops a manifest next to its outputs.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_hash;
  uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

void write_manifest(const RunManifest& manifest, const std::string& dir);

}  // namespace scout
