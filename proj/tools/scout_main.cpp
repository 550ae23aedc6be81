// scout: prepare data, train, evaluate, predict, attribute, and run
// zero-shot transfer experiments for the trajectory forecaster.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scout/attribution.hpp"
#include "scout/error.hpp"
#include "scout/run_config.hpp"
#include "scout/serialize.hpp"
#include "scout/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scout;

namespace {

constexpr int kSplitsVersion = 1;

struct PreparedData {
  DataConfig data;
  DatasetSplit split;
};

std::string split_file(const std::string& dir, const std::string& name) {
  return dir + "/" + name + ".json";
}

void write_prepared(const PreparedData& prepared, const std::string& dir) {
  fs::create_directories(dir);
  json j;
  j["format_version"] = kSplitsVersion;
  j["t_obs"] = prepared.data.t_obs;
  j["t_pred"] = prepared.data.t_pred;
  j["adjacency"] = prepared.data.adjacency == AdjacencyMode::Binary ? "binary" : "kernel";
  j["radius"] = prepared.data.radius;
  j["recordings"] = {{"train", prepared.split.train_recordings},
                     {"val", prepared.split.val_recordings},
                     {"test", prepared.split.test_recordings}};
  j["counts"] = {{"train", prepared.split.train.size()},
                 {"val", prepared.split.val.size()},
                 {"test", prepared.split.test.size()}};
  std::ofstream out(dir + "/splits.json");
  require(out.good(), ErrorCode::IoFailure, "cannot write splits.json in " + dir);
  out << j.dump(1, '\t') << "\n";
  save_samples_json(prepared.split.train, split_file(dir, "train"));
  save_samples_json(prepared.split.val, split_file(dir, "val"));
  save_samples_json(prepared.split.test, split_file(dir, "test"));
}

PreparedData read_prepared(const std::string& dir) {
  std::ifstream in(dir + "/splits.json");
  require(in.good(), ErrorCode::IoFailure,
          dir + " is not a prepared dataset (splits.json missing)");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, dir + "/splits.json: " + e.what());
  }
  require(j.at("format_version").get<int>() == kSplitsVersion, ErrorCode::SchemaMismatch,
          "unsupported splits format in " + dir);
  PreparedData p;
  p.data.t_obs = j.at("t_obs").get<int>();
  p.data.t_pred = j.at("t_pred").get<int>();
  p.data.adjacency = j.at("adjacency").get<std::string>() == "binary" ? AdjacencyMode::Binary
                                                                      : AdjacencyMode::Kernel;
  p.data.radius = j.at("radius").get<double>();
  p.split.train_recordings = j.at("recordings").at("train").get<std::vector<std::string>>();
  p.split.val_recordings = j.at("recordings").at("val").get<std::vector<std::string>>();
  p.split.test_recordings = j.at("recordings").at("test").get<std::vector<std::string>>();
  p.split.train = load_samples_json(split_file(dir, "train"));
  p.split.val = load_samples_json(split_file(dir, "val"));
  p.split.test = load_samples_json(split_file(dir, "test"));
  return p;
}

const std::vector<SequenceSample>& pick_split(const PreparedData& p, const std::string& name) {
  if (name == "train") return p.split.train;
  if (name == "val") return p.split.val;
  if (name == "test") return p.split.test;
  fail(ErrorCode::InvalidConfig, "unknown split '" + name + "' (train|val|test)");
}

void check_schema(const Checkpoint& ckpt, const PreparedData& data) {
  require(ckpt.model.t_obs == data.data.t_obs && ckpt.model.t_pred == data.data.t_pred,
          ErrorCode::SchemaMismatch,
          "checkpoint expects t_obs=" + std::to_string(ckpt.model.t_obs) +
              ", t_pred=" + std::to_string(ckpt.model.t_pred) + " but dataset provides t_obs=" +
              std::to_string(data.data.t_obs) + ", t_pred=" + std::to_string(data.data.t_pred));
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string data_dir;
  std::string checkpoint_path;
  std::string split = "test";
  int scene_id = 0;
  std::optional<uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<int> heads;
};

// Precedence: flag > config file > default.
void apply_overrides(RunConfig& cfg, const CommonFlags& flags) {
  if (flags.seed) cfg.train.seed = *flags.seed;
  if (flags.variant) {
    cfg.model.variant = parse_variant(*flags.variant);
    if (cfg.model.variant != Variant::Attention) cfg.model.num_heads = 1;
  }
  if (flags.alpha) cfg.loss.alpha = *flags.alpha;
  if (flags.beta) cfg.loss.beta = *flags.beta;
  if (flags.heads) cfg.model.num_heads = *flags.heads;
  cfg.model.validate();
  cfg.loss.validate();
}

int cmd_prepare(const CommonFlags& flags, const std::string& csv_override) {
  RunConfig cfg = load_run_config(flags.config_path);
  if (!csv_override.empty()) cfg.data.csv = csv_override;
  require(!cfg.data.csv.empty(), ErrorCode::InvalidConfig, "no input csv configured");

  auto tracks = load_trajectories(cfg.data.csv);
  tracks = resample(tracks, cfg.data.source_hz, cfg.data.target_hz);
  auto samples = window_sequences(tracks, cfg.data.t_obs, cfg.data.t_pred, cfg.data.stride);
  require(!samples.empty(), ErrorCode::EmptyDataset,
          cfg.data.csv + " yields no complete windows");
  for (auto& s : samples) s = normalize_sample(s);

  PreparedData prepared;
  prepared.data = cfg.data;
  if (!cfg.data.test_recordings.empty() || !cfg.data.val_recordings.empty())
    prepared.split = split_explicit(samples, cfg.data.test_recordings, cfg.data.val_recordings);
  else
    prepared.split =
        split_by_recording(samples, cfg.data.train_frac, cfg.data.val_frac, cfg.data.split_seed);
  write_prepared(prepared, flags.out_dir);

  RunManifest manifest;
  manifest.command = "prepare";
  manifest.config_path = flags.config_path;
  manifest.config_hash = hash_file(flags.config_path);
  manifest.seed = cfg.data.split_seed;
  manifest.inputs = {cfg.data.csv};
  manifest.outputs = {flags.out_dir + "/splits.json", split_file(flags.out_dir, "train"),
                      split_file(flags.out_dir, "val"), split_file(flags.out_dir, "test")};
  write_manifest(manifest, flags.out_dir);
  std::cout << "prepared " << samples.size() << " samples (train " << prepared.split.train.size()
            << ", val " << prepared.split.val.size() << ", test " << prepared.split.test.size()
            << ") -> " << flags.out_dir << "\n";
  return 0;
}

int cmd_train(const CommonFlags& flags) {
  RunConfig cfg = load_run_config(flags.config_path);
  apply_overrides(cfg, flags);
  const PreparedData prepared = read_prepared(flags.data_dir);
  cfg.model.t_obs = prepared.data.t_obs;
  cfg.model.t_pred = prepared.data.t_pred;
  cfg.model.validate();

  const TrainResult result = train(prepared.split, cfg.model, cfg.loss, cfg.train,
                                   prepared.data.adjacency, prepared.data.radius);

  fs::create_directories(flags.out_dir);
  Checkpoint ckpt;
  ckpt.model = cfg.model;
  ckpt.adjacency = prepared.data.adjacency;
  ckpt.radius = prepared.data.radius;
  ckpt.params = result.best_params;
  const std::string ckpt_path = flags.out_dir + "/checkpoint.json";
  save_checkpoint(ckpt, ckpt_path);

  {
    std::ofstream log(flags.out_dir + "/log.jsonl");
    require(log.good(), ErrorCode::IoFailure, "cannot write training log");
    for (const EpochRecord& r : result.log) {
      json e{{"epoch", r.epoch},
             {"train_loss", r.train_loss},
             {"train_p_overlap", r.train_p_overlap},
             {"val_ade", r.val_ade},
             {"val_fde", r.val_fde},
             {"val_overlap", r.val_overlap}};
      log << e.dump() << "\n";
    }
  }
  {
    std::ofstream used(flags.out_dir + "/config_used.json");
    used << run_config_to_json(cfg) << "\n";
  }

  RunManifest manifest;
  manifest.command = "train";
  manifest.config_path = flags.config_path;
  manifest.config_hash = hash_file(flags.config_path);
  manifest.seed = cfg.train.seed;
  manifest.inputs = {flags.data_dir};
  manifest.outputs = {ckpt_path, flags.out_dir + "/log.jsonl"};
  write_manifest(manifest, flags.out_dir);

  std::cout << "trained " << variant_name(cfg.model.variant) << " for " << result.log.size()
            << " epochs; best val ADE " << result.best_val_ade << " (epoch " << result.best_epoch
            << ") -> " << ckpt_path << "\n";
  return 0;
}

int run_evaluation(const CommonFlags& flags, bool zero_shot) {
  Checkpoint ckpt = load_checkpoint(flags.checkpoint_path);
  const PreparedData prepared = read_prepared(flags.data_dir);
  check_schema(ckpt, prepared);
  const auto& samples = pick_split(prepared, flags.split);
  require(!samples.empty(), ErrorCode::EmptyDataset,
          "split '" + flags.split + "' in " + flags.data_dir + " is empty");

  MetricReport report =
      evaluate_model(samples, ckpt.params, ckpt.model, ckpt.adjacency, ckpt.radius);
  report.zero_shot = zero_shot;
  report.split = flags.split;
  report.config_hash = hash_file(flags.checkpoint_path);

  fs::create_directories(flags.out_dir);
  const std::string report_path = flags.out_dir + "/metric_report.json";
  std::ofstream out(report_path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + report_path);
  out << report.to_json() << "\n";

  RunManifest manifest;
  manifest.command = zero_shot ? "transfer-eval" : "evaluate";
  manifest.config_path = flags.checkpoint_path;
  manifest.config_hash = report.config_hash;
  manifest.seed = 0;
  manifest.inputs = {flags.checkpoint_path, flags.data_dir};
  manifest.outputs = {report_path};
  write_manifest(manifest, flags.out_dir);

  std::cout << (zero_shot ? "zero-shot " : "") << "eval on " << flags.split << ": ADE "
            << report.ade << " m, FDE " << report.fde << " m, overlap " << report.overlap_rate
            << " -> " << report_path << "\n";
  return 0;
}

int cmd_predict(const CommonFlags& flags) {
  Checkpoint ckpt = load_checkpoint(flags.checkpoint_path);
  const PreparedData prepared = read_prepared(flags.data_dir);
  check_schema(ckpt, prepared);
  const auto& samples = pick_split(prepared, flags.split);
  require(flags.scene_id >= 0 && flags.scene_id < static_cast<int>(samples.size()),
          ErrorCode::InvalidConfig,
          "scene-id " + std::to_string(flags.scene_id) + " out of range (split has " +
              std::to_string(samples.size()) + " scenes)");
  const SequenceSample& sample = samples[static_cast<size_t>(flags.scene_id)];
  const SceneGraph graph = build_adjacency(sample, ckpt.adjacency, ckpt.radius);
  const Tensor pred = model_predict(graph, ckpt.params, ckpt.model);

  // Report world coordinates: undo the scene-centroid translation.
  json agents = json::array();
  for (int a = 0; a < sample.num_agents(); ++a) {
    json observed = json::array();
    for (int t = 0; t < sample.t_obs; ++t) {
      if (!sample.present(a, t)) continue;
      observed.push_back({sample.obs.at(a, t * SequenceSample::kFeatureDim) + sample.origin[0],
                          sample.obs.at(a, t * SequenceSample::kFeatureDim + 1) +
                              sample.origin[1]});
    }
    json predicted = json::array();
    for (int t = 0; t < sample.t_pred; ++t)
      predicted.push_back(
          {pred.at(a, 2 * t) + sample.origin[0], pred.at(a, 2 * t + 1) + sample.origin[1]});
    agents.push_back({{"id", sample.agents[static_cast<size_t>(a)].agent_id},
                      {"type", agent_type_name(sample.agents[static_cast<size_t>(a)].type)},
                      {"observed", std::move(observed)},
                      {"predicted", std::move(predicted)}});
  }
  json j{{"recording_id", sample.recording_id},
         {"anchor_frame", sample.anchor_frame},
         {"scene_id", flags.scene_id},
         {"agents", std::move(agents)}};

  fs::create_directories(flags.out_dir);
  const std::string path = flags.out_dir + "/trajectories.json";
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
  out << j.dump(1, '\t') << "\n";

  RunManifest manifest;
  manifest.command = "predict";
  manifest.config_path = flags.checkpoint_path;
  manifest.config_hash = hash_file(flags.checkpoint_path);
  manifest.inputs = {flags.checkpoint_path, flags.data_dir};
  manifest.outputs = {path};
  write_manifest(manifest, flags.out_dir);
  std::cout << "predicted scene " << flags.scene_id << " (" << sample.num_agents()
            << " agents) -> " << path << "\n";
  return 0;
}

int cmd_attribute(const CommonFlags& flags, int target_node, int ig_steps) {
  Checkpoint ckpt = load_checkpoint(flags.checkpoint_path);
  const PreparedData prepared = read_prepared(flags.data_dir);
  check_schema(ckpt, prepared);
  const auto& samples = pick_split(prepared, flags.split);
  require(flags.scene_id >= 0 && flags.scene_id < static_cast<int>(samples.size()),
          ErrorCode::InvalidConfig, "scene-id out of range");
  const SequenceSample& sample = samples[static_cast<size_t>(flags.scene_id)];
  const SceneGraph graph = build_adjacency(sample, ckpt.adjacency, ckpt.radius);

  AttributionConfig attr;
  attr.target.node = target_node;
  attr.n_steps = ig_steps;
  const AttributionResult result =
      integrated_gradients_edges(graph, ckpt.params, ckpt.model, attr);

  fs::create_directories(flags.out_dir);
  const std::string json_path = flags.out_dir + "/attribution.json";
  const std::string dot_path = flags.out_dir + "/attribution.dot";
  export_interaction_graph(graph, result, json_path, ExportFormat::Json);
  export_interaction_graph(graph, result, dot_path, ExportFormat::Dot);
  {
    std::ofstream gout(flags.out_dir + "/scene_graph.json");
    gout << scene_graph_to_json(graph) << "\n";
  }

  RunManifest manifest;
  manifest.command = "attribute";
  manifest.config_path = flags.checkpoint_path;
  manifest.config_hash = hash_file(flags.checkpoint_path);
  manifest.inputs = {flags.checkpoint_path, flags.data_dir};
  manifest.outputs = {json_path, dot_path};
  write_manifest(manifest, flags.out_dir);
  std::cout << "attributed scene " << flags.scene_id << " (target node " << target_node
            << ", completeness gap " << result.completeness_gap << ") -> " << json_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SCOUT trajectory forecaster"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string csv_override;
  int target_node = 0;
  int ig_steps = 128;

  auto add_common = [&](CLI::App* cmd, bool needs_config, bool needs_data, bool needs_ckpt) {
    if (needs_config)
      cmd->add_option("--config", flags.config_path, "run configuration file")->required();
    if (needs_data)
      cmd->add_option("--data", flags.data_dir, "prepared dataset directory")->required();
    if (needs_ckpt)
      cmd->add_option("--checkpoint", flags.checkpoint_path, "checkpoint file")->required();
    cmd->add_option("--out", flags.out_dir, "output directory")->required();
    cmd->add_option("--seed", flags.seed, "root random seed override");
  };

  CLI::App* prepare = app.add_subcommand("prepare", "ingest a CSV into cached dataset splits");
  add_common(prepare, true, false, false);
  prepare->add_option("--csv", csv_override, "input CSV (overrides the config)");

  CLI::App* train_cmd = app.add_subcommand("train", "train a model on a prepared dataset");
  add_common(train_cmd, true, true, false);
  train_cmd->add_option("--variant", flags.variant, "aggregation variant override");
  train_cmd->add_option("--alpha", flags.alpha, "overlap penalty weight override");
  train_cmd->add_option("--beta", flags.beta, "final-step loss weight override");
  train_cmd->add_option("--heads", flags.heads, "attention head count override");

  CLI::App* evaluate = app.add_subcommand("evaluate", "compute metrics for a checkpoint");
  add_common(evaluate, false, true, true);
  evaluate->add_option("--split", flags.split, "train|val|test (default test)");

  CLI::App* predict = app.add_subcommand("predict", "emit predicted trajectories for one scene");
  add_common(predict, false, true, true);
  predict->add_option("--split", flags.split, "train|val|test (default test)");
  predict->add_option("--scene-id", flags.scene_id, "scene index within the split");

  CLI::App* attribute =
      app.add_subcommand("attribute", "integrated-gradients interaction attribution");
  add_common(attribute, false, true, true);
  attribute->add_option("--split", flags.split, "train|val|test (default test)");
  attribute->add_option("--scene-id", flags.scene_id, "scene index within the split");
  attribute->add_option("--target-node", target_node, "node whose prediction is explained");
  attribute->add_option("--ig-steps", ig_steps, "path integration steps");

  CLI::App* transfer =
      app.add_subcommand("transfer-eval", "zero-shot evaluation on a different scenario");
  add_common(transfer, false, true, true);
  transfer->add_option("--split", flags.split, "train|val|test (default test)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) return cmd_prepare(flags, csv_override);
    if (train_cmd->parsed()) return cmd_train(flags);
    if (evaluate->parsed()) return run_evaluation(flags, false);
    if (predict->parsed()) return cmd_predict(flags);
    if (attribute->parsed()) return cmd_attribute(flags, target_node, ig_steps);
    if (transfer->parsed()) return run_evaluation(flags, true);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return error_exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 70;
  }
  return 0;
}
