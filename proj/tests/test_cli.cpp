#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scout/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SCOUT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Straight movers at the working rate across several recordings.
void write_csv(const fs::path& path, int recordings, int frames, uint64_t seed) {
  scout::Rng rng(seed);
  std::ofstream out(path);
  out << "recording_id,frame,track_id,x,y,heading,agent_type\n";
  const char* types[3] = {"car", "pedestrian", "bicycle"};
  for (int r = 0; r < recordings; ++r) {
    for (int track = 0; track < 3; ++track) {
      const double x0 = rng.uniform(-10, 10), y0 = rng.uniform(-10, 10);
      const double heading = rng.uniform(-3.0, 3.0);
      const double speed = rng.uniform(0.4, 1.8);
      for (int f = 0; f < frames; ++f) {
        out << "rec" << r << "," << f << "," << track << ","
            << x0 + speed * f * std::cos(heading) << "," << y0 + speed * f * std::sin(heading)
            << "," << heading << "," << types[(r + track) % 3] << "\n";
      }
    }
  }
}

void write_config(const fs::path& path, int t_obs, int t_pred, const fs::path& csv) {
  json j;
  j["data"] = {{"csv", csv.string()}, {"source_hz", 2.5},  {"target_hz", 2.5},
               {"t_obs", t_obs},      {"t_pred", t_pred},  {"stride", t_obs},
               {"adjacency", "kernel"}, {"radius", 20.0},  {"train_frac", 0.4},
               {"val_frac", 0.3},     {"split_seed", 5}};
  j["model"] = {{"variant", "attention"}, {"hidden_dim", 12}, {"num_heads", 3},
                {"edge_dim", 4},          {"dropout", 0.1},   {"attention_dropout", 0.1},
                {"output_mode", "velocities"}};
  j["loss"] = {{"delta", 1.0}, {"alpha", 5.0}, {"beta", 1.0}};
  j["train"] = {{"lr", 1e-3}, {"batch_size", 4}, {"max_epochs", 2}, {"seed", 9}};
  std::ofstream out(path);
  out << j.dump(1, '\t') << "\n";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("end-to-end pipeline: prepare, train, evaluate, predict, attribute, transfer") {
  const fs::path root = fs::temp_directory_path() / "scout_cli_e2e";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path csv = root / "data.csv";
  const fs::path config = root / "config.json";
  write_csv(csv, 5, 24, 17);
  write_config(config, 4, 4, csv);

  // prepare (twice: cached artifacts must be byte-identical)
  REQUIRE(run_cli("prepare --config " + config.string() + " --out " + (root / "prep").string()) ==
          0);
  REQUIRE(run_cli("prepare --config " + config.string() + " --out " +
                  (root / "prep2").string()) == 0);
  for (const char* name : {"splits.json", "train.json", "val.json", "test.json"})
    CHECK(slurp(root / "prep" / name) == slurp(root / "prep2" / name));

  // train
  REQUIRE(run_cli("train --config " + config.string() + " --data " + (root / "prep").string() +
                  " --out " + (root / "run").string()) == 0);
  CHECK(fs::exists(root / "run" / "checkpoint.json"));
  CHECK(fs::exists(root / "run" / "log.jsonl"));
  CHECK(fs::exists(root / "run" / "manifest.json"));

  const std::string ckpt = (root / "run" / "checkpoint.json").string();
  const std::string data = (root / "prep").string();

  // evaluate
  REQUIRE(run_cli("evaluate --checkpoint " + ckpt + " --data " + data + " --split test --out " +
                  (root / "eval").string()) == 0);
  json report;
  std::ifstream rin(root / "eval" / "metric_report.json");
  rin >> report;
  CHECK(report.at("zero_shot").get<bool>() == false);
  CHECK(report.at("ade").get<double>() >= 0.0);

  // predict
  REQUIRE(run_cli("predict --checkpoint " + ckpt + " --data " + data +
                  " --split test --scene-id 0 --out " + (root / "pred").string()) == 0);
  json traj;
  std::ifstream tin(root / "pred" / "trajectories.json");
  tin >> traj;
  CHECK(traj.at("agents").size() >= 1);

  // attribute
  REQUIRE(run_cli("attribute --checkpoint " + ckpt + " --data " + data +
                  " --split test --scene-id 0 --ig-steps 16 --out " +
                  (root / "attr").string()) == 0);
  CHECK(fs::exists(root / "attr" / "attribution.json"));
  CHECK(fs::exists(root / "attr" / "attribution.dot"));

  // transfer-eval onto the model's own distribution matches evaluate exactly
  REQUIRE(run_cli("transfer-eval --checkpoint " + ckpt + " --data " + data +
                  " --split test --out " + (root / "transfer").string()) == 0);
  json zreport;
  std::ifstream zin(root / "transfer" / "metric_report.json");
  zin >> zreport;
  CHECK(zreport.at("zero_shot").get<bool>() == true);
  CHECK(zreport.at("ade").get<double>() == report.at("ade").get<double>());
  CHECK(zreport.at("fde").get<double>() == report.at("fde").get<double>());
}

TEST_CASE("cli errors map to family exit codes") {
  const fs::path root = fs::temp_directory_path() / "scout_cli_err";
  fs::remove_all(root);
  fs::create_directories(root);

  // Broken CSV: missing column -> data ingestion family (10).
  const fs::path bad_csv = root / "bad.csv";
  {
    std::ofstream out(bad_csv);
    out << "recording_id,frame,track_id,x,y,agent_type\n";
  }
  const fs::path config = root / "config.json";
  write_config(config, 4, 4, bad_csv);
  CHECK(run_cli("prepare --config " + config.string() + " --out " + (root / "p").string()) == 10);

  // Schema mismatch: train on 4/4 windows, transfer onto 4/6 windows (50).
  const fs::path good_csv = root / "good.csv";
  write_csv(good_csv, 4, 30, 23);
  const fs::path cfg_a = root / "cfg_a.json";
  const fs::path cfg_b = root / "cfg_b.json";
  write_config(cfg_a, 4, 4, good_csv);
  write_config(cfg_b, 4, 6, good_csv);
  REQUIRE(run_cli("prepare --config " + cfg_a.string() + " --out " + (root / "da").string()) == 0);
  REQUIRE(run_cli("prepare --config " + cfg_b.string() + " --out " + (root / "db").string()) == 0);
  REQUIRE(run_cli("train --config " + cfg_a.string() + " --data " + (root / "da").string() +
                  " --out " + (root / "runa").string()) == 0);
  CHECK(run_cli("transfer-eval --checkpoint " + (root / "runa" / "checkpoint.json").string() +
                " --data " + (root / "db").string() + " --split test --out " +
                (root / "x").string()) == 50);

  // Unknown split name -> config family (64).
  CHECK(run_cli("evaluate --checkpoint " + (root / "runa" / "checkpoint.json").string() +
                " --data " + (root / "da").string() + " --split bogus --out " +
                (root / "y").string()) == 64);
}

}  // TEST_SUITE
