#include "scout/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "scout/error.hpp"
#include "scout/serialize.hpp"

namespace scout {

using nlohmann::json;

void TrainConfig::validate() const {
  require(lr > 0.0, ErrorCode::InvalidConfig, "lr must be positive");
  require(lr_decay > 0.0 && lr_decay <= 1.0, ErrorCode::InvalidConfig, "lr_decay must be in (0, 1]");
  require(batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be >= 1");
  require(weight_decay >= 0.0, ErrorCode::InvalidConfig, "weight_decay must be >= 0");
  require(max_epochs >= 1, ErrorCode::InvalidConfig, "max_epochs must be >= 1");
  require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, ErrorCode::InvalidConfig,
          "moment decay rates must be in (0, 1)");
}

AdamW::AdamW(const ParamStore& params, const TrainConfig& cfg) : cfg_(cfg) {
  cfg.validate();
  for (const Param& p : params.all())
    moments_.push_back(Moments{Tensor::zeros(p.value.rows, p.value.cols),
                               Tensor::zeros(p.value.rows, p.value.cols)});
}

void AdamW::step(ParamStore& params) {
  require(params.count() == moments_.size(), ErrorCode::ShapeMismatch,
          "optimizer state does not match parameter set");
  std::string offender;
  const bool finite = params.grads_finite(&offender);
  require(finite, ErrorCode::NonFiniteGradient,
          "non-finite gradient in parameter '" + offender + "'; step aborted");

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < moments_.size(); ++i) {
    Param& p = params.all()[i];
    Moments& mo = moments_[i];
    for (size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data[k];
      mo.m.data[k] = cfg_.beta1 * mo.m.data[k] + (1.0 - cfg_.beta1) * g;
      mo.v.data[k] = cfg_.beta2 * mo.v.data[k] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = mo.m.data[k] / bc1;
      const double v_hat = mo.v.data[k] / bc2;
      double w = p.value.data[k];
      w -= cfg_.lr * cfg_.weight_decay * w;  // decoupled decay
      w -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
      p.value.data[k] = w;
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr int kCheckpointVersion = 1;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["kind"] = "scout_checkpoint";
  j["model"] = model_config_to_json(ckpt.model);
  j["adjacency"] = ckpt.adjacency == AdjacencyMode::Binary ? "binary" : "kernel";
  j["radius"] = ckpt.radius;
  json params = json::array();
  for (const Param& p : ckpt.params.all())
    params.push_back(
        {{"name", p.name}, {"rows", p.value.rows}, {"cols", p.value.cols}, {"data", p.value.data}});
  j["params"] = std::move(params);
  std::ofstream out(path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path);
  out << j.dump(1, '\t') << "\n";
  require(out.good(), ErrorCode::IoFailure, "write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::IoFailure, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, path + ": " + e.what());
  }
  require(j.value("kind", "") == "scout_checkpoint", ErrorCode::SchemaMismatch,
          path + " is not a checkpoint file");
  require(j.at("format_version").get<int>() == kCheckpointVersion, ErrorCode::SchemaMismatch,
          "unsupported checkpoint version in " + path);
  Checkpoint c;
  c.model = model_config_from_json(j.at("model"));
  c.adjacency =
      j.at("adjacency").get<std::string>() == "binary" ? AdjacencyMode::Binary : AdjacencyMode::Kernel;
  c.radius = j.at("radius").get<double>();
  for (const json& pj : j.at("params")) {
    Tensor t(pj.at("rows").get<int>(), pj.at("cols").get<int>(),
             pj.at("data").get<std::vector<double>>());
    c.params.add(pj.at("name").get<std::string>(), std::move(t));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

void accumulate_scene(MetricAccumulator& acc, const SequenceSample& sample, const Tensor& pred,
                      const SceneGraph& graph, int t_pred) {
  const auto spatial = graph.spatial_edges();
  const double slots =
      t_pred >= 2 ? static_cast<double>(spatial.size()) * (t_pred - 1) : 0.0;
  const double rate = overlap_percentage(pred, spatial, t_pred);
  std::vector<AgentType> types;
  for (const AgentRef& a : sample.agents) types.push_back(a.type);
  acc.add_scene(pred, sample.fut, sample.loss_mask, types, rate * slots, slots);
}

}  // namespace

MetricReport evaluate_model(const std::vector<SequenceSample>& samples, ParamStore& params,
                            const ModelConfig& cfg, AdjacencyMode adjacency, double radius) {
  require(!samples.empty(), ErrorCode::EmptyDataset, "evaluate_model: no samples");
  MetricAccumulator acc;
  for (const SequenceSample& s : samples) {
    const SceneGraph graph = build_adjacency(s, adjacency, radius);
    const Tensor pred = model_predict(graph, params, cfg);
    accumulate_scene(acc, s, pred, graph, cfg.t_pred);
  }
  return acc.report();
}

MetricReport evaluate_constant_velocity(const std::vector<SequenceSample>& samples,
                                        AdjacencyMode adjacency, double radius) {
  require(!samples.empty(), ErrorCode::EmptyDataset, "evaluate_constant_velocity: no samples");
  MetricAccumulator acc;
  for (const SequenceSample& s : samples) {
    const SceneGraph graph = build_adjacency(s, adjacency, radius);
    const Tensor pred = constant_velocity_predict(s);
    accumulate_scene(acc, s, pred, graph, s.t_pred);
  }
  return acc.report();
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TrainResult train(const DatasetSplit& data, const ModelConfig& model_cfg,
                  const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                  AdjacencyMode adjacency, double radius) {
  model_cfg.validate();
  loss_cfg.validate();
  train_cfg.validate();
  require(!data.train.empty(), ErrorCode::EmptyDataset, "train: empty training split");

  Rng root(train_cfg.seed);
  Rng init_rng = root.split(1);
  Rng shuffle_rng = root.split(2);
  Rng dropout_rng = root.split(3);

  ParamStore params = init_params(model_cfg, init_rng);
  AdamW optimizer(params, train_cfg);

  // Graphs are deterministic per sample; build them once.
  std::vector<SceneGraph> graphs;
  graphs.reserve(data.train.size());
  for (const SequenceSample& s : data.train) graphs.push_back(build_adjacency(s, adjacency, radius));

  const std::vector<SequenceSample>& val_samples = data.val.empty() ? data.train : data.val;

  TrainResult result;
  double best_ade = INFINITY;
  int epochs_since_best = 0;

  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < train_cfg.max_epochs; ++epoch) {
    if (train_cfg.lr_decay_every > 0 && epoch > 0 && epoch % train_cfg.lr_decay_every == 0)
      optimizer.set_lr(optimizer.lr() * train_cfg.lr_decay);
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    double epoch_overlap = 0.0;
    int batches = 0;

    for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(train_cfg.batch_size)) {
      const size_t end = std::min(order.size(), pos + static_cast<size_t>(train_cfg.batch_size));
      std::vector<const SceneGraph*> batch_graphs;
      std::vector<int> batch_samples;
      for (size_t b = pos; b < end; ++b) {
        batch_graphs.push_back(&graphs[static_cast<size_t>(order[b])]);
        batch_samples.push_back(order[b]);
      }
      BatchedGraph batch = compose_graphs(batch_graphs);

      Tape tape;
      ParamBinding binding;
      ModelForward fwd =
          model_forward_tape(tape, batch.graph, params, model_cfg, true, &dropout_rng, binding);

      // Per-scene losses on slices of the batched prediction, then averaged.
      VarId batch_loss = -1;
      double batch_overlap = 0.0;
      int scenes_used = 0;
      for (size_t s = 0; s < batch_samples.size(); ++s) {
        const SequenceSample& sample = data.train[static_cast<size_t>(batch_samples[s])];
        const bool has_eligible =
            std::any_of(sample.loss_mask.begin(), sample.loss_mask.end(),
                        [](uint8_t m) { return m != 0; });
        if (!has_eligible) continue;
        const int off = batch.scene_offsets[s];
        std::vector<int> rows(static_cast<size_t>(sample.num_agents()));
        std::iota(rows.begin(), rows.end(), off);
        VarId scene_pred = tape.gather_rows(fwd.predictions, rows);
        TotalLoss tl =
            total_loss_tape(tape, scene_pred, sample.fut, sample.loss_mask,
                            graphs[static_cast<size_t>(batch_samples[s])].spatial_edges(),
                            loss_cfg, model_cfg.t_pred);
        batch_loss = batch_loss < 0 ? tl.loss : tape.add(batch_loss, tl.loss);
        batch_overlap += tl.p_overlap;
        ++scenes_used;
      }
      if (scenes_used == 0) continue;
      batch_loss = tape.scale(batch_loss, 1.0 / scenes_used);

      const double loss_value = tape.value(batch_loss).at(0, 0);
      require(std::isfinite(loss_value), ErrorCode::NonFiniteLoss,
              "training loss became non-finite at epoch " + std::to_string(epoch));

      params.zero_grads();
      tape.backward(batch_loss);
      binding.flush(tape);
      optimizer.step(params);

      epoch_loss += loss_value;
      epoch_overlap += batch_overlap / scenes_used;
      ++batches;
    }

    MetricReport val = evaluate_model(val_samples, params, model_cfg, adjacency, radius);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = batches > 0 ? epoch_loss / batches : 0.0;
    rec.train_p_overlap = batches > 0 ? epoch_overlap / batches : 0.0;
    rec.val_ade = val.ade;
    rec.val_fde = val.fde;
    rec.val_overlap = val.overlap_rate;
    result.log.push_back(rec);

    if (val.ade < best_ade) {
      best_ade = val.ade;
      result.best_params = params;
      result.best_epoch = epoch;
      result.best_val_ade = val.ade;
      epochs_since_best = 0;
    } else if (++epochs_since_best > train_cfg.early_stop_patience) {
      break;
    }
  }
  if (result.best_epoch < 0) {
    result.best_params = params;
    result.best_epoch = static_cast<int>(result.log.size()) - 1;
    result.best_val_ade = result.log.empty() ? 0.0 : result.log.back().val_ade;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Gradient verification
// ---------------------------------------------------------------------------

SceneGraph make_random_graph(int n_nodes, int t_obs, Rng& rng, AdjacencyMode mode, double radius) {
  constexpr int C = SequenceSample::kFeatureDim;
  SequenceSample s;
  s.recording_id = "fixture";
  s.t_obs = t_obs;
  s.t_pred = 1;
  s.obs = Tensor(n_nodes, t_obs * C);
  s.fut = Tensor(n_nodes, 2);
  s.presence.assign(static_cast<size_t>(n_nodes) * t_obs, 1);
  s.fut_presence.assign(static_cast<size_t>(n_nodes), 1);
  s.loss_mask.assign(static_cast<size_t>(n_nodes), 1);
  for (int a = 0; a < n_nodes; ++a) {
    s.agents.push_back(AgentRef{a, static_cast<AgentType>(rng.uniform_int(0, 2))});
    const double px = rng.uniform(-0.6 * radius, 0.6 * radius);
    const double py = rng.uniform(-0.6 * radius, 0.6 * radius);
    for (int t = 0; t < t_obs; ++t) {
      s.obs.at(a, t * C) = px + rng.uniform(-1.0, 1.0);
      s.obs.at(a, t * C + 1) = py + rng.uniform(-1.0, 1.0);
      s.obs.at(a, t * C + 2) = rng.uniform(-3.0, 3.0);
      s.obs.at(a, t * C + 3 + static_cast<int>(s.agents.back().type)) = 1.0;
    }
  }
  return build_adjacency(s, mode, radius);
}

GradientCheckReport verify_gradients(int graphs_per_variant, int max_nodes, uint64_t seed,
                                     double eps, const LossConfig& loss_cfg) {
  GradientCheckReport report;
  report.every_param_covered = true;

  const Variant variants[] = {Variant::FixedWeight, Variant::Attention, Variant::Gated,
                              Variant::PlainGCN};
  Rng rng(seed);

  for (Variant variant : variants) {
    ModelConfig cfg;
    cfg.variant = variant;
    cfg.hidden_dim = 12;
    cfg.num_heads = variant == Variant::Attention ? 3 : 1;
    cfg.edge_dim = 4;
    cfg.t_obs = 2;
    cfg.t_pred = 3;
    cfg.dropout_p = 0.0;
    cfg.attention_dropout_p = 0.0;
    cfg.output_mode = OutputMode::Positions;

    for (int g = 0; g < graphs_per_variant; ++g) {
      const int n = rng.uniform_int(2, max_nodes);
      const SceneGraph graph = make_random_graph(n, cfg.t_obs, rng);

      Rng init_rng = rng.split(1000 + static_cast<uint64_t>(g));
      ParamStore params = init_params(cfg, init_rng);

      Tensor gt(n, 2 * cfg.t_pred);
      for (double& v : gt.data) v = rng.uniform(-5.0, 5.0);
      std::vector<uint8_t> mask(static_cast<size_t>(n), 1);
      if (n >= 3) mask[static_cast<size_t>(rng.uniform_int(0, n - 1))] = 0;

      auto loss_of_params = [&]() {
        Tape tape;
        ParamBinding binding;
        ModelForward fwd =
            model_forward_tape(tape, graph, params, cfg, false, nullptr, binding);
        TotalLoss tl = total_loss_tape(tape, fwd.predictions, gt, mask, graph.spatial_edges(),
                                       loss_cfg, cfg.t_pred);
        return tape.value(tl.loss).at(0, 0);
      };

      // One analytic backward pass for all parameters.
      params.zero_grads();
      {
        Tape tape;
        ParamBinding binding;
        ModelForward fwd =
            model_forward_tape(tape, graph, params, cfg, false, nullptr, binding);
        TotalLoss tl = total_loss_tape(tape, fwd.predictions, gt, mask, graph.spatial_edges(),
                                       loss_cfg, cfg.t_pred);
        tape.backward(tl.loss);
        binding.flush(tape);
      }

      for (Param& p : params.all()) {
        // Per-coordinate best over an eps ladder. A +/-eps probe that
        // straddles a ReLU kink corrupts that one difference quotient;
        // shrinking eps moves the probe off the kink, while a genuine
        // gradient bug stays wrong at every scale.
        const Tensor fd_coarse = finite_diff_gradient(loss_of_params, p.value, eps);
        const Tensor fd_fine = finite_diff_gradient(loss_of_params, p.value, eps / 10.0);
        double worst_coord = 0.0;
        for (size_t k = 0; k < p.grad.size(); ++k) {
          auto rel = [&](double a, double b) {
            return std::fabs(a - b) / std::max(std::fabs(a) + std::fabs(b), 1e-4);
          };
          worst_coord = std::max(worst_coord,
                                 std::min(rel(p.grad.data[k], fd_coarse.data[k]),
                                          rel(p.grad.data[k], fd_fine.data[k])));
        }
        GradientCheckEntry entry;
        entry.variant = variant_name(variant);
        entry.graph_index = g;
        entry.param = p.name;
        entry.max_rel_err = worst_coord;
        report.worst = std::max(report.worst, entry.max_rel_err);
        report.entries.push_back(std::move(entry));
      }

      // Coverage: every named parameter must have been exercised.
      for (const Param& p : params.all()) {
        const bool seen = std::any_of(report.entries.begin(), report.entries.end(),
                                      [&](const GradientCheckEntry& e) {
                                        return e.param == p.name &&
                                               e.variant == variant_name(variant);
                                      });
        if (!seen) report.every_param_covered = false;
      }
    }
  }
  return report;
}

}  // namespace scout
