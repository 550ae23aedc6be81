#pragma once

#include <string>
#include <vector>

#include "scout/loss.hpp"
#include "scout/metrics.hpp"
#include "scout/model.hpp"
#include "scout/param.hpp"

namespace scout {

struct TrainConfig {
  double lr = 1e-4;
  // Paper-scale batching is 256 scenes; 16 is the desk-scale default.
  int batch_size = 16;
  double weight_decay = 0.01;
  int max_epochs = 100;
  int early_stop_patience = 10;
  uint64_t seed = 0;
  // Optional step schedule: lr *= lr_decay every lr_decay_every epochs.
  double lr_decay = 1.0;
  int lr_decay_every = 0;
  // Standard adaptive-moment defaults.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  void validate() const;
};

// Decoupled-weight-decay adaptive optimizer. Weight decay shrinks the
// weights directly (w *= 1 - lr*wd) instead of entering the gradient.
class AdamW {
 public:
  AdamW(const ParamStore& params, const TrainConfig& cfg);
  // Consumes the gradients accumulated in `params`; throws
  // NonFiniteGradient (naming the parameter) without touching any weight.
  void step(ParamStore& params);
  long long step_count() const { return t_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  std::vector<Moments> moments_;
  TrainConfig cfg_;
  long long t_ = 0;
};

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

struct Checkpoint {
  ModelConfig model;
  AdjacencyMode adjacency = AdjacencyMode::Kernel;
  double radius = kDefaultNeighborRadius;
  ParamStore params;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

// Runs the model over every sample (dropout off) and aggregates metrics.
// Samples without loss-eligible agents still contribute to the overlap rate
// but not to displacement errors.
MetricReport evaluate_model(const std::vector<SequenceSample>& samples, ParamStore& params,
                            const ModelConfig& cfg, AdjacencyMode adjacency, double radius);

// Metrics of the constant-velocity baseline on the same samples.
MetricReport evaluate_constant_velocity(const std::vector<SequenceSample>& samples,
                                        AdjacencyMode adjacency, double radius);

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_p_overlap = 0.0;
  double val_ade = 0.0;
  double val_fde = 0.0;
  double val_overlap = 0.0;
};

struct TrainResult {
  ParamStore best_params;
  int best_epoch = -1;
  double best_val_ade = 0.0;
  std::vector<EpochRecord> log;
};

// Shuffles scenes each epoch, batches them by block-diagonal graph
// composition, and early-stops on validation ADE. When the validation split
// is empty the training split stands in for model selection.
TrainResult train(const DatasetSplit& data, const ModelConfig& model_cfg,
                  const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                  AdjacencyMode adjacency, double radius);

// ---------------------------------------------------------------------------
// Gradient verification harness
// ---------------------------------------------------------------------------

struct GradientCheckEntry {
  std::string variant;
  int graph_index = 0;
  std::string param;
  double max_rel_err = 0.0;
};

struct GradientCheckReport {
  std::vector<GradientCheckEntry> entries;
  double worst = 0.0;
  bool every_param_covered = false;
  bool passed(double tolerance) const { return every_param_covered && worst < tolerance; }
};

// Compares the tape gradient of the full training loss against central
// finite differences, for every parameter of every variant, on random
// kernel-mode graphs with 2..max_nodes agents. Failures are reported, not
// thrown.
GradientCheckReport verify_gradients(int graphs_per_variant, int max_nodes, uint64_t seed,
                                     double eps, const LossConfig& loss_cfg);

// Random scene fixture shared by the harness and the property tests.
SceneGraph make_random_graph(int n_nodes, int t_obs, Rng& rng,
                             AdjacencyMode mode = AdjacencyMode::Kernel,
                             double radius = kDefaultNeighborRadius);

}  // namespace scout
