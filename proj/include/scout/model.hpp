#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scout/graph.hpp"
#include "scout/param.hpp"
#include "scout/rng.hpp"
#include "scout/tape.hpp"

namespace scout {

// Neighborhood aggregation schemes. PlainGCN is the isotropic baseline; the
// other three weight neighbors unequally (fixed kernel score, learned
// attention, learned edge gates).
enum class Variant { PlainGCN, FixedWeight, Attention, Gated };

enum class OutputMode { Positions, Velocities };

// Activation applied to embedding and graph-layer outputs. Identity exists
// for hand-computed fixtures.
enum class Activation { ReLU, Identity };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& s);

struct ModelConfig {
  Variant variant = Variant::Attention;
  int hidden_dim = 64;
  int num_heads = 3;   // attention only; must divide hidden_dim
  int edge_dim = 8;    // width of the embedded edge feature (attention)
  bool use_residual_connection = true;
  bool use_residual_weight = true;  // fixed-weight variant only
  bool use_final_fc = true;         // false = single linear projection head
  double dropout_p = 0.25;
  double attention_dropout_p = 0.6;
  double leaky_relu_slope = 0.2;
  // Fixed pre-scale on node features inside the embedding, bringing
  // meter-scale inputs to O(1) so attention scores and head outputs start
  // in a healthy range. 0.05 = 1 / neighborhood radius.
  double input_scale = 0.05;
  // Express each node's observed positions relative to its own anchor
  // position and re-anchor the predictions on output. Makes the learned
  // map translation-invariant; neighbor geometry still enters through the
  // edge weights. Padded (absent) steps stay zero.
  bool ego_relative_features = true;
  Activation activation = Activation::ReLU;
  OutputMode output_mode = OutputMode::Positions;
  int t_obs = 8;
  int t_pred = 12;

  int input_dim() const { return t_obs * SequenceSample::kFeatureDim; }
  // Gated layers keep edge features at hidden width so gates can modulate
  // neighbor messages coordinate-wise.
  int edge_feature_dim() const { return variant == Variant::Gated ? hidden_dim : edge_dim; }
  void validate() const;
};

// Creates every learnable tensor for the configuration, Kaiming-initialized
// (weights) and zero-initialized (biases), deterministic given the rng.
ParamStore init_params(const ModelConfig& cfg, Rng& rng);

// Attention weights recorded during a forward pass: alpha[layer][head][e]
// follows the DirectedEdges order of the forward's graph. Gated models fill
// `gates` instead: one (E, d) tensor of normalized gate values per layer.
struct AttentionCapture {
  std::vector<std::vector<std::vector<double>>> alpha;
  std::vector<Tensor> gates;
};

struct ModelForward {
  VarId predictions = -1;   // (N, T_pred*2) positions in the sample frame
  VarId edge_weights = -1;  // the (E,1) leaf the layers consumed
  DirectedEdges edges;
};

// Builds the full forward pass on the tape: embedding, two graph layers,
// prediction head, and (in Velocities mode) integration from the anchor
// position. `edge_weight_override` substitutes the graph's edge weights
// (aligned with directed_edges order); integrated gradients uses it to walk
// the baseline-to-input path.
ModelForward model_forward_tape(Tape& tape, const SceneGraph& graph, ParamStore& params,
                                const ModelConfig& cfg, bool training, Rng* dropout_rng,
                                ParamBinding& binding,
                                const std::vector<double>* edge_weight_override = nullptr,
                                AttentionCapture* capture = nullptr);

// Evaluation-mode forward returning plain predictions.
Tensor model_predict(const SceneGraph& graph, ParamStore& params, const ModelConfig& cfg,
                     AttentionCapture* capture = nullptr);

// Constant-velocity extrapolation from the last observed step; the
// reference every learned model has to beat.
Tensor constant_velocity_predict(const SequenceSample& sample);

// ---------------------------------------------------------------------------
// Layer builders (used by model_forward_tape; exposed for unit fixtures).
// All take node features h as a tape var and the directed incidence arrays.
// ---------------------------------------------------------------------------
namespace layers {

// sigma(D^-1/2 A D^-1/2 h W + b), with the symmetric normalization computed
// on-tape from the edge-weight leaf so it stays differentiable.
VarId gcn_layer(Tape& tape, VarId h, const DirectedEdges& edges, VarId edge_w, VarId weight,
                VarId bias, Activation act);

// Fixed attention-weight aggregation: neighbor j contributes
// e_ij / (c_ij + 1) * W h_j. With a residual weight, the ego node bypasses
// the sum through its own transform and self-loops leave the sum;
// without one, self-loops are aggregated like any neighbor.
VarId fixed_weight_layer(Tape& tape, VarId h, const DirectedEdges& edges, VarId edge_w,
                         VarId weight, VarId bias, std::optional<VarId> self_weight,
                         Activation act);

enum class HeadCombine { Concat, Mean };

struct AttentionHeadParams {
  VarId weight;     // (d_in, d_head)
  VarId attn_vec;   // (2*d_head + edge_feature_dim, 1)
};

// Multi-head attention aggregation. Per head: scores from a learned vector
// dotted with [W h_dst || W h_src || edge_h], LeakyReLU, softmax over each
// node's incoming edges, then an alpha-weighted sum of W h_src.
VarId attention_layer(Tape& tape, VarId h, VarId edge_h, const DirectedEdges& edges,
                      const std::vector<AttentionHeadParams>& heads, HeadCombine combine,
                      Activation act, double leaky_slope, double attn_dropout_p, Rng* dropout_rng,
                      std::vector<std::vector<double>>* alpha_capture);

struct GatedLayerParams {
  VarId self_weight;      // transforms the ego node
  VarId neighbor_weight;  // transforms gated neighbor messages
  VarId edge_weight;      // edge feature self-transform
  VarId edge_src_weight;  // source node -> edge update
  VarId edge_dst_weight;  // destination node -> edge update
};

struct GatedLayerOut {
  VarId node_h;
  VarId edge_h;
};

// Edge-gated aggregation with built-in node and edge residuals. Gates are
// sigmoids of the incoming edge features, normalized per destination node.
GatedLayerOut gated_layer(Tape& tape, VarId h, VarId edge_h, const DirectedEdges& edges,
                          const GatedLayerParams& p, Activation act,
                          Tensor* gate_capture = nullptr);

struct HeadParams {
  VarId hidden_weight = -1;  // -1 when the final FC layer is ablated away
  VarId hidden_bias = -1;
  VarId out_weight = -1;
  VarId out_bias = -1;
};

// Per-node prediction head: two-layer MLP, or a single projection when the
// final FC layer is ablated away.
VarId feed_forward_head(Tape& tape, VarId h, const HeadParams& p, Activation act);

}  // namespace layers

}  // namespace scout
