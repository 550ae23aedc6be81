#include "scout/model.hpp"

#include <algorithm>
#include <cmath>

#include "scout/error.hpp"

namespace scout {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::PlainGCN: return "plain_gcn";
    case Variant::FixedWeight: return "fixed_weight";
    case Variant::Attention: return "attention";
    case Variant::Gated: return "gated";
  }
  return "attention";
}

Variant parse_variant(const std::string& s) {
  if (s == "plain_gcn" || s == "gcn") return Variant::PlainGCN;
  if (s == "fixed_weight" || s == "a") return Variant::FixedWeight;
  if (s == "attention" || s == "b") return Variant::Attention;
  if (s == "gated" || s == "c") return Variant::Gated;
  fail(ErrorCode::InvalidConfig, "unknown variant '" + s + "'");
}

void ModelConfig::validate() const {
  require(hidden_dim >= 1, ErrorCode::InvalidConfig, "hidden_dim must be positive");
  require(t_obs >= 1 && t_pred >= 1, ErrorCode::InvalidConfig, "horizons must be positive");
  require(num_heads >= 1, ErrorCode::InvalidConfig, "num_heads must be positive");
  if (variant == Variant::Attention) {
    require(hidden_dim % num_heads == 0, ErrorCode::InvalidConfig,
            "hidden_dim " + std::to_string(hidden_dim) + " not divisible by num_heads " +
                std::to_string(num_heads));
    require(edge_dim >= 1, ErrorCode::InvalidConfig, "edge_dim must be positive");
  } else {
    require(num_heads == 1, ErrorCode::InvalidConfig,
            "num_heads applies to the attention variant only");
  }
  require(dropout_p >= 0.0 && dropout_p < 1.0, ErrorCode::InvalidConfig, "dropout_p range");
  require(attention_dropout_p >= 0.0 && attention_dropout_p < 1.0, ErrorCode::InvalidConfig,
          "attention_dropout_p range");
}

ParamStore init_params(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  ParamStore store;
  const int d = cfg.hidden_dim;
  const int in = cfg.input_dim();

  auto weight = [&](const std::string& name, int rows, int cols) {
    store.add(name, kaiming_init(rows, cols, rows, rng));
  };
  auto bias = [&](const std::string& name, int cols) { store.add(name, Tensor::zeros(1, cols)); };

  weight("embed.W", in, d);
  bias("embed.b", d);
  if (cfg.variant == Variant::Attention || cfg.variant == Variant::Gated) {
    weight("edge_embed.W", 1, cfg.edge_feature_dim());
    bias("edge_embed.b", cfg.edge_feature_dim());
  }

  for (const std::string& layer : {std::string("layer1"), std::string("layer2")}) {
    switch (cfg.variant) {
      case Variant::PlainGCN:
        weight(layer + ".W", d, d);
        bias(layer + ".b", d);
        break;
      case Variant::FixedWeight:
        weight(layer + ".W", d, d);
        bias(layer + ".b", d);
        if (cfg.use_residual_weight) weight(layer + ".W_self", d, d);
        break;
      case Variant::Attention: {
        // Layer 1 concatenates head outputs; layer 2 averages full-width heads.
        const int d_head = layer == "layer1" ? d / cfg.num_heads : d;
        for (int h = 0; h < cfg.num_heads; ++h) {
          const std::string prefix = layer + ".head" + std::to_string(h);
          weight(prefix + ".W", d, d_head);
          weight(prefix + ".a", 2 * d_head + cfg.edge_feature_dim(), 1);
        }
        break;
      }
      case Variant::Gated:
        weight(layer + ".W_self", d, d);
        weight(layer + ".W_neigh", d, d);
        weight(layer + ".W_edge", d, d);
        weight(layer + ".W_edge_src", d, d);
        weight(layer + ".W_edge_dst", d, d);
        break;
    }
  }

  const int out = 2 * cfg.t_pred;
  if (cfg.use_final_fc) {
    weight("head.W1", d, d);
    bias("head.b1", d);
    weight("head.W2", d, out);
    bias("head.b2", out);
  } else {
    weight("head.W", d, out);
    bias("head.b", out);
  }
  return store;
}

namespace {

VarId apply_activation(Tape& tape, VarId x, Activation act) {
  return act == Activation::ReLU ? tape.relu(x) : x;
}

}  // namespace

namespace layers {

VarId gcn_layer(Tape& tape, VarId h, const DirectedEdges& edges, VarId edge_w, VarId weight,
                VarId bias, Activation act) {
  const int n = edges.num_nodes;
  // Symmetric normalization built from the edge leaf: coefficients
  // w_e / sqrt(deg(src) * deg(dst)) reproduce degree_normalize exactly.
  VarId deg = tape.scatter_add_rows(edge_w, edges.dst, n);
  VarId root = tape.sqrt_elem(deg);
  VarId denom = tape.mul(tape.gather_rows(root, edges.src), tape.gather_rows(root, edges.dst));
  VarId coef = tape.div(edge_w, denom);

  VarId hw = tape.matmul(h, weight);
  VarId messages = tape.row_scale(tape.gather_rows(hw, edges.src), coef);
  VarId agg = tape.scatter_add_rows(messages, edges.dst, n);
  return apply_activation(tape, tape.add_rowvec(agg, bias), act);
}

VarId fixed_weight_layer(Tape& tape, VarId h, const DirectedEdges& edges, VarId edge_w,
                         VarId weight, VarId bias, std::optional<VarId> self_weight,
                         Activation act) {
  const int n = edges.num_nodes;
  // Degrees count incident edges including the self-loop (the Eq. 2
  // convention); they are structural constants, not edge-weight functions.
  std::vector<double> degree(static_cast<size_t>(n), 0.0);
  for (int e = 0; e < edges.count(); ++e) degree[static_cast<size_t>(edges.dst[e])] += 1.0;

  std::vector<int> keep;
  for (int e = 0; e < edges.count(); ++e) {
    if (self_weight && edges.src[e] == edges.dst[e]) continue;  // ego handled separately
    keep.push_back(e);
  }

  VarId hw = tape.matmul(h, weight);
  VarId agg;
  if (keep.empty()) {
    agg = tape.leaf(Tensor::zeros(n, tape.value(hw).cols));
  } else {
    Tensor inv_norm(static_cast<int>(keep.size()), 1);
    std::vector<int> src, dst;
    for (size_t r = 0; r < keep.size(); ++r) {
      const int e = keep[r];
      const double c = std::sqrt(degree[static_cast<size_t>(edges.src[e])]) *
                       std::sqrt(degree[static_cast<size_t>(edges.dst[e])]);
      inv_norm.at(static_cast<int>(r), 0) = 1.0 / (c + 1.0);
      src.push_back(edges.src[e]);
      dst.push_back(edges.dst[e]);
    }
    VarId w_kept = tape.gather_rows(edge_w, keep);
    VarId coef = tape.mul(w_kept, tape.leaf(std::move(inv_norm)));
    VarId messages = tape.row_scale(tape.gather_rows(hw, src), coef);
    agg = tape.scatter_add_rows(messages, dst, n);
  }

  VarId pre = tape.add_rowvec(agg, bias);
  if (self_weight) pre = tape.add(pre, tape.matmul(h, *self_weight));
  return apply_activation(tape, pre, act);
}

VarId attention_layer(Tape& tape, VarId h, VarId edge_h, const DirectedEdges& edges,
                      const std::vector<AttentionHeadParams>& heads, HeadCombine combine,
                      Activation act, double leaky_slope, double attn_dropout_p, Rng* dropout_rng,
                      std::vector<std::vector<double>>* alpha_capture) {
  require(!heads.empty(), ErrorCode::InvalidConfig, "attention_layer: no heads");
  const int n = edges.num_nodes;

  std::vector<VarId> outputs;
  for (const AttentionHeadParams& head : heads) {
    VarId hw = tape.matmul(h, head.weight);
    VarId src_feat = tape.gather_rows(hw, edges.src);
    VarId dst_feat = tape.gather_rows(hw, edges.dst);
    // z = [W h_dst || W h_src || e], scored by the learned vector.
    VarId z = tape.concat_cols({dst_feat, src_feat, edge_h});
    VarId score = tape.leaky_relu(tape.matmul(z, head.attn_vec), leaky_slope);
    VarId alpha = tape.segment_softmax(score, edges.dst, n);
    if (alpha_capture) alpha_capture->push_back(tape.value(alpha).data);
    if (attn_dropout_p > 0.0 && dropout_rng)
      alpha = tape.dropout(alpha, attn_dropout_p, true, dropout_rng);
    VarId messages = tape.row_scale(src_feat, alpha);
    VarId agg = tape.scatter_add_rows(messages, edges.dst, n);
    outputs.push_back(combine == HeadCombine::Concat ? apply_activation(tape, agg, act) : agg);
  }

  if (combine == HeadCombine::Concat) {
    return outputs.size() == 1 ? outputs[0] : tape.concat_cols(outputs);
  }
  VarId sum = outputs[0];
  for (size_t i = 1; i < outputs.size(); ++i) sum = tape.add(sum, outputs[i]);
  return apply_activation(tape, tape.scale(sum, 1.0 / static_cast<double>(outputs.size())), act);
}

GatedLayerOut gated_layer(Tape& tape, VarId h, VarId edge_h, const DirectedEdges& edges,
                          const GatedLayerParams& p, Activation act, Tensor* gate_capture) {
  const int n = edges.num_nodes;

  // Gates: sigmoid of each incoming edge feature, normalized per
  // destination so they sum to one coordinate-wise.
  VarId gate_raw = tape.sigmoid(edge_h);
  VarId gate_sum = tape.scatter_add_rows(gate_raw, edges.dst, n);
  VarId gates = tape.div(gate_raw, tape.gather_rows(gate_sum, edges.dst));
  if (gate_capture) *gate_capture = tape.value(gates);

  VarId neigh = tape.matmul(h, p.neighbor_weight);
  VarId messages = tape.mul(gates, tape.gather_rows(neigh, edges.src));
  VarId agg = tape.scatter_add_rows(messages, edges.dst, n);
  VarId node_update = apply_activation(tape, tape.add(tape.matmul(h, p.self_weight), agg), act);
  VarId node_out = tape.add(h, node_update);

  VarId edge_update = tape.relu(
      tape.add(tape.add(tape.matmul(edge_h, p.edge_weight),
                        tape.matmul(tape.gather_rows(h, edges.src), p.edge_src_weight)),
               tape.matmul(tape.gather_rows(h, edges.dst), p.edge_dst_weight)));
  VarId edge_out = tape.add(edge_h, edge_update);
  return GatedLayerOut{node_out, edge_out};
}

VarId feed_forward_head(Tape& tape, VarId h, const HeadParams& p, Activation act) {
  if (p.hidden_weight >= 0) {
    VarId mid =
        apply_activation(tape, tape.add_rowvec(tape.matmul(h, p.hidden_weight), p.hidden_bias),
                         act);
    return tape.add_rowvec(tape.matmul(mid, p.out_weight), p.out_bias);
  }
  return tape.add_rowvec(tape.matmul(h, p.out_weight), p.out_bias);
}

}  // namespace layers

ModelForward model_forward_tape(Tape& tape, const SceneGraph& graph, ParamStore& params,
                                const ModelConfig& cfg, bool training, Rng* dropout_rng,
                                ParamBinding& binding,
                                const std::vector<double>* edge_weight_override,
                                AttentionCapture* capture) {
  cfg.validate();
  require(graph.node_features.cols == cfg.input_dim(), ErrorCode::ShapeMismatch,
          "model_forward: node features " + graph.node_features.shape_str() + " vs input dim " +
              std::to_string(cfg.input_dim()));
  require(!training || dropout_rng != nullptr, ErrorCode::InvalidConfig,
          "model_forward: training mode needs an rng");

  ModelForward out;
  out.edges = directed_edges(graph);
  const DirectedEdges& edges = out.edges;
  const int n = graph.num_nodes();

  Tensor w(edges.count(), 1);
  if (edge_weight_override) {
    require(edge_weight_override->size() == static_cast<size_t>(edges.count()),
            ErrorCode::ShapeMismatch, "edge weight override size");
    for (int e = 0; e < edges.count(); ++e) w.at(e, 0) = (*edge_weight_override)[e];
  } else {
    for (int e = 0; e < edges.count(); ++e) w.at(e, 0) = edges.weight[e];
  }
  out.edge_weights = tape.leaf(std::move(w));

  auto bind = [&](const std::string& name) { return binding.bind(tape, params.get(name)); };

  // Input embedding (nodes, and edge scalars for the variants that use an
  // edge representation).
  Tensor scaled_features = graph.node_features;
  if (cfg.ego_relative_features) {
    // Replace absolute positions with per-step displacements (the first
    // present step, and padded steps, stay zero). A fixed invertible
    // linear pre-map, so the function class is unchanged, but per-step
    // motion lands in single channels and the map the head must learn is
    // translation-invariant.
    constexpr int C = SequenceSample::kFeatureDim;
    for (int i = 0; i < n; ++i) {
      auto present = [&](int t) {
        for (int c = 0; c < C; ++c)
          if (graph.node_features.at(i, t * C + c) != 0.0) return true;
        return false;
      };
      for (int t = cfg.t_obs - 1; t >= 0; --t) {
        if (!present(t)) continue;
        int prev = t - 1;
        while (prev >= 0 && !present(prev)) --prev;
        if (prev < 0) {
          scaled_features.at(i, t * C) = 0.0;
          scaled_features.at(i, t * C + 1) = 0.0;
        } else {
          scaled_features.at(i, t * C) =
              graph.node_features.at(i, t * C) - graph.node_features.at(i, prev * C);
          scaled_features.at(i, t * C + 1) =
              graph.node_features.at(i, t * C + 1) - graph.node_features.at(i, prev * C + 1);
        }
      }
    }
  }
  if (cfg.input_scale != 1.0)
    for (double& v : scaled_features.data) v *= cfg.input_scale;
  VarId h = apply_activation(
      tape,
      tape.add_rowvec(tape.matmul(tape.leaf(std::move(scaled_features)), bind("embed.W")),
                      bind("embed.b")),
      cfg.activation);
  h = tape.dropout(h, cfg.dropout_p, training, dropout_rng);

  VarId edge_h = -1;
  if (cfg.variant == Variant::Attention || cfg.variant == Variant::Gated) {
    edge_h = apply_activation(
        tape,
        tape.add_rowvec(tape.matmul(out.edge_weights, bind("edge_embed.W")),
                        bind("edge_embed.b")),
        cfg.activation);
  }

  for (int layer = 1; layer <= 2; ++layer) {
    const std::string lp = "layer" + std::to_string(layer);
    VarId layer_in = h;
    switch (cfg.variant) {
      case Variant::PlainGCN:
        h = layers::gcn_layer(tape, h, edges, out.edge_weights, bind(lp + ".W"), bind(lp + ".b"),
                              cfg.activation);
        break;
      case Variant::FixedWeight: {
        std::optional<VarId> self_w;
        if (cfg.use_residual_weight) self_w = bind(lp + ".W_self");
        h = layers::fixed_weight_layer(tape, h, edges, out.edge_weights, bind(lp + ".W"),
                                       bind(lp + ".b"), self_w, cfg.activation);
        break;
      }
      case Variant::Attention: {
        std::vector<layers::AttentionHeadParams> heads;
        for (int k = 0; k < cfg.num_heads; ++k) {
          const std::string hp = lp + ".head" + std::to_string(k);
          heads.push_back(layers::AttentionHeadParams{bind(hp + ".W"), bind(hp + ".a")});
        }
        std::vector<std::vector<double>>* alpha_sink = nullptr;
        if (capture) {
          capture->alpha.emplace_back();
          alpha_sink = &capture->alpha.back();
        }
        h = layers::attention_layer(
            tape, h, edge_h, edges, heads,
            layer == 1 ? layers::HeadCombine::Concat : layers::HeadCombine::Mean, cfg.activation,
            cfg.leaky_relu_slope, training ? cfg.attention_dropout_p : 0.0, dropout_rng,
            alpha_sink);
        break;
      }
      case Variant::Gated: {
        layers::GatedLayerParams gp{bind(lp + ".W_self"), bind(lp + ".W_neigh"),
                                    bind(lp + ".W_edge"), bind(lp + ".W_edge_src"),
                                    bind(lp + ".W_edge_dst")};
        Tensor* gate_sink = nullptr;
        if (capture) {
          capture->gates.emplace_back();
          gate_sink = &capture->gates.back();
        }
        auto res = layers::gated_layer(tape, h, edge_h, edges, gp, cfg.activation, gate_sink);
        h = res.node_h;
        edge_h = res.edge_h;
        break;
      }
    }
    // The gated update already carries its own residual (the leading h term),
    // so the connection is not applied twice.
    if (cfg.use_residual_connection && cfg.variant != Variant::Gated) h = tape.add(h, layer_in);
    h = tape.dropout(h, cfg.dropout_p, training, dropout_rng);
  }

  layers::HeadParams head;
  if (cfg.use_final_fc) {
    head.hidden_weight = bind("head.W1");
    head.hidden_bias = bind("head.b1");
    head.out_weight = bind("head.W2");
    head.out_bias = bind("head.b2");
  } else {
    head.out_weight = bind("head.W");
    head.out_bias = bind("head.b");
  }
  VarId pred = layers::feed_forward_head(tape, h, head, cfg.activation);

  if (cfg.output_mode == OutputMode::Velocities || cfg.ego_relative_features) {
    // Velocities integrate to anchor-relative displacements; ego-relative
    // position outputs are anchor-relative directly. Both re-anchor here.
    if (cfg.output_mode == OutputMode::Velocities)
      pred = tape.cumsum_timepairs(pred, cfg.t_pred);
    Tensor anchors(n, 2 * cfg.t_pred);
    for (int i = 0; i < n; ++i)
      for (int t = 0; t < cfg.t_pred; ++t) {
        anchors.at(i, 2 * t) = graph.anchor_positions.at(i, 0);
        anchors.at(i, 2 * t + 1) = graph.anchor_positions.at(i, 1);
      }
    pred = tape.add_const(pred, anchors);
  }
  out.predictions = pred;
  return out;
}

Tensor model_predict(const SceneGraph& graph, ParamStore& params, const ModelConfig& cfg,
                     AttentionCapture* capture) {
  Tape tape;
  ParamBinding binding;
  ModelForward fwd =
      model_forward_tape(tape, graph, params, cfg, false, nullptr, binding, nullptr, capture);
  return tape.value(fwd.predictions);
}

Tensor constant_velocity_predict(const SequenceSample& sample) {
  constexpr int C = SequenceSample::kFeatureDim;
  const int n = sample.num_agents();
  Tensor pred(n, sample.t_pred * 2);
  for (int a = 0; a < n; ++a) {
    const auto anchor = sample.anchor_position(a);
    double vx = 0.0, vy = 0.0;
    const int t_last = sample.t_obs - 1;
    if (t_last >= 1 && sample.present(a, t_last - 1)) {
      vx = anchor[0] - sample.obs.at(a, (t_last - 1) * C);
      vy = anchor[1] - sample.obs.at(a, (t_last - 1) * C + 1);
    }
    for (int t = 0; t < sample.t_pred; ++t) {
      pred.at(a, 2 * t) = anchor[0] + vx * (t + 1);
      pred.at(a, 2 * t + 1) = anchor[1] + vy * (t + 1);
    }
  }
  return pred;
}

}  // namespace scout
