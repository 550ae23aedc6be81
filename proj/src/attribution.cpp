#include "scout/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "scout/error.hpp"

namespace scout {

namespace {

// Builds the scalar target on the tape from the prediction var.
VarId build_target(Tape& tape, VarId predictions, const SceneGraph& graph,
                   const ModelConfig& cfg, const AttributionTarget& target) {
  const int n = graph.num_nodes();
  require(target.node >= 0 && target.node < n, ErrorCode::InvalidConfig,
          "attribution target node " + std::to_string(target.node) + " out of range");
  require(target.step < cfg.t_pred, ErrorCode::InvalidConfig, "attribution target step range");

  VarId row = tape.gather_rows(predictions, {target.node});
  Tensor neg_anchor(1, 2 * cfg.t_pred);
  for (int t = 0; t < cfg.t_pred; ++t) {
    neg_anchor.at(0, 2 * t) = -graph.anchor_positions.at(target.node, 0);
    neg_anchor.at(0, 2 * t + 1) = -graph.anchor_positions.at(target.node, 1);
  }
  VarId disp = tape.add_const(row, neg_anchor);
  if (target.step >= 0) disp = tape.slice_cols(disp, 2 * target.step, 2 * target.step + 2);
  if (target.coord >= 0) {
    require(target.coord <= 1, ErrorCode::InvalidConfig, "attribution target coord range");
    // With a step chosen the slice is (1,2); otherwise pick the coordinate
    // out of every step.
    if (target.step >= 0) {
      disp = tape.slice_cols(disp, target.coord, target.coord + 1);
    } else {
      std::vector<VarId> picks;
      for (int t = 0; t < cfg.t_pred; ++t)
        picks.push_back(tape.slice_cols(disp, 2 * t + target.coord, 2 * t + target.coord + 1));
      disp = tape.concat_cols(picks);
    }
  }
  return tape.sum_all(tape.mul(disp, disp));
}

struct TargetEval {
  double value = 0.0;
  std::vector<double> edge_grad;  // per directed edge
};

TargetEval eval_target(const SceneGraph& graph, ParamStore& params, const ModelConfig& cfg,
                       const AttributionConfig& attr, const std::vector<double>& weights,
                       bool want_grad) {
  Tape tape;
  ParamBinding binding;
  ModelForward fwd = model_forward_tape(tape, graph, params, cfg, false, nullptr, binding, &weights);
  VarId t = attr.custom_target ? attr.custom_target(tape, fwd.predictions, graph)
                               : build_target(tape, fwd.predictions, graph, cfg, attr.target);
  {
    const Tensor& tv = tape.value(t);
    require(tv.rows == 1 && tv.cols == 1, ErrorCode::NonDifferentiableTarget,
            "attribution target must be scalar, got " + tv.shape_str());
  }
  TargetEval out;
  out.value = tape.value(t).at(0, 0);
  require(std::isfinite(out.value), ErrorCode::NonDifferentiableTarget,
          "attribution target is non-finite");
  if (want_grad) {
    tape.backward(t);
    out.edge_grad = tape.grad(fwd.edge_weights).data;
  }
  return out;
}

}  // namespace

AttributionResult integrated_gradients_edges(const SceneGraph& graph, ParamStore& params,
                                             const ModelConfig& cfg,
                                             const AttributionConfig& attr) {
  require(attr.n_steps >= 1, ErrorCode::InvalidConfig, "n_steps must be >= 1");
  const DirectedEdges edges = directed_edges(graph);
  const int ne = edges.count();

  std::vector<double> input(edges.weight);
  std::vector<double> baseline(static_cast<size_t>(ne), 0.0);
  for (int e = 0; e < ne; ++e)
    if (edges.src[e] == edges.dst[e]) baseline[static_cast<size_t>(e)] = edges.weight[static_cast<size_t>(e)];

  // Midpoint rule along the straight-line path baseline -> input.
  std::vector<double> grad_sum(static_cast<size_t>(ne), 0.0);
  std::vector<double> point(static_cast<size_t>(ne));
  for (int k = 1; k <= attr.n_steps; ++k) {
    const double a = (static_cast<double>(k) - 0.5) / attr.n_steps;
    for (int e = 0; e < ne; ++e)
      point[static_cast<size_t>(e)] =
          baseline[static_cast<size_t>(e)] +
          a * (input[static_cast<size_t>(e)] - baseline[static_cast<size_t>(e)]);
    const TargetEval ev = eval_target(graph, params, cfg, attr, point, true);
    for (int e = 0; e < ne; ++e) grad_sum[static_cast<size_t>(e)] += ev.edge_grad[static_cast<size_t>(e)];
  }

  std::vector<double> directed_ig(static_cast<size_t>(ne));
  for (int e = 0; e < ne; ++e)
    directed_ig[static_cast<size_t>(e)] =
        (input[static_cast<size_t>(e)] - baseline[static_cast<size_t>(e)]) *
        grad_sum[static_cast<size_t>(e)] / attr.n_steps;

  // Both directions of an undirected edge carry the same weight and move
  // together along the path, so their contributions add.
  std::map<std::pair<int, int>, double> pair_ig;
  for (int e = 0; e < ne; ++e) {
    const int i = std::min(edges.src[e], edges.dst[e]);
    const int j = std::max(edges.src[e], edges.dst[e]);
    pair_ig[{i, j}] += directed_ig[static_cast<size_t>(e)];
  }

  AttributionResult result;
  result.target = attr.target;
  result.n_steps = attr.n_steps;
  result.baseline_spec = "spatial edge weights 0, self-loops kept at 1";
  result.target_input = eval_target(graph, params, cfg, attr, input, false).value;
  result.target_baseline = eval_target(graph, params, cfg, attr, baseline, false).value;

  std::vector<std::vector<double>> edge_attention;
  if (cfg.variant == Variant::Attention) {
    const AttentionExtraction ext = extract_attention(graph, params, cfg);
    // Average the two directions of layer-1 attention per undirected edge.
    std::map<std::pair<int, int>, std::pair<std::vector<double>, int>> acc;
    for (int e = 0; e < ext.edges.count(); ++e) {
      const int i = std::min(ext.edges.src[e], ext.edges.dst[e]);
      const int j = std::max(ext.edges.src[e], ext.edges.dst[e]);
      auto& slot = acc[{i, j}];
      if (slot.first.empty()) slot.first.assign(ext.alpha[0].size(), 0.0);
      for (size_t h = 0; h < ext.alpha[0].size(); ++h)
        slot.first[h] += ext.alpha[0][h][static_cast<size_t>(e)];
      slot.second += 1;
    }
    for (const GraphEdge& ge : graph.edges) {
      auto& slot = acc[{ge.i, ge.j}];
      std::vector<double> mean = slot.first;
      for (double& v : mean) v /= std::max(1, slot.second);
      edge_attention.push_back(std::move(mean));
    }
  }

  double ig_total = 0.0;
  size_t idx = 0;
  for (const GraphEdge& ge : graph.edges) {
    EdgeAttribution ea;
    ea.i = ge.i;
    ea.j = ge.j;
    ea.weight = ge.weight;
    ea.ig_score = pair_ig[{ge.i, ge.j}];
    if (!edge_attention.empty()) ea.attention = edge_attention[idx];
    ig_total += ea.ig_score;
    result.edges.push_back(std::move(ea));
    ++idx;
  }
  result.completeness_gap =
      std::fabs(ig_total - (result.target_input - result.target_baseline));
  return result;
}

AttentionExtraction extract_attention(const SceneGraph& graph, ParamStore& params,
                                      const ModelConfig& cfg) {
  require(cfg.variant == Variant::Attention, ErrorCode::WrongVariant,
          "attention extraction needs an attention-variant model, got " +
              std::string(variant_name(cfg.variant)));
  AttentionCapture capture;
  (void)model_predict(graph, params, cfg, &capture);
  AttentionExtraction out;
  out.edges = directed_edges(graph);
  out.alpha = std::move(capture.alpha);
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

void export_interaction_graph(const SceneGraph& graph, const AttributionResult& result,
                              const std::string& path, ExportFormat format) {
  require(result.edges.size() == graph.edges.size(), ErrorCode::ShapeMismatch,
          "attribution result does not match graph edge set");

  double max_abs = 0.0;
  for (const EdgeAttribution& e : result.edges) max_abs = std::max(max_abs, std::fabs(e.ig_score));

  std::ofstream out(path);
  require(out.good(), ErrorCode::IoFailure, "cannot write " + path);

  if (format == ExportFormat::Json) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "scout_attribution";
    j["baseline"] = result.baseline_spec;
    j["n_steps"] = result.n_steps;
    j["target"] = {{"node", result.target.node},
                   {"step", result.target.step},
                   {"coord", result.target.coord}};
    j["target_input"] = result.target_input;
    j["target_baseline"] = result.target_baseline;
    j["completeness_gap"] = result.completeness_gap;
    nlohmann::json nodes = nlohmann::json::array();
    for (int i = 0; i < graph.num_nodes(); ++i)
      nodes.push_back({{"id", i},
                       {"x", graph.anchor_positions.at(i, 0)},
                       {"y", graph.anchor_positions.at(i, 1)},
                       {"type", agent_type_name(graph.node_types[static_cast<size_t>(i)])}});
    j["nodes"] = std::move(nodes);
    nlohmann::json edges = nlohmann::json::array();
    for (const EdgeAttribution& e : result.edges) {
      nlohmann::json je{{"i", e.i}, {"j", e.j}, {"weight", e.weight}, {"ig_score", e.ig_score}};
      if (!e.attention.empty()) je["attention"] = e.attention;
      edges.push_back(std::move(je));
    }
    j["edges"] = std::move(edges);
    out << j.dump(1, '\t') << "\n";
  } else {
    out << "graph interactions {\n";
    out << "\tlayout=neato;\n\tnode [shape=circle fontsize=10];\n";
    for (int i = 0; i < graph.num_nodes(); ++i) {
      out << "\tn" << i << " [pos=\"" << format_double(graph.anchor_positions.at(i, 0)) << ","
          << format_double(graph.anchor_positions.at(i, 1)) << "!\" label=\"" << i << "\\n"
          << agent_type_name(graph.node_types[static_cast<size_t>(i)]) << "\"];\n";
    }
    for (const EdgeAttribution& e : result.edges) {
      if (e.i == e.j) continue;
      const double rel = max_abs > 0.0 ? std::fabs(e.ig_score) / max_abs : 0.0;
      out << "\tn" << e.i << " -- n" << e.j << " [penwidth="
          << format_double(0.5 + 4.5 * rel) << " label=\"" << format_double(e.ig_score)
          << "\"];\n";
    }
    out << "}\n";
  }
  require(out.good(), ErrorCode::IoFailure, "write failed for " + path);
}

}  // namespace scout
