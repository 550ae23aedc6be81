#include "scout/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "scout/error.hpp"

namespace scout {

std::vector<GraphEdge> SceneGraph::spatial_edges() const {
  std::vector<GraphEdge> out;
  for (const GraphEdge& e : edges)
    if (e.i != e.j) out.push_back(e);
  return out;
}

Tensor build_node_features(const SequenceSample& sample) {
  // The sample's obs tensor is already (N, T_obs * C) time-major with
  // zeros at masked steps, so the node feature matrix is a direct copy.
  return sample.obs;
}

SceneGraph build_adjacency(const SequenceSample& sample, AdjacencyMode mode, double radius) {
  const int n = sample.num_agents();
  require(n >= 1, ErrorCode::EmptyWindow, "build_adjacency: sample has no agents");
  require(radius > 0.0, ErrorCode::InvalidConfig, "build_adjacency: radius must be positive");

  SceneGraph g;
  g.mode = mode;
  g.radius = radius;
  g.node_features = build_node_features(sample);
  g.anchor_positions = Tensor(n, 2);
  for (int a = 0; a < n; ++a) {
    const auto p = sample.anchor_position(a);
    require(std::isfinite(p[0]) && std::isfinite(p[1]), ErrorCode::InvalidConfig,
            "build_adjacency: non-finite anchor position for node " + std::to_string(a));
    g.anchor_positions.at(a, 0) = p[0];
    g.anchor_positions.at(a, 1) = p[1];
    g.node_types.push_back(sample.agents[static_cast<size_t>(a)].type);
  }

  g.adjacency = Tensor(n, n);
  for (int i = 0; i < n; ++i) {
    g.adjacency.at(i, i) = 1.0;
    g.edges.push_back(GraphEdge{i, i, 1.0});
  }
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = g.anchor_positions.at(i, 0) - g.anchor_positions.at(j, 0);
      const double dy = g.anchor_positions.at(i, 1) - g.anchor_positions.at(j, 1);
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (dist > radius) continue;
      const double w =
          mode == AdjacencyMode::Binary ? 1.0 : 1.0 / std::max(dist, kMinPairDistance);
      g.adjacency.at(i, j) = w;
      g.adjacency.at(j, i) = w;
      g.edges.push_back(GraphEdge{i, j, w});
    }
  }
  return g;
}

Tensor degree_normalize(const Tensor& adjacency) {
  const int n = adjacency.rows;
  require(adjacency.cols == n, ErrorCode::ShapeMismatch,
          "degree_normalize: adjacency must be square, got " + adjacency.shape_str());
  std::vector<double> inv_sqrt_degree(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double d = 0.0;
    for (int j = 0; j < n; ++j) {
      require(adjacency.at(i, j) >= 0.0, ErrorCode::InvalidConfig,
              "degree_normalize: negative weight");
      d += adjacency.at(i, j);
    }
    // Self-loops make every degree positive; a zero here is a caller bug.
    require(d > 0.0, ErrorCode::IsolatedNodeDegreeZero,
            "degree_normalize: node " + std::to_string(i) + " has zero degree");
    inv_sqrt_degree[static_cast<size_t>(i)] = 1.0 / std::sqrt(d);
  }
  Tensor out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.at(i, j) = inv_sqrt_degree[static_cast<size_t>(i)] * adjacency.at(i, j) *
                     inv_sqrt_degree[static_cast<size_t>(j)];
  return out;
}

DirectedEdges directed_edges(const SceneGraph& graph) {
  DirectedEdges d;
  d.num_nodes = graph.num_nodes();
  struct Rec {
    int src, dst;
    double w;
  };
  std::vector<Rec> recs;
  for (const GraphEdge& e : graph.edges) {
    recs.push_back(Rec{e.i, e.j, e.weight});
    if (e.i != e.j) recs.push_back(Rec{e.j, e.i, e.weight});
  }
  std::sort(recs.begin(), recs.end(), [](const Rec& a, const Rec& b) {
    return a.dst != b.dst ? a.dst < b.dst : a.src < b.src;
  });
  for (const Rec& r : recs) {
    d.src.push_back(r.src);
    d.dst.push_back(r.dst);
    d.weight.push_back(r.w);
  }
  return d;
}

BatchedGraph compose_graphs(const std::vector<const SceneGraph*>& graphs) {
  require(!graphs.empty(), ErrorCode::EmptyDataset, "compose_graphs: no graphs");
  int total = 0;
  const int feat_cols = graphs.front()->node_features.cols;
  for (const SceneGraph* g : graphs) {
    require(g->node_features.cols == feat_cols, ErrorCode::ShapeMismatch,
            "compose_graphs: feature width mismatch");
    total += g->num_nodes();
  }

  BatchedGraph out;
  out.graph.mode = graphs.front()->mode;
  out.graph.radius = graphs.front()->radius;
  out.graph.node_features = Tensor(total, feat_cols);
  out.graph.anchor_positions = Tensor(total, 2);
  out.graph.adjacency = Tensor(total, total);
  out.scene_offsets.push_back(0);

  int off = 0;
  for (const SceneGraph* g : graphs) {
    const int n = g->num_nodes();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < feat_cols; ++j)
        out.graph.node_features.at(off + i, j) = g->node_features.at(i, j);
      out.graph.anchor_positions.at(off + i, 0) = g->anchor_positions.at(i, 0);
      out.graph.anchor_positions.at(off + i, 1) = g->anchor_positions.at(i, 1);
      out.graph.node_types.push_back(g->node_types[static_cast<size_t>(i)]);
      for (int j = 0; j < n; ++j)
        out.graph.adjacency.at(off + i, off + j) = g->adjacency.at(i, j);
    }
    for (const GraphEdge& e : g->edges)
      out.graph.edges.push_back(GraphEdge{e.i + off, e.j + off, e.weight});
    off += n;
    out.scene_offsets.push_back(off);
  }
  // Keep self-loops-first ordering consistent with single-scene graphs.
  std::stable_sort(out.graph.edges.begin(), out.graph.edges.end(),
                   [](const GraphEdge& a, const GraphEdge& b) {
                     const bool sa = a.i == a.j, sb = b.i == b.j;
                     if (sa != sb) return sa;
                     return false;
                   });
  return out;
}

std::string scene_graph_to_json(const SceneGraph& graph) {
  nlohmann::json j;
  j["num_nodes"] = graph.num_nodes();
  j["adjacency_mode"] = graph.mode == AdjacencyMode::Binary ? "binary" : "kernel";
  j["radius"] = graph.radius;
  nlohmann::json nodes = nlohmann::json::array();
  for (int i = 0; i < graph.num_nodes(); ++i)
    nodes.push_back({{"id", i},
                     {"x", graph.anchor_positions.at(i, 0)},
                     {"y", graph.anchor_positions.at(i, 1)},
                     {"type", agent_type_name(graph.node_types[static_cast<size_t>(i)])}});
  j["nodes"] = std::move(nodes);
  nlohmann::json edges = nlohmann::json::array();
  for (const GraphEdge& e : graph.edges)
    edges.push_back({{"i", e.i}, {"j", e.j}, {"weight", e.weight}});
  j["edges"] = std::move(edges);
  return j.dump(1, '\t');
}

}  // namespace scout
