#pragma once

#include <string>
#include <vector>

#include "scout/tensor.hpp"
#include "scout/traj_data.hpp"

namespace scout {

enum class AdjacencyMode { Binary, Kernel };

// Pairwise distances below this are clamped before the kernel inversion,
// capping edge weights at 1/kMinPairDistance. Physical agents cannot
// coincide; the clamp keeps weights and their gradients bounded.
constexpr double kMinPairDistance = 0.1;
constexpr double kDefaultNeighborRadius = 20.0;

struct GraphEdge {
  int i = 0;  // i < j for spatial edges; i == j for self-loops
  int j = 0;
  double weight = 1.0;
};

// Scene graph at the anchor frame. Node features are each agent's observed
// history flattened time-major; adjacency connects agents within the
// neighborhood radius. Self-loops always carry weight 1.
struct SceneGraph {
  Tensor node_features;     // (N, T_obs * C)
  Tensor adjacency;         // (N, N), symmetric, zero diagonal-off outside radius
  std::vector<GraphEdge> edges;  // self-loops first, then spatial edges (i < j)
  Tensor anchor_positions;  // (N, 2)
  std::vector<AgentType> node_types;
  AdjacencyMode mode = AdjacencyMode::Kernel;
  double radius = kDefaultNeighborRadius;

  int num_nodes() const { return node_features.rows; }
  // Spatial edges only (i < j), e.g. for the overlap penalty.
  std::vector<GraphEdge> spatial_edges() const;
};

// Flattens each agent's observed history into one feature row; masked
// (absent) steps contribute zeros.
Tensor build_node_features(const SequenceSample& sample);

// Builds adjacency from anchor-frame positions. Binary: 1 within the
// radius. Kernel: inverse Euclidean distance within the radius (clamped,
// see kMinPairDistance); self-loops are 1 in both modes.
SceneGraph build_adjacency(const SequenceSample& sample, AdjacencyMode mode,
                           double radius = kDefaultNeighborRadius);

// Symmetric normalization D^{-1/2} A D^{-1/2} of a self-looped adjacency.
Tensor degree_normalize(const Tensor& adjacency);

// Directed incidence arrays used by the message-passing layers: every
// spatial edge contributes both directions plus one self-loop per node,
// sorted by (dst, src) so each node's incoming edges are contiguous.
struct DirectedEdges {
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<double> weight;
  int num_nodes = 0;
  int count() const { return static_cast<int>(src.size()); }
};

DirectedEdges directed_edges(const SceneGraph& graph);

// Block-diagonal composition for minibatching: node rows are concatenated
// and edge indices offset, so scenes never exchange messages.
struct BatchedGraph {
  SceneGraph graph;
  std::vector<int> scene_offsets;  // size = #scenes + 1
};

BatchedGraph compose_graphs(const std::vector<const SceneGraph*>& graphs);

// JSON export of nodes/edges/weights (consumed by the attribution module's
// interaction-graph emitter and external renderers).
std::string scene_graph_to_json(const SceneGraph& graph);

}  // namespace scout
