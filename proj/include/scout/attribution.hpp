#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scout/graph.hpp"
#include "scout/model.hpp"
#include "scout/param.hpp"

namespace scout {

// Scalar target the attributions explain. Default: summed squared predicted
// displacement (relative to the anchor position) of one node's trajectory;
// restrict to a single step and/or coordinate for finer questions.
struct AttributionTarget {
  int node = 0;
  int step = -1;   // -1 = every predicted step
  int coord = -1;  // -1 = both coordinates, 0 = x, 1 = y
};

// Custom scalar target: builds a (1,1) var from the prediction var. Must be
// deterministic and differentiable on the tape.
using TargetBuilder = std::function<VarId(Tape&, VarId predictions, const SceneGraph&)>;

struct AttributionConfig {
  AttributionTarget target;
  int n_steps = 128;  // midpoint Riemann steps along the path
  TargetBuilder custom_target;  // overrides `target` when set
};

struct EdgeAttribution {
  int i = 0;  // i < j for spatial edges, i == j for self-loops
  int j = 0;
  double weight = 0.0;    // input edge weight
  double ig_score = 0.0;  // directed contributions summed per undirected edge
  std::vector<double> attention;  // layer-1 alpha per head (attention models)
};

struct AttributionResult {
  std::vector<EdgeAttribution> edges;
  AttributionTarget target;
  std::string baseline_spec;
  int n_steps = 0;
  double target_input = 0.0;
  double target_baseline = 0.0;
  double completeness_gap = 0.0;  // |sum IG - (target(input) - target(baseline))|
};

// Integrated gradients over the edge weights, against the no-interaction
// baseline (spatial weights 0, self-loops kept at 1). Self-loop
// attributions are exactly 0 since the baseline leaves them untouched.
AttributionResult integrated_gradients_edges(const SceneGraph& graph, ParamStore& params,
                                             const ModelConfig& cfg,
                                             const AttributionConfig& attr = AttributionConfig());

struct AttentionExtraction {
  DirectedEdges edges;
  // alpha[layer][head][e] aligned with `edges`; rows sum to 1 per node.
  std::vector<std::vector<std::vector<double>>> alpha;
};

// Captures attention weights from one dropout-free forward pass. Requires
// an attention-variant model; the capture never perturbs the predictions.
AttentionExtraction extract_attention(const SceneGraph& graph, ParamStore& params,
                                      const ModelConfig& cfg);

enum class ExportFormat { Json, Dot };

// Writes the annotated interaction graph: node positions from the anchor
// frame, edge visual weight proportional to |ig_score|. Output bytes are
// deterministic for fixed inputs.
void export_interaction_graph(const SceneGraph& graph, const AttributionResult& result,
                              const std::string& path, ExportFormat format);

}  // namespace scout
