#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "scout/attribution.hpp"
#include "scout/train.hpp"

using namespace scout;
using fixtures::sample_at;

namespace {

ModelConfig attn_config() {
  ModelConfig cfg;
  cfg.variant = Variant::Attention;
  cfg.hidden_dim = 12;
  cfg.num_heads = 3;
  cfg.edge_dim = 4;
  cfg.t_obs = 2;
  cfg.t_pred = 3;
  cfg.dropout_p = 0.0;
  cfg.attention_dropout_p = 0.0;
  return cfg;
}

}  // namespace

TEST_SUITE("attribution") {

TEST_CASE("no spatial edges means the path is empty and attributions vanish") {
  // Agents beyond the radius: input == baseline (self-loops only).
  const SceneGraph g =
      build_adjacency(sample_at({{0.0, 0.0}, {30.0, 0.0}}), AdjacencyMode::Kernel);
  ModelConfig cfg = attn_config();
  Rng rng(41);
  ParamStore params = init_params(cfg, rng);
  const AttributionResult r = integrated_gradients_edges(g, params, cfg);
  for (const EdgeAttribution& e : r.edges) CHECK(e.ig_score == 0.0);
  CHECK(r.completeness_gap <= 1e-12);
}

TEST_CASE("linear-in-weights model: IG equals the analytic product at any step count") {
  // Fixed-weight variant, identity activation, zero second-layer neighbor
  // weight: predictions are affine in the edge weights, so a linear target
  // makes IG exact for any number of path steps.
  ModelConfig cfg;
  cfg.variant = Variant::FixedWeight;
  cfg.hidden_dim = 8;
  cfg.num_heads = 1;
  cfg.t_obs = 2;
  cfg.t_pred = 3;
  cfg.activation = Activation::Identity;
  cfg.dropout_p = 0.0;
  cfg.attention_dropout_p = 0.0;
  Rng rng(42);
  ParamStore params = init_params(cfg, rng);
  std::fill(params.get("layer2.W").value.data.begin(), params.get("layer2.W").value.data.end(),
            0.0);

  const SceneGraph g =
      build_adjacency(sample_at({{0.0, 0.0}, {4.0, 0.0}, {4.0, 3.0}}, 2, 3),
                      AdjacencyMode::Kernel);

  AttributionConfig attr;
  attr.custom_target = [](Tape& tape, VarId pred, const SceneGraph&) {
    return tape.sum_all(pred);  // linear in the predictions
  };

  // Analytic form: dF/de is constant, IG_e = (e - e_base) * dF/de.
  attr.n_steps = 1;
  const AttributionResult one = integrated_gradients_edges(g, params, cfg, attr);
  attr.n_steps = 7;
  const AttributionResult seven = integrated_gradients_edges(g, params, cfg, attr);
  REQUIRE(one.edges.size() == seven.edges.size());
  for (size_t i = 0; i < one.edges.size(); ++i)
    CHECK(one.edges[i].ig_score == doctest::Approx(seven.edges[i].ig_score).epsilon(1e-12));
  CHECK(one.completeness_gap <= 1e-10);
  CHECK(seven.completeness_gap <= 1e-10);
}

TEST_CASE("completeness gap is small at 256 steps and shrinks with refinement") {
  ModelConfig cfg = attn_config();
  Rng rng(43);
  ParamStore params = init_params(cfg, rng);
  const SceneGraph g = make_random_graph(5, cfg.t_obs, rng);

  double previous = INFINITY;
  for (int steps : {32, 64, 128, 256}) {
    AttributionConfig attr;
    attr.n_steps = steps;
    const AttributionResult r = integrated_gradients_edges(g, params, cfg, attr);
    CHECK(r.completeness_gap <= previous + 1e-12);
    previous = r.completeness_gap;
    if (steps == 256) {
      const double span = std::fabs(r.target_input - r.target_baseline);
      CHECK(r.completeness_gap <= 0.01 * std::max(span, 1e-12));
    }
  }
}

TEST_CASE("attention extraction: singleton, symmetry, and non-perturbation") {
  ModelConfig cfg = attn_config();
  Rng rng(44);
  ParamStore params = init_params(cfg, rng);

  // Isolated node attends only to itself.
  const SceneGraph solo = build_adjacency(sample_at({{1.0, 1.0}}), AdjacencyMode::Kernel);
  const AttentionExtraction ext = extract_attention(solo, params, cfg);
  for (const auto& layer : ext.alpha)
    for (const auto& head : layer) CHECK(head[0] == 1.0);

  // Two identical agents: the cross attentions match in both directions.
  SequenceSample twin = sample_at({{-2.0, 0.0}, {2.0, 0.0}});
  for (int c = 0; c < twin.obs.cols; ++c) {
    const double v = 0.1 * c;
    twin.obs.at(0, c) = v;
    twin.obs.at(1, c) = v;
  }
  const SceneGraph g2 = build_adjacency(twin, AdjacencyMode::Kernel);
  const AttentionExtraction ext2 = extract_attention(g2, params, cfg);
  const DirectedEdges d2 = ext2.edges;
  int e01 = -1, e10 = -1;
  for (int e = 0; e < d2.count(); ++e) {
    if (d2.src[e] == 0 && d2.dst[e] == 1) e01 = e;
    if (d2.src[e] == 1 && d2.dst[e] == 0) e10 = e;
  }
  REQUIRE(e01 >= 0);
  REQUIRE(e10 >= 0);
  for (const auto& layer : ext2.alpha)
    for (const auto& head : layer)
      CHECK(head[static_cast<size_t>(e01)] ==
            doctest::Approx(head[static_cast<size_t>(e10)]).epsilon(1e-12));

  // Capture does not perturb predictions (bitwise).
  const SceneGraph g3 = make_random_graph(4, cfg.t_obs, rng);
  AttentionCapture capture;
  const Tensor with = model_predict(g3, params, cfg, &capture);
  const Tensor without = model_predict(g3, params, cfg);
  CHECK(with.data == without.data);

  // Wrong variant is rejected.
  ModelConfig gcn = attn_config();
  gcn.variant = Variant::PlainGCN;
  gcn.num_heads = 1;
  Rng rng2(45);
  ParamStore gcn_params = init_params(gcn, rng2);
  CHECK_THROWS_AS((void)extract_attention(g3, gcn_params, gcn), Error);
}

TEST_CASE("export: json round-trip, dominant edge, determinism, degenerate scene") {
  ModelConfig cfg = attn_config();
  Rng rng(46);
  ParamStore params = init_params(cfg, rng);
  const SceneGraph g = build_adjacency(
      sample_at({{0.0, 0.0}, {3.0, 0.0}, {0.0, 4.0}}, cfg.t_obs, cfg.t_pred),
      AdjacencyMode::Kernel);
  const AttributionResult r = integrated_gradients_edges(g, params, cfg);

  const auto dir = std::filesystem::temp_directory_path();
  const std::string json_path = (dir / "scout_attr.json").string();
  const std::string dot_path = (dir / "scout_attr.dot").string();
  export_interaction_graph(g, r, json_path, ExportFormat::Json);
  export_interaction_graph(g, r, dot_path, ExportFormat::Dot);

  // Round-trip: scores come back exactly.
  std::ifstream in(json_path);
  nlohmann::json parsed;
  in >> parsed;
  REQUIRE(parsed.at("edges").size() == r.edges.size());
  for (size_t i = 0; i < r.edges.size(); ++i)
    CHECK(parsed.at("edges")[i].at("ig_score").get<double>() == r.edges[i].ig_score);
  CHECK(parsed.at("completeness_gap").get<double>() == r.completeness_gap);

  // The dominant edge gets the maximal penwidth in the dot output.
  double best = -1.0;
  size_t best_idx = 0;
  for (size_t i = 0; i < r.edges.size(); ++i) {
    if (r.edges[i].i != r.edges[i].j && std::fabs(r.edges[i].ig_score) > best) {
      best = std::fabs(r.edges[i].ig_score);
      best_idx = i;
    }
  }
  std::ifstream dot(dot_path);
  std::string dot_text((std::istreambuf_iterator<char>(dot)), std::istreambuf_iterator<char>());
  CHECK(dot_text.find("penwidth=5.000000") != std::string::npos);
  (void)best_idx;

  // Deterministic bytes.
  const std::string json_path2 = (dir / "scout_attr_2.json").string();
  export_interaction_graph(g, r, json_path2, ExportFormat::Json);
  std::ifstream a(json_path), b(json_path2);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);

  // Single agent: one node, no spatial edges.
  const SceneGraph lone = build_adjacency(sample_at({{0.0, 0.0}}, cfg.t_obs, cfg.t_pred),
                                          AdjacencyMode::Kernel);
  const AttributionResult lr = integrated_gradients_edges(lone, params, cfg);
  const std::string lone_path = (dir / "scout_attr_lone.json").string();
  export_interaction_graph(lone, lr, lone_path, ExportFormat::Json);
  std::ifstream lin(lone_path);
  nlohmann::json lparsed;
  lin >> lparsed;
  CHECK(lparsed.at("nodes").size() == 1);
  CHECK(lparsed.at("edges").size() == 1);  // just the self-loop
}

}  // TEST_SUITE
