#include <doctest.h>

#include <cmath>

#include "scout/graph.hpp"
#include "scout/rng.hpp"

using namespace scout;

namespace {

// Minimal sample with agents at fixed anchor positions.
SequenceSample sample_at(const std::vector<std::array<double, 2>>& positions, int t_obs = 2) {
  constexpr int C = SequenceSample::kFeatureDim;
  SequenceSample s;
  s.recording_id = "fixture";
  s.t_obs = t_obs;
  s.t_pred = 2;
  const int n = static_cast<int>(positions.size());
  s.obs = Tensor(n, t_obs * C);
  s.fut = Tensor(n, 4);
  s.presence.assign(static_cast<size_t>(n) * t_obs, 1);
  s.fut_presence.assign(static_cast<size_t>(n) * 2, 1);
  s.loss_mask.assign(static_cast<size_t>(n), 1);
  for (int a = 0; a < n; ++a) {
    s.agents.push_back(AgentRef{a, AgentType::Vehicle});
    for (int t = 0; t < t_obs; ++t) {
      s.obs.at(a, t * C) = positions[static_cast<size_t>(a)][0];
      s.obs.at(a, t * C + 1) = positions[static_cast<size_t>(a)][1];
      s.obs.at(a, t * C + 3) = 1.0;
    }
  }
  return s;
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("node features flatten the history time-major") {
  SequenceSample s = sample_at({{1.0, 2.0}, {3.0, 4.0}}, 8);
  const Tensor f = build_node_features(s);
  CHECK(f.rows == 2);
  CHECK(f.cols == 48);  // (N, T_obs * C) with T_obs=8, C=6

  SequenceSample one = sample_at({{5.0, 6.0}}, 1);
  const Tensor f1 = build_node_features(one);
  CHECK(f1.cols == 6);
  CHECK(f1.at(0, 0) == 5.0);
  CHECK(f1.at(0, 1) == 6.0);

  // Masked steps contribute zeros.
  SequenceSample padded = sample_at({{1.0, 1.0}}, 4);
  for (int t = 0; t < 2; ++t) {
    padded.presence[static_cast<size_t>(t)] = 0;
    for (int c = 0; c < 6; ++c) padded.obs.at(0, t * 6 + c) = 0.0;
  }
  const Tensor fp = build_node_features(padded);
  for (int c = 0; c < 12; ++c) CHECK(fp.at(0, c) == 0.0);
}

TEST_CASE("kernel adjacency: 4 m apart gives weight 0.25, diagonal 1") {
  SequenceSample s = sample_at({{0.0, 0.0}, {4.0, 0.0}});
  const SceneGraph g = build_adjacency(s, AdjacencyMode::Kernel);
  CHECK(g.adjacency.at(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.adjacency.at(1, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(g.adjacency.at(0, 0) == 1.0);
  CHECK(g.adjacency.at(1, 1) == 1.0);
  REQUIRE(g.edges.size() == 3);  // two self-loops + one spatial edge
}

TEST_CASE("agents beyond the radius stay unconnected in both modes") {
  SequenceSample s = sample_at({{0.0, 0.0}, {25.0, 0.0}});
  for (AdjacencyMode mode : {AdjacencyMode::Binary, AdjacencyMode::Kernel}) {
    const SceneGraph g = build_adjacency(s, mode);
    CHECK(g.adjacency.at(0, 1) == 0.0);
    CHECK(g.spatial_edges().empty());
  }
}

TEST_CASE("single agent graph is a lone self-loop") {
  SequenceSample s = sample_at({{3.0, -1.0}});
  const SceneGraph g = build_adjacency(s, AdjacencyMode::Kernel);
  CHECK(g.adjacency.rows == 1);
  CHECK(g.adjacency.at(0, 0) == 1.0);
  CHECK(g.edges.size() == 1);
}

TEST_CASE("coincident agents: distance clamp caps the kernel weight at 10") {
  SequenceSample s = sample_at({{0.0, 0.0}, {0.02, 0.0}});
  const SceneGraph g = build_adjacency(s, AdjacencyMode::Kernel);
  CHECK(g.adjacency.at(0, 1) == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("degree normalization: identity, two-node complete, symmetry") {
  CHECK(degree_normalize(Tensor(1, 1, {1.0})).at(0, 0) == doctest::Approx(1.0));

  Tensor two(2, 2, {1.0, 1.0, 1.0, 1.0});
  const Tensor norm = degree_normalize(two);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(norm.at(i, j) == doctest::Approx(0.5).epsilon(1e-15));

  Rng rng(3);
  Tensor a(5, 5);
  for (int i = 0; i < 5; ++i) {
    a.at(i, i) = 1.0;
    for (int j = i + 1; j < 5; ++j) {
      const double w = rng.uniform() < 0.5 ? rng.uniform(0.1, 2.0) : 0.0;
      a.at(i, j) = w;
      a.at(j, i) = w;
    }
  }
  const Tensor an = degree_normalize(a);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) CHECK(an.at(i, j) == doctest::Approx(an.at(j, i)).epsilon(1e-14));
}

TEST_CASE("property: relabeling agents permutes adjacency consistently") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(2, 7);
    std::vector<std::array<double, 2>> pos;
    for (int i = 0; i < n; ++i) pos.push_back({rng.uniform(-15, 15), rng.uniform(-15, 15)});
    const SceneGraph g = build_adjacency(sample_at(pos), AdjacencyMode::Kernel);

    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    rng.shuffle(perm);
    std::vector<std::array<double, 2>> pos_p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pos_p[static_cast<size_t>(perm[static_cast<size_t>(i)])] = pos[static_cast<size_t>(i)];
    const SceneGraph gp = build_adjacency(sample_at(pos_p), AdjacencyMode::Kernel);

    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        CHECK(g.adjacency.at(i, j) ==
              doctest::Approx(gp.adjacency.at(perm[static_cast<size_t>(i)],
                                              perm[static_cast<size_t>(j)]))
                  .epsilon(1e-14));
  }
}

TEST_CASE("property: kernel weights decay with distance, sparsity matches binary") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(2, 8);
    std::vector<std::array<double, 2>> pos;
    for (int i = 0; i < n; ++i) pos.push_back({rng.uniform(-14, 14), rng.uniform(-14, 14)});
    const SequenceSample s = sample_at(pos);
    const SceneGraph kernel = build_adjacency(s, AdjacencyMode::Kernel);
    const SceneGraph binary = build_adjacency(s, AdjacencyMode::Binary);

    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        CHECK((kernel.adjacency.at(i, j) > 0.0) == (binary.adjacency.at(i, j) > 0.0));
        for (int k = 0; k < n; ++k) {
          // Strictly closer neighbor (beyond the clamp) => larger weight.
          if (i == j || i == k || j == k) continue;
          const double dij = std::hypot(pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]);
          const double dik = std::hypot(pos[i][0] - pos[k][0], pos[i][1] - pos[k][1]);
          if (dij > kMinPairDistance && dik > kMinPairDistance && dij < dik &&
              kernel.adjacency.at(i, k) > 0.0 && kernel.adjacency.at(i, j) > 0.0)
            CHECK(kernel.adjacency.at(i, j) > kernel.adjacency.at(i, k));
        }
      }
    }
  }
}

TEST_CASE("directed edges: contiguous per destination, self-loops present") {
  SequenceSample s = sample_at({{0.0, 0.0}, {4.0, 0.0}, {50.0, 50.0}});
  const SceneGraph g = build_adjacency(s, AdjacencyMode::Kernel);
  const DirectedEdges d = directed_edges(g);
  CHECK(d.count() == 5);  // 3 self-loops + 2 directions of the one spatial edge
  for (int e = 1; e < d.count(); ++e) CHECK(d.dst[e] >= d.dst[e - 1]);
  int self_loops = 0;
  for (int e = 0; e < d.count(); ++e)
    if (d.src[e] == d.dst[e]) ++self_loops;
  CHECK(self_loops == 3);
}

TEST_CASE("block-diagonal composition keeps scenes insulated") {
  SequenceSample a = sample_at({{0.0, 0.0}, {3.0, 0.0}});
  SequenceSample b = sample_at({{1.0, 1.0}, {1.0, 5.0}, {2.0, 2.0}});
  const SceneGraph ga = build_adjacency(a, AdjacencyMode::Kernel);
  const SceneGraph gb = build_adjacency(b, AdjacencyMode::Kernel);
  const BatchedGraph batch = compose_graphs({&ga, &gb});
  CHECK(batch.graph.num_nodes() == 5);
  CHECK(batch.scene_offsets == std::vector<int>{0, 2, 5});
  // No cross-scene adjacency even though coordinates overlap.
  for (int i = 0; i < 2; ++i)
    for (int j = 2; j < 5; ++j) {
      CHECK(batch.graph.adjacency.at(i, j) == 0.0);
      CHECK(batch.graph.adjacency.at(j, i) == 0.0);
    }
  for (const GraphEdge& e : batch.graph.edges)
    CHECK(((e.i < 2 && e.j < 2) || (e.i >= 2 && e.j >= 2)));
}

TEST_CASE("scene graph json export carries nodes and weighted edges") {
  SequenceSample s = sample_at({{0.0, 0.0}, {4.0, 0.0}});
  const SceneGraph g = build_adjacency(s, AdjacencyMode::Kernel);
  const std::string js = scene_graph_to_json(g);
  CHECK(js.find("\"weight\": 0.25") != std::string::npos);
  CHECK(js.find("\"num_nodes\": 2") != std::string::npos);
}

}  // TEST_SUITE
