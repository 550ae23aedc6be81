#pragma once

// Small hand-built fixtures shared across test files.

#include <array>
#include <vector>

#include "scout/graph.hpp"
#include "scout/tape.hpp"
#include "scout/traj_data.hpp"

namespace scout::fixtures {

// A sample whose agents sit at fixed positions through the whole history.
inline SequenceSample sample_at(const std::vector<std::array<double, 2>>& positions,
                                int t_obs = 2, int t_pred = 2) {
  constexpr int C = SequenceSample::kFeatureDim;
  SequenceSample s;
  s.recording_id = "fixture";
  s.t_obs = t_obs;
  s.t_pred = t_pred;
  const int n = static_cast<int>(positions.size());
  s.obs = Tensor(n, t_obs * C);
  s.fut = Tensor(n, t_pred * 2);
  s.presence.assign(static_cast<size_t>(n) * t_obs, 1);
  s.fut_presence.assign(static_cast<size_t>(n) * t_pred, 1);
  s.loss_mask.assign(static_cast<size_t>(n), 1);
  for (int a = 0; a < n; ++a) {
    s.agents.push_back(AgentRef{a, AgentType::Vehicle});
    for (int t = 0; t < t_obs; ++t) {
      s.obs.at(a, t * C) = positions[static_cast<size_t>(a)][0];
      s.obs.at(a, t * C + 1) = positions[static_cast<size_t>(a)][1];
      s.obs.at(a, t * C + 3) = 1.0;
    }
    for (int t = 0; t < t_pred; ++t) {
      s.fut.at(a, t * 2) = positions[static_cast<size_t>(a)][0];
      s.fut.at(a, t * 2 + 1) = positions[static_cast<size_t>(a)][1];
    }
  }
  return s;
}

// Edge-weight leaf aligned with the directed incidence arrays.
inline VarId edge_leaf(Tape& tape, const DirectedEdges& edges) {
  Tensor w(edges.count(), 1);
  for (int e = 0; e < edges.count(); ++e) w.at(e, 0) = edges.weight[static_cast<size_t>(e)];
  return tape.leaf(std::move(w));
}

}  // namespace scout::fixtures
