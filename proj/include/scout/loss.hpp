#pragma once

#include <vector>

#include "scout/graph.hpp"
#include "scout/tape.hpp"
#include "scout/tensor.hpp"

namespace scout {

struct LossConfig {
  double delta = 1.0;  // Huber quadratic/linear boundary, meters
  double alpha = 5.0;  // overlap penalty weight
  double beta = 1.0;   // final-step displacement weight
  void validate() const;
};

// Huber value, averaged over all coordinates (the elementwise op; the
// training loss aggregates per-coordinate values itself).
double huber(const Tensor& target, const Tensor& pred, double delta);

// Robust segment intersection via orientation sign tests: a crossing exists
// iff each segment's endpoints lie on opposite sides of the other's line
// (with collinear overlap handled explicitly). Zero-length segments count
// only when endpoint-coincident within kMinPairDistance.
bool segments_intersect(double ax, double ay, double bx, double by, double cx, double cy,
                        double dx, double dy);

// Fraction of (connected pair, step) slots whose same-step trajectory
// segments intersect; steps pair consecutive predicted positions, giving
// t_pred - 1 slots per pair. Returns 0 when there are no pairs.
double overlap_percentage(const Tensor& predictions, const std::vector<GraphEdge>& spatial_edges,
                          int t_pred);

// Composite training loss on the tape:
//   (1/T) sum_t L_t * (1 + alpha * p_overlap) + beta * L_T
// where L_t is the Huber of (pred - gt) summed over the two coordinates and
// averaged over loss-eligible nodes. p_overlap is computed from the current
// predictions but enters as a plain scalar factor: the intersection tests
// are piecewise constant, so it carries no gradient of its own.
struct TotalLoss {
  VarId loss = -1;
  double p_overlap = 0.0;
};

TotalLoss total_loss_tape(Tape& tape, VarId predictions, const Tensor& ground_truth,
                          const std::vector<uint8_t>& loss_mask,
                          const std::vector<GraphEdge>& spatial_edges, const LossConfig& cfg,
                          int t_pred);

// Value-only convenience used by gradient oracles.
double total_loss_value(const Tensor& predictions, const Tensor& ground_truth,
                        const std::vector<uint8_t>& loss_mask,
                        const std::vector<GraphEdge>& spatial_edges, const LossConfig& cfg,
                        int t_pred);

}  // namespace scout
