#include "scout/loss.hpp"

#include <algorithm>
#include <cmath>

#include "scout/error.hpp"

namespace scout {

void LossConfig::validate() const {
  require(delta > 0.0, ErrorCode::InvalidConfig, "loss delta must be positive");
  require(alpha >= 0.0 && beta >= 0.0, ErrorCode::InvalidConfig,
          "loss alpha and beta must be non-negative");
}

double huber(const Tensor& target, const Tensor& pred, double delta) {
  require_same_shape(target, pred, "huber");
  require(delta > 0.0, ErrorCode::InvalidConfig, "huber delta must be positive");
  double acc = 0.0;
  for (size_t i = 0; i < target.size(); ++i) {
    const double e = target.data[i] - pred.data[i];
    const double ae = std::fabs(e);
    acc += ae <= delta ? 0.5 * e * e : delta * (ae - 0.5 * delta);
  }
  return acc / static_cast<double>(target.size());
}

namespace {

// Sign of the cross product (b-a) x (c-a): which side of line ab point c
// lies on. The sign change of this continuous side-function across a
// segment is what certifies a crossing.
int orientation(double ax, double ay, double bx, double by, double cx, double cy) {
  const double v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  if (v > 0.0) return 1;
  if (v < 0.0) return -1;
  return 0;
}

bool on_segment(double ax, double ay, double bx, double by, double px, double py) {
  return std::min(ax, bx) <= px && px <= std::max(ax, bx) && std::min(ay, by) <= py &&
         py <= std::max(ay, by);
}

double point_distance(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

}  // namespace

bool segments_intersect(double ax, double ay, double bx, double by, double cx, double cy,
                        double dx, double dy) {
  const bool first_degenerate = ax == bx && ay == by;
  const bool second_degenerate = cx == dx && cy == dy;
  if (first_degenerate && second_degenerate)
    return point_distance(ax, ay, cx, cy) <= kMinPairDistance;
  if (first_degenerate)
    return point_distance(ax, ay, cx, cy) <= kMinPairDistance ||
           point_distance(ax, ay, dx, dy) <= kMinPairDistance;
  if (second_degenerate)
    return point_distance(cx, cy, ax, ay) <= kMinPairDistance ||
           point_distance(cx, cy, bx, by) <= kMinPairDistance;

  const int o1 = orientation(ax, ay, bx, by, cx, cy);
  const int o2 = orientation(ax, ay, bx, by, dx, dy);
  const int o3 = orientation(cx, cy, dx, dy, ax, ay);
  const int o4 = orientation(cx, cy, dx, dy, bx, by);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(ax, ay, bx, by, cx, cy)) return true;
  if (o2 == 0 && on_segment(ax, ay, bx, by, dx, dy)) return true;
  if (o3 == 0 && on_segment(cx, cy, dx, dy, ax, ay)) return true;
  if (o4 == 0 && on_segment(cx, cy, dx, dy, bx, by)) return true;
  return false;
}

double overlap_percentage(const Tensor& predictions, const std::vector<GraphEdge>& spatial_edges,
                          int t_pred) {
  require(predictions.cols == 2 * t_pred, ErrorCode::ShapeMismatch,
          "overlap_percentage: predictions " + predictions.shape_str() + " vs t_pred " +
              std::to_string(t_pred));
  if (t_pred < 2) return 0.0;
  long long slots = 0;
  long long hits = 0;
  for (const GraphEdge& e : spatial_edges) {
    if (e.i == e.j) continue;
    for (int t = 0; t + 1 < t_pred; ++t) {
      ++slots;
      if (segments_intersect(predictions.at(e.i, 2 * t), predictions.at(e.i, 2 * t + 1),
                             predictions.at(e.i, 2 * t + 2), predictions.at(e.i, 2 * t + 3),
                             predictions.at(e.j, 2 * t), predictions.at(e.j, 2 * t + 1),
                             predictions.at(e.j, 2 * t + 2), predictions.at(e.j, 2 * t + 3)))
        ++hits;
    }
  }
  return slots == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(slots);
}

TotalLoss total_loss_tape(Tape& tape, VarId predictions, const Tensor& ground_truth,
                          const std::vector<uint8_t>& loss_mask,
                          const std::vector<GraphEdge>& spatial_edges, const LossConfig& cfg,
                          int t_pred) {
  cfg.validate();
  // Copy: recording further ops must not invalidate what the geometric
  // overlap test reads.
  const Tensor pred = tape.value(predictions);
  require_same_shape(pred, ground_truth, "total_loss");
  require(pred.cols == 2 * t_pred, ErrorCode::ShapeMismatch, "total_loss: t_pred");
  require(loss_mask.size() == static_cast<size_t>(pred.rows), ErrorCode::ShapeMismatch,
          "total_loss: mask size");

  std::vector<int> eligible;
  for (size_t i = 0; i < loss_mask.size(); ++i)
    if (loss_mask[i]) eligible.push_back(static_cast<int>(i));
  require(!eligible.empty(), ErrorCode::NoEligibleNodes,
          "total_loss: no loss-eligible agents in scene");
  const double n_elig = static_cast<double>(eligible.size());

  Tensor gt_eligible(static_cast<int>(eligible.size()), ground_truth.cols);
  for (size_t r = 0; r < eligible.size(); ++r)
    for (int j = 0; j < ground_truth.cols; ++j)
      gt_eligible.at(static_cast<int>(r), j) = ground_truth.at(eligible[r], j);

  VarId pred_eligible = tape.gather_rows(predictions, eligible);
  VarId elem = tape.huber(pred_eligible, std::move(gt_eligible), cfg.delta);
  // Per-step loss = per-coordinate Huber summed over (x, y), averaged over
  // eligible nodes; the time average folds into one global sum.
  VarId time_avg = tape.scale(tape.sum_all(elem), 1.0 / (n_elig * t_pred));
  VarId final_step =
      tape.scale(tape.sum_all(tape.slice_cols(elem, 2 * (t_pred - 1), 2 * t_pred)), 1.0 / n_elig);

  TotalLoss out;
  out.p_overlap = overlap_percentage(pred, spatial_edges, t_pred);
  out.loss = tape.add(tape.scale(time_avg, 1.0 + cfg.alpha * out.p_overlap),
                      tape.scale(final_step, cfg.beta));
  return out;
}

double total_loss_value(const Tensor& predictions, const Tensor& ground_truth,
                        const std::vector<uint8_t>& loss_mask,
                        const std::vector<GraphEdge>& spatial_edges, const LossConfig& cfg,
                        int t_pred) {
  Tape tape;
  VarId pred = tape.leaf(predictions);
  TotalLoss t = total_loss_tape(tape, pred, ground_truth, loss_mask, spatial_edges, cfg, t_pred);
  return tape.value(t.loss).at(0, 0);
}

}  // namespace scout
