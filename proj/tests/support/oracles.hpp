#pragma once

// Independent brute-force oracles used to cross-check production code.
// These must stay implementation-independent: the overlap oracle solves the
// parametric line equations instead of running orientation tests.

#include <cmath>
#include <vector>

#include "scout/graph.hpp"
#include "scout/tensor.hpp"

namespace scout::oracles {

inline bool segments_intersect(double ax, double ay, double bx, double by, double cx, double cy,
                               double dx, double dy) {
  const double rx = bx - ax, ry = by - ay;
  const double sx = dx - cx, sy = dy - cy;
  const bool p_deg = rx == 0.0 && ry == 0.0;
  const bool q_deg = sx == 0.0 && sy == 0.0;
  auto dist = [](double x1, double y1, double x2, double y2) {
    return std::hypot(x1 - x2, y1 - y2);
  };
  if (p_deg && q_deg) return dist(ax, ay, cx, cy) <= kMinPairDistance;
  if (p_deg)
    return dist(ax, ay, cx, cy) <= kMinPairDistance || dist(ax, ay, dx, dy) <= kMinPairDistance;
  if (q_deg)
    return dist(cx, cy, ax, ay) <= kMinPairDistance || dist(cx, cy, bx, by) <= kMinPairDistance;

  const double denom = rx * sy - ry * sx;
  const double qpx = cx - ax, qpy = cy - ay;
  if (denom == 0.0) {
    if (qpx * ry - qpy * rx != 0.0) return false;  // parallel, never collinear
    const bool use_x = std::fabs(rx) >= std::fabs(ry);
    const double p0 = use_x ? ax : ay, p1 = use_x ? bx : by;
    const double q0 = use_x ? cx : cy, q1 = use_x ? dx : dy;
    return std::max(std::min(p0, p1), std::min(q0, q1)) <=
           std::min(std::max(p0, p1), std::max(q0, q1));
  }
  const double t = (qpx * sy - qpy * sx) / denom;
  const double u = (qpx * ry - qpy * rx) / denom;
  return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

inline double overlap_percentage(const Tensor& pred, const std::vector<GraphEdge>& edges,
                                 int t_pred) {
  long long hits = 0, slots = 0;
  for (const GraphEdge& e : edges) {
    if (e.i == e.j) continue;
    for (int t = 0; t + 1 < t_pred; ++t) {
      ++slots;
      if (segments_intersect(pred.at(e.i, 2 * t), pred.at(e.i, 2 * t + 1),
                             pred.at(e.i, 2 * t + 2), pred.at(e.i, 2 * t + 3),
                             pred.at(e.j, 2 * t), pred.at(e.j, 2 * t + 1),
                             pred.at(e.j, 2 * t + 2), pred.at(e.j, 2 * t + 3)))
        ++hits;
    }
  }
  return slots == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(slots);
}

}  // namespace scout::oracles
