#include "scout/tape.hpp"

#include <algorithm>
#include <cmath>

#include "scout/error.hpp"
#include "scout/kernels.hpp"

namespace scout {

VarId Tape::push(Tensor value, std::function<void()> backprop) {
  nodes_.push_back(Node{std::move(value), Tensor()});
  Node& n = nodes_.back();
  n.grad = Tensor::zeros(n.value.rows, n.value.cols);
  backprop_.push_back(std::move(backprop));
  return static_cast<VarId>(nodes_.size()) - 1;
}

VarId Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

VarId Tape::matmul(VarId a, VarId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require(va.cols == vb.rows, ErrorCode::ShapeMismatch,
          "matmul: " + va.shape_str() + " x " + vb.shape_str());
  Tensor out(va.rows, vb.cols);
  kernels::matmul_nn(va.data.data(), vb.data.data(), out.data.data(), va.rows, va.cols, vb.cols);
  const int n = va.rows, k = va.cols, m = vb.cols;
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, b, id, n, k, m] {
    const Tensor& dy = grad(id);
    // dA += dY B^T ; dB += A^T dY
    kernels::matmul_nt(dy.data.data(), value(b).data.data(), grad_mut(a).data.data(), n, m, k);
    kernels::matmul_tn(value(a).data.data(), dy.data.data(), grad_mut(b).data.data(), n, k, m);
  };
  return id;
}

VarId Tape::add(VarId a, VarId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "add");
  Tensor out(va.rows, va.cols);
  kernels::add(va.data.data(), vb.data.data(), out.data.data(), out.size());
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, b, id] {
    const Tensor& dy = grad(id);
    kernels::axpy(1.0, dy.data.data(), grad_mut(a).data.data(), dy.size());
    kernels::axpy(1.0, dy.data.data(), grad_mut(b).data.data(), dy.size());
  };
  return id;
}

VarId Tape::sub(VarId a, VarId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "sub");
  Tensor out(va.rows, va.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = va.data[i] - vb.data[i];
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, b, id] {
    const Tensor& dy = grad(id);
    kernels::axpy(1.0, dy.data.data(), grad_mut(a).data.data(), dy.size());
    kernels::axpy(-1.0, dy.data.data(), grad_mut(b).data.data(), dy.size());
  };
  return id;
}

VarId Tape::mul(VarId a, VarId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "mul");
  Tensor out(va.rows, va.cols);
  kernels::mul(va.data.data(), vb.data.data(), out.data.data(), out.size());
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, b, id] {
    const Tensor& dy = grad(id);
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    Tensor& da = grad_mut(a);
    Tensor& db = grad_mut(b);
    for (size_t i = 0; i < dy.size(); ++i) {
      da.data[i] += dy.data[i] * y.data[i];
      db.data[i] += dy.data[i] * x.data[i];
    }
  };
  return id;
}

VarId Tape::div(VarId a, VarId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require_same_shape(va, vb, "div");
  Tensor out(va.rows, va.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = va.data[i] / vb.data[i];
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, b, id] {
    const Tensor& dy = grad(id);
    const Tensor& x = value(a);
    const Tensor& y = value(b);
    Tensor& da = grad_mut(a);
    Tensor& db = grad_mut(b);
    for (size_t i = 0; i < dy.size(); ++i) {
      const double inv = 1.0 / y.data[i];
      da.data[i] += dy.data[i] * inv;
      db.data[i] -= dy.data[i] * x.data[i] * inv * inv;
    }
  };
  return id;
}

VarId Tape::scale(VarId a, double c) {
  const Tensor& va = value(a);
  Tensor out(va.rows, va.cols);
  kernels::scale(va.data.data(), c, out.data.data(), out.size());
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id, c] {
    const Tensor& dy = grad(id);
    kernels::axpy(c, dy.data.data(), grad_mut(a).data.data(), dy.size());
  };
  return id;
}

VarId Tape::add_const(VarId a, const Tensor& t) {
  const Tensor& va = value(a);
  require_same_shape(va, t, "add_const");
  Tensor out(va.rows, va.cols);
  kernels::add(va.data.data(), t.data.data(), out.data.data(), out.size());
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id] {
    const Tensor& dy = grad(id);
    kernels::axpy(1.0, dy.data.data(), grad_mut(a).data.data(), dy.size());
  };
  return id;
}

VarId Tape::add_rowvec(VarId a, VarId b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  require(vb.rows == 1 && vb.cols == va.cols, ErrorCode::ShapeMismatch,
          "add_rowvec: " + va.shape_str() + " + " + vb.shape_str());
  Tensor out(va.rows, va.cols);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < va.cols; ++j) out.at(i, j) = va.at(i, j) + vb.at(0, j);
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, b, id] {
    const Tensor& dy = grad(id);
    Tensor& da = grad_mut(a);
    Tensor& db = grad_mut(b);
    kernels::axpy(1.0, dy.data.data(), da.data.data(), dy.size());
    for (int i = 0; i < dy.rows; ++i)
      for (int j = 0; j < dy.cols; ++j) db.at(0, j) += dy.at(i, j);
  };
  return id;
}

VarId Tape::sqrt_elem(VarId a) {
  const Tensor& va = value(a);
  Tensor out(va.rows, va.cols);
  for (size_t i = 0; i < out.size(); ++i) out.data[i] = std::sqrt(va.data[i]);
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id] {
    const Tensor& dy = grad(id);
    const Tensor& y = value(id);
    Tensor& da = grad_mut(a);
    for (size_t i = 0; i < dy.size(); ++i) da.data[i] += dy.data[i] * 0.5 / y.data[i];
  };
  return id;
}

VarId Tape::relu(VarId a) { return leaky_relu(a, 0.0); }

VarId Tape::leaky_relu(VarId a, double slope) {
  const Tensor& va = value(a);
  Tensor out(va.rows, va.cols);
  kernels::leaky_relu_fwd(va.data.data(), slope, out.data.data(), out.size());
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id, slope] {
    const Tensor& dy = grad(id);
    kernels::leaky_relu_bwd(value(a).data.data(), dy.data.data(), slope,
                            grad_mut(a).data.data(), dy.size());
  };
  return id;
}

VarId Tape::sigmoid(VarId a) {
  const Tensor& va = value(a);
  Tensor out(va.rows, va.cols);
  kernels::sigmoid_fwd(va.data.data(), out.data.data(), out.size());
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id] {
    const Tensor& dy = grad(id);
    kernels::sigmoid_bwd(value(id).data.data(), dy.data.data(), grad_mut(a).data.data(),
                         dy.size());
  };
  return id;
}

VarId Tape::softmax_rows(VarId scores, const std::vector<uint8_t>& mask) {
  const Tensor& s = value(scores);
  require(mask.size() == s.size(), ErrorCode::ShapeMismatch, "softmax_rows: mask size");
  Tensor out(s.rows, s.cols);
  for (int i = 0; i < s.rows; ++i) {
    double mx = -INFINITY;
    for (int j = 0; j < s.cols; ++j)
      if (mask[static_cast<size_t>(i) * s.cols + j]) mx = std::max(mx, s.at(i, j));
    require(mx != -INFINITY, ErrorCode::AllMaskedRow,
            "softmax_rows: row " + std::to_string(i) + " fully masked");
    double denom = 0.0;
    for (int j = 0; j < s.cols; ++j)
      if (mask[static_cast<size_t>(i) * s.cols + j]) denom += std::exp(s.at(i, j) - mx);
    for (int j = 0; j < s.cols; ++j)
      out.at(i, j) = mask[static_cast<size_t>(i) * s.cols + j]
                         ? std::exp(s.at(i, j) - mx) / denom
                         : 0.0;
  }
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, scores, id, mask] {
    const Tensor& y = value(id);
    const Tensor& dy = grad(id);
    Tensor& dx = grad_mut(scores);
    for (int i = 0; i < y.rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < y.cols; ++j) dot += dy.at(i, j) * y.at(i, j);
      for (int j = 0; j < y.cols; ++j)
        if (mask[static_cast<size_t>(i) * y.cols + j])
          dx.at(i, j) += y.at(i, j) * (dy.at(i, j) - dot);
    }
  };
  return id;
}

VarId Tape::segment_softmax(VarId scores, const std::vector<int>& segment, int n_segments) {
  const Tensor& s = value(scores);
  require(s.cols == 1 && segment.size() == static_cast<size_t>(s.rows), ErrorCode::ShapeMismatch,
          "segment_softmax: scores " + s.shape_str());
  std::vector<std::vector<int>> groups(static_cast<size_t>(n_segments));
  for (int e = 0; e < s.rows; ++e) groups[static_cast<size_t>(segment[e])].push_back(e);
  for (int g = 0; g < n_segments; ++g)
    require(!groups[static_cast<size_t>(g)].empty(), ErrorCode::AllMaskedRow,
            "segment_softmax: segment " + std::to_string(g) + " has no entries");
  Tensor out(s.rows, 1);
  for (const auto& grp : groups) {
    double mx = -INFINITY;
    for (int e : grp) mx = std::max(mx, s.at(e, 0));
    double denom = 0.0;
    for (int e : grp) denom += std::exp(s.at(e, 0) - mx);
    for (int e : grp) out.at(e, 0) = std::exp(s.at(e, 0) - mx) / denom;
  }
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, scores, id, groups] {
    const Tensor& y = value(id);
    const Tensor& dy = grad(id);
    Tensor& dx = grad_mut(scores);
    for (const auto& grp : groups) {
      double dot = 0.0;
      for (int e : grp) dot += dy.at(e, 0) * y.at(e, 0);
      for (int e : grp) dx.at(e, 0) += y.at(e, 0) * (dy.at(e, 0) - dot);
    }
  };
  return id;
}

VarId Tape::gather_rows(VarId a, std::vector<int> idx) {
  const Tensor& va = value(a);
  Tensor out(static_cast<int>(idx.size()), va.cols);
  for (size_t r = 0; r < idx.size(); ++r)
    for (int j = 0; j < va.cols; ++j) out.at(static_cast<int>(r), j) = va.at(idx[r], j);
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id, idx = std::move(idx)] {
    const Tensor& dy = grad(id);
    Tensor& da = grad_mut(a);
    for (size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < dy.cols; ++j) da.at(idx[r], j) += dy.at(static_cast<int>(r), j);
  };
  return id;
}

VarId Tape::scatter_add_rows(VarId a, std::vector<int> idx, int n_rows) {
  const Tensor& va = value(a);
  require(idx.size() == static_cast<size_t>(va.rows), ErrorCode::ShapeMismatch,
          "scatter_add_rows: index count");
  Tensor out(n_rows, va.cols);
  for (size_t r = 0; r < idx.size(); ++r)
    for (int j = 0; j < va.cols; ++j) out.at(idx[r], j) += va.at(static_cast<int>(r), j);
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id, idx = std::move(idx)] {
    const Tensor& dy = grad(id);
    Tensor& da = grad_mut(a);
    for (size_t r = 0; r < idx.size(); ++r)
      for (int j = 0; j < dy.cols; ++j) da.at(static_cast<int>(r), j) += dy.at(idx[r], j);
  };
  return id;
}

VarId Tape::concat_cols(const std::vector<VarId>& parts) {
  require(!parts.empty(), ErrorCode::ShapeMismatch, "concat_cols: no parts");
  const int rows = value(parts[0]).rows;
  int cols = 0;
  for (VarId p : parts) {
    require(value(p).rows == rows, ErrorCode::ShapeMismatch, "concat_cols: row mismatch");
    cols += value(p).cols;
  }
  Tensor out(rows, cols);
  int off = 0;
  for (VarId p : parts) {
    const Tensor& vp = value(p);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < vp.cols; ++j) out.at(i, off + j) = vp.at(i, j);
    off += vp.cols;
  }
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, parts, id] {
    const Tensor& dy = grad(id);
    int off2 = 0;
    for (VarId p : parts) {
      Tensor& dp = grad_mut(p);
      for (int i = 0; i < dy.rows; ++i)
        for (int j = 0; j < dp.cols; ++j) dp.at(i, j) += dy.at(i, off2 + j);
      off2 += dp.cols;
    }
  };
  return id;
}

VarId Tape::slice_cols(VarId a, int c0, int c1) {
  const Tensor& va = value(a);
  require(0 <= c0 && c0 < c1 && c1 <= va.cols, ErrorCode::ShapeMismatch,
          "slice_cols: [" + std::to_string(c0) + ", " + std::to_string(c1) + ") of " +
              va.shape_str());
  Tensor out(va.rows, c1 - c0);
  for (int i = 0; i < va.rows; ++i)
    for (int j = c0; j < c1; ++j) out.at(i, j - c0) = va.at(i, j);
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id, c0] {
    const Tensor& dy = grad(id);
    Tensor& da = grad_mut(a);
    for (int i = 0; i < dy.rows; ++i)
      for (int j = 0; j < dy.cols; ++j) da.at(i, c0 + j) += dy.at(i, j);
  };
  return id;
}

VarId Tape::row_scale(VarId a, VarId s) {
  const Tensor& va = value(a);
  const Tensor& vs = value(s);
  require(vs.rows == va.rows && vs.cols == 1, ErrorCode::ShapeMismatch,
          "row_scale: " + va.shape_str() + " by " + vs.shape_str());
  Tensor out(va.rows, va.cols);
  for (int i = 0; i < va.rows; ++i)
    for (int j = 0; j < va.cols; ++j) out.at(i, j) = va.at(i, j) * vs.at(i, 0);
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, s, id] {
    const Tensor& dy = grad(id);
    const Tensor& x = value(a);
    const Tensor& w = value(s);
    Tensor& da = grad_mut(a);
    Tensor& ds = grad_mut(s);
    for (int i = 0; i < dy.rows; ++i) {
      double acc = 0.0;
      for (int j = 0; j < dy.cols; ++j) {
        da.at(i, j) += dy.at(i, j) * w.at(i, 0);
        acc += dy.at(i, j) * x.at(i, j);
      }
      ds.at(i, 0) += acc;
    }
  };
  return id;
}

VarId Tape::dropout(VarId a, double p, bool training, Rng* rng) {
  require(p >= 0.0 && p < 1.0, ErrorCode::InvalidConfig,
          "dropout: p must be in [0, 1), got " + std::to_string(p));
  if (!training || p == 0.0) return a;
  require(rng != nullptr, ErrorCode::InvalidConfig, "dropout: training mode needs an rng");
  const Tensor& va = value(a);
  std::vector<double> mask(va.size());
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = rng->bernoulli(p) ? 0.0 : keep_scale;
  Tensor out(va.rows, va.cols);
  kernels::mul(va.data.data(), mask.data(), out.data.data(), out.size());
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id, mask = std::move(mask)] {
    const Tensor& dy = grad(id);
    Tensor& da = grad_mut(a);
    for (size_t i = 0; i < dy.size(); ++i) da.data[i] += dy.data[i] * mask[i];
  };
  return id;
}

VarId Tape::cumsum_timepairs(VarId a, int t_steps) {
  const Tensor& va = value(a);
  require(va.cols == 2 * t_steps, ErrorCode::ShapeMismatch,
          "cumsum_timepairs: " + va.shape_str() + " with T=" + std::to_string(t_steps));
  Tensor out(va.rows, va.cols);
  for (int i = 0; i < va.rows; ++i) {
    double sx = 0.0, sy = 0.0;
    for (int t = 0; t < t_steps; ++t) {
      sx += va.at(i, 2 * t);
      sy += va.at(i, 2 * t + 1);
      out.at(i, 2 * t) = sx;
      out.at(i, 2 * t + 1) = sy;
    }
  }
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id, t_steps] {
    const Tensor& dy = grad(id);
    Tensor& da = grad_mut(a);
    for (int i = 0; i < dy.rows; ++i) {
      double sx = 0.0, sy = 0.0;
      for (int t = t_steps - 1; t >= 0; --t) {
        sx += dy.at(i, 2 * t);
        sy += dy.at(i, 2 * t + 1);
        da.at(i, 2 * t) += sx;
        da.at(i, 2 * t + 1) += sy;
      }
    }
  };
  return id;
}

VarId Tape::sum_all(VarId a) {
  const Tensor& va = value(a);
  double s = 0.0;
  for (double v : va.data) s += v;
  Tensor out(1, 1);
  out.at(0, 0) = s;
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, a, id] {
    const double g = grad(id).at(0, 0);
    Tensor& da = grad_mut(a);
    for (double& v : da.data) v += g;
  };
  return id;
}

VarId Tape::huber(VarId pred, Tensor target, double delta) {
  const Tensor& vp = value(pred);
  require_same_shape(vp, target, "huber");
  require(delta > 0.0, ErrorCode::InvalidConfig, "huber: delta must be positive");
  Tensor out(vp.rows, vp.cols);
  for (size_t i = 0; i < out.size(); ++i) {
    const double e = vp.data[i] - target.data[i];
    const double ae = std::fabs(e);
    out.data[i] = ae <= delta ? 0.5 * e * e : delta * (ae - 0.5 * delta);
  }
  VarId id = push(std::move(out), nullptr);
  backprop_.back() = [this, pred, id, target = std::move(target), delta] {
    const Tensor& dy = grad(id);
    const Tensor& vp2 = value(pred);
    Tensor& dp = grad_mut(pred);
    for (size_t i = 0; i < dy.size(); ++i) {
      const double e = vp2.data[i] - target.data[i];
      dp.data[i] += dy.data[i] * std::clamp(e, -delta, delta);
    }
  };
  return id;
}

void Tape::backward(VarId root) {
  require(!backward_done_, ErrorCode::InvalidConfig, "backward: tape already differentiated");
  const Tensor& r = value(root);
  require(r.rows == 1 && r.cols == 1, ErrorCode::ShapeMismatch,
          "backward: root must be scalar, got " + r.shape_str());
  backward_done_ = true;
  grad_mut(root).at(0, 0) = 1.0;
  for (int i = root; i >= 0; --i)
    if (backprop_[static_cast<size_t>(i)]) backprop_[static_cast<size_t>(i)]();
}

}  // namespace scout
