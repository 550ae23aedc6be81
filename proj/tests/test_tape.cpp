#include <doctest.h>

#include <cmath>

#include "scout/error.hpp"
#include "scout/param.hpp"
#include "scout/tape.hpp"

using namespace scout;

namespace {

Tensor random_tensor(int r, int c, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(r, c);
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

// Margin away from activation kinks so finite differences stay clean.
Tensor random_tensor_off_kinks(int r, int c, Rng& rng) {
  Tensor t(r, c);
  for (double& v : t.data) {
    do {
      v = rng.uniform(-2.0, 2.0);
    } while (std::fabs(v) < 1e-3);
  }
  return t;
}

}  // namespace

TEST_SUITE("tape") {

TEST_CASE("linear: identity weight reproduces the input") {
  Tape tape;
  Rng rng(1);
  Tensor x = random_tensor(3, 4, rng);
  VarId out = tape.matmul(tape.leaf(x), tape.leaf(Tensor::identity(4)));
  CHECK(max_abs_diff(tape.value(out), x) == 0.0);
}

TEST_CASE("linear: 1x1 value and weight gradient by hand") {
  Tape tape;
  VarId x = tape.leaf(Tensor(1, 1, {2.0}));
  VarId w = tape.leaf(Tensor(1, 1, {3.0}));
  VarId out = tape.matmul(x, w);
  CHECK(tape.value(out).at(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
  tape.backward(out);
  CHECK(tape.grad(w).at(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(tape.grad(x).at(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("linear gradients match finite differences on a random 3x4") {
  Rng rng(2);
  Tensor x = random_tensor(3, 4, rng);
  Tensor w = random_tensor(4, 2, rng);

  auto f = [&]() {
    Tape t;
    return t.value(t.sum_all(t.mul(t.matmul(t.leaf(x), t.leaf(w)),
                                   t.matmul(t.leaf(x), t.leaf(w)))))
        .at(0, 0);
  };
  const Tensor fd = finite_diff_gradient(f, w);

  Tape tape;
  VarId wv = tape.leaf(w);
  VarId y = tape.matmul(tape.leaf(x), wv);
  tape.backward(tape.sum_all(tape.mul(y, y)));
  CHECK(gradient_rel_error(tape.grad(wv), fd) < 1e-6);
}

TEST_CASE("activation values at fixed points") {
  Tape tape;
  VarId x = tape.leaf(Tensor(1, 3, {-1.0, 0.0, 2.0}));
  const Tensor& lr = tape.value(tape.leaky_relu(x, 0.2));
  CHECK(lr.at(0, 0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(lr.at(0, 1) == 0.0);
  CHECK(lr.at(0, 2) == 2.0);
  const Tensor& r = tape.value(tape.relu(x));
  CHECK(r.at(0, 0) == 0.0);
  CHECK(r.at(0, 1) == 0.0);
  const Tensor& s = tape.value(tape.sigmoid(tape.leaf(Tensor(1, 1, {0.0}))));
  CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("activation gradients match finite differences away from kinks") {
  Rng rng(3);
  Tensor x = random_tensor_off_kinks(4, 5, rng);

  for (int which = 0; which < 3; ++which) {
    auto apply = [&](Tape& t, VarId v) {
      if (which == 0) return t.leaky_relu(v, 0.2);
      if (which == 1) return t.relu(v);
      return t.sigmoid(v);
    };
    auto f = [&]() {
      Tape t;
      VarId v = t.leaf(x);
      return t.value(t.sum_all(t.mul(apply(t, v), apply(t, v)))).at(0, 0);
    };
    const Tensor fd = finite_diff_gradient(f, x);
    Tape tape;
    VarId v = tape.leaf(x);
    VarId a = apply(tape, v);
    tape.backward(tape.sum_all(tape.mul(a, a)));
    CHECK(gradient_rel_error(tape.grad(v), fd) < 1e-6);
  }
}

TEST_CASE("softmax rows: symmetry, singleton, hand value, masking") {
  Tape tape;
  VarId s = tape.leaf(Tensor(3, 2, {1.7, 1.7, 0.3, -5.0, 0.0, std::log(3.0)}));
  std::vector<uint8_t> mask = {1, 1, 1, 0, 1, 1};
  const Tensor& y = tape.value(tape.softmax_rows(s, mask));
  CHECK(y.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(y.at(1, 0) == 1.0);  // single unmasked entry
  CHECK(y.at(1, 1) == 0.0);  // masked entries exactly zero
  CHECK(y.at(2, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(y.at(2, 1) == doctest::Approx(0.75).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    double row = 0.0;
    for (int j = 0; j < 2; ++j) row += y.at(i, j);
    CHECK(std::fabs(row - 1.0) < 1e-10);
  }
}

TEST_CASE("softmax rows: fully masked row is an error") {
  Tape tape;
  VarId s = tape.leaf(Tensor(1, 2, {0.0, 1.0}));
  CHECK_THROWS_AS((void)tape.softmax_rows(s, {0, 0}), Error);
}

TEST_CASE("softmax rows gradient vs finite differences") {
  Rng rng(4);
  Tensor x = random_tensor(3, 4, rng);
  std::vector<uint8_t> mask(12, 1);
  mask[1] = 0;
  mask[7] = 0;
  Tensor coeff = random_tensor(3, 4, rng);

  auto f = [&]() {
    Tape t;
    VarId v = t.leaf(x);
    return t.value(t.sum_all(t.mul(t.softmax_rows(v, mask), t.leaf(coeff)))).at(0, 0);
  };
  const Tensor fd = finite_diff_gradient(f, x);
  Tape tape;
  VarId v = tape.leaf(x);
  tape.backward(tape.sum_all(tape.mul(tape.softmax_rows(v, mask), tape.leaf(coeff))));
  CHECK(gradient_rel_error(tape.grad(v), fd) < 1e-6);
}

TEST_CASE("segment softmax normalizes per group and differentiates") {
  Rng rng(5);
  Tensor x = random_tensor(6, 1, rng);
  const std::vector<int> seg = {0, 0, 1, 1, 1, 2};
  Tensor coeff = random_tensor(6, 1, rng);

  Tape tape;
  VarId v = tape.leaf(x);
  VarId y = tape.segment_softmax(v, seg, 3);
  double g0 = tape.value(y).at(0, 0) + tape.value(y).at(1, 0);
  double g1 = tape.value(y).at(2, 0) + tape.value(y).at(3, 0) + tape.value(y).at(4, 0);
  CHECK(std::fabs(g0 - 1.0) < 1e-10);
  CHECK(std::fabs(g1 - 1.0) < 1e-10);
  CHECK(tape.value(y).at(5, 0) == 1.0);
  tape.backward(tape.sum_all(tape.mul(y, tape.leaf(coeff))));

  auto f = [&]() {
    Tape t;
    VarId v2 = t.leaf(x);
    return t.value(t.sum_all(t.mul(t.segment_softmax(v2, seg, 3), t.leaf(coeff)))).at(0, 0);
  };
  CHECK(gradient_rel_error(tape.grad(v), finite_diff_gradient(f, x)) < 1e-6);
}

TEST_CASE("gather/scatter/concat/slice/row_scale/cumsum gradients") {
  Rng rng(6);
  Tensor x = random_tensor(4, 6, rng);
  Tensor s = random_tensor(5, 1, rng);
  Tensor coeff = random_tensor(5, 8, rng);
  const std::vector<int> idx = {2, 0, 3, 3, 1};

  auto build = [&](Tape& t, VarId vx, VarId vs) {
    VarId g = t.gather_rows(vx, idx);                       // (5, 6)
    VarId sc = t.row_scale(g, vs);                          // (5, 6)
    VarId cat = t.concat_cols({sc, t.slice_cols(g, 1, 3)});  // (5, 8)
    VarId cum = t.cumsum_timepairs(cat, 4);                  // (5, 8)
    VarId back = t.scatter_add_rows(cum, idx, 4);            // (4, 8)
    return t.sum_all(t.mul(t.gather_rows(back, {0, 1, 2, 3, 2}), t.leaf(coeff)));
  };

  Tape tape;
  VarId vx = tape.leaf(x);
  VarId vs = tape.leaf(s);
  tape.backward(build(tape, vx, vs));

  auto fx = [&]() {
    Tape t;
    return t.value(build(t, t.leaf(x), t.leaf(s))).at(0, 0);
  };
  CHECK(gradient_rel_error(tape.grad(vx), finite_diff_gradient(fx, x)) < 1e-6);
  CHECK(gradient_rel_error(tape.grad(vs), finite_diff_gradient(fx, s)) < 1e-6);
}

TEST_CASE("div and sqrt gradients") {
  Rng rng(7);
  Tensor a = random_tensor(3, 3, rng, 0.5, 2.0);
  Tensor b = random_tensor(3, 3, rng, 0.5, 2.0);
  auto f = [&]() {
    Tape t;
    return t.value(t.sum_all(t.div(t.sqrt_elem(t.leaf(a)), t.leaf(b)))).at(0, 0);
  };
  Tape tape;
  VarId va = tape.leaf(a);
  VarId vb = tape.leaf(b);
  tape.backward(tape.sum_all(tape.div(tape.sqrt_elem(va), vb)));
  CHECK(gradient_rel_error(tape.grad(va), finite_diff_gradient(f, a)) < 1e-6);
  CHECK(gradient_rel_error(tape.grad(vb), finite_diff_gradient(f, b)) < 1e-6);
}

TEST_CASE("gradient accumulation is additive across loss terms") {
  Rng rng(8);
  Tensor x = random_tensor(3, 3, rng);

  auto grad_of = [&](int mode) {
    Tape t;
    VarId v = t.leaf(x);
    VarId f = t.sum_all(t.mul(v, v));
    VarId g = t.sum_all(t.leaky_relu(v, 0.2));
    VarId root = mode == 0 ? t.add(f, g) : (mode == 1 ? f : g);
    t.backward(root);
    return t.grad(v);
  };
  const Tensor both = grad_of(0);
  const Tensor fa = grad_of(1);
  const Tensor gb = grad_of(2);
  for (size_t i = 0; i < both.size(); ++i)
    CHECK(both.data[i] == doctest::Approx(fa.data[i] + gb.data[i]).epsilon(1e-12));
}

TEST_CASE("one backward pass per tape") {
  Tape tape;
  VarId x = tape.leaf(Tensor(1, 1, {1.0}));
  VarId y = tape.mul(x, x);
  tape.backward(y);
  CHECK_THROWS_AS(tape.backward(y), Error);
}

TEST_CASE("dropout: degenerate p, eval identity, survivor statistics") {
  Rng rng(9);
  Tensor x = random_tensor(500, 200, rng, 0.5, 1.5);

  Tape tape;
  VarId v = tape.leaf(x);
  CHECK(tape.dropout(v, 0.0, true, &rng) == v);      // p = 0 records nothing
  CHECK(tape.dropout(v, 0.7, false, nullptr) == v);  // eval mode is identity

  VarId d = tape.dropout(v, 0.3, true, &rng);
  double mean_in = 0.0, mean_out = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mean_in += x.data[i];
    mean_out += tape.value(d).data[i];
  }
  CHECK(std::fabs(mean_out - mean_in) / mean_in < 0.02);
}

TEST_CASE("kaiming init: statistics and determinism") {
  Rng rng(10);
  const int fan_in = 50;
  Tensor w = kaiming_init(fan_in, 2000, fan_in, rng);
  double sum = 0.0, sq = 0.0;
  for (double v : w.data) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(w.size());
  const double std_measured = std::sqrt(sq / n - (sum / n) * (sum / n));
  const double std_target = std::sqrt(2.0 / fan_in);
  CHECK(std::fabs(std_measured - std_target) / std_target < 0.05);

  Rng r1(42), r2(42);
  Tensor a = kaiming_init(4, 4, 2, r1);
  Tensor b = kaiming_init(4, 4, 2, r2);
  CHECK(a.data == b.data);  // same seed, bit-identical
}

TEST_CASE("finite differences: analytic square and constant function") {
  Tensor w(1, 1, {3.0});
  auto square = [&]() { return w.at(0, 0) * w.at(0, 0); };
  CHECK(finite_diff_gradient(square, w).at(0, 0) == doctest::Approx(6.0).epsilon(1e-6));
  auto constant = [&]() { return 7.25; };
  CHECK(finite_diff_gradient(constant, w).at(0, 0) == 0.0);
}

}  // TEST_SUITE
