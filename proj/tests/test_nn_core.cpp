#include <doctest.h>

#include <cmath>

#include "grcan/autograd.hpp"
#include "grcan/errors.hpp"
#include "grcan/layers.hpp"
#include "grcan/optimizer.hpp"
#include "support/oracles.hpp"

using namespace grcan;

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3});
  CHECK(t.size() == 6);
  CHECK(t.all_finite());
  CHECK_THROWS_AS(Tensor({2, 3}, {1.0}), DimensionError);
  CHECK_THROWS_AS(t.reshaped({4}), DimensionError);
  Tensor r = t.reshaped({3, 2});
  CHECK(r.dim(0) == 3);
}

TEST_CASE("dense forward hand examples") {
  // identity weights pass the input through
  Tensor x({1, 2}, {1, 2});
  Tensor w({2, 2}, {1, 0, 0, 1});
  Tensor b({2}, {0, 0});
  Tensor y = dense_forward(x, w, b);
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(2.0));

  Tensor x2({1, 2}, {1, 1});
  Tensor w2({2, 1}, {2, 3});
  Tensor b2({1}, {1});
  CHECK(dense_forward(x2, w2, b2)[0] == doctest::Approx(6.0));

  CHECK_THROWS_AS(dense_forward(x, w2.reshaped({1, 2}), b2), DimensionError);
}

TEST_CASE("dense forward matches the triple-loop oracle") {
  Rng rng(7);
  Tensor x = oracle::random_tensor({3, 4}, rng);
  Tensor w = oracle::random_tensor({4, 5}, rng);
  Tensor b = oracle::random_tensor({5}, rng);
  Tensor got = dense_forward(x, w, b);
  Tensor want = oracle::matmul_bias(x, w, b);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
  }
}

TEST_CASE("conv1d identity kernel and oracle match") {
  Rng rng(11);
  // 1x1 kernel of value 1 reproduces the input
  Tensor x = oracle::random_tensor({2, 1, 6}, rng);
  Tensor w1({1, 1, 1}, {1.0});
  Tensor b0({1}, {0.0});
  Tensor y = conv1d_forward(x, w1, b0, Padding::Same);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(x[i]));

  Tensor xr = oracle::random_tensor({2, 2, 9}, rng);
  Tensor wr = oracle::random_tensor({3, 2, 3}, rng);
  Tensor br = oracle::random_tensor({3}, rng);
  for (Padding pad : {Padding::Same, Padding::Valid}) {
    Tensor got = conv1d_forward(xr, wr, br, pad);
    Tensor want = oracle::conv1d(xr, wr, br, pad == Padding::Same);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
  }
}

TEST_CASE("conv2d examples and oracle match") {
  // all-ones 3x3 kernel over an all-ones 3x3 image, valid padding
  Tensor x({1, 1, 3, 3});
  x.fill(1.0);
  Tensor w({1, 1, 3, 3});
  w.fill(1.0);
  Tensor b({1}, {0.0});
  Tensor y = conv2d_forward(x, w, b, Padding::Valid);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == doctest::Approx(9.0));

  Rng rng(13);
  Tensor xr = oracle::random_tensor({2, 2, 8, 8}, rng);
  Tensor wr = oracle::random_tensor({3, 2, 3, 3}, rng);
  Tensor br = oracle::random_tensor({3}, rng);
  for (Padding pad : {Padding::Same, Padding::Valid}) {
    Tensor got = conv2d_forward(xr, wr, br, pad);
    Tensor want = oracle::conv2d(xr, wr, br, pad == Padding::Same);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-10));
    }
  }

  // kernel larger than the (unpadded) input
  Tensor tiny({1, 1, 2, 2});
  CHECK_THROWS_AS(conv2d_forward(tiny, w, b, Padding::Valid), DimensionError);
}

TEST_CASE("maxpool examples, oracle, and window validation") {
  Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
  PoolResult r = maxpool2d_forward(x, 2);
  REQUIRE(r.out.size() == 1);
  CHECK(r.out[0] == doctest::Approx(4.0));

  Tensor c({1, 1, 4});
  c.fill(0.7);
  PoolResult rc = maxpool1d_forward(c, 2);
  for (std::size_t i = 0; i < rc.out.size(); ++i) CHECK(rc.out[i] == doctest::Approx(0.7));

  Rng rng(17);
  Tensor xr = oracle::random_tensor({2, 2, 4, 4}, rng);
  PoolResult got = maxpool2d_forward(xr, 2);
  Tensor want = oracle::maxpool2d(xr, 2);
  for (std::size_t i = 0; i < got.out.size(); ++i) {
    CHECK(got.out[i] == doctest::Approx(want[i]));
  }

  // ceil mode keeps the trailing partial window
  Tensor odd = oracle::random_tensor({1, 1, 5}, rng);
  CHECK(maxpool1d_forward(odd, 2).out.dim(2) == 3);

  CHECK_THROWS_AS(maxpool1d_forward(c, 0), ParameterError);
}

TEST_CASE("activations: values and elementwise permutation property") {
  CHECK(activation_scalar(Activation::Sigmoid, 0.0) == doctest::Approx(0.5));
  CHECK(activation_scalar(Activation::Sigmoid, 0.6) == doctest::Approx(0.64566).epsilon(1e-4));
  CHECK(activation_scalar(Activation::Relu, -3.0) == 0.0);
  CHECK(activation_scalar(Activation::Relu6, 10.0) == doctest::Approx(6.0));
  CHECK(activation_scalar(Activation::LeakyRelu, -2.0) == doctest::Approx(-0.02));
  CHECK(activation_scalar(Activation::Tanh, 0.0) == 0.0);

  Rng rng(23);
  Tensor x = oracle::random_tensor({12}, rng, -4.0, 4.0);
  for (Activation a : {Activation::Sigmoid, Activation::Relu, Activation::LeakyRelu,
                       Activation::Relu6, Activation::Tanh}) {
    Tensor y = activation_apply(x, a);
    // reversing the input reverses the output and changes nothing else
    Tensor rev({12});
    for (std::size_t i = 0; i < 12; ++i) rev[i] = x[11 - i];
    Tensor yrev = activation_apply(rev, a);
    for (std::size_t i = 0; i < 12; ++i) CHECK(yrev[i] == doctest::Approx(y[11 - i]));
  }
}

TEST_CASE("backward on linear and sigmoid leaves the textbook gradients") {
  // loss = w . x with x fixed -> dloss/dw = x
  Rng rng(29);
  Parameter w("w", oracle::random_tensor({4, 1}, rng));
  Tensor x = oracle::random_tensor({1, 4}, rng);
  Graph g;
  Node* loss = g.matmul(g.input(x), g.param(w));  // [1,1] scalar
  g.backward(loss);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(w.grad[i] == doctest::Approx(x[i]));
  }

  // sigmoid'(0) = 0.25
  Parameter z("z", Tensor({1, 1}, {0.0}));
  Graph g2;
  Node* s = g2.activation(g2.param(z), Activation::Sigmoid);
  Node* l2 = g2.squared_error(s, Tensor({1, 1}, {0.0}));  // d/dz sigma(z)^2 = 2*0.5*0.25
  g2.backward(l2);
  CHECK(z.grad[0] == doctest::Approx(2.0 * 0.5 * 0.25));
}

TEST_CASE("backward before any forward is a state error") {
  Graph g;
  CHECK_THROWS_AS(g.backward(nullptr), StateError);
  Parameter w("w", Tensor({2, 2}));
  Node* n = g.param(w);
  CHECK_THROWS_AS(g.backward(n), StateError);  // not a scalar
}

TEST_CASE("finite differences across every layer kind") {
  Rng rng(31);
  const double tol = 1e-4;

  SUBCASE("dense + activation") {
    Parameter w = Parameter::uniform_init("w", {3, 4}, 3, rng);
    Parameter b = Parameter::uniform_init("b", {4}, 3, rng);
    Tensor x = oracle::random_tensor({2, 3}, rng);
    Tensor target = oracle::random_tensor({2, 4}, rng);
    auto build = [&](bool back) {
      Graph g;
      Node* y = g.activation(g.dense(g.input(x), g.param(w), g.param(b)), Activation::Tanh);
      Node* loss = g.squared_error(y, target);
      if (back) g.backward(loss);
      return loss->value[0];
    };
    Parameter* ps[] = {&w, &b};
    CHECK(oracle::fd_max_rel_error(ps, [&] { return build(false); }, [&] { build(true); }) < tol);
  }

  SUBCASE("conv1d + pool + upsample") {
    Parameter w = Parameter::uniform_init("w", {2, 1, 3}, 3, rng);
    Parameter b = Parameter::uniform_init("b", {2}, 3, rng);
    Tensor x = oracle::random_tensor({2, 1, 7}, rng);
    Tensor target = oracle::random_tensor({2, 2, 7}, rng);
    auto build = [&](bool back) {
      Graph g;
      Node* y = g.conv1d(g.input(x), g.param(w), g.param(b), Padding::Same);
      y = g.activation(y, Activation::Sigmoid);
      y = g.maxpool1d(y, 2);
      y = g.upsample1d(y, 2, 7);
      Node* loss = g.squared_error(y, target);
      if (back) g.backward(loss);
      return loss->value[0];
    };
    Parameter* ps[] = {&w, &b};
    CHECK(oracle::fd_max_rel_error(ps, [&] { return build(false); }, [&] { build(true); }) < tol);
  }

  SUBCASE("conv2d + pool + upsample") {
    Parameter w = Parameter::uniform_init("w", {2, 1, 3, 3}, 9, rng);
    Parameter b = Parameter::uniform_init("b", {2}, 9, rng);
    Tensor x = oracle::random_tensor({1, 1, 5, 5}, rng);
    Tensor target = oracle::random_tensor({1, 2, 5, 5}, rng);
    auto build = [&](bool back) {
      Graph g;
      Node* y = g.conv2d(g.input(x), g.param(w), g.param(b), Padding::Same);
      y = g.activation(y, Activation::Tanh);
      y = g.maxpool2d(y, 2);
      y = g.upsample2d(y, 2, 5, 5);
      Node* loss = g.squared_error(y, target);
      if (back) g.backward(loss);
      return loss->value[0];
    };
    Parameter* ps[] = {&w, &b};
    CHECK(oracle::fd_max_rel_error(ps, [&] { return build(false); }, [&] { build(true); }) < tol);
  }

  SUBCASE("row_softmax + cross_entropy") {
    Parameter logits = Parameter::uniform_init("p", {4, 3}, 1, rng);
    Tensor targets({4, 3});
    for (std::size_t r = 0; r < 4; ++r) targets[r * 3 + r % 3] = 1.0;
    auto build = [&](bool back) {
      Graph g;
      Node* p = g.row_softmax(g.param(logits));
      Node* loss = g.cross_entropy(p, targets);
      if (back) g.backward(loss);
      return loss->value[0];
    };
    Parameter* ps[] = {&logits};
    CHECK(oracle::fd_max_rel_error(ps, [&] { return build(false); }, [&] { build(true); }) < tol);
  }

  SUBCASE("matmul_nt + sigmoid + tree_route") {
    Parameter w = Parameter::uniform_init("w", {7, 5}, 5, rng);  // depth-2 tree
    Tensor x = oracle::random_tensor({3, 5}, rng);
    Tensor target = oracle::random_tensor({3, 8}, rng, 0.0, 1.0);
    auto build = [&](bool back) {
      Graph g;
      Node* d = g.activation(g.matmul_nt(g.input(x), g.param(w)), Activation::Sigmoid);
      Node* q = g.tree_route(d);
      Node* loss = g.squared_error(q, target);
      if (back) g.backward(loss);
      return loss->value[0];
    };
    Parameter* ps[] = {&w};
    CHECK(oracle::fd_max_rel_error(ps, [&] { return build(false); }, [&] { build(true); }) < tol);
  }
}

TEST_CASE("accumulator update: worked example and monotone step size") {
  OptimizerConfig cfg{0.001, 1e-8, 1.0};

  // G=0, g=3: step magnitude 0.001 * 3 / sqrt(9) = 0.001
  Parameter p("p", Tensor({1}, {1.0}));
  Tensor accum({1});
  p.grad[0] = 3.0;
  p.grad_ready = true;
  rmsprop_update(p, accum, cfg);
  CHECK(p.value[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-9));
  CHECK(accum[0] == doctest::Approx(9.0));

  // zero gradient leaves everything unchanged
  Parameter q("q", Tensor({1}, {2.0}));
  Tensor qa({1});
  q.grad[0] = 0.0;
  q.grad_ready = true;
  rmsprop_update(q, qa, cfg);
  CHECK(q.value[0] == doctest::Approx(2.0));
  CHECK(qa[0] == doctest::Approx(0.0));

  // two identical gradients: second step strictly smaller
  Parameter r("r", Tensor({1}, {0.0}));
  Tensor ra({1});
  r.grad[0] = 0.5;
  r.grad_ready = true;
  rmsprop_update(r, ra, cfg);
  const double step1 = std::abs(r.value[0]);
  const double v1 = r.value[0];
  r.grad[0] = 0.5;
  r.grad_ready = true;
  rmsprop_update(r, ra, cfg);
  const double step2 = std::abs(r.value[0] - v1);
  CHECK(step2 < step1);

  // effective step size never increases under the default rule
  Rng rng(41);
  Parameter s("s", Tensor({1}, {0.0}));
  Tensor sa({1});
  double prev_eff = 1e300;
  for (int it = 0; it < 50; ++it) {
    s.grad[0] = rng.uniform_in(0.1, 2.0);
    s.grad_ready = true;
    rmsprop_update(s, sa, cfg);
    const double eff = cfg.eta / std::sqrt(sa[0] + cfg.epsilon);
    CHECK(eff <= prev_eff + 1e-15);
    prev_eff = eff;
  }

  // missing gradient is a state error
  Parameter t("t", Tensor({1}));
  Tensor ta({1});
  CHECK_THROWS_AS(rmsprop_update(t, ta, cfg), StateError);
  // mismatched accumulator shape is a state error
  Parameter u("u", Tensor({2}));
  u.grad_ready = true;
  Tensor ua({3});
  CHECK_THROWS_AS(rmsprop_update(u, ua, cfg), StateError);
}
