#include <doctest.h>

#include <cmath>

#include "grcan/autograd.hpp"
#include "grcan/errors.hpp"
#include "grcan/pipeline.hpp"
#include "support/oracles.hpp"

using namespace grcan;

namespace {

PipelineConfig cfg_1d(std::size_t d, std::size_t ae, std::size_t fc, Activation act) {
  PipelineConfig c;
  c.input_shape = {d};
  c.ae_layers = ae;
  c.ae_channels.assign(ae, 2);
  c.kernel = 3;
  c.fc_layers = fc;
  c.fc_widths.assign(fc, 6);
  c.activation = act;
  return c;
}

}  // namespace

TEST_CASE("config validation rejects out-of-range structures") {
  CHECK_THROWS_AS(cfg_1d(5, 0, 1, Activation::Sigmoid).validate(), ConfigError);
  auto c = cfg_1d(5, 2, 1, Activation::Sigmoid);
  c.ae_layers = 4;
  c.ae_channels.assign(4, 2);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  auto c2 = cfg_1d(5, 2, 1, Activation::Sigmoid);
  c2.fc_layers = 3;
  c2.fc_widths.assign(3, 4);
  CHECK_THROWS_AS(c2.validate(), ConfigError);
  CHECK_NOTHROW(cfg_1d(5, 2, 1, Activation::Sigmoid).validate());
}

TEST_CASE("zero input with zero bias and sigmoid encodes to all 0.5") {
  Rng rng(83);
  PipelineState ps(cfg_1d(6, 1, 0, Activation::Sigmoid), rng);
  // zero the conv weights so the pre-activation is exactly zero
  for (Parameter* p : ps.params()) p->value.zero();
  Tensor x({3, 6});
  Tensor h = ps.encode(x);
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(0.5));
}

TEST_CASE("decoder output always mirrors the input shape") {
  Rng rng(89);
  for (std::size_t ae = 1; ae <= 3; ++ae) {
    for (std::size_t d : {7ul, 12ul, 13ul}) {
      PipelineState ps(cfg_1d(d, ae, 0, Activation::Sigmoid), rng);
      Tensor x = oracle::random_tensor({2, d}, rng, 0.0, 1.0);
      Tensor h = ps.encode(x);
      Tensor rec = ps.decode(h);
      REQUIRE(rec.ndim() == 3);
      CHECK(rec.dim(0) == 2);
      CHECK(rec.dim(1) == 1);
      CHECK(rec.dim(2) == d);
    }
  }
  // 2-d variant with odd extents
  PipelineConfig c2;
  c2.input_shape = {9, 11};
  c2.ae_layers = 2;
  c2.ae_channels = {2, 3};
  c2.fc_layers = 1;
  c2.fc_widths = {5};
  PipelineState ps2(c2, rng);
  Tensor img = oracle::random_tensor({2, 9, 11}, rng, 0.0, 1.0);
  Tensor rec = ps2.decode(ps2.encode(img));
  CHECK(rec.dim(2) == 9);
  CHECK(rec.dim(3) == 11);
}

TEST_CASE("encode/decode/fc replay the layer kernels in order") {
  Rng rng(97);
  PipelineState ps(cfg_1d(9, 2, 1, Activation::Tanh), rng);
  Tensor x = oracle::random_tensor({2, 9}, rng, 0.0, 1.0);

  // hand replay: conv -> act -> pool, twice
  auto params = ps.params();  // enc w/b pairs first (w0, w1, b0, b1 order per group)
  Tensor cur = x.reshaped({2, 1, 9});
  // params() groups: enc_w (2), enc_b (2), dec_w (2), dec_b (2), fc_w (1), fc_b (1)
  const Tensor& ew0 = params[0]->value;
  const Tensor& ew1 = params[1]->value;
  const Tensor& eb0 = params[2]->value;
  const Tensor& eb1 = params[3]->value;
  cur = oracle::conv1d(cur, ew0, eb0, true);
  cur = activation_apply(cur, Activation::Tanh);
  cur = oracle::maxpool1d(cur, 2);
  cur = oracle::conv1d(cur, ew1, eb1, true);
  cur = activation_apply(cur, Activation::Tanh);
  cur = oracle::maxpool1d(cur, 2);

  Tensor h = ps.encode(x);
  REQUIRE(h.shape() == cur.shape());
  for (std::size_t i = 0; i < h.size(); ++i) CHECK(h[i] == doctest::Approx(cur[i]).epsilon(1e-12));

  // fc replay: flatten -> dense -> act
  const Tensor& fw = params[8]->value;
  const Tensor& fb = params[9]->value;
  Tensor flat = h.reshaped({2, h.size() / 2});
  Tensor want_fc = activation_apply(oracle::matmul_bias(flat, fw, fb), Activation::Tanh);
  Tensor got_fc = ps.fc_forward(h);
  REQUIRE(got_fc.shape() == want_fc.shape());
  for (std::size_t i = 0; i < got_fc.size(); ++i) {
    CHECK(got_fc[i] == doctest::Approx(want_fc[i]).epsilon(1e-12));
  }
}

TEST_CASE("fc pass-through when no fully connected layers are configured") {
  Rng rng(101);
  PipelineState ps(cfg_1d(8, 1, 0, Activation::Sigmoid), rng);
  Tensor x = oracle::random_tensor({3, 8}, rng, 0.0, 1.0);
  Tensor h = ps.encode(x);
  Tensor fc = ps.fc_forward(h);
  CHECK(fc.dim(0) == 3);
  CHECK(fc.dim(1) == ps.hidden_size());
  for (std::size_t i = 0; i < fc.size(); ++i) CHECK(fc[i] == doctest::Approx(h[i]));
}

TEST_CASE("reconstruction loss: zero at identity, brute-force sum, nonnegative") {
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(reconstruction_loss(a, a) == doctest::Approx(0.0));

  Tensor x({1, 2}, {1, 0});
  Tensor c({1, 2}, {0, 0});
  CHECK(reconstruction_loss(x, c) == doctest::Approx(1.0));

  Rng rng(103);
  Tensor p = oracle::random_tensor({4, 5}, rng);
  Tensor q = oracle::random_tensor({4, 5}, rng);
  double want = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) want += (p[i] - q[i]) * (p[i] - q[i]);
  want /= 4.0;
  CHECK(reconstruction_loss(p, q) == doctest::Approx(want).epsilon(1e-12));
  CHECK(reconstruction_loss(p, q) >= 0.0);

  Tensor bad({2, 2});
  CHECK_THROWS_AS(reconstruction_loss(p, bad), DimensionError);
}

TEST_CASE("determinism: same parameters and input give identical outputs") {
  Rng rng(107);
  PipelineState ps(cfg_1d(7, 2, 1, Activation::Sigmoid), rng);
  Tensor x = oracle::random_tensor({2, 7}, rng, 0.0, 1.0);
  Tensor h1 = ps.encode(x);
  Tensor h2 = ps.encode(x);
  for (std::size_t i = 0; i < h1.size(); ++i) CHECK(h1[i] == h2[i]);  // bitwise
}

TEST_CASE("joint autoencoder loss gradients pass finite differences") {
  Rng rng(109);
  for (std::size_t ae = 1; ae <= 2; ++ae) {
    PipelineState ps(cfg_1d(6, ae, 1, Activation::Sigmoid), rng);
    Tensor x = oracle::random_tensor({2, 6}, rng, 0.0, 1.0);
    auto build = [&](bool back) {
      Graph g;
      Node* xin = g.input(x);
      Node* h = ps.build_encoder(g, xin);
      Node* rec = ps.build_decoder(g, h);
      Node* fc = ps.build_fc(g, h);
      Node* l_rec = g.squared_error(rec, x.reshaped({2, 1, 6}));
      Node* l_fc = g.squared_error(fc, Tensor({2, 6}));
      Node* loss = g.add(l_rec, l_fc);
      if (back) g.backward(loss);
      return loss->value[0];
    };
    auto params = ps.params();
    CHECK(oracle::fd_max_rel_error(params, [&] { return build(false); }, [&] { build(true); }) <
          1e-4);
  }
}
