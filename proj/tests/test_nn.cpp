#include <cmath>

#include "deap/errors.hpp"
#include "deap/nn.hpp"
#include "doctest.h"

using namespace deap;
using namespace deap::nn;

namespace {

Matrix matrix2x2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m(0, 0) = a;
  m(0, 1) = b;
  m(1, 0) = c;
  m(1, 1) = d;
  return m;
}

// Hand evaluation of the LSTM recurrence for a scalar cell, kept independent
// of the production code path.
double scalar_lstm_reference(double wi_x, double wi_h, double bi, double wf_x, double wf_h,
                             double bf, double wo_x, double wo_h, double bo, double wg_x,
                             double wg_h, double bg, double x, double h_prev, double c_prev,
                             double* c_out) {
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  const double i = sig(wi_x * x + wi_h * h_prev + bi);
  const double f = sig(wf_x * x + wf_h * h_prev + bf);
  const double o = sig(wo_x * x + wo_h * h_prev + bo);
  const double g = std::tanh(wg_x * x + wg_h * h_prev + bg);
  const double c = f * c_prev + i * g;
  *c_out = c;
  return o * std::tanh(c);
}

}  // namespace

TEST_CASE("dense_forward basic algebra") {
  DenseLayer zero(2, 2, Activation::identity);
  CHECK(dense_forward(zero, {3.0, -4.0}) == Vector{0.0, 0.0});

  DenseLayer ident(2, 2, Activation::identity);
  ident.weight = matrix2x2(1, 0, 0, 1);
  CHECK(dense_forward(ident, {5.0, 7.0}) == Vector{5.0, 7.0});

  DenseLayer layer(2, 2, Activation::identity);
  layer.weight = matrix2x2(1, 2, 3, 4);
  layer.bias = {1.0, 1.0};
  CHECK(dense_forward(layer, {1.0, 1.0}) == Vector{4.0, 8.0});

  CHECK_THROWS_AS(dense_forward(layer, {1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("dense activations") {
  DenseLayer relu(1, 1, Activation::relu);
  relu.weight(0, 0) = 1.0;
  CHECK(dense_forward(relu, {-2.0})[0] == 0.0);
  CHECK(dense_forward(relu, {2.0})[0] == 2.0);

  DenseLayer th(1, 1, Activation::tanh);
  th.weight(0, 0) = 1.0;
  CHECK(dense_forward(th, {0.7})[0] == doctest::Approx(std::tanh(0.7)));
}

TEST_CASE("lstm_step zero fixed point and range bound") {
  LstmCell cell(3, 2);
  const auto out = lstm_step(cell, {0, 0}, {0, 0, 0}, {0, 0, 0});
  for (double v : out.h) CHECK(v == 0.0);
  for (double v : out.c) CHECK(v == 0.0);

  Rng rng(11);
  init_lstm(cell, rng);
  const auto out2 = lstm_step(cell, {0.5, -1.2}, {0.1, -0.2, 0.3}, {0.9, -0.5, 0.0});
  for (double v : out2.h) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
  CHECK_THROWS_AS(lstm_step(cell, {1.0}, {0, 0, 0}, {0, 0, 0}), ShapeError);
}

TEST_CASE("lstm_step matches scalar hand computation") {
  LstmCell cell(1, 1);
  cell.w_input(0, 0) = 0.3;
  cell.w_input(0, 1) = -0.4;
  cell.b_input = {0.1};
  cell.w_forget(0, 0) = 0.7;
  cell.w_forget(0, 1) = 0.2;
  cell.b_forget = {-0.3};
  cell.w_output(0, 0) = -0.5;
  cell.w_output(0, 1) = 0.6;
  cell.b_output = {0.05};
  cell.w_candidate(0, 0) = 0.9;
  cell.w_candidate(0, 1) = -0.1;
  cell.b_candidate = {0.2};

  double c_ref = 0.0;
  const double h_ref = scalar_lstm_reference(0.3, -0.4, 0.1, 0.7, 0.2, -0.3, -0.5, 0.6, 0.05,
                                             0.9, -0.1, 0.2, 0.8, -0.3, 0.4, &c_ref);
  const auto out = lstm_step(cell, {0.8}, {-0.3}, {0.4});
  CHECK(out.h[0] == doctest::Approx(h_ref).epsilon(1e-12));
  CHECK(out.c[0] == doctest::Approx(c_ref).epsilon(1e-12));
}

TEST_CASE("softmax values and invariants") {
  const auto sym = softmax({0.0, 0.0}, 1.0);
  CHECK(sym[0] == doctest::Approx(0.5));
  CHECK(sym[1] == doctest::Approx(0.5));

  const auto cold = softmax({10.0, 0.0}, 1e-3);
  CHECK(cold[0] > 1.0 - 1e-9);

  // Frozen from direct evaluation of e^x / sum e^x at x = (1,2,3).
  const auto p = softmax({1.0, 2.0, 3.0}, 1.0);
  CHECK(p[0] == doctest::Approx(0.0900).epsilon(1e-2));
  CHECK(p[1] == doctest::Approx(0.2447).epsilon(1e-2));
  CHECK(p[2] == doctest::Approx(0.6652).epsilon(1e-2));
  CHECK(std::abs(p[0] - 0.09003057317038046) < 1e-12);

  double sum = 0.0;
  for (double v : p) {
    CHECK(v > 0.0);
    sum += v;
  }
  CHECK(std::abs(sum - 1.0) < 1e-6);

  // Shift invariance.
  const auto shifted = softmax({101.0, 102.0, 103.0}, 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(shifted[i] - p[i]) < 1e-9);

  CHECK_THROWS_AS(softmax({std::nan(""), 0.0}, 1.0), NumericError);
  CHECK_THROWS_AS(softmax({0.0}, 0.0), NumericError);
}

TEST_CASE("cross_entropy values") {
  Vector onehot(256, 0.0);
  onehot[17] = 1.0;
  CHECK(cross_entropy(onehot, 17) == doctest::Approx(0.0));

  Vector uniform(256, 1.0 / 256.0);
  CHECK(cross_entropy(uniform, 3) == doctest::Approx(std::log(256.0)).epsilon(1e-12));
  CHECK(cross_entropy(uniform, 3) == doctest::Approx(5.545).epsilon(1e-3));

  Vector zeroed(256, 0.0);
  zeroed[0] = 1.0;
  CHECK(cross_entropy(zeroed, 5) == doctest::Approx(-std::log(1e-12)).epsilon(1e-12));
  CHECK(cross_entropy(zeroed, 5) == doctest::Approx(27.63).epsilon(1e-3));
}

TEST_CASE("mse basics") {
  CHECK(mse(4.2, 4.2) == 0.0);
  CHECK(mse(3.0, 1.0) == 4.0);
  CHECK(mse(-2.0, 5.0) == mse(5.0, -2.0));
}

TEST_CASE("optimizer_step SGD and Adam arithmetic") {
  Vector p = {1.0};
  Vector g = {2.0};
  ParamRef ref{"p", p.data(), g.data(), 1};

  OptimizerState sgd;
  sgd.algorithm = OptAlgo::sgd;
  sgd.learning_rate = 0.1;
  optimizer_step(sgd, std::span<const ParamRef>(&ref, 1));
  CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-15));

  // First Adam step with g=1: bias correction gives m_hat = v_hat = 1.
  Vector p2 = {5.0};
  Vector g2 = {1.0};
  ParamRef ref2{"p2", p2.data(), g2.data(), 1};
  OptimizerState adam;
  adam.algorithm = OptAlgo::adam;
  adam.learning_rate = 1e-3;
  optimizer_step(adam, std::span<const ParamRef>(&ref2, 1));
  CHECK(p2[0] == doctest::Approx(5.0 - 1e-3).epsilon(1e-9));
  CHECK(adam.step == 1);

  // Zero gradients leave parameters unchanged.
  Vector p3 = {3.0};
  Vector g3 = {0.0};
  ParamRef ref3{"p3", p3.data(), g3.data(), 1};
  OptimizerState adam2;
  optimizer_step(adam2, std::span<const ParamRef>(&ref3, 1));
  CHECK(p3[0] == 3.0);
  OptimizerState sgd2;
  sgd2.algorithm = OptAlgo::sgd;
  optimizer_step(sgd2, std::span<const ParamRef>(&ref3, 1));
  CHECK(p3[0] == 3.0);

  // lr = 0 is the identity.
  Vector p4 = {1.5};
  Vector g4 = {7.0};
  ParamRef ref4{"p4", p4.data(), g4.data(), 1};
  OptimizerState frozen;
  frozen.learning_rate = 0.0;
  optimizer_step(frozen, std::span<const ParamRef>(&ref4, 1));
  CHECK(p4[0] == 1.5);

  Vector g5 = {std::nan("")};
  ParamRef ref5{"bad_group", p4.data(), g5.data(), 1};
  OptimizerState s5;
  try {
    optimizer_step(s5, std::span<const ParamRef>(&ref5, 1));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("bad_group") != std::string::npos);
  }
}

TEST_CASE("grad_check on closed forms") {
  // f(w) = w^2 at w = 3: derivative 6.
  Vector w = {3.0};
  Vector gw = {0.0};
  ParamRef ref{"w", w.data(), gw.data(), 1};
  auto loss = [&] { return w[0] * w[0]; };
  auto grad = [&] { gw[0] = 2.0 * w[0]; };
  const auto report = grad_check(std::span<const ParamRef>(&ref, 1), loss, grad);
  CHECK(report.max_rel_error < 1e-6);
  CHECK(gw[0] == doctest::Approx(6.0));

  // Constant function: both gradients zero.
  auto const_loss = [&] { return 42.0; };
  auto const_grad = [&] { gw[0] = 0.0; };
  const auto report2 = grad_check(std::span<const ParamRef>(&ref, 1), const_loss, const_grad);
  CHECK(report2.max_rel_error == 0.0);
}

TEST_CASE("dense and lstm backward pass gradient check") {
  Rng rng(7);
  DenseLayer layer(3, 4, Activation::tanh);
  init_dense(layer, rng);
  Vector x = {0.3, -0.8, 0.5, 0.1};
  DenseGrads grads(layer);
  Vector xg(4, 0.0);

  auto loss = [&] {
    const auto y = dense_forward(layer, x);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (i + 1.0) * y[i] * y[i];
    return s;
  };
  auto grad = [&] {
    grads.zero();
    std::fill(xg.begin(), xg.end(), 0.0);
    DenseCache cache;
    const auto y = dense_forward_cached(layer, x, cache);
    Vector dy(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) dy[i] = 2.0 * (i + 1.0) * y[i];
    const auto dx = dense_backward(layer, cache, dy, grads);
    std::copy(dx.begin(), dx.end(), xg.begin());
  };
  const ParamRef refs[] = {
      {"weight", layer.weight.data.data(), grads.weight.data.data(), layer.weight.data.size()},
      {"bias", layer.bias.data(), grads.bias.data(), layer.bias.size()},
      {"input", x.data(), xg.data(), x.size()},
  };
  CHECK(grad_check(refs, loss, grad).max_rel_error < 1e-7);

  LstmCell cell(3, 2);
  init_lstm(cell, rng);
  Vector lx = {0.4, -0.6};
  Vector h0 = {0.2, -0.1, 0.3};
  Vector c0 = {-0.5, 0.8, 0.0};
  LstmGrads lg(cell);
  auto lstm_loss = [&] {
    const auto out = lstm_step(cell, lx, h0, c0);
    double s = 0.0;
    for (std::size_t i = 0; i < out.h.size(); ++i) s += out.h[i] * out.h[i] + 0.5 * out.c[i];
    return s;
  };
  auto lstm_grad = [&] {
    lg.zero();
    LstmStepCache cache;
    const auto out = lstm_step_cached(cell, lx, h0, c0, cache);
    Vector dh(3), dc(3, 0.5);
    for (std::size_t i = 0; i < 3; ++i) dh[i] = 2.0 * out.h[i];
    (void)lstm_backward(cell, cache, dh, dc, lg);
  };
  const ParamRef lrefs[] = {
      {"w_input", cell.w_input.data.data(), lg.w_input.data.data(), cell.w_input.data.size()},
      {"w_forget", cell.w_forget.data.data(), lg.w_forget.data.data(), cell.w_forget.data.size()},
      {"w_output", cell.w_output.data.data(), lg.w_output.data.data(), cell.w_output.data.size()},
      {"w_candidate", cell.w_candidate.data.data(), lg.w_candidate.data.data(),
       cell.w_candidate.data.size()},
      {"b_input", cell.b_input.data(), lg.b_input.data(), cell.b_input.size()},
      {"b_forget", cell.b_forget.data(), lg.b_forget.data(), cell.b_forget.size()},
      {"b_output", cell.b_output.data(), lg.b_output.data(), cell.b_output.size()},
      {"b_candidate", cell.b_candidate.data(), lg.b_candidate.data(), cell.b_candidate.size()},
  };
  CHECK(grad_check(lrefs, lstm_loss, lstm_grad).max_rel_error < 1e-7);
}

TEST_CASE("soft_argmax_embed limits") {
  Rng rng(3);
  std::array<Matrix, 4> tables;
  for (auto& t : tables) {
    t = Matrix(8, 5);
    init_uniform(t, 5, rng);
  }

  std::array<Vector, 4> onehot;
  for (std::size_t j = 0; j < 4; ++j) {
    onehot[j].assign(8, 0.0);
    onehot[j][j + 2] = 1.0;
  }
  const auto picked = soft_argmax_embed(onehot, tables);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t c = 0; c < 5; ++c)
      CHECK(picked[j][c] == doctest::Approx(tables[j](j + 2, c)).epsilon(1e-15));

  std::array<Vector, 4> uniform;
  for (auto& u : uniform) u.assign(8, 1.0 / 8.0);
  const auto mean = soft_argmax_embed(uniform, tables);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t c = 0; c < 5; ++c) {
      double col = 0.0;
      for (std::size_t r = 0; r < 8; ++r) col += tables[j](r, c);
      CHECK(mean[j][c] == doctest::Approx(col / 8.0).epsilon(1e-12));
    }

  // Low-temperature softmax of peaked logits lands on the argmax row.
  Vector logits(8, 0.0);
  logits[6] = 4.0;
  std::array<Vector, 4> peaked;
  for (auto& p : peaked) p = softmax(logits, 1e-3);
  const auto soft = soft_argmax_embed(peaked, tables);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t c = 0; c < 5; ++c)
      CHECK(std::abs(soft[j][c] - tables[j](6, c)) < 1e-6);
}

TEST_CASE("init_uniform respects the fan-in bound and the seed") {
  Matrix a(16, 16);
  Rng r1(42);
  init_uniform(a, 16, r1);
  for (double v : a.data) CHECK(std::abs(v) <= 0.25);

  Matrix b(16, 16);
  Rng r2(42);
  init_uniform(b, 16, r2);
  CHECK(a.data == b.data);
}
