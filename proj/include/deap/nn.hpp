#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deap/rng.hpp"

namespace deap::nn {

using Vector = std::vector<double>;

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

enum class Activation { identity, relu, tanh };

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::identity;

  DenseLayer() = default;
  DenseLayer(std::size_t out, std::size_t in, Activation act)
      : weight(out, in), bias(out, 0.0), activation(act) {}
  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }
};

Vector dense_forward(const DenseLayer& layer, const Vector& x);

struct DenseCache {
  Vector input;
  Vector pre;  // pre-activation, needed for the activation derivative
};
Vector dense_forward_cached(const DenseLayer& layer, const Vector& x, DenseCache& cache);

struct DenseGrads {
  Matrix weight;
  Vector bias;
  DenseGrads() = default;
  explicit DenseGrads(const DenseLayer& l) : weight(l.out_dim(), l.in_dim()), bias(l.out_dim(), 0.0) {}
  // Clears in place; never reallocates, so ParamRef pointers stay valid.
  void zero() {
    std::fill(weight.data.begin(), weight.data.end(), 0.0);
    std::fill(bias.begin(), bias.end(), 0.0);
  }
};
// Accumulates parameter gradients; returns gradient w.r.t. the input.
Vector dense_backward(const DenseLayer& layer, const DenseCache& cache,
                      const Vector& grad_out, DenseGrads& grads);

// Standard 4-gate LSTM; every gate matrix is H x (input_dim + H) applied to
// concat(x, h_prev).
struct LstmCell {
  Matrix w_input, w_forget, w_output, w_candidate;
  Vector b_input, b_forget, b_output, b_candidate;
  std::size_t hidden_size = 0;
  std::size_t input_size = 0;

  LstmCell() = default;
  LstmCell(std::size_t hidden, std::size_t input);
};

struct LstmState {
  Vector h, c;
};

LstmState lstm_step(const LstmCell& cell, const Vector& x, const Vector& h_prev,
                    const Vector& c_prev);

struct LstmStepCache {
  Vector xh;                            // concat(x, h_prev)
  Vector gate_i, gate_f, gate_o, gate_g;  // post-nonlinearity gate values
  Vector c_prev, c, tanh_c;
};
LstmState lstm_step_cached(const LstmCell& cell, const Vector& x, const Vector& h_prev,
                           const Vector& c_prev, LstmStepCache& cache);

struct LstmGrads {
  Matrix w_input, w_forget, w_output, w_candidate;
  Vector b_input, b_forget, b_output, b_candidate;
  LstmGrads() = default;
  explicit LstmGrads(const LstmCell& c);
  void zero();
};
struct LstmBackResult {
  Vector dx, dh_prev, dc_prev;
};
// Consumes gradients w.r.t. this step's h and c; accumulates parameter grads.
LstmBackResult lstm_backward(const LstmCell& cell, const LstmStepCache& cache,
                             const Vector& dh, const Vector& dc, LstmGrads& grads);

// Max-subtracted, temperature-scaled softmax.
Vector softmax(const Vector& logits, double temperature = 1.0);

// -log(pred[target]) with floor 1e-12 inside the log.
double cross_entropy(const Vector& pred, std::size_t target_class);

double mse(double pred, double target);

enum class OptAlgo { adam, sgd };
OptAlgo opt_algo_from_string(const std::string& name);

// View over one named parameter group and its gradient buffer.
struct ParamRef {
  std::string name;
  double* value = nullptr;
  double* grad = nullptr;
  std::size_t size = 0;
};

struct OptimizerState {
  OptAlgo algorithm = OptAlgo::adam;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::vector<Vector> m, v;  // sized lazily to the parameter groups
};

void optimizer_step(OptimizerState& state, std::span<const ParamRef> params);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_group;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central finite differences against analytic gradients. grad_fn must fill the
// grad buffers for the current parameter values; loss_fn must be a pure
// function of the values.
GradCheckReport grad_check(std::span<const ParamRef> params,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn,
                           double fd_step = 1e-5);

// Per byte position: probability-weighted sum of the table rows.
std::array<Vector, 4> soft_argmax_embed(const std::array<Vector, 4>& byte_probs,
                                        const std::array<Matrix, 4>& tables);

// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
void init_uniform(Matrix& m, std::size_t fan_in, Rng& rng);
void init_uniform(Vector& v, std::size_t fan_in, Rng& rng);
void init_dense(DenseLayer& layer, Rng& rng);
void init_lstm(LstmCell& cell, Rng& rng);

}  // namespace deap::nn
