#include "deap/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "deap/errors.hpp"

namespace deap::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double apply_activation(Activation act, double pre) {
  switch (act) {
    case Activation::identity: return pre;
    case Activation::relu: return pre > 0.0 ? pre : 0.0;
    case Activation::tanh: return std::tanh(pre);
  }
  return pre;
}

double activation_derivative(Activation act, double pre) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

// y = W x + b
Vector affine(const Matrix& w, const Vector& b, const Vector& x) {
  Vector y(w.rows);
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* row = w.data.data() + i * w.cols;
    double acc = b[i];
    for (std::size_t j = 0; j < w.cols; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

}  // namespace

Vector dense_forward(const DenseLayer& layer, const Vector& x) {
  if (x.size() != layer.in_dim())
    throw ShapeError("dense_forward: input size " + std::to_string(x.size()) +
                     " != layer input dim " + std::to_string(layer.in_dim()));
  Vector y = affine(layer.weight, layer.bias, x);
  for (auto& v : y) v = apply_activation(layer.activation, v);
  return y;
}

Vector dense_forward_cached(const DenseLayer& layer, const Vector& x, DenseCache& cache) {
  if (x.size() != layer.in_dim())
    throw ShapeError("dense_forward: input size " + std::to_string(x.size()) +
                     " != layer input dim " + std::to_string(layer.in_dim()));
  cache.input = x;
  cache.pre = affine(layer.weight, layer.bias, x);
  Vector y = cache.pre;
  for (auto& v : y) v = apply_activation(layer.activation, v);
  return y;
}

Vector dense_backward(const DenseLayer& layer, const DenseCache& cache,
                      const Vector& grad_out, DenseGrads& grads) {
  const std::size_t out = layer.out_dim();
  const std::size_t in = layer.in_dim();
  Vector dx(in, 0.0);
  for (std::size_t i = 0; i < out; ++i) {
    const double dpre = grad_out[i] * activation_derivative(layer.activation, cache.pre[i]);
    if (dpre == 0.0) continue;
    grads.bias[i] += dpre;
    double* wg = grads.weight.data.data() + i * in;
    const double* w = layer.weight.data.data() + i * in;
    const double* xin = cache.input.data();
    for (std::size_t j = 0; j < in; ++j) {
      wg[j] += dpre * xin[j];
      dx[j] += dpre * w[j];
    }
  }
  return dx;
}

LstmCell::LstmCell(std::size_t hidden, std::size_t input)
    : w_input(hidden, input + hidden),
      w_forget(hidden, input + hidden),
      w_output(hidden, input + hidden),
      w_candidate(hidden, input + hidden),
      b_input(hidden, 0.0),
      b_forget(hidden, 0.0),
      b_output(hidden, 0.0),
      b_candidate(hidden, 0.0),
      hidden_size(hidden),
      input_size(input) {}

void LstmGrads::zero() {
  std::fill(w_input.data.begin(), w_input.data.end(), 0.0);
  std::fill(w_forget.data.begin(), w_forget.data.end(), 0.0);
  std::fill(w_output.data.begin(), w_output.data.end(), 0.0);
  std::fill(w_candidate.data.begin(), w_candidate.data.end(), 0.0);
  std::fill(b_input.begin(), b_input.end(), 0.0);
  std::fill(b_forget.begin(), b_forget.end(), 0.0);
  std::fill(b_output.begin(), b_output.end(), 0.0);
  std::fill(b_candidate.begin(), b_candidate.end(), 0.0);
}

LstmGrads::LstmGrads(const LstmCell& c)
    : w_input(c.hidden_size, c.input_size + c.hidden_size),
      w_forget(c.hidden_size, c.input_size + c.hidden_size),
      w_output(c.hidden_size, c.input_size + c.hidden_size),
      w_candidate(c.hidden_size, c.input_size + c.hidden_size),
      b_input(c.hidden_size, 0.0),
      b_forget(c.hidden_size, 0.0),
      b_output(c.hidden_size, 0.0),
      b_candidate(c.hidden_size, 0.0) {}

LstmState lstm_step_cached(const LstmCell& cell, const Vector& x, const Vector& h_prev,
                           const Vector& c_prev, LstmStepCache& cache) {
  const std::size_t H = cell.hidden_size;
  if (x.size() != cell.input_size || h_prev.size() != H || c_prev.size() != H)
    throw ShapeError("lstm_step: input/state sizes inconsistent with cell dims");

  cache.xh.resize(cell.input_size + H);
  std::copy(x.begin(), x.end(), cache.xh.begin());
  std::copy(h_prev.begin(), h_prev.end(), cache.xh.begin() + x.size());

  cache.gate_i = affine(cell.w_input, cell.b_input, cache.xh);
  cache.gate_f = affine(cell.w_forget, cell.b_forget, cache.xh);
  cache.gate_o = affine(cell.w_output, cell.b_output, cache.xh);
  cache.gate_g = affine(cell.w_candidate, cell.b_candidate, cache.xh);
  for (std::size_t k = 0; k < H; ++k) {
    cache.gate_i[k] = sigmoid(cache.gate_i[k]);
    cache.gate_f[k] = sigmoid(cache.gate_f[k]);
    cache.gate_o[k] = sigmoid(cache.gate_o[k]);
    cache.gate_g[k] = std::tanh(cache.gate_g[k]);
  }

  cache.c_prev = c_prev;
  cache.c.resize(H);
  cache.tanh_c.resize(H);
  LstmState out;
  out.h.resize(H);
  out.c.resize(H);
  for (std::size_t k = 0; k < H; ++k) {
    cache.c[k] = cache.gate_f[k] * c_prev[k] + cache.gate_i[k] * cache.gate_g[k];
    cache.tanh_c[k] = std::tanh(cache.c[k]);
    out.c[k] = cache.c[k];
    out.h[k] = cache.gate_o[k] * cache.tanh_c[k];
  }
  return out;
}

LstmState lstm_step(const LstmCell& cell, const Vector& x, const Vector& h_prev,
                    const Vector& c_prev) {
  LstmStepCache cache;
  return lstm_step_cached(cell, x, h_prev, c_prev, cache);
}

LstmBackResult lstm_backward(const LstmCell& cell, const LstmStepCache& cache,
                             const Vector& dh, const Vector& dc, LstmGrads& grads) {
  const std::size_t H = cell.hidden_size;
  const std::size_t D = cell.input_size;
  Vector d_pre_i(H), d_pre_f(H), d_pre_o(H), d_pre_g(H);
  LstmBackResult out;
  out.dc_prev.assign(H, 0.0);

  for (std::size_t k = 0; k < H; ++k) {
    const double i = cache.gate_i[k];
    const double f = cache.gate_f[k];
    const double o = cache.gate_o[k];
    const double g = cache.gate_g[k];
    const double tc = cache.tanh_c[k];
    const double dck = dc[k] + dh[k] * o * (1.0 - tc * tc);
    d_pre_o[k] = dh[k] * tc * o * (1.0 - o);
    d_pre_i[k] = dck * g * i * (1.0 - i);
    d_pre_f[k] = dck * cache.c_prev[k] * f * (1.0 - f);
    d_pre_g[k] = dck * i * (1.0 - g * g);
    out.dc_prev[k] = dck * f;
  }

  Vector dxh(D + H, 0.0);
  auto accumulate = [&](const Matrix& w, Matrix& wg, Vector& bg, const Vector& dpre) {
    for (std::size_t k = 0; k < H; ++k) {
      const double d = dpre[k];
      if (d == 0.0) continue;
      bg[k] += d;
      double* wrow = wg.data.data() + k * (D + H);
      const double* row = w.data.data() + k * (D + H);
      const double* xh = cache.xh.data();
      for (std::size_t j = 0; j < D + H; ++j) {
        wrow[j] += d * xh[j];
        dxh[j] += d * row[j];
      }
    }
  };
  accumulate(cell.w_input, grads.w_input, grads.b_input, d_pre_i);
  accumulate(cell.w_forget, grads.w_forget, grads.b_forget, d_pre_f);
  accumulate(cell.w_output, grads.w_output, grads.b_output, d_pre_o);
  accumulate(cell.w_candidate, grads.w_candidate, grads.b_candidate, d_pre_g);

  out.dx.assign(dxh.begin(), dxh.begin() + D);
  out.dh_prev.assign(dxh.begin() + D, dxh.end());
  return out;
}

Vector softmax(const Vector& logits, double temperature) {
  if (temperature <= 0.0) throw NumericError("softmax temperature must be positive");
  double max_logit = -std::numeric_limits<double>::infinity();
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite logit");
    max_logit = std::max(max_logit, v);
  }
  Vector out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - max_logit) / temperature);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

double cross_entropy(const Vector& pred, std::size_t target_class) {
  if (target_class >= pred.size())
    throw ShapeError("cross_entropy: target class out of range");
  return -std::log(std::max(pred[target_class], 1e-12));
}

double mse(double pred, double target) {
  const double d = pred - target;
  return d * d;
}

OptAlgo opt_algo_from_string(const std::string& name) {
  if (name == "adam") return OptAlgo::adam;
  if (name == "sgd") return OptAlgo::sgd;
  throw ConfigError("unknown optimizer '" + name + "'");
}

void optimizer_step(OptimizerState& state, std::span<const ParamRef> params) {
  if (state.algorithm == OptAlgo::adam) {
    if (state.m.size() < params.size()) state.m.resize(params.size());
    if (state.v.size() < params.size()) state.v.resize(params.size());
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (std::size_t g = 0; g < params.size(); ++g) {
    const ParamRef& p = params[g];
    for (std::size_t i = 0; i < p.size; ++i)
      if (!std::isfinite(p.grad[i]))
        throw NumericError("non-finite gradient in parameter group '" + p.name + "'");

    if (state.algorithm == OptAlgo::sgd) {
      for (std::size_t i = 0; i < p.size; ++i)
        p.value[i] -= state.learning_rate * (p.grad[i] + state.weight_decay * p.value[i]);
      continue;
    }

    Vector& m = state.m[g];
    Vector& v = state.v[g];
    if (m.size() != p.size) m.assign(p.size, 0.0);
    if (v.size() != p.size) v.assign(p.size, 0.0);
    for (std::size_t i = 0; i < p.size; ++i) {
      const double grad = p.grad[i] + state.weight_decay * p.value[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * grad;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * grad * grad;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p.value[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

GradCheckReport grad_check(std::span<const ParamRef> params,
                           const std::function<double()>& loss_fn,
                           const std::function<void()>& grad_fn,
                           double fd_step) {
  grad_fn();
  std::vector<Vector> analytic(params.size());
  for (std::size_t g = 0; g < params.size(); ++g)
    analytic[g].assign(params[g].grad, params[g].grad + params[g].size);

  GradCheckReport report;
  for (std::size_t g = 0; g < params.size(); ++g) {
    const ParamRef& p = params[g];
    for (std::size_t i = 0; i < p.size; ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + fd_step;
      const double plus = loss_fn();
      p.value[i] = saved - fd_step;
      const double minus = loss_fn();
      p.value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * fd_step);
      const double a = analytic[g][i];
      const double rel = std::abs(a - numeric) /
                         std::max({1.0, std::abs(a), std::abs(numeric)});
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_group = p.name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

std::array<Vector, 4> soft_argmax_embed(const std::array<Vector, 4>& byte_probs,
                                        const std::array<Matrix, 4>& tables) {
  std::array<Vector, 4> out;
  for (std::size_t j = 0; j < 4; ++j) {
    const Matrix& table = tables[j];
    if (byte_probs[j].size() != table.rows)
      throw ShapeError("soft_argmax_embed: probability vector size != table rows");
    Vector acc(table.cols, 0.0);
    for (std::size_t r = 0; r < table.rows; ++r) {
      const double p = byte_probs[j][r];
      if (p == 0.0) continue;
      const double* row = table.data.data() + r * table.cols;
      for (std::size_t c = 0; c < table.cols; ++c) acc[c] += p * row[c];
    }
    out[j] = std::move(acc);
  }
  return out;
}

void init_uniform(Matrix& m, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  for (auto& v : m.data) v = rng.next_uniform(-bound, bound);
}

void init_uniform(Vector& vec, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  for (auto& v : vec) v = rng.next_uniform(-bound, bound);
}

void init_dense(DenseLayer& layer, Rng& rng) {
  init_uniform(layer.weight, layer.in_dim(), rng);
  init_uniform(layer.bias, layer.in_dim(), rng);
}

void init_lstm(LstmCell& cell, Rng& rng) {
  const std::size_t fan_in = cell.input_size + cell.hidden_size;
  init_uniform(cell.w_input, fan_in, rng);
  init_uniform(cell.b_input, fan_in, rng);
  init_uniform(cell.w_forget, fan_in, rng);
  init_uniform(cell.b_forget, fan_in, rng);
  init_uniform(cell.w_output, fan_in, rng);
  init_uniform(cell.b_output, fan_in, rng);
  init_uniform(cell.w_candidate, fan_in, rng);
  init_uniform(cell.b_candidate, fan_in, rng);
}

}  // namespace deap::nn
