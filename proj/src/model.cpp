#include "deap/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "deap/errors.hpp"
#include "deap/kde.hpp"
#include "deap/rng.hpp"

namespace deap::model {

DeapModel make_model(const ModelDims& dims) {
  if (dims.byte_embedding_dim == 0 || dims.combiner_hidden == 0 ||
      dims.address_embedding_size == 0 || dims.lstm_hidden == 0 || dims.decoder_hidden == 0 ||
      dims.kde_probes == 0)
    throw ConfigError("model dimensions must all be positive");
  DeapModel m;
  m.dims = dims;
  m.tables = embed::ByteEmbeddingTables(dims.byte_embedding_dim);
  m.address_combiner =
      embed::CombinerMlp(dims.byte_embedding_dim, dims.combiner_hidden, dims.address_embedding_size);
  m.pc_combiner =
      embed::CombinerMlp(dims.byte_embedding_dim, dims.combiner_hidden, dims.address_embedding_size);
  m.lstm = nn::LstmCell(dims.lstm_hidden, dims.step_embedding_size());
  for (auto& h : m.byte_heads) h = nn::DenseLayer(256, dims.lstm_hidden, nn::Activation::identity);
  m.decoder_trunk =
      nn::DenseLayer(dims.decoder_hidden, dims.decoder_input_size(), nn::Activation::relu);
  m.frequency_head = nn::DenseLayer(1, dims.decoder_hidden, nn::Activation::identity);
  m.reuse_head = nn::DenseLayer(1, dims.decoder_hidden, nn::Activation::identity);
  return m;
}

DeapModel init_model(const ModelDims& dims, std::uint64_t seed) {
  DeapModel m = make_model(dims);
  Rng rng(seed);
  for (auto& t : m.tables.address) nn::init_uniform(t, dims.byte_embedding_dim, rng);
  for (auto& t : m.tables.pc) nn::init_uniform(t, dims.byte_embedding_dim, rng);
  nn::init_dense(m.address_combiner.hidden, rng);
  nn::init_dense(m.address_combiner.output, rng);
  nn::init_dense(m.pc_combiner.hidden, rng);
  nn::init_dense(m.pc_combiner.output, rng);
  nn::init_lstm(m.lstm, rng);
  for (auto& h : m.byte_heads) nn::init_dense(h, rng);
  nn::init_dense(m.decoder_trunk, rng);
  nn::init_dense(m.frequency_head, rng);
  nn::init_dense(m.reuse_head, rng);
  return m;
}

DeapGradients::DeapGradients(const DeapModel& m)
    : address_hidden(m.address_combiner.hidden),
      address_output(m.address_combiner.output),
      pc_hidden(m.pc_combiner.hidden),
      pc_output(m.pc_combiner.output),
      lstm(m.lstm),
      byte_heads{nn::DenseGrads(m.byte_heads[0]), nn::DenseGrads(m.byte_heads[1]),
                 nn::DenseGrads(m.byte_heads[2]), nn::DenseGrads(m.byte_heads[3])},
      decoder_trunk(m.decoder_trunk),
      frequency_head(m.frequency_head),
      reuse_head(m.reuse_head) {
  for (std::size_t j = 0; j < 4; ++j) {
    table_address[j] = nn::Matrix(256, m.dims.byte_embedding_dim);
    table_pc[j] = nn::Matrix(256, m.dims.byte_embedding_dim);
  }
}

void DeapGradients::zero() {
  for (auto& t : table_address) std::fill(t.data.begin(), t.data.end(), 0.0);
  for (auto& t : table_pc) std::fill(t.data.begin(), t.data.end(), 0.0);
  address_hidden.zero();
  address_output.zero();
  pc_hidden.zero();
  pc_output.zero();
  lstm.zero();
  for (auto& h : byte_heads) h.zero();
  decoder_trunk.zero();
  frequency_head.zero();
  reuse_head.zero();
}

std::vector<ParamEntry> parameter_table(DeapModel& m, DeapGradients* g) {
  std::vector<ParamEntry> out;
  auto mat = [&](const char* name, nn::Matrix& v, nn::Matrix* gm, bool table) {
    out.push_back({name, v.data.data(), gm != nullptr ? gm->data.data() : nullptr,
                   v.data.size(), table});
  };
  auto vec = [&](const char* name, nn::Vector& v, nn::Vector* gv) {
    out.push_back({name, v.data(), gv != nullptr ? gv->data() : nullptr, v.size(), false});
  };
  auto dense = [&](const char* wname, const char* bname, nn::DenseLayer& l, nn::DenseGrads* dg) {
    mat(wname, l.weight, dg != nullptr ? &dg->weight : nullptr, false);
    vec(bname, l.bias, dg != nullptr ? &dg->bias : nullptr);
  };

  static const char* addr_names[4] = {"table_address_0", "table_address_1", "table_address_2",
                                      "table_address_3"};
  static const char* pc_names[4] = {"table_pc_0", "table_pc_1", "table_pc_2", "table_pc_3"};
  for (std::size_t j = 0; j < 4; ++j)
    mat(addr_names[j], m.tables.address[j], g != nullptr ? &g->table_address[j] : nullptr, true);
  for (std::size_t j = 0; j < 4; ++j)
    mat(pc_names[j], m.tables.pc[j], g != nullptr ? &g->table_pc[j] : nullptr, true);

  dense("address_combiner_hidden_weight", "address_combiner_hidden_bias",
        m.address_combiner.hidden, g != nullptr ? &g->address_hidden : nullptr);
  dense("address_combiner_output_weight", "address_combiner_output_bias",
        m.address_combiner.output, g != nullptr ? &g->address_output : nullptr);
  dense("pc_combiner_hidden_weight", "pc_combiner_hidden_bias", m.pc_combiner.hidden,
        g != nullptr ? &g->pc_hidden : nullptr);
  dense("pc_combiner_output_weight", "pc_combiner_output_bias", m.pc_combiner.output,
        g != nullptr ? &g->pc_output : nullptr);

  mat("lstm_input_weight", m.lstm.w_input, g != nullptr ? &g->lstm.w_input : nullptr, false);
  vec("lstm_input_bias", m.lstm.b_input, g != nullptr ? &g->lstm.b_input : nullptr);
  mat("lstm_forget_weight", m.lstm.w_forget, g != nullptr ? &g->lstm.w_forget : nullptr, false);
  vec("lstm_forget_bias", m.lstm.b_forget, g != nullptr ? &g->lstm.b_forget : nullptr);
  mat("lstm_output_weight", m.lstm.w_output, g != nullptr ? &g->lstm.w_output : nullptr, false);
  vec("lstm_output_bias", m.lstm.b_output, g != nullptr ? &g->lstm.b_output : nullptr);
  mat("lstm_candidate_weight", m.lstm.w_candidate,
      g != nullptr ? &g->lstm.w_candidate : nullptr, false);
  vec("lstm_candidate_bias", m.lstm.b_candidate, g != nullptr ? &g->lstm.b_candidate : nullptr);

  static const char* head_w[4] = {"byte_head_0_weight", "byte_head_1_weight", "byte_head_2_weight",
                                  "byte_head_3_weight"};
  static const char* head_b[4] = {"byte_head_0_bias", "byte_head_1_bias", "byte_head_2_bias",
                                  "byte_head_3_bias"};
  for (std::size_t j = 0; j < 4; ++j)
    dense(head_w[j], head_b[j], m.byte_heads[j], g != nullptr ? &g->byte_heads[j] : nullptr);

  dense("decoder_trunk_weight", "decoder_trunk_bias", m.decoder_trunk,
        g != nullptr ? &g->decoder_trunk : nullptr);
  dense("frequency_head_weight", "frequency_head_bias", m.frequency_head,
        g != nullptr ? &g->frequency_head : nullptr);
  dense("reuse_head_weight", "reuse_head_bias", m.reuse_head,
        g != nullptr ? &g->reuse_head : nullptr);
  return out;
}

std::vector<nn::ParamRef> parameter_refs(DeapModel& m, DeapGradients& grads,
                                         bool include_tables) {
  std::vector<nn::ParamRef> refs;
  for (const auto& e : parameter_table(m, &grads)) {
    if (e.table && !include_tables) continue;
    refs.push_back({e.name, e.value, e.grad, e.size});
  }
  return refs;
}

nn::Vector address_embedding(const DeapModel& m, std::uint32_t address) {
  return embed::embed_address(address, m.tables, m.address_combiner);
}

nn::Vector step_embedding(const DeapModel& m, const trace::TraceRecord& record) {
  return embed::embed_step(record, m.tables, m.address_combiner, m.pc_combiner);
}

std::array<nn::Vector, 4> prefetch_forward(const DeapModel& m,
                                           std::span<const trace::TraceRecord> sequence) {
  if (sequence.empty()) throw ShapeError("prefetch_forward needs a non-empty sequence");
  nn::Vector h(m.dims.lstm_hidden, 0.0), c(m.dims.lstm_hidden, 0.0);
  for (const auto& r : sequence) {
    const auto state = nn::lstm_step(m.lstm, step_embedding(m, r), h, c);
    h = state.h;
    c = state.c;
  }
  std::array<nn::Vector, 4> out;
  for (std::size_t j = 0; j < 4; ++j)
    out[j] = nn::softmax(dense_forward(m.byte_heads[j], h), 1.0);
  return out;
}

std::pair<double, double> decode_future(const DeapModel& m, const nn::Vector& address_embed,
                                        const nn::Vector& distribution) {
  if (address_embed.size() != m.dims.address_embedding_size)
    throw ShapeError("decode_future: address embedding size mismatch");
  if (distribution.size() != m.dims.kde_probes)
    throw ShapeError("decode_future: distribution vector size mismatch");
  nn::Vector z;
  z.reserve(m.dims.decoder_input_size());
  z.insert(z.end(), address_embed.begin(), address_embed.end());
  z.insert(z.end(), distribution.begin(), distribution.end());
  const auto zh = nn::dense_forward(m.decoder_trunk, z);
  const double fn = nn::dense_forward(m.frequency_head, zh)[0];
  const double rn = nn::dense_forward(m.reuse_head, zh)[0];
  return {m.scaler.frequency_mean + m.scaler.frequency_std * fn,
          m.scaler.reuse_mean + m.scaler.reuse_std * rn};
}

double combine_losses(double prefetching, double frequency, double recency,
                      const LossWeights& w) {
  return w.w0 * prefetching + w.w1 * frequency + w.w2 * recency;
}

namespace {

// Per distinct trace position inside one batch: shared embedding forward
// caches plus the gradient accumulated over every occurrence.
struct Slot {
  embed::ByteTuple addr_bytes, pc_bytes;
  nn::Vector concat_a, concat_p;
  nn::DenseCache a_hidden, a_out, p_hidden, p_out;
  nn::Vector e;
  nn::Vector d_a, d_p;
};

void fill_concat(const std::array<nn::Matrix, 4>& tables, const embed::ByteTuple& bytes,
                 std::size_t d, nn::Vector& out) {
  out.resize(4 * d);
  for (std::size_t j = 0; j < 4; ++j) {
    const double* row = tables[j].data.data() + static_cast<std::size_t>(bytes.b[j]) * d;
    std::copy(row, row + d, out.begin() + j * d);
  }
}

Losses forward_core(const DeapModel& m, const std::vector<trace::TraceRecord>& records,
                    std::span<const TrainingSample> batch, const LossWeights& weights,
                    double temperature, DeapGradients* grads) {
  if (batch.empty()) throw ShapeError("training batch is empty");
  if (temperature <= 0.0) throw ConfigError("temperature must be positive");
  const std::size_t d_byte = m.dims.byte_embedding_dim;
  const std::size_t d_addr = m.dims.address_embedding_size;
  const std::size_t hidden = m.dims.lstm_hidden;
  const double batch_inv = 1.0 / static_cast<double>(batch.size());

  std::unordered_map<std::size_t, std::size_t> slot_of;
  std::vector<Slot> slots;
  auto slot_for = [&](std::size_t pos) -> std::size_t {
    const auto it = slot_of.find(pos);
    if (it != slot_of.end()) return it->second;
    Slot s;
    s.addr_bytes = embed::tokenize(records[pos].address);
    s.pc_bytes = embed::tokenize(records[pos].pc);
    fill_concat(m.tables.address, s.addr_bytes, d_byte, s.concat_a);
    fill_concat(m.tables.pc, s.pc_bytes, d_byte, s.concat_p);
    const auto ah = nn::dense_forward_cached(m.address_combiner.hidden, s.concat_a, s.a_hidden);
    nn::Vector a = nn::dense_forward_cached(m.address_combiner.output, ah, s.a_out);
    const auto ph = nn::dense_forward_cached(m.pc_combiner.hidden, s.concat_p, s.p_hidden);
    const nn::Vector p = nn::dense_forward_cached(m.pc_combiner.output, ph, s.p_out);
    s.e = std::move(a);
    s.e.insert(s.e.end(), p.begin(), p.end());
    if (grads != nullptr) {
      s.d_a.assign(d_addr, 0.0);
      s.d_p.assign(d_addr, 0.0);
    }
    const std::size_t idx = slots.size();
    slots.push_back(std::move(s));
    slot_of.emplace(pos, idx);
    return idx;
  };

  double lp_sum = 0.0, lf_sum = 0.0, lr_sum = 0.0;
  std::vector<nn::LstmStepCache> lstm_caches;
  std::vector<std::size_t> step_slots;
  nn::Vector h, c, dh, dc;
  std::array<nn::DenseCache, 4> head_caches;
  nn::DenseCache soft_hidden_cache, soft_out_cache, trunk_cache, freq_cache, reuse_cache;

  for (const auto& sample : batch) {
    if (sample.length == 0) throw ShapeError("training sample has an empty sequence");
    if (sample.begin + sample.length > records.size())
      throw ShapeError("training sample window exceeds the record vector");
    if (sample.distribution.size() != m.dims.kde_probes)
      throw ShapeError("training sample distribution size mismatch");

    step_slots.clear();
    if (lstm_caches.size() < sample.length) lstm_caches.resize(sample.length);
    h.assign(hidden, 0.0);
    c.assign(hidden, 0.0);
    for (std::size_t t = 0; t < sample.length; ++t) {
      const std::size_t si = slot_for(sample.begin + t);
      step_slots.push_back(si);
      const auto state = nn::lstm_step_cached(m.lstm, slots[si].e, h, c, lstm_caches[t]);
      h = state.h;
      c = state.c;
    }

    const auto target_bytes = embed::tokenize(sample.target_address);
    std::array<nn::Vector, 4> probs, soft;
    for (std::size_t j = 0; j < 4; ++j) {
      const auto logits = nn::dense_forward_cached(m.byte_heads[j], h, head_caches[j]);
      probs[j] = nn::softmax(logits, 1.0);
      soft[j] = nn::softmax(logits, temperature);
      lp_sum += nn::cross_entropy(probs[j], target_bytes.b[j]);
    }

    const auto soft_rows = nn::soft_argmax_embed(soft, m.tables.address);
    nn::Vector concat_soft(4 * d_byte);
    for (std::size_t j = 0; j < 4; ++j)
      std::copy(soft_rows[j].begin(), soft_rows[j].end(), concat_soft.begin() + j * d_byte);
    const auto soft_h =
        nn::dense_forward_cached(m.address_combiner.hidden, concat_soft, soft_hidden_cache);
    const auto a_soft =
        nn::dense_forward_cached(m.address_combiner.output, soft_h, soft_out_cache);

    nn::Vector z;
    z.reserve(m.dims.decoder_input_size());
    z.insert(z.end(), a_soft.begin(), a_soft.end());
    z.insert(z.end(), sample.distribution.begin(), sample.distribution.end());
    const auto zh = nn::dense_forward_cached(m.decoder_trunk, z, trunk_cache);
    const double fn = nn::dense_forward_cached(m.frequency_head, zh, freq_cache)[0];
    const double rn = nn::dense_forward_cached(m.reuse_head, zh, reuse_cache)[0];
    const double tf =
        (sample.target_frequency - m.scaler.frequency_mean) / m.scaler.frequency_std;
    const double tr = (sample.target_reuse - m.scaler.reuse_mean) / m.scaler.reuse_std;
    lf_sum += nn::mse(fn, tf);
    lr_sum += nn::mse(rn, tr);

    if (grads == nullptr) continue;

    // Decoder and soft-argmax branch.
    const nn::Vector dfreq{2.0 * (fn - tf) * weights.w1 * batch_inv};
    const nn::Vector drec{2.0 * (rn - tr) * weights.w2 * batch_inv};
    auto dzh = nn::dense_backward(m.frequency_head, freq_cache, dfreq, grads->frequency_head);
    const auto dzh_r = nn::dense_backward(m.reuse_head, reuse_cache, drec, grads->reuse_head);
    for (std::size_t i = 0; i < dzh.size(); ++i) dzh[i] += dzh_r[i];
    const auto dz = nn::dense_backward(m.decoder_trunk, trunk_cache, dzh, grads->decoder_trunk);
    const nn::Vector da_soft(dz.begin(), dz.begin() + d_addr);
    const auto dsoft_h =
        nn::dense_backward(m.address_combiner.output, soft_out_cache, da_soft,
                           grads->address_output);
    const auto dconcat_soft = nn::dense_backward(m.address_combiner.hidden, soft_hidden_cache,
                                                 dsoft_h, grads->address_hidden);

    dh.assign(hidden, 0.0);
    nn::Vector ds(256), dlogits(256);
    for (std::size_t j = 0; j < 4; ++j) {
      const double* drow = dconcat_soft.data() + j * d_byte;
      const auto& s = soft[j];
      const auto& table = m.tables.address[j];
      double dot = 0.0;
      for (std::size_t b = 0; b < 256; ++b) {
        if (s[b] == 0.0) {
          ds[b] = 0.0;
          continue;
        }
        const double* trow = table.data.data() + b * d_byte;
        double acc = 0.0;
        for (std::size_t k = 0; k < d_byte; ++k) acc += trow[k] * drow[k];
        ds[b] = acc;
        dot += s[b] * acc;
        if (!m.freeze_byte_tables) {
          double* grow = grads->table_address[j].data.data() + b * d_byte;
          for (std::size_t k = 0; k < d_byte; ++k) grow[k] += s[b] * drow[k];
        }
      }
      const double ce_scale = weights.w0 * batch_inv;
      for (std::size_t b = 0; b < 256; ++b) {
        double v = s[b] == 0.0 ? 0.0 : s[b] * (ds[b] - dot) / temperature;
        v += ce_scale * (probs[j][b] - (b == target_bytes.b[j] ? 1.0 : 0.0));
        dlogits[b] = v;
      }
      const auto dh_j =
          nn::dense_backward(m.byte_heads[j], head_caches[j], dlogits, grads->byte_heads[j]);
      for (std::size_t i = 0; i < hidden; ++i) dh[i] += dh_j[i];
    }

    dc.assign(hidden, 0.0);
    for (std::size_t t = sample.length; t-- > 0;) {
      auto back = nn::lstm_backward(m.lstm, lstm_caches[t], dh, dc, grads->lstm);
      auto& slot = slots[step_slots[t]];
      for (std::size_t k = 0; k < d_addr; ++k) {
        slot.d_a[k] += back.dx[k];
        slot.d_p[k] += back.dx[d_addr + k];
      }
      dh = std::move(back.dh_prev);
      dc = std::move(back.dc_prev);
    }
  }

  if (grads != nullptr) {
    for (auto& slot : slots) {
      const auto da_h = nn::dense_backward(m.address_combiner.output, slot.a_out, slot.d_a,
                                           grads->address_output);
      const auto dconcat_a =
          nn::dense_backward(m.address_combiner.hidden, slot.a_hidden, da_h,
                             grads->address_hidden);
      const auto dp_h =
          nn::dense_backward(m.pc_combiner.output, slot.p_out, slot.d_p, grads->pc_output);
      const auto dconcat_p =
          nn::dense_backward(m.pc_combiner.hidden, slot.p_hidden, dp_h, grads->pc_hidden);
      if (!m.freeze_byte_tables) {
        for (std::size_t j = 0; j < 4; ++j) {
          double* arow = grads->table_address[j].data.data() +
                         static_cast<std::size_t>(slot.addr_bytes.b[j]) * d_byte;
          double* prow = grads->table_pc[j].data.data() +
                         static_cast<std::size_t>(slot.pc_bytes.b[j]) * d_byte;
          for (std::size_t k = 0; k < d_byte; ++k) {
            arow[k] += dconcat_a[j * d_byte + k];
            prow[k] += dconcat_p[j * d_byte + k];
          }
        }
      }
    }
  }

  Losses losses;
  losses.prefetching = lp_sum * batch_inv;
  losses.frequency = lf_sum * batch_inv;
  losses.recency = lr_sum * batch_inv;
  losses.total = combine_losses(losses.prefetching, losses.frequency, losses.recency, weights);
  return losses;
}

}  // namespace

Losses evaluate_batch(const DeapModel& m, const std::vector<trace::TraceRecord>& records,
                      std::span<const TrainingSample> batch, const LossWeights& weights,
                      double temperature) {
  return forward_core(m, records, batch, weights, temperature, nullptr);
}

Losses accumulate_gradients(const DeapModel& m, const std::vector<trace::TraceRecord>& records,
                            std::span<const TrainingSample> batch, const LossWeights& weights,
                            double temperature, DeapGradients& grads) {
  return forward_core(m, records, batch, weights, temperature, &grads);
}

Losses training_step(DeapModel& m, const std::vector<trace::TraceRecord>& records,
                     std::span<const TrainingSample> batch, const LossWeights& weights,
                     double temperature, nn::OptimizerState& opt, DeapGradients& grads) {
  grads.zero();
  const Losses losses = accumulate_gradients(m, records, batch, weights, temperature, grads);
  const auto refs = parameter_refs(m, grads, !m.freeze_byte_tables);
  nn::optimizer_step(opt, refs);
  ++m.trained_steps;
  return losses;
}

namespace {

struct MeanStd {
  double mean = 0.0;
  double std = 1.0;
};

MeanStd fit_stats(const std::vector<std::uint64_t>& values, std::size_t from) {
  MeanStd s;
  const std::size_t n = values.size() - from;
  if (n == 0) return s;
  double sum = 0.0;
  for (std::size_t i = from; i < values.size(); ++i) sum += static_cast<double>(values[i]);
  s.mean = sum / static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = from; i < values.size(); ++i) {
    const double d = static_cast<double>(values[i]) - s.mean;
    var += d * d;
  }
  // Floor keeps integer-valued targets from exploding under normalization.
  s.std = std::max(std::sqrt(var / static_cast<double>(n)), 1.0);
  return s;
}

}  // namespace

std::vector<Losses> train_model(DeapModel& m, const trace::LabeledTrace& misses,
                                const TrainConfig& config) {
  if (!misses.labeled()) throw ConfigError("train_model needs a labeled trace");
  const std::size_t n = misses.size();
  const std::size_t seq = config.sequence_length;
  if (seq == 0) throw ConfigError("sequence_length must be positive");
  if (n < seq + 1) throw ConfigError("trace shorter than sequence_length + 1");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");

  const auto f_stats = fit_stats(misses.future_frequency, seq);
  const auto r_stats = fit_stats(misses.reuse_distance, seq);
  m.scaler = {f_stats.mean, f_stats.std, r_stats.mean, r_stats.std};

  if (config.epochs == 0) return {};

  // Distribution vectors are inputs, built once from the embeddings at entry.
  std::vector<nn::Vector> dist(n);
  {
    kde::KdeWindow window(config.kde_window, config.kde_bandwidth_floor);
    for (std::size_t t = 1; t < n; ++t) {
      window.push(step_embedding(m, misses.records[t - 1]));
      if (t >= seq) dist[t] = kde::distribution_vector(window, m.dims.kde_probes).values;
    }
  }

  std::vector<std::size_t> targets;
  targets.reserve(n - seq);
  for (std::size_t t = seq; t < n; ++t) targets.push_back(t);
  const std::size_t chunk_count = (targets.size() + config.batch_size - 1) / config.batch_size;
  std::vector<std::size_t> chunk_order(chunk_count);
  for (std::size_t i = 0; i < chunk_count; ++i) chunk_order[i] = i;

  Rng rng(config.seed);
  nn::OptimizerState opt;
  opt.algorithm = config.optimizer;
  opt.learning_rate = config.learning_rate;
  opt.weight_decay = config.weight_decay;
  opt.step = m.trained_steps;
  DeapGradients grads(m);

  std::vector<Losses> epoch_losses;
  std::vector<TrainingSample> batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = chunk_order.size(); i > 1; --i) {
      const std::size_t j = rng.next_below(i);
      std::swap(chunk_order[i - 1], chunk_order[j]);
    }
    Losses sums;
    std::size_t seen = 0;
    for (const std::size_t ci : chunk_order) {
      if (config.windows_per_epoch != 0 && seen >= config.windows_per_epoch) break;
      const std::size_t lo = ci * config.batch_size;
      const std::size_t hi = std::min(targets.size(), lo + config.batch_size);
      batch.clear();
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t t = targets[k];
        TrainingSample sample;
        sample.begin = t - seq;
        sample.length = seq;
        sample.target_address = misses.records[t].address;
        sample.target_frequency = static_cast<double>(misses.future_frequency[t]);
        sample.target_reuse = static_cast<double>(misses.reuse_distance[t]);
        sample.distribution = dist[t];
        batch.push_back(std::move(sample));
      }
      const Losses step = training_step(m, misses.records, batch, config.weights,
                                        config.temperature, opt, grads);
      const auto count = static_cast<double>(batch.size());
      sums.prefetching += step.prefetching * count;
      sums.frequency += step.frequency * count;
      sums.recency += step.recency * count;
      sums.total += step.total * count;
      seen += batch.size();
    }
    const auto denom = static_cast<double>(seen);
    epoch_losses.push_back({sums.prefetching / denom, sums.frequency / denom,
                            sums.recency / denom, sums.total / denom});
  }
  return epoch_losses;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

struct Reader {
  const unsigned char* p;
  std::size_t size;
  std::size_t off = 0;

  void need(std::size_t bytes) {
    if (off + bytes > size) throw FormatError("truncated checkpoint");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[off + i]) << (8 * i);
    off += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[off + i]) << (8 * i);
    off += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
};

constexpr char kMagic[5] = {'D', 'E', 'A', 'P', '1'};

void check_dim_field(const char* name, std::size_t have, std::size_t want) {
  if (have != want)
    throw ShapeError(std::string("checkpoint ") + name + " is " + std::to_string(have) +
                     " but the configuration expects " + std::to_string(want));
}

}  // namespace

void save_checkpoint(const DeapModel& m, const std::string& path) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put_u32(buf, static_cast<std::uint32_t>(m.dims.byte_embedding_dim));
  put_u32(buf, static_cast<std::uint32_t>(m.dims.combiner_hidden));
  put_u32(buf, static_cast<std::uint32_t>(m.dims.address_embedding_size));
  put_u32(buf, static_cast<std::uint32_t>(m.dims.lstm_hidden));
  put_u32(buf, static_cast<std::uint32_t>(m.dims.decoder_hidden));
  put_u32(buf, static_cast<std::uint32_t>(m.dims.kde_probes));
  put_u32(buf, m.freeze_byte_tables ? 1u : 0u);
  put_u64(buf, m.trained_steps);
  put_f64(buf, m.scaler.frequency_mean);
  put_f64(buf, m.scaler.frequency_std);
  put_f64(buf, m.scaler.reuse_mean);
  put_f64(buf, m.scaler.reuse_std);
  // Read-only traversal; parameter_table wants a mutable reference.
  auto& mut = const_cast<DeapModel&>(m);
  for (const auto& entry : parameter_table(mut, nullptr))
    for (std::size_t i = 0; i < entry.size; ++i) put_f64(buf, entry.value[i]);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing checkpoint: " + path);
}

DeapModel load_checkpoint(const std::string& path, const ModelDims* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading checkpoint: " + path);

  Reader r{reinterpret_cast<const unsigned char*>(data.data()), data.size()};
  r.need(sizeof(kMagic));
  if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a model checkpoint (bad magic)");
  r.off = sizeof(kMagic);

  ModelDims dims;
  dims.byte_embedding_dim = r.u32();
  dims.combiner_hidden = r.u32();
  dims.address_embedding_size = r.u32();
  dims.lstm_hidden = r.u32();
  dims.decoder_hidden = r.u32();
  dims.kde_probes = r.u32();
  const auto check_bound = [](const char* name, std::size_t v) {
    if (v == 0 || v > 65536)
      throw FormatError(std::string("implausible checkpoint dimension ") + name + ": " +
                        std::to_string(v));
  };
  check_bound("byte_embedding_dim", dims.byte_embedding_dim);
  check_bound("combiner_hidden", dims.combiner_hidden);
  check_bound("address_embedding_size", dims.address_embedding_size);
  check_bound("lstm_hidden", dims.lstm_hidden);
  check_bound("decoder_hidden", dims.decoder_hidden);
  check_bound("kde_probes", dims.kde_probes);
  if (expected != nullptr) {
    check_dim_field("byte_embedding_dim", dims.byte_embedding_dim, expected->byte_embedding_dim);
    check_dim_field("combiner_hidden", dims.combiner_hidden, expected->combiner_hidden);
    check_dim_field("address_embedding_size", dims.address_embedding_size,
                    expected->address_embedding_size);
    check_dim_field("lstm_hidden", dims.lstm_hidden, expected->lstm_hidden);
    check_dim_field("decoder_hidden", dims.decoder_hidden, expected->decoder_hidden);
    check_dim_field("kde_probes", dims.kde_probes, expected->kde_probes);
  }

  const std::uint32_t flags = r.u32();
  if ((flags & ~1u) != 0) throw FormatError("unknown checkpoint flags");
  DeapModel m = make_model(dims);
  m.freeze_byte_tables = (flags & 1u) != 0;
  m.trained_steps = r.u64();
  m.scaler.frequency_mean = r.f64();
  m.scaler.frequency_std = r.f64();
  m.scaler.reuse_mean = r.f64();
  m.scaler.reuse_std = r.f64();
  if (!(m.scaler.frequency_std > 0.0) || !(m.scaler.reuse_std > 0.0) ||
      !std::isfinite(m.scaler.frequency_mean) || !std::isfinite(m.scaler.reuse_mean))
    throw FormatError("invalid target scaler in checkpoint");

  for (const auto& entry : parameter_table(m, nullptr))
    for (std::size_t i = 0; i < entry.size; ++i) entry.value[i] = r.f64();
  if (r.off != r.size) throw FormatError("trailing bytes in checkpoint");
  return m;
}

}  // namespace deap::model
