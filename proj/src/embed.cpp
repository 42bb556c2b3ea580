#include "deap/embed.hpp"

#include <algorithm>
#include <cmath>

#include "deap/errors.hpp"

namespace deap::embed {

ByteTuple tokenize(std::uint32_t value) {
  ByteTuple t;
  t.b[0] = static_cast<std::uint8_t>(value >> 24);
  t.b[1] = static_cast<std::uint8_t>(value >> 16);
  t.b[2] = static_cast<std::uint8_t>(value >> 8);
  t.b[3] = static_cast<std::uint8_t>(value);
  return t;
}

std::uint32_t recompose(const ByteTuple& t) {
  return (static_cast<std::uint32_t>(t.b[0]) << 24) | (static_cast<std::uint32_t>(t.b[1]) << 16) |
         (static_cast<std::uint32_t>(t.b[2]) << 8) | static_cast<std::uint32_t>(t.b[3]);
}

std::vector<std::size_t> context_indices(std::size_t center, std::size_t corpus_size,
                                         std::size_t window) {
  std::vector<std::size_t> out;
  const std::size_t lo = center >= window ? center - window : 0;
  const std::size_t hi = std::min(corpus_size, center + window + 1);
  for (std::size_t i = lo; i < hi; ++i)
    if (i != center) out.push_back(i);
  return out;
}

namespace {

struct CbowModel {
  nn::Matrix embedding;   // 256 x d
  nn::DenseLayer hidden;  // d -> hidden, relu
  nn::DenseLayer out;     // hidden -> 256, linear
};

// One CBOW pass over the byte corpus per epoch, mini-batched, fixed order.
std::vector<double> train_cbow(const std::vector<std::uint8_t>& corpus,
                               const Word2VecConfig& cfg, Rng& rng, nn::Matrix* result) {
  const std::size_t d = cfg.embedding_dim;
  CbowModel m;
  m.embedding = nn::Matrix(256, d);
  nn::init_uniform(m.embedding, d, rng);
  m.hidden = nn::DenseLayer(cfg.hidden_size, d, nn::Activation::relu);
  nn::init_dense(m.hidden, rng);
  m.out = nn::DenseLayer(256, cfg.hidden_size, nn::Activation::identity);
  nn::init_dense(m.out, rng);

  nn::Matrix e_grad(256, d);
  nn::DenseGrads hidden_grad(m.hidden);
  nn::DenseGrads out_grad(m.out);
  const nn::ParamRef params[] = {
      {"w2v_embedding", m.embedding.data.data(), e_grad.data.data(), m.embedding.data.size()},
      {"w2v_hidden_w", m.hidden.weight.data.data(), hidden_grad.weight.data.data(),
       m.hidden.weight.data.size()},
      {"w2v_hidden_b", m.hidden.bias.data(), hidden_grad.bias.data(), m.hidden.bias.size()},
      {"w2v_out_w", m.out.weight.data.data(), out_grad.weight.data.data(),
       m.out.weight.data.size()},
      {"w2v_out_b", m.out.bias.data(), out_grad.bias.data(), m.out.bias.size()},
  };

  nn::OptimizerState opt;
  opt.algorithm = cfg.optimizer;
  opt.learning_rate = cfg.learning_rate;
  opt.weight_decay = cfg.weight_decay;

  const std::size_t n = corpus.size();
  const std::size_t batch = std::max<std::size_t>(1, cfg.batch_size);
  std::vector<double> epoch_losses;
  nn::Vector h0(d);
  nn::DenseCache hidden_cache, out_cache;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      std::fill(e_grad.data.begin(), e_grad.data.end(), 0.0);
      hidden_grad.zero();
      out_grad.zero();
      std::size_t samples = 0;

      for (std::size_t center = start; center < stop; ++center) {
        const auto ctx = context_indices(center, n, cfg.context_size);
        if (ctx.empty()) continue;
        std::fill(h0.begin(), h0.end(), 0.0);
        for (const std::size_t c : ctx) {
          const double* row = m.embedding.data.data() + corpus[c] * d;
          for (std::size_t k = 0; k < d; ++k) h0[k] += row[k];
        }
        const double inv = 1.0 / static_cast<double>(ctx.size());
        for (auto& v : h0) v *= inv;

        const auto hid = nn::dense_forward_cached(m.hidden, h0, hidden_cache);
        const auto logits = nn::dense_forward_cached(m.out, hid, out_cache);
        const auto probs = nn::softmax(logits, 1.0);
        const std::size_t target = corpus[center];
        loss_sum += nn::cross_entropy(probs, target);
        ++loss_count;
        ++samples;

        nn::Vector dlogits = probs;
        dlogits[target] -= 1.0;
        const auto dhid = nn::dense_backward(m.out, out_cache, dlogits, out_grad);
        const auto dh0 = nn::dense_backward(m.hidden, hidden_cache, dhid, hidden_grad);
        for (const std::size_t c : ctx) {
          double* row = e_grad.data.data() + corpus[c] * d;
          for (std::size_t k = 0; k < d; ++k) row[k] += dh0[k] * inv;
        }
      }

      if (samples == 0) continue;
      const double scale = 1.0 / static_cast<double>(samples);
      for (auto& v : e_grad.data) v *= scale;
      for (auto& v : hidden_grad.weight.data) v *= scale;
      for (auto& v : hidden_grad.bias) v *= scale;
      for (auto& v : out_grad.weight.data) v *= scale;
      for (auto& v : out_grad.bias) v *= scale;
      nn::optimizer_step(opt, params);
    }
    epoch_losses.push_back(loss_count == 0 ? 0.0 : loss_sum / static_cast<double>(loss_count));
  }

  *result = std::move(m.embedding);
  return epoch_losses;
}

}  // namespace

ByteEmbeddingTables pretrain_word2vec(const std::vector<trace::TraceRecord>& records,
                                      const Word2VecConfig& config, Word2VecLog* log) {
  if (records.empty()) throw ConfigError("word2vec pretraining needs a non-empty trace");
  const std::size_t take = config.max_corpus_values == 0
                               ? records.size()
                               : std::min(records.size(), config.max_corpus_values);
  std::vector<std::uint8_t> address_corpus, pc_corpus;
  address_corpus.reserve(take * 4);
  pc_corpus.reserve(take * 4);
  for (std::size_t i = 0; i < take; ++i) {
    const auto ab = tokenize(records[i].address);
    const auto pb = tokenize(records[i].pc);
    for (int k = 0; k < 4; ++k) address_corpus.push_back(ab.b[k]);
    for (int k = 0; k < 4; ++k) pc_corpus.push_back(pb.b[k]);
  }

  Rng rng(config.seed);
  nn::Matrix address_embedding, pc_embedding;
  const auto address_losses = train_cbow(address_corpus, config, rng, &address_embedding);
  const auto pc_losses = train_cbow(pc_corpus, config, rng, &pc_embedding);
  if (log != nullptr) {
    log->address_epoch_loss = address_losses;
    log->pc_epoch_loss = pc_losses;
  }

  ByteEmbeddingTables tables(config.embedding_dim);
  for (auto& t : tables.address) t = address_embedding;
  for (auto& t : tables.pc) t = pc_embedding;
  return tables;
}

nn::Vector embed_value(std::uint32_t value, const std::array<nn::Matrix, 4>& tables,
                       const CombinerMlp& combiner) {
  const auto bytes = tokenize(value);
  const std::size_t d = tables[0].cols;
  nn::Vector concat(4 * d);
  for (std::size_t j = 0; j < 4; ++j) {
    const double* row = tables[j].data.data() + static_cast<std::size_t>(bytes.b[j]) * d;
    std::copy(row, row + d, concat.begin() + j * d);
  }
  return nn::dense_forward(combiner.output, nn::dense_forward(combiner.hidden, concat));
}

nn::Vector embed_address(std::uint32_t address, const ByteEmbeddingTables& tables,
                         const CombinerMlp& combiner) {
  return embed_value(address, tables.address, combiner);
}

nn::Vector embed_pc(std::uint32_t pc, const ByteEmbeddingTables& tables,
                    const CombinerMlp& combiner) {
  return embed_value(pc, tables.pc, combiner);
}

nn::Vector embed_step(const trace::TraceRecord& record, const ByteEmbeddingTables& tables,
                      const CombinerMlp& address_combiner, const CombinerMlp& pc_combiner) {
  nn::Vector a = embed_address(record.address, tables, address_combiner);
  const nn::Vector p = embed_pc(record.pc, tables, pc_combiner);
  a.insert(a.end(), p.begin(), p.end());
  return a;
}

}  // namespace deap::embed
