#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "deap/nn.hpp"
#include "deap/trace.hpp"

namespace deap::embed {

// Big-endian decomposition of a 32-bit value; b[0] is the most significant byte.
struct ByteTuple {
  std::array<std::uint8_t, 4> b{};
};

ByteTuple tokenize(std::uint32_t value);
std::uint32_t recompose(const ByteTuple& t);

// Eight per-position tables (4 address + 4 PC), each 256 x d_byte.
struct ByteEmbeddingTables {
  std::array<nn::Matrix, 4> address;
  std::array<nn::Matrix, 4> pc;

  ByteEmbeddingTables() = default;
  explicit ByteEmbeddingTables(std::size_t d_byte) {
    for (auto& t : address) t = nn::Matrix(256, d_byte);
    for (auto& t : pc) t = nn::Matrix(256, d_byte);
  }
  std::size_t dim() const { return address[0].cols; }
};

// Per-stream MLP mapping 4*d_byte -> hidden -> d_addr; hidden uses relu,
// output is linear.
struct CombinerMlp {
  nn::DenseLayer hidden;
  nn::DenseLayer output;

  CombinerMlp() = default;
  CombinerMlp(std::size_t d_byte, std::size_t hidden_size, std::size_t d_addr)
      : hidden(hidden_size, 4 * d_byte, nn::Activation::relu),
        output(d_addr, hidden_size, nn::Activation::identity) {}
  std::size_t out_dim() const { return output.out_dim(); }
};

struct Word2VecConfig {
  std::size_t context_size = 4;  // window radius in byte tokens
  std::size_t hidden_size = 128;
  std::size_t embedding_dim = 20;
  std::size_t epochs = 120;
  std::size_t batch_size = 256;
  double learning_rate = 3e-3;
  double weight_decay = 1e-3;
  nn::OptAlgo optimizer = nn::OptAlgo::adam;
  std::uint64_t seed = 1;
  std::size_t max_corpus_values = 0;  // cap on trace values per stream; 0 = all
};

struct Word2VecLog {
  std::vector<double> address_epoch_loss;
  std::vector<double> pc_epoch_loss;
};

// CBOW over two byte corpora (addresses, PCs); the learned per-stream embedding
// matrix initializes all four position tables of that stream.
ByteEmbeddingTables pretrain_word2vec(const std::vector<trace::TraceRecord>& records,
                                      const Word2VecConfig& config,
                                      Word2VecLog* log = nullptr);

// Context token indices around center position i, truncated at corpus edges.
std::vector<std::size_t> context_indices(std::size_t center, std::size_t corpus_size,
                                         std::size_t window);

nn::Vector embed_value(std::uint32_t value, const std::array<nn::Matrix, 4>& tables,
                       const CombinerMlp& combiner);
nn::Vector embed_address(std::uint32_t address, const ByteEmbeddingTables& tables,
                         const CombinerMlp& combiner);
nn::Vector embed_pc(std::uint32_t pc, const ByteEmbeddingTables& tables,
                    const CombinerMlp& combiner);

// e_i = a_i concat p_i.
nn::Vector embed_step(const trace::TraceRecord& record, const ByteEmbeddingTables& tables,
                      const CombinerMlp& address_combiner, const CombinerMlp& pc_combiner);

}  // namespace deap::embed
