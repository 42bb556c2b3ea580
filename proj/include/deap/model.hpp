#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deap/embed.hpp"
#include "deap/nn.hpp"
#include "deap/trace.hpp"

namespace deap::model {

struct ModelDims {
  std::size_t byte_embedding_dim = 20;
  std::size_t combiner_hidden = 128;
  std::size_t address_embedding_size = 20;
  std::size_t lstm_hidden = 40;
  std::size_t decoder_hidden = 10;
  std::size_t kde_probes = 16;

  std::size_t step_embedding_size() const { return 2 * address_embedding_size; }
  std::size_t decoder_input_size() const { return address_embedding_size + kde_probes; }
  bool operator==(const ModelDims&) const = default;
};

// Affine normalization of the regression targets, fitted by train_model.
// Identity until fitted, so a zero-initialized model decodes to (0, 0).
struct TargetScaler {
  double frequency_mean = 0.0;
  double frequency_std = 1.0;
  double reuse_mean = 0.0;
  double reuse_std = 1.0;
};

struct DeapModel {
  ModelDims dims;
  embed::ByteEmbeddingTables tables;
  embed::CombinerMlp address_combiner;
  embed::CombinerMlp pc_combiner;
  nn::LstmCell lstm;                        // over e_i, size 2*d_addr
  std::array<nn::DenseLayer, 4> byte_heads;  // lstm_hidden -> 256 each
  nn::DenseLayer decoder_trunk;              // d_addr + kde_probes -> decoder_hidden, relu
  nn::DenseLayer frequency_head;             // decoder_hidden -> 1
  nn::DenseLayer reuse_head;                 // decoder_hidden -> 1
  TargetScaler scaler;
  bool freeze_byte_tables = false;
  std::uint64_t trained_steps = 0;
};

// All parameters zero; shapes per dims.
DeapModel make_model(const ModelDims& dims);
// Random init of every layer from one seeded stream, declared order.
DeapModel init_model(const ModelDims& dims, std::uint64_t seed);

struct DeapGradients {
  std::array<nn::Matrix, 4> table_address;
  std::array<nn::Matrix, 4> table_pc;
  nn::DenseGrads address_hidden, address_output;
  nn::DenseGrads pc_hidden, pc_output;
  nn::LstmGrads lstm;
  std::array<nn::DenseGrads, 4> byte_heads;
  nn::DenseGrads decoder_trunk, frequency_head, reuse_head;

  explicit DeapGradients(const DeapModel& m);
  void zero();
};

// One named view per parameter group, in the canonical order shared by the
// optimizer and the checkpoint layout. grads may be null (serialization use).
struct ParamEntry {
  const char* name;
  double* value;
  double* grad;
  std::size_t size;
  bool table;
};
std::vector<ParamEntry> parameter_table(DeapModel& m, DeapGradients* grads);
std::vector<nn::ParamRef> parameter_refs(DeapModel& m, DeapGradients& grads,
                                         bool include_tables);

nn::Vector address_embedding(const DeapModel& m, std::uint32_t address);
nn::Vector step_embedding(const DeapModel& m, const trace::TraceRecord& record);

// Four 256-way byte probability rows for the next miss after the sequence.
std::array<nn::Vector, 4> prefetch_forward(const DeapModel& m,
                                           std::span<const trace::TraceRecord> sequence);

// Raw-unit (frequency, reuse) predictions from z = a (+) d.
std::pair<double, double> decode_future(const DeapModel& m, const nn::Vector& address_embed,
                                        const nn::Vector& distribution);

struct LossWeights {
  double w0 = 0.33;
  double w1 = 0.33;
  double w2 = 0.33;
};

double combine_losses(double prefetching, double frequency, double recency,
                      const LossWeights& w);

struct Losses {
  double prefetching = 0.0;
  double frequency = 0.0;
  double recency = 0.0;
  double total = 0.0;
};

// A training window referencing [begin, begin+length) of a shared record
// vector; the target is the miss that follows the window.
struct TrainingSample {
  std::size_t begin = 0;
  std::size_t length = 0;
  std::uint32_t target_address = 0;
  double target_frequency = 0.0;
  double target_reuse = 0.0;
  nn::Vector distribution;  // frozen KDE input, size kde_probes
};

// Forward pass over a batch; mean losses, no parameter change.
Losses evaluate_batch(const DeapModel& m, const std::vector<trace::TraceRecord>& records,
                      std::span<const TrainingSample> batch, const LossWeights& weights,
                      double temperature);

// evaluate_batch plus gradient accumulation into grads (not zeroed here).
Losses accumulate_gradients(const DeapModel& m, const std::vector<trace::TraceRecord>& records,
                            std::span<const TrainingSample> batch, const LossWeights& weights,
                            double temperature, DeapGradients& grads);

// Full step: gradients, one optimizer update, trained_steps increment.
Losses training_step(DeapModel& m, const std::vector<trace::TraceRecord>& records,
                     std::span<const TrainingSample> batch, const LossWeights& weights,
                     double temperature, nn::OptimizerState& opt, DeapGradients& grads);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  std::size_t sequence_length = 30;
  double learning_rate = 1e-3;
  double temperature = 1e-3;
  nn::OptAlgo optimizer = nn::OptAlgo::adam;
  double weight_decay = 0.0;
  LossWeights weights;
  std::uint64_t seed = 1;
  std::size_t windows_per_epoch = 0;  // 0 = every window
  std::size_t kde_window = 50;
  double kde_bandwidth_floor = 1e-2;
};

// Treats the labeled trace as the miss stream: window t-L..t-1 predicts the
// miss at t. Fits the target scaler, builds per-window distribution vectors
// once, then runs epochs of batched steps. Returns per-epoch mean losses.
std::vector<Losses> train_model(DeapModel& m, const trace::LabeledTrace& misses,
                                const TrainConfig& config);

// Binary container: magic "DEAP1", u32 dims, u32 flags, u64 step counter,
// f64 scaler, then parameter arrays in canonical order, f64 little-endian.
void save_checkpoint(const DeapModel& m, const std::string& path);
DeapModel load_checkpoint(const std::string& path, const ModelDims* expected = nullptr);

}  // namespace deap::model
