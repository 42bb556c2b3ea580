#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deap/embed.hpp"
#include "deap/model.hpp"
#include "deap/sim.hpp"

namespace deap::config {

// Flat key=value run configuration. Hyperparameters keep their published
// names snake_cased; the rest are artifact knobs and file paths. Values are
// range-checked at load, not at use.
struct RunConfig {
  // Training.
  std::uint64_t number_of_epochs = 20;  // 0 is accepted as an explicit no-op
  std::uint64_t training_batch_size = 256;
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  double training_temperature = 1e-3;
  std::uint64_t lstm_hidden_cell_size = 40;
  std::uint64_t decoder_hidden_size = 10;
  std::uint64_t prefetching_input_sequence_length = 30;
  std::uint64_t address_embedding_size = 20;
  double weight_for_cross_entropy_loss = 0.33;
  double weight_for_frequency_mse_loss = 0.33;
  double weight_for_reuse_distance_mse_loss = 0.33;

  // Embedding pretraining.
  std::uint64_t word2vec_number_of_epochs = 120;
  double word2vec_learning_rate = 3e-3;
  double word2vec_weight_decay = 1e-3;
  std::string word2vec_optimizer = "adam";
  std::uint64_t word2vec_encoder_hidden_layer_size = 128;
  std::uint64_t word2vec_byte_embedding_dimension = 20;
  std::uint64_t word2vec_context_size = 4;

  // Online policy. alpha/beta are accepted as aliases for the two
  // admission thresholds.
  double admission_frequency_threshold = 3000;
  double admission_reuse_distance_threshold = 7000;
  std::uint64_t miss_buffer_size = 50;
  std::uint64_t test_simulation_prefetching_interval = 30;
  std::uint64_t cache_size = 32;
  std::uint64_t test_simulation_batch_size = 10000;
  double lecar_lambda = 0.45;
  double lecar_discount = 0.0;  // 0 derives 0.005^(1/capacity)
  std::uint64_t prefetch_n = 5;
  std::string score_cache = "fresh";       // fresh | stale
  std::string buffer_sampling = "recent";  // recent | uniform

  // Distribution vector.
  std::uint64_t kde_probes = 16;
  double kde_bandwidth_floor = 1e-2;

  // Trace handling.
  std::uint64_t label_cap = 0;  // 0 = trace length + 1
  std::uint64_t rng_seed = 1;

  // Flags.
  bool freeze_byte_tables = false;
  bool random_init_tables = false;

  // Paths. policies is a comma list; empty runs all six.
  std::string trace_path;
  std::string tables_path = "tables.bin";
  std::string checkpoint_path = "model.ckpt";
  std::string output_dir = ".";
  std::string resume_from;
  std::string policies;
};

// Applies one "key=value" assignment. Unknown keys and unparsable values
// throw ConfigError naming the key.
void apply_config_assignment(RunConfig& c, const std::string& assignment);

// Applies a whole key=value text: '#' starts a comment, blank lines are
// skipped, later assignments win.
void apply_config_text(RunConfig& c, const std::string& text);

// Range checks every keyed value; violations throw ConfigError naming the
// key and the permitted range.
void validate_config(const RunConfig& c);

// File (optional, "" = defaults) then overrides (flag wins), then
// validate_config. Unreadable path throws IoError.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

// Canonical key=value rendering of every keyed field, one per line, in
// declaration order. apply_config_text round-trips it.
std::string config_to_text(const RunConfig& c);

model::ModelDims model_dims(const RunConfig& c);
model::TrainConfig train_config(const RunConfig& c);
sim::SimConfig sim_config(const RunConfig& c);
embed::Word2VecConfig word2vec_config(const RunConfig& c);

}  // namespace deap::config
