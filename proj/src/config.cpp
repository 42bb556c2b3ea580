#include "deap/config.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <system_error>

#include "deap/errors.hpp"

namespace deap::config {
namespace {

// One entry per keyed field; exactly one member pointer is set.
struct KeyDef {
  const char* name;
  std::uint64_t RunConfig::* u = nullptr;
  double RunConfig::* d = nullptr;
  std::string RunConfig::* s = nullptr;
  bool RunConfig::* b = nullptr;
};

const std::array<KeyDef, 40> kKeys = {{
    {.name = "number_of_epochs", .u = &RunConfig::number_of_epochs},
    {.name = "training_batch_size", .u = &RunConfig::training_batch_size},
    {.name = "optimizer", .s = &RunConfig::optimizer},
    {.name = "learning_rate", .d = &RunConfig::learning_rate},
    {.name = "training_temperature", .d = &RunConfig::training_temperature},
    {.name = "lstm_hidden_cell_size", .u = &RunConfig::lstm_hidden_cell_size},
    {.name = "decoder_hidden_size", .u = &RunConfig::decoder_hidden_size},
    {.name = "prefetching_input_sequence_length",
     .u = &RunConfig::prefetching_input_sequence_length},
    {.name = "address_embedding_size", .u = &RunConfig::address_embedding_size},
    {.name = "weight_for_cross_entropy_loss", .d = &RunConfig::weight_for_cross_entropy_loss},
    {.name = "weight_for_frequency_mse_loss", .d = &RunConfig::weight_for_frequency_mse_loss},
    {.name = "weight_for_reuse_distance_mse_loss",
     .d = &RunConfig::weight_for_reuse_distance_mse_loss},
    {.name = "word2vec_number_of_epochs", .u = &RunConfig::word2vec_number_of_epochs},
    {.name = "word2vec_learning_rate", .d = &RunConfig::word2vec_learning_rate},
    {.name = "word2vec_weight_decay", .d = &RunConfig::word2vec_weight_decay},
    {.name = "word2vec_optimizer", .s = &RunConfig::word2vec_optimizer},
    {.name = "word2vec_encoder_hidden_layer_size",
     .u = &RunConfig::word2vec_encoder_hidden_layer_size},
    {.name = "word2vec_byte_embedding_dimension",
     .u = &RunConfig::word2vec_byte_embedding_dimension},
    {.name = "word2vec_context_size", .u = &RunConfig::word2vec_context_size},
    {.name = "admission_frequency_threshold", .d = &RunConfig::admission_frequency_threshold},
    {.name = "admission_reuse_distance_threshold",
     .d = &RunConfig::admission_reuse_distance_threshold},
    {.name = "miss_buffer_size", .u = &RunConfig::miss_buffer_size},
    {.name = "test_simulation_prefetching_interval",
     .u = &RunConfig::test_simulation_prefetching_interval},
    {.name = "cache_size", .u = &RunConfig::cache_size},
    {.name = "test_simulation_batch_size", .u = &RunConfig::test_simulation_batch_size},
    {.name = "lecar_lambda", .d = &RunConfig::lecar_lambda},
    {.name = "lecar_discount", .d = &RunConfig::lecar_discount},
    {.name = "prefetch_n", .u = &RunConfig::prefetch_n},
    {.name = "score_cache", .s = &RunConfig::score_cache},
    {.name = "buffer_sampling", .s = &RunConfig::buffer_sampling},
    {.name = "kde_probes", .u = &RunConfig::kde_probes},
    {.name = "kde_bandwidth_floor", .d = &RunConfig::kde_bandwidth_floor},
    {.name = "label_cap", .u = &RunConfig::label_cap},
    {.name = "rng_seed", .u = &RunConfig::rng_seed},
    {.name = "freeze_byte_tables", .b = &RunConfig::freeze_byte_tables},
    {.name = "random_init_tables", .b = &RunConfig::random_init_tables},
    {.name = "trace_path", .s = &RunConfig::trace_path},
    {.name = "tables_path", .s = &RunConfig::tables_path},
    {.name = "checkpoint_path", .s = &RunConfig::checkpoint_path},
    {.name = "output_dir", .s = &RunConfig::output_dir},
}};

// resume_from and policies live outside kKeys order concerns; append them via
// a second table so kKeys stays a complete render list too.
const std::array<KeyDef, 2> kExtraKeys = {{
    {.name = "resume_from", .s = &RunConfig::resume_from},
    {.name = "policies", .s = &RunConfig::policies},
}};

std::string trim(const std::string& v) {
  std::size_t a = v.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = v.find_last_not_of(" \t\r\n");
  return v.substr(a, b - a + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const char* first = value.data();
  const char* last = first + value.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last || value.empty())
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + value +
                      "'");
  return out;
}

double parse_f64(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* first = value.data();
  const char* last = first + value.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || p != last || value.empty())
    throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + value + "'");
}

std::string fmt_u(std::uint64_t v) { return std::to_string(v); }

// Shortest decimal that round-trips through a double.
std::string fmt_d(double v) {
  std::array<char, 64> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), p);
}

const KeyDef* find_key(const std::string& key) {
  for (const auto& k : kKeys)
    if (key == k.name) return &k;
  for (const auto& k : kExtraKeys)
    if (key == k.name) return &k;
  return nullptr;
}

void check_u_range(const char* key, std::uint64_t v, std::uint64_t lo, std::uint64_t hi) {
  if (v < lo || v > hi)
    throw ConfigError(std::string(key) + "=" + fmt_u(v) + " outside permitted range [" +
                      fmt_u(lo) + ", " + fmt_u(hi) + "]");
}

void check_d_range(const char* key, double v, double lo, double hi) {
  if (!std::isfinite(v) || v < lo || v > hi)
    throw ConfigError(std::string(key) + "=" + fmt_d(v) + " outside permitted range [" +
                      fmt_d(lo) + ", " + fmt_d(hi) + "]");
}

void check_u_choice(const char* key, std::uint64_t v, std::initializer_list<std::uint64_t> set) {
  for (std::uint64_t s : set)
    if (v == s) return;
  std::string msg = std::string(key) + "=" + fmt_u(v) + " not in permitted set {";
  bool first = true;
  for (std::uint64_t s : set) {
    if (!first) msg += ", ";
    msg += fmt_u(s);
    first = false;
  }
  throw ConfigError(msg + "}");
}

void check_d_choice(const char* key, double v, std::initializer_list<double> set) {
  for (double s : set)
    if (v == s) return;
  std::string msg = std::string(key) + "=" + fmt_d(v) + " not in permitted set {";
  bool first = true;
  for (double s : set) {
    if (!first) msg += ", ";
    msg += fmt_d(s);
    first = false;
  }
  throw ConfigError(msg + "}");
}

void check_s_choice(const char* key, const std::string& v,
                    std::initializer_list<const char*> set) {
  for (const char* s : set)
    if (v == s) return;
  std::string msg = std::string(key) + "='" + v + "' not in permitted set {";
  bool first = true;
  for (const char* s : set) {
    if (!first) msg += ", ";
    msg += s;
    first = false;
  }
  throw ConfigError(msg + "}");
}

}  // namespace

void apply_config_assignment(RunConfig& c, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("malformed config assignment '" + assignment + "' (expected key=value)");
  std::string key = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  if (key.empty())
    throw ConfigError("malformed config assignment '" + assignment + "' (empty key)");

  // Short aliases for the two admission thresholds.
  if (key == "alpha") key = "admission_frequency_threshold";
  if (key == "beta") key = "admission_reuse_distance_threshold";

  const KeyDef* def = find_key(key);
  if (def == nullptr) throw ConfigError("unknown config key '" + key + "'");
  if (def->u != nullptr)
    c.*(def->u) = parse_u64(key, value);
  else if (def->d != nullptr)
    c.*(def->d) = parse_f64(key, value);
  else if (def->b != nullptr)
    c.*(def->b) = parse_flag(key, value);
  else
    c.*(def->s) = value;
}

void apply_config_text(RunConfig& c, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    apply_config_assignment(c, line);
  }
}

void validate_config(const RunConfig& c) {
  // The published range is [1, 20]; 0 is additionally accepted as an
  // explicit no-op so a run can emit an untouched checkpoint.
  check_u_range("number_of_epochs", c.number_of_epochs, 0, 20);
  check_u_choice("training_batch_size", c.training_batch_size, {32, 64, 128, 256, 512});
  check_s_choice("optimizer", c.optimizer, {"adam", "sgd"});
  check_d_range("learning_rate", c.learning_rate, 1e-5, 1e-1);
  check_d_choice("training_temperature", c.training_temperature, {1e-3, 1e-2});
  check_u_range("lstm_hidden_cell_size", c.lstm_hidden_cell_size, 20, 40);
  check_u_choice("decoder_hidden_size", c.decoder_hidden_size, {10});
  check_u_choice("prefetching_input_sequence_length", c.prefetching_input_sequence_length,
                 {20, 30});
  check_u_range("address_embedding_size", c.address_embedding_size, 5, 25);
  check_d_choice("weight_for_cross_entropy_loss", c.weight_for_cross_entropy_loss, {0.33});
  check_d_choice("weight_for_frequency_mse_loss", c.weight_for_frequency_mse_loss, {0.33});
  check_d_choice("weight_for_reuse_distance_mse_loss", c.weight_for_reuse_distance_mse_loss,
                 {0.33});
  check_u_range("word2vec_number_of_epochs", c.word2vec_number_of_epochs, 20, 500);
  check_d_range("word2vec_learning_rate", c.word2vec_learning_rate, 1e-5, 1e-2);
  check_d_range("word2vec_weight_decay", c.word2vec_weight_decay, 1e-6, 10.0);
  check_s_choice("word2vec_optimizer", c.word2vec_optimizer, {"adam", "sgd"});
  check_u_range("word2vec_encoder_hidden_layer_size", c.word2vec_encoder_hidden_layer_size, 50,
                200);
  check_u_range("word2vec_byte_embedding_dimension", c.word2vec_byte_embedding_dimension, 5, 25);
  check_u_range("word2vec_context_size", c.word2vec_context_size, 2, 10);
  check_d_choice("admission_frequency_threshold", c.admission_frequency_threshold,
                 {50, 300, 500, 1000, 3000});
  check_d_choice("admission_reuse_distance_threshold", c.admission_reuse_distance_threshold,
                 {500, 3000, 5000, 7000, 8000});
  check_u_choice("miss_buffer_size", c.miss_buffer_size, {30, 50, 70, 100});
  check_u_choice("test_simulation_prefetching_interval", c.test_simulation_prefetching_interval,
                 {10, 20, 30, 50});
  check_u_choice("cache_size", c.cache_size, {32, 64});
  check_u_choice("test_simulation_batch_size", c.test_simulation_batch_size, {5000, 10000});

  if (!std::isfinite(c.lecar_lambda) || c.lecar_lambda < 0.0)
    throw ConfigError("lecar_lambda=" + fmt_d(c.lecar_lambda) +
                      " must be a finite non-negative number");
  check_d_range("lecar_discount", c.lecar_discount, 0.0, 1.0);
  check_s_choice("score_cache", c.score_cache, {"fresh", "stale"});
  check_s_choice("buffer_sampling", c.buffer_sampling, {"recent", "uniform"});
  if (c.kde_probes == 0) throw ConfigError("kde_probes=0 must be at least 1");
  if (!std::isfinite(c.kde_bandwidth_floor) || c.kde_bandwidth_floor <= 0.0)
    throw ConfigError("kde_bandwidth_floor=" + fmt_d(c.kde_bandwidth_floor) +
                      " must be a positive finite number");
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig c;
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    apply_config_text(c, buf.str());
  }
  for (const auto& o : overrides) apply_config_assignment(c, o);
  validate_config(c);
  return c;
}

std::string config_to_text(const RunConfig& c) {
  std::string out;
  auto render = [&](const KeyDef& k) {
    out += k.name;
    out += '=';
    if (k.u != nullptr)
      out += fmt_u(c.*(k.u));
    else if (k.d != nullptr)
      out += fmt_d(c.*(k.d));
    else if (k.b != nullptr)
      out += (c.*(k.b)) ? "true" : "false";
    else
      out += c.*(k.s);
    out += '\n';
  };
  for (const auto& k : kKeys) render(k);
  for (const auto& k : kExtraKeys) render(k);
  return out;
}

model::ModelDims model_dims(const RunConfig& c) {
  model::ModelDims d;
  d.byte_embedding_dim = c.word2vec_byte_embedding_dimension;
  d.combiner_hidden = c.word2vec_encoder_hidden_layer_size;
  d.address_embedding_size = c.address_embedding_size;
  d.lstm_hidden = c.lstm_hidden_cell_size;
  d.decoder_hidden = c.decoder_hidden_size;
  d.kde_probes = c.kde_probes;
  return d;
}

model::TrainConfig train_config(const RunConfig& c) {
  model::TrainConfig t;
  t.epochs = c.number_of_epochs;
  t.batch_size = c.training_batch_size;
  t.sequence_length = c.prefetching_input_sequence_length;
  t.learning_rate = c.learning_rate;
  t.temperature = c.training_temperature;
  t.optimizer = nn::opt_algo_from_string(c.optimizer);
  t.weights.w0 = c.weight_for_cross_entropy_loss;
  t.weights.w1 = c.weight_for_frequency_mse_loss;
  t.weights.w2 = c.weight_for_reuse_distance_mse_loss;
  t.seed = c.rng_seed;
  t.kde_window = c.miss_buffer_size;
  t.kde_bandwidth_floor = c.kde_bandwidth_floor;
  return t;
}

sim::SimConfig sim_config(const RunConfig& c) {
  sim::SimConfig s;
  s.capacity = c.cache_size;
  s.admission.alpha = c.admission_frequency_threshold;
  s.admission.beta = c.admission_reuse_distance_threshold;
  s.prefetch_n = c.prefetch_n;
  s.prefetch_interval = c.test_simulation_prefetching_interval;
  s.prefetch_window = c.prefetching_input_sequence_length;
  s.miss_buffer_capacity = c.miss_buffer_size;
  s.batch_size = c.test_simulation_batch_size;
  s.lecar_lambda = c.lecar_lambda;
  s.lecar_discount = c.lecar_discount;
  s.rng_seed = c.rng_seed;
  s.stale_scores = c.score_cache == "stale";
  s.buffer_sampling = sim::buffer_sampling_from_string(c.buffer_sampling);
  s.kde_window = c.miss_buffer_size;
  s.kde_bandwidth_floor = c.kde_bandwidth_floor;
  return s;
}

embed::Word2VecConfig word2vec_config(const RunConfig& c) {
  embed::Word2VecConfig w;
  w.context_size = c.word2vec_context_size;
  w.hidden_size = c.word2vec_encoder_hidden_layer_size;
  w.embedding_dim = c.word2vec_byte_embedding_dimension;
  w.epochs = c.word2vec_number_of_epochs;
  w.learning_rate = c.word2vec_learning_rate;
  w.weight_decay = c.word2vec_weight_decay;
  w.optimizer = nn::opt_algo_from_string(c.word2vec_optimizer);
  w.seed = c.rng_seed;
  return w;
}

}  // namespace deap::config
