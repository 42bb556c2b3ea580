#include "deap/pipeline.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "deap/errors.hpp"
#include "deap/sim.hpp"
#include "deap/trace.hpp"
#include "json.hpp"

namespace deap::pipeline {
namespace {

constexpr char kTablesMagic[6] = {'D', 'E', 'A', 'P', 'W', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) {
    if (pos + n > data.size()) throw FormatError("truncated tables artifact");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(std::uint8_t(data[pos + i])) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

// Creates output_dir if needed and returns it with a trailing slash.
std::string prepare_output_dir(const std::string& dir) {
  std::string d = dir.empty() ? "." : dir;
  std::error_code ec;
  std::filesystem::create_directories(d, ec);
  if (ec) throw IoError("cannot create output directory '" + d + "': " + ec.message());
  if (d.back() != '/') d += '/';
  return d;
}

std::string trace_stem(const std::string& path) {
  auto stem = std::filesystem::path(path).stem().string();
  return stem.empty() ? "trace" : stem;
}

trace::LabeledTrace load_configured_trace(const config::RunConfig& c, bool labeled) {
  if (c.trace_path.empty()) throw IoError("no trace_path configured");
  auto t = trace::load_trace(c.trace_path);
  if (!labeled) return t;
  std::uint64_t cap = c.label_cap != 0 ? c.label_cap : t.records.size() + 1;
  return trace::label_trace(std::move(t.records), cap);
}

std::string fmt_shortest(double v) {
  std::array<char, 64> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), p);
}

}  // namespace

void save_tables(const embed::ByteEmbeddingTables& tables, const std::string& path) {
  std::string out;
  const std::size_t d = tables.dim();
  out.reserve(sizeof(kTablesMagic) + 4 + 8 * 256 * d * 8);
  out.append(kTablesMagic, sizeof(kTablesMagic));
  put_u32(out, static_cast<std::uint32_t>(d));
  auto dump = [&](const nn::Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j < m.cols; ++j) put_f64(out, m(i, j));
  };
  for (const auto& m : tables.address) dump(m);
  for (const auto& m : tables.pc) dump(m);
  write_file(path, out);
}

embed::ByteEmbeddingTables load_tables(const std::string& path) {
  const std::string data = read_file(path);
  Reader r{data};
  r.need(sizeof(kTablesMagic));
  if (std::memcmp(data.data(), kTablesMagic, sizeof(kTablesMagic)) != 0)
    throw FormatError("not a byte-table artifact (bad magic)");
  r.pos = sizeof(kTablesMagic);
  const std::uint32_t d = r.u32();
  if (d == 0 || d > 65536) throw FormatError("implausible byte dimension in tables artifact");
  embed::ByteEmbeddingTables tables(d);
  auto fill = [&](nn::Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i)
      for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = r.f64();
  };
  for (auto& m : tables.address) fill(m);
  for (auto& m : tables.pc) fill(m);
  if (r.pos != data.size()) throw FormatError("trailing bytes in tables artifact");
  return tables;
}

std::string cmd_pretrain(const config::RunConfig& c) {
  const auto t = load_configured_trace(c, /*labeled=*/false);
  const std::string out_dir = prepare_output_dir(c.output_dir);

  embed::Word2VecLog log;
  const auto tables = embed::pretrain_word2vec(t.records, config::word2vec_config(c), &log);
  save_tables(tables, c.tables_path);

  nlohmann::ordered_json j;
  j["trace"] = c.trace_path;
  j["epochs"] = c.word2vec_number_of_epochs;
  j["address_epoch_loss"] = log.address_epoch_loss;
  j["pc_epoch_loss"] = log.pc_epoch_loss;
  write_file(out_dir + "pretrain_log.json", j.dump(2) + "\n");
  return c.tables_path;
}

std::vector<model::Losses> cmd_train(const config::RunConfig& c) {
  const auto t = load_configured_trace(c, /*labeled=*/true);
  const std::string out_dir = prepare_output_dir(c.output_dir);
  const auto dims = config::model_dims(c);

  model::DeapModel m;
  if (!c.resume_from.empty()) {
    m = model::load_checkpoint(c.resume_from, &dims);
  } else {
    m = model::init_model(dims, c.rng_seed);
    if (!c.random_init_tables) {
      auto tables = load_tables(c.tables_path);
      if (tables.dim() != dims.byte_embedding_dim)
        throw ShapeError("tables artifact byte dimension is " + std::to_string(tables.dim()) +
                         " but the configuration expects " +
                         std::to_string(dims.byte_embedding_dim));
      m.tables = std::move(tables);
    }
  }
  m.freeze_byte_tables = c.freeze_byte_tables;

  const auto losses = model::train_model(m, t, config::train_config(c));
  model::save_checkpoint(m, c.checkpoint_path);

  std::string csv = "epoch,loss_prefetching,loss_frequency,loss_recency,loss_total\n";
  for (std::size_t i = 0; i < losses.size(); ++i) {
    char row[192];
    std::snprintf(row, sizeof(row), "%zu,%.17g,%.17g,%.17g,%.17g\n", i + 1,
                  losses[i].prefetching, losses[i].frequency, losses[i].recency,
                  losses[i].total);
    csv += row;
  }
  write_file(out_dir + "training_curve.csv", csv);
  return losses;
}

std::string cmd_simulate(const config::RunConfig& c) {
  const auto t = load_configured_trace(c, /*labeled=*/true);
  const std::string out_dir = prepare_output_dir(c.output_dir);
  const auto dims = config::model_dims(c);
  const auto m = model::load_checkpoint(c.checkpoint_path, &dims);

  std::vector<std::string> policies;
  std::istringstream in(c.policies);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    std::size_t b = item.find_last_not_of(" \t");
    policies.push_back(item.substr(a, b - a + 1));
  }

  const std::string stem = trace_stem(c.trace_path);
  const auto report = sim::run_simulation(t, m, config::sim_config(c), policies, stem);
  const std::string json_path = out_dir + "report_" + stem + ".json";
  sim::write_report_json(report, json_path);
  sim::write_report_csv(report, out_dir + "report_" + stem + ".csv");
  return json_path;
}

std::string cmd_report(const std::vector<std::string>& report_paths,
                       const std::string& output_csv) {
  if (report_paths.empty()) throw ConfigError("report needs at least one input JSON");

  std::vector<std::string> traces;
  std::vector<std::string> policies;  // first-appearance order
  // hit_rate[policy][trace index]; quiet NaN marks a missing cell.
  std::vector<std::vector<double>> rates;

  for (const auto& path : report_paths) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("malformed report file '" + path + "': " + e.what());
    }
    if (!j.contains("policies") || !j["policies"].is_array())
      throw FormatError("report file '" + path + "' has no policies array");
    std::string name = j.value("trace", "");
    if (name.empty()) name = trace_stem(path);
    traces.push_back(name);
    for (auto& row : rates) row.push_back(std::numeric_limits<double>::quiet_NaN());
    for (const auto& p : j["policies"]) {
      const std::string policy = p.value("policy", "");
      if (policy.empty()) throw FormatError("report file '" + path + "' has an unnamed policy");
      auto it = std::find(policies.begin(), policies.end(), policy);
      std::size_t idx;
      if (it == policies.end()) {
        policies.push_back(policy);
        rates.emplace_back(traces.size(), std::numeric_limits<double>::quiet_NaN());
        idx = policies.size() - 1;
      } else {
        idx = static_cast<std::size_t>(it - policies.begin());
      }
      rates[idx][traces.size() - 1] = p.value("hit_rate", 0.0);
    }
  }

  std::string csv = "policy";
  for (const auto& t : traces) csv += "," + t;
  csv += ",mean_hit_rate\n";

  std::ostringstream table;
  std::size_t name_w = 6;
  for (const auto& p : policies) name_w = std::max(name_w, p.size());
  table << std::left;
  table.width(static_cast<std::streamsize>(name_w + 2));
  table << "policy";
  for (const auto& t : traces) {
    table.width(12);
    table << t.substr(0, 11);
  }
  table << "mean\n";

  for (std::size_t i = 0; i < policies.size(); ++i) {
    csv += policies[i];
    table.width(static_cast<std::streamsize>(name_w + 2));
    table << policies[i];
    double sum = 0.0;
    std::size_t n = 0;
    for (double r : rates[i]) {
      if (std::isnan(r)) {
        csv += ",";
        table.width(12);
        table << "-";
      } else {
        csv += "," + fmt_shortest(r);
        char cell[32];
        std::snprintf(cell, sizeof(cell), "%.4f", r);
        table.width(12);
        table << cell;
        sum += r;
        ++n;
      }
    }
    const double mean = n != 0 ? sum / static_cast<double>(n) : 0.0;
    csv += "," + fmt_shortest(mean) + "\n";
    char cell[32];
    std::snprintf(cell, sizeof(cell), "%.4f", mean);
    table << cell << "\n";
  }

  if (!output_csv.empty()) write_file(output_csv, csv);
  return table.str();
}

}  // namespace deap::pipeline
