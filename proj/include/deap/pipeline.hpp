#pragma once

#include <string>
#include <vector>

#include "deap/config.hpp"
#include "deap/embed.hpp"
#include "deap/model.hpp"

namespace deap::pipeline {

// Byte-table artifact: magic "DEAPW1", u32 byte dimension, then the eight
// tables (address 0..3, pc 0..3) as 256 x d rows of f64 little-endian.
void save_tables(const embed::ByteEmbeddingTables& tables, const std::string& path);
embed::ByteEmbeddingTables load_tables(const std::string& path);

// Pretrains byte embeddings on the configured trace, writes the tables
// artifact at tables_path and <output_dir>/pretrain_log.json (per-epoch
// loss per stream). Returns the tables path.
std::string cmd_pretrain(const config::RunConfig& c);

// Trains the model on the configured trace: fresh init seeded from
// rng_seed with pretrained tables (unless random_init_tables), or a
// checkpoint continuation when resume_from is set. Writes checkpoint_path
// and <output_dir>/training_curve.csv. Returns per-epoch losses.
std::vector<model::Losses> cmd_train(const config::RunConfig& c);

// Simulates the configured policy set (policies comma list; empty = all
// six) over the trace and writes <output_dir>/report_<stem>.json and
// .csv, stem taken from the trace filename. Returns the JSON path.
std::string cmd_simulate(const config::RunConfig& c);

// Merges simulation report JSONs into one comparison table: one row per
// policy, one hit-rate column per trace plus the mean. Writes CSV to
// output_csv and returns the aligned text rendering.
std::string cmd_report(const std::vector<std::string>& report_paths,
                       const std::string& output_csv);

}  // namespace deap::pipeline
