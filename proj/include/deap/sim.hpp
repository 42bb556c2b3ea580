#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deap/model.hpp"
#include "deap/policy.hpp"
#include "deap/trace.hpp"

namespace deap::sim {

enum class BufferSampling { recent, uniform };
BufferSampling buffer_sampling_from_string(const std::string& name);

struct SimConfig {
  std::size_t capacity = 32;
  policy::AdmissionConfig admission;
  std::size_t prefetch_n = 5;
  std::size_t prefetch_interval = 30;
  std::size_t prefetch_window = 30;  // misses fed to the prefetcher per issue
  std::size_t miss_buffer_capacity = 50;
  std::size_t batch_size = 10000;  // reporting granularity only
  double lecar_lambda = 0.45;
  double lecar_discount = 0.0;  // <= 0 derives 0.005^(1/capacity)
  std::uint64_t rng_seed = 1;
  bool stale_scores = false;  // reuse admission-time (f, r) at eviction
  BufferSampling buffer_sampling = BufferSampling::recent;
  std::size_t kde_window = 50;
  double kde_bandwidth_floor = 1e-2;
};

struct BatchPoint {
  std::uint64_t end = 0;  // accesses processed when the batch closed
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  double hit_rate = 0.0;
};

struct PolicyStats {
  std::string policy;
  std::uint64_t accesses = 0;
  std::uint64_t hits = 0;
  double hit_rate = 0.0;
  std::uint64_t evictions = 0;
  // Learned-policy extras; zero for baselines.
  std::uint64_t admissions = 0;
  std::uint64_t rejections = 0;
  std::uint64_t prefetch_issued = 0;
  std::uint64_t prefetch_useful = 0;
  double final_w_f = 0.0;
  double final_w_r = 0.0;
  std::vector<BatchPoint> batches;
};

struct SimulationReport {
  std::string trace_name;
  std::size_t trace_length = 0;
  std::size_t capacity = 0;
  std::vector<PolicyStats> policies;
};

struct EvictionEvent {
  std::uint64_t clock = 0;
  std::uint32_t address = 0;
};

// Optional per-step introspection for tests and diagnostics.
struct SimLog {
  std::vector<std::uint8_t> hit_per_step;
  std::vector<EvictionEvent> evictions;
  std::size_t peak_residents = 0;
};

// Replaces the model decoder where set: (address, now) -> (f, r).
using FutureScorer =
    std::function<std::pair<double, double>(std::uint32_t address, std::uint64_t now)>;

struct LearnedOptions {
  FutureScorer scorer;      // null = decode through the model
  double initial_w_f = 0.5;  // starting LeCaR weight on the frequency expert
};

// Demand-fetch simulation of one classical policy over the whole trace.
// belady requires labels.
PolicyStats run_baseline(const trace::LabeledTrace& t, policy::BaselinePolicy policy,
                         std::size_t capacity, std::size_t batch_size = 10000,
                         SimLog* log = nullptr);

// Full learned policy: admission + prefetching + LeCaR eviction.
PolicyStats run_learned(const trace::LabeledTrace& t, const model::DeapModel& m,
                        const SimConfig& cfg, const LearnedOptions& options = {},
                        SimLog* log = nullptr);

// One pass over the trace driving every requested policy in lockstep.
// policies defaults to learned + the five baselines.
SimulationReport run_simulation(const trace::LabeledTrace& t, const model::DeapModel& m,
                                const SimConfig& cfg,
                                const std::vector<std::string>& policies = {},
                                const std::string& trace_name = "");

std::string report_to_json(const SimulationReport& report);
std::string report_to_csv(const SimulationReport& report);
void write_report_json(const SimulationReport& report, const std::string& path);
void write_report_csv(const SimulationReport& report, const std::string& path);

}  // namespace deap::sim
