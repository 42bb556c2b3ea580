#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "deap/nn.hpp"
#include "deap/rng.hpp"

namespace deap::policy {

struct AdmissionConfig {
  double alpha = 3000.0;  // frequency threshold
  double beta = 7000.0;   // reuse-distance threshold
};

// True iff f > alpha or r < beta. Negative predictions are clamped to zero
// before comparing, matching the score clamp on eviction candidates.
bool admit(double f, double r, const AdmissionConfig& cfg);

struct PrefetchCandidate {
  std::uint32_t address = 0;
  double probability = 0.0;
};

// The n most probable 4-byte addresses under the product of the per-byte
// marginals. Beam of width n per position, ties broken byte-lexicographically;
// equals exhaustive enumeration of all 2^32 products.
std::vector<PrefetchCandidate> select_prefetch_candidates(
    const std::array<nn::Vector, 4>& byte_probs, std::size_t n);

enum class Expert { frequency, recency };

struct GhostEntry {
  std::uint32_t address = 0;
  std::uint64_t evicted_at = 0;
};

struct LeCarState {
  double w_f = 0.5;
  double w_r = 0.5;
  std::deque<GhostEntry> ghost_f, ghost_r;  // oldest first
  std::size_t ghost_capacity = 32;
  double lambda = 0.45;
  double discount = 0.0;  // regret base, usually 0.005^(1/capacity)
  Rng rng{1};
};

// capacity sizes both ghost lists; discount <= 0 selects 0.005^(1/capacity).
LeCarState make_lecar(std::size_t capacity, double lambda = 0.45, std::uint64_t seed = 1,
                      double discount = 0.0);

struct EvictionCandidateScore {
  std::uint32_t address = 0;
  double f = 0.0;  // predicted future frequency, clamped >= 0
  double r = 0.0;  // predicted reuse distance, clamped >= 0
  std::uint64_t last_access = 0;
};

struct EvictionChoice {
  std::uint32_t address = 0;
  Expert expert = Expert::frequency;
};

// Samples an expert from (w_f, w_r); frequency evicts argmin f, recency evicts
// argmax r, ties fall back to least recently used then lowest address. The
// victim is appended to the sampled expert's ghost list.
EvictionChoice lecar_choose_victim(LeCarState& state,
                                   std::span<const EvictionCandidateScore> scores,
                                   std::uint64_t now);

// Ghost hit for the missed address rewards the other expert by e^(lambda *
// discount^(now - evicted_at)) and drops the ghost entry; otherwise a no-op.
void lecar_update(LeCarState& state, std::uint32_t missed_address, std::uint64_t now);

enum class BaselinePolicy { lru, lfu, fifo, lifo, belady };

BaselinePolicy baseline_from_string(const std::string& name);
std::string to_string(BaselinePolicy policy);

struct ResidentInfo {
  std::uint32_t address = 0;
  std::uint64_t last_access = 0;
  std::uint64_t insert_time = 0;
  std::uint64_t access_count = 0;
};

// Victim under lru / lfu / fifo / lifo bookkeeping rules; belady has its own
// entry point below.
std::uint32_t baseline_evict(BaselinePolicy policy, std::span<const ResidentInfo> residents);

struct BeladyCandidate {
  std::uint32_t address = 0;
  std::size_t next_use = 0;  // absolute trace index; trace::kNeverUsed = never
};

// Farthest next use wins; never-used-again beats any finite distance; ties go
// to the lower address.
std::uint32_t belady_evict(std::span<const BeladyCandidate> residents);

}  // namespace deap::policy
