#include "deap/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deap/embed.hpp"
#include "deap/errors.hpp"
#include "deap/trace.hpp"

namespace deap::policy {

bool admit(double f, double r, const AdmissionConfig& cfg) {
  f = std::max(f, 0.0);
  r = std::max(r, 0.0);
  return f > cfg.alpha || r < cfg.beta;
}

namespace {

struct BeamEntry {
  std::array<std::uint8_t, 4> bytes{};
  double p = 1.0;
};

// Byte 0 is the most significant, so lexicographic byte order equals
// ascending address order.
bool beam_before(const BeamEntry& a, const BeamEntry& b) {
  if (a.p != b.p) return a.p > b.p;
  return a.bytes < b.bytes;
}

}  // namespace

std::vector<PrefetchCandidate> select_prefetch_candidates(
    const std::array<nn::Vector, 4>& byte_probs, std::size_t n) {
  if (n == 0) return {};
  for (const auto& row : byte_probs)
    if (row.size() != 256) throw ShapeError("byte probability row must have 256 entries");

  std::vector<BeamEntry> beam{BeamEntry{}};
  std::vector<BeamEntry> next;
  for (std::size_t pos = 0; pos < 4; ++pos) {
    next.clear();
    next.reserve(beam.size() * 256);
    for (const auto& entry : beam) {
      for (std::size_t b = 0; b < 256; ++b) {
        BeamEntry ext = entry;
        ext.bytes[pos] = static_cast<std::uint8_t>(b);
        ext.p = entry.p * byte_probs[pos][b];
        next.push_back(ext);
      }
    }
    const std::size_t keep = std::min(n, next.size());
    std::partial_sort(next.begin(), next.begin() + static_cast<std::ptrdiff_t>(keep),
                      next.end(), beam_before);
    next.resize(keep);
    beam = next;
  }

  std::vector<PrefetchCandidate> out;
  out.reserve(beam.size());
  for (const auto& entry : beam)
    out.push_back({embed::recompose({entry.bytes[0], entry.bytes[1], entry.bytes[2],
                                     entry.bytes[3]}),
                   entry.p});
  return out;
}

LeCarState make_lecar(std::size_t capacity, double lambda, std::uint64_t seed,
                      double discount) {
  if (capacity == 0) throw ConfigError("lecar ghost capacity must be positive");
  LeCarState state;
  state.ghost_capacity = capacity;
  state.lambda = lambda;
  state.discount =
      discount > 0.0 ? discount : std::pow(0.005, 1.0 / static_cast<double>(capacity));
  state.rng = Rng(seed);
  return state;
}

namespace {

void erase_ghost(std::deque<GhostEntry>& list, std::uint32_t address) {
  for (auto it = list.begin(); it != list.end(); ++it) {
    if (it->address == address) {
      list.erase(it);
      return;
    }
  }
}

void renormalize(LeCarState& state) {
  const double sum = state.w_f + state.w_r;
  state.w_f /= sum;
  state.w_r /= sum;
  // Keeps both weights strictly positive after long one-sided streaks.
  if (state.w_f < 1e-12 || state.w_r < 1e-12) {
    state.w_f = std::max(state.w_f, 1e-12);
    state.w_r = std::max(state.w_r, 1e-12);
    const double s2 = state.w_f + state.w_r;
    state.w_f /= s2;
    state.w_r /= s2;
  }
}

}  // namespace

EvictionChoice lecar_choose_victim(LeCarState& state,
                                   std::span<const EvictionCandidateScore> scores,
                                   std::uint64_t now) {
  if (scores.empty()) throw std::logic_error("lecar_choose_victim on an empty cache");
  const Expert expert =
      state.rng.next_double() < state.w_f ? Expert::frequency : Expert::recency;

  const EvictionCandidateScore* best = &scores[0];
  for (const auto& cand : scores) {
    bool wins;
    if (expert == Expert::frequency) {
      wins = cand.f < best->f ||
             (cand.f == best->f && (cand.last_access < best->last_access ||
                                    (cand.last_access == best->last_access &&
                                     cand.address < best->address)));
    } else {
      wins = cand.r > best->r ||
             (cand.r == best->r && (cand.last_access < best->last_access ||
                                    (cand.last_access == best->last_access &&
                                     cand.address < best->address)));
    }
    if (wins) best = &cand;
  }

  erase_ghost(state.ghost_f, best->address);
  erase_ghost(state.ghost_r, best->address);
  auto& list = expert == Expert::frequency ? state.ghost_f : state.ghost_r;
  list.push_back({best->address, now});
  if (list.size() > state.ghost_capacity) list.pop_front();
  return {best->address, expert};
}

void lecar_update(LeCarState& state, std::uint32_t missed_address, std::uint64_t now) {
  for (int side = 0; side < 2; ++side) {
    auto& list = side == 0 ? state.ghost_f : state.ghost_r;
    for (auto it = list.begin(); it != list.end(); ++it) {
      if (it->address != missed_address) continue;
      const double regret =
          std::pow(state.discount, static_cast<double>(now - it->evicted_at));
      const double gain = std::exp(state.lambda * regret);
      (side == 0 ? state.w_r : state.w_f) *= gain;
      list.erase(it);
      renormalize(state);
      return;
    }
  }
}

BaselinePolicy baseline_from_string(const std::string& name) {
  if (name == "lru") return BaselinePolicy::lru;
  if (name == "lfu") return BaselinePolicy::lfu;
  if (name == "fifo") return BaselinePolicy::fifo;
  if (name == "lifo") return BaselinePolicy::lifo;
  if (name == "belady") return BaselinePolicy::belady;
  throw ConfigError("unknown policy '" + name + "' (expected lru, lfu, fifo, lifo, belady)");
}

std::string to_string(BaselinePolicy policy) {
  switch (policy) {
    case BaselinePolicy::lru: return "lru";
    case BaselinePolicy::lfu: return "lfu";
    case BaselinePolicy::fifo: return "fifo";
    case BaselinePolicy::lifo: return "lifo";
    case BaselinePolicy::belady: return "belady";
  }
  throw std::logic_error("unreachable policy enum");
}

std::uint32_t baseline_evict(BaselinePolicy policy, std::span<const ResidentInfo> residents) {
  if (residents.empty()) throw std::logic_error("baseline_evict on an empty cache");
  if (policy == BaselinePolicy::belady)
    throw std::logic_error("belady eviction goes through belady_evict");

  const ResidentInfo* best = &residents[0];
  const auto older_lru = [](const ResidentInfo& a, const ResidentInfo& b) {
    if (a.last_access != b.last_access) return a.last_access < b.last_access;
    return a.address < b.address;
  };
  for (const auto& cand : residents) {
    bool wins = false;
    switch (policy) {
      case BaselinePolicy::lru:
        wins = older_lru(cand, *best);
        break;
      case BaselinePolicy::lfu:
        wins = cand.access_count < best->access_count ||
               (cand.access_count == best->access_count && older_lru(cand, *best));
        break;
      case BaselinePolicy::fifo:
        wins = cand.insert_time < best->insert_time ||
               (cand.insert_time == best->insert_time && cand.address < best->address);
        break;
      case BaselinePolicy::lifo:
        wins = cand.insert_time > best->insert_time ||
               (cand.insert_time == best->insert_time && cand.address < best->address);
        break;
      case BaselinePolicy::belady:
        break;
    }
    if (wins) best = &cand;
  }
  return best->address;
}

std::uint32_t belady_evict(std::span<const BeladyCandidate> residents) {
  if (residents.empty()) throw std::logic_error("belady_evict on an empty cache");
  const BeladyCandidate* best = &residents[0];
  for (const auto& cand : residents) {
    const bool cand_never = cand.next_use == trace::kNeverUsed;
    const bool best_never = best->next_use == trace::kNeverUsed;
    bool wins;
    if (cand_never != best_never) {
      wins = cand_never;
    } else if (cand.next_use != best->next_use) {
      wins = cand.next_use > best->next_use;
    } else {
      wins = cand.address < best->address;
    }
    if (wins) best = &cand;
  }
  return best->address;
}

}  // namespace deap::policy
