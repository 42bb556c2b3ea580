#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace deap::trace {

struct TraceRecord {
  std::uint32_t pc = 0;
  std::uint32_t address = 0;
  std::size_t index = 0;  // 0-based position; strictly increasing within a trace
};

// Sentinel for "address never occurs again".
inline constexpr std::size_t kNeverUsed = std::numeric_limits<std::size_t>::max();

struct LabeledTrace {
  std::vector<TraceRecord> records;
  // Parallel to records; empty until label_trace runs.
  std::vector<std::uint64_t> reuse_distance;   // timesteps to next occurrence, cap if never
  std::vector<std::uint64_t> future_frequency; // later occurrences of the same address
  std::vector<std::size_t> next_use;           // index of next occurrence or kNeverUsed
  std::uint64_t label_cap = 0;

  std::size_t size() const { return records.size(); }
  bool labeled() const { return reuse_distance.size() == records.size() && label_cap != 0; }
};

// One record per line "pc,address" (hex with 0x prefix or decimal), optional
// '#' header lines, LF endings. Only format id "csv" is recognized.
LabeledTrace load_trace(const std::string& path, const std::string& format = "csv");

// cap must exceed the trace length so capped and real distances never collide.
LabeledTrace label_trace(std::vector<TraceRecord> records, std::uint64_t cap);
void label_in_place(LabeledTrace& t, std::uint64_t cap);

enum class SynthKind { cyclic, zipf, adversarial };
SynthKind synth_kind_from_string(const std::string& name);

struct SynthOptions {
  std::size_t period = 8;        // cyclic: loop length
  std::size_t distinct = 64;     // zipf: alphabet size
  double exponent = 1.0;         // zipf: skew
  std::size_t heavy_count = 16;  // adversarial: heavy-hitter set size
  double filler_share = 0.5;     // adversarial: fraction of one-shot fillers
};

// Deterministic for fixed (kind, length, seed, options); returned trace is labeled
// with cap = length + 1.
LabeledTrace synth_trace(SynthKind kind, std::size_t length, std::uint64_t seed,
                         const SynthOptions& options = {});

}  // namespace deap::trace
