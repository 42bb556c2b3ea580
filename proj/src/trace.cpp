#include "deap/trace.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_map>

#include "deap/errors.hpp"
#include "deap/rng.hpp"

namespace deap::trace {

namespace {

std::string strip(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Hex with 0x prefix or plain decimal; the whole token must be consumed.
std::uint32_t parse_value(const std::string& token, std::size_t line_no) {
  const std::string t = strip(token);
  if (t.empty()) throw ParseError("empty field", line_no);
  int base = 10;
  std::size_t start = 0;
  if (t.size() > 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
    base = 16;
    start = 2;
  }
  std::uint64_t value = 0;
  for (std::size_t i = start; i < t.size(); ++i) {
    const char c = t[i];
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (base == 16 && c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (base == 16 && c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else throw ParseError(std::string("invalid digit '") + c + "'", line_no);
    value = value * base + static_cast<std::uint64_t>(digit);
    if (value > 0xFFFFFFFFull) throw ParseError("value exceeds 32 bits", line_no);
  }
  if (start == t.size()) throw ParseError("empty number", line_no);
  return static_cast<std::uint32_t>(value);
}

}  // namespace

LabeledTrace load_trace(const std::string& path, const std::string& format) {
  if (format != "csv") throw ConfigError("unknown trace format '" + format + "'");
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace file '" + path + "'");

  LabeledTrace out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string s = strip(line);
    if (s.empty() || s[0] == '#') continue;
    const std::size_t comma = s.find(',');
    if (comma == std::string::npos) throw ParseError("expected 'pc,address'", line_no);
    if (s.find(',', comma + 1) != std::string::npos)
      throw ParseError("expected exactly two fields", line_no);
    TraceRecord rec;
    rec.pc = parse_value(s.substr(0, comma), line_no);
    rec.address = parse_value(s.substr(comma + 1), line_no);
    rec.index = out.records.size();
    out.records.push_back(rec);
  }
  if (out.records.empty()) throw EmptyTraceError("trace file '" + path + "' has no records");
  return out;
}

void label_in_place(LabeledTrace& t, std::uint64_t cap) {
  const std::size_t n = t.records.size();
  if (cap <= n) throw ConfigError("label cap " + std::to_string(cap) +
                                  " must exceed trace length " + std::to_string(n));
  t.label_cap = cap;
  t.reuse_distance.assign(n, cap);
  t.future_frequency.assign(n, 0);
  t.next_use.assign(n, kNeverUsed);

  // One backward pass; next_pos holds the next occurrence seen so far.
  std::unordered_map<std::uint32_t, std::size_t> next_pos;
  std::unordered_map<std::uint32_t, std::uint64_t> later_count;
  for (std::size_t k = n; k-- > 0;) {
    const std::uint32_t a = t.records[k].address;
    auto it = next_pos.find(a);
    if (it != next_pos.end()) {
      t.next_use[k] = it->second;
      t.reuse_distance[k] = static_cast<std::uint64_t>(it->second - k);
      t.future_frequency[k] = later_count[a];
    }
    next_pos[a] = k;
    ++later_count[a];
  }
}

LabeledTrace label_trace(std::vector<TraceRecord> records, std::uint64_t cap) {
  LabeledTrace t;
  for (std::size_t i = 0; i < records.size(); ++i) records[i].index = i;
  t.records = std::move(records);
  label_in_place(t, cap);
  return t;
}

SynthKind synth_kind_from_string(const std::string& name) {
  if (name == "cyclic") return SynthKind::cyclic;
  if (name == "zipf") return SynthKind::zipf;
  if (name == "adversarial") return SynthKind::adversarial;
  throw ConfigError("unknown synthetic trace kind '" + name + "'");
}

LabeledTrace synth_trace(SynthKind kind, std::size_t length, std::uint64_t seed,
                         const SynthOptions& options) {
  if (length == 0) throw ConfigError("synthetic trace length must be positive");
  Rng rng(seed);
  std::vector<TraceRecord> recs;
  recs.reserve(length);

  switch (kind) {
    case SynthKind::cyclic: {
      const std::size_t p = options.period == 0 ? 1 : options.period;
      // Base addresses are seed-dependent so distinct seeds give distinct loops.
      const std::uint32_t addr_base = 0xA0000000u | static_cast<std::uint32_t>(rng.next_u64() & 0x000FFF00u);
      const std::uint32_t pc_base = 0x00400000u | static_cast<std::uint32_t>(rng.next_u64() & 0x0000FF00u);
      for (std::size_t i = 0; i < length; ++i) {
        const std::uint32_t k = static_cast<std::uint32_t>(i % p);
        recs.push_back({pc_base + k, addr_base + k, i});
      }
      break;
    }
    case SynthKind::zipf: {
      const std::size_t m = options.distinct == 0 ? 1 : options.distinct;
      std::vector<double> cdf(m);
      double total = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        total += 1.0 / std::pow(static_cast<double>(k + 1), options.exponent);
        cdf[k] = total;
      }
      const std::uint32_t addr_base = 0xB0000000u | static_cast<std::uint32_t>(rng.next_u64() & 0x00FFF000u);
      const std::uint32_t pc_base = 0x00401000u;
      for (std::size_t i = 0; i < length; ++i) {
        const double u = rng.next_double() * total;
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const std::uint32_t k = static_cast<std::uint32_t>(it - cdf.begin());
        recs.push_back({pc_base + (k & 0xFu), addr_base + k, i});
      }
      break;
    }
    case SynthKind::adversarial: {
      // Heavy hitters recur round-robin at long intervals; fillers are one-shot
      // addresses that look recent but never return.
      const std::size_t h = options.heavy_count == 0 ? 1 : options.heavy_count;
      const std::uint32_t heavy_base = 0xC0000000u | static_cast<std::uint32_t>(rng.next_u64() & 0x000FF000u);
      const std::uint32_t filler_base = 0xD0000000u;
      std::uint32_t filler_next = 0;
      std::size_t heavy_next = 0;
      for (std::size_t i = 0; i < length; ++i) {
        if (rng.next_double() < options.filler_share) {
          recs.push_back({0x00402000u, filler_base + filler_next++, i});
        } else {
          const std::uint32_t k = static_cast<std::uint32_t>(heavy_next % h);
          recs.push_back({0x00403000u + k, heavy_base + k, i});
          ++heavy_next;
        }
      }
      break;
    }
  }
  return label_trace(std::move(recs), static_cast<std::uint64_t>(length) + 1);
}

}  // namespace deap::trace
