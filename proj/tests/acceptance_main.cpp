// Acceptance suite. Each criterion is a named check that prints exactly one
// PASS/FAIL line; run one by name (argv[1]) or all with no arguments.
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deap/config.hpp"
#include "deap/embed.hpp"
#include "deap/errors.hpp"
#include "deap/kde.hpp"
#include "deap/model.hpp"
#include "deap/pipeline.hpp"
#include "deap/policy.hpp"
#include "deap/rng.hpp"
#include "deap/sim.hpp"
#include "deap/trace.hpp"

namespace {

using namespace deap;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& detail) {
  if (!cond) throw Failure(detail);
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------
// Baseline oracle equivalence: the one-pass simulator must agree exactly with
// a deliberately naive single-policy reference on random traces.

// Naive reference cache: flat vectors, full scans, no shared code with the
// simulator. Victim rules restate the policy definitions: LRU evicts the
// oldest access (ties: lower address), LFU the smallest count (ties: LRU),
// FIFO the oldest insertion, LIFO the newest insertion (ties: lower address).
std::uint64_t naive_hits(const std::vector<trace::TraceRecord>& recs,
                         policy::BaselinePolicy pol, std::size_t cap) {
  struct Line {
    std::uint32_t addr;
    std::uint64_t last, ins, cnt;
  };
  std::vector<Line> lines;
  std::uint64_t hits = 0;
  const auto lru_before = [](const Line& x, const Line& y) {
    return x.last != y.last ? x.last < y.last : x.addr < y.addr;
  };
  for (const auto& rec : recs) {
    const std::uint64_t now = rec.index;
    bool hit = false;
    for (auto& l : lines) {
      if (l.addr == rec.address) {
        l.last = now;
        l.cnt += 1;
        hit = true;
        break;
      }
    }
    if (hit) {
      ++hits;
      continue;
    }
    if (lines.size() == cap) {
      std::size_t v = 0;
      for (std::size_t j = 1; j < lines.size(); ++j) {
        const Line& x = lines[j];
        const Line& y = lines[v];
        bool wins = false;
        switch (pol) {
          case policy::BaselinePolicy::lru:
            wins = lru_before(x, y);
            break;
          case policy::BaselinePolicy::lfu:
            wins = x.cnt != y.cnt ? x.cnt < y.cnt : lru_before(x, y);
            break;
          case policy::BaselinePolicy::fifo:
            wins = x.ins != y.ins ? x.ins < y.ins : x.addr < y.addr;
            break;
          case policy::BaselinePolicy::lifo:
            wins = x.ins != y.ins ? x.ins > y.ins : x.addr < y.addr;
            break;
          case policy::BaselinePolicy::belady:
            break;
        }
        if (wins) v = j;
      }
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(v));
    }
    lines.push_back({rec.address, now, now, 1});
  }
  return hits;
}

// 100 seeded random traces, length <= 5000, mixing skewed, cyclic,
// heavy-hitter, and uniform-random access patterns.
std::vector<trace::LabeledTrace> make_oracle_traces() {
  std::vector<trace::LabeledTrace> traces;
  Rng rng(2024);
  for (int i = 0; i < 100; ++i) {
    const std::size_t length = 500 + rng.next_below(4501);
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
    trace::SynthOptions opt;
    switch (i % 4) {
      case 0:
        opt.distinct = 16 + rng.next_below(120);
        opt.exponent = 0.5 + 0.1 * static_cast<double>(i % 9);
        traces.push_back(trace::synth_trace(trace::SynthKind::zipf, length, seed, opt));
        break;
      case 1:
        opt.period = 2 + rng.next_below(60);
        traces.push_back(trace::synth_trace(trace::SynthKind::cyclic, length, seed, opt));
        break;
      case 2:
        opt.heavy_count = 4 + rng.next_below(28);
        opt.filler_share = 0.2 + 0.1 * static_cast<double>(i % 6);
        traces.push_back(trace::synth_trace(trace::SynthKind::adversarial, length, seed, opt));
        break;
      default: {
        const std::uint32_t pool = 4u << rng.next_below(8);
        std::vector<trace::TraceRecord> recs;
        recs.reserve(length);
        for (std::size_t k = 0; k < length; ++k)
          recs.push_back({0x400000u + static_cast<std::uint32_t>(rng.next_below(16)) * 4,
                          0x50000000u + static_cast<std::uint32_t>(rng.next_below(pool)),
                          k});
        traces.push_back(trace::label_trace(std::move(recs), length + 1));
        break;
      }
    }
  }
  return traces;
}

const std::size_t kOracleCapacities[] = {2, 8, 32};

void check_baseline_oracle() {
  const auto traces = make_oracle_traces();
  const auto m = model::make_model({.byte_embedding_dim = 2,
                                    .combiner_hidden = 2,
                                    .address_embedding_size = 2,
                                    .lstm_hidden = 2,
                                    .decoder_hidden = 2,
                                    .kde_probes = 2});
  const std::vector<std::string> names = {"lru", "lfu", "fifo", "lifo"};
  for (std::size_t ti = 0; ti < traces.size(); ++ti) {
    for (const std::size_t cap : kOracleCapacities) {
      sim::SimConfig cfg;
      cfg.capacity = cap;
      const auto rep = sim::run_simulation(traces[ti], m, cfg, names);
      for (std::size_t p = 0; p < names.size(); ++p) {
        const auto expect =
            naive_hits(traces[ti].records, policy::baseline_from_string(names[p]), cap);
        require(rep.policies[p].accesses == traces[ti].records.size(),
                "access count mismatch on trace " + std::to_string(ti));
        require(rep.policies[p].hits == expect,
                names[p] + " hits " + std::to_string(rep.policies[p].hits) + " != reference " +
                    std::to_string(expect) + " on trace " + std::to_string(ti) + " capacity " +
                    std::to_string(cap));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Belady dominance, plus exhaustive optimality on small instances.

// Best achievable hit count over every eviction sequence (misses always
// insert). Plain DFS; instances are capped at length 12, capacity 3.
std::uint64_t exhaustive_best_hits(const std::vector<std::uint32_t>& addrs, std::size_t cap,
                                   std::size_t pos, std::vector<std::uint32_t>& res) {
  if (pos == addrs.size()) return 0;
  const std::uint32_t a = addrs[pos];
  if (std::find(res.begin(), res.end(), a) != res.end())
    return 1 + exhaustive_best_hits(addrs, cap, pos + 1, res);
  if (res.size() < cap) {
    res.push_back(a);
    const auto best = exhaustive_best_hits(addrs, cap, pos + 1, res);
    res.pop_back();
    return best;
  }
  std::uint64_t best = 0;
  for (std::size_t v = 0; v < res.size(); ++v) {
    const std::uint32_t saved = res[v];
    res[v] = a;
    best = std::max(best, exhaustive_best_hits(addrs, cap, pos + 1, res));
    res[v] = saved;
  }
  return best;
}

void check_belady_dominance() {
  const auto traces = make_oracle_traces();
  const auto m = model::make_model({.byte_embedding_dim = 2,
                                    .combiner_hidden = 2,
                                    .address_embedding_size = 2,
                                    .lstm_hidden = 2,
                                    .decoder_hidden = 2,
                                    .kde_probes = 2});
  const std::vector<std::string> names = {"lru", "lfu", "fifo", "lifo", "belady"};
  for (std::size_t ti = 0; ti < traces.size(); ++ti) {
    for (const std::size_t cap : kOracleCapacities) {
      sim::SimConfig cfg;
      cfg.capacity = cap;
      const auto rep = sim::run_simulation(traces[ti], m, cfg, names);
      const auto belady = rep.policies.back().hits;
      for (std::size_t p = 0; p + 1 < names.size(); ++p)
        require(belady >= rep.policies[p].hits,
                "belady " + std::to_string(belady) + " < " + names[p] + " " +
                    std::to_string(rep.policies[p].hits) + " on trace " + std::to_string(ti) +
                    " capacity " + std::to_string(cap));
    }
  }

  Rng rng(77);
  for (int i = 0; i < 300; ++i) {
    const std::size_t length = 1 + rng.next_below(12);
    const std::size_t alphabet = 1 + rng.next_below(5);
    const std::size_t cap = 1 + rng.next_below(3);
    std::vector<trace::TraceRecord> recs;
    std::vector<std::uint32_t> addrs;
    for (std::size_t k = 0; k < length; ++k) {
      const std::uint32_t a = 0xE0u + static_cast<std::uint32_t>(rng.next_below(alphabet));
      addrs.push_back(a);
      recs.push_back({0x400000u, a, k});
    }
    const auto t = trace::label_trace(std::move(recs), length + 1);
    const auto stats = sim::run_baseline(t, policy::BaselinePolicy::belady, cap);
    std::vector<std::uint32_t> res;
    const auto best = exhaustive_best_hits(addrs, cap, 0, res);
    require(stats.hits == best, "belady hits " + std::to_string(stats.hits) +
                                    " != exhaustive optimum " + std::to_string(best) +
                                    " on instance " + std::to_string(i));
  }
}

// ---------------------------------------------------------------------------
// Gradient correctness: full-model finite differences on a tiny setup.

void check_gradient_correctness() {
  const model::ModelDims dims{.byte_embedding_dim = 3,
                              .combiner_hidden = 6,
                              .address_embedding_size = 5,
                              .lstm_hidden = 4,
                              .decoder_hidden = 4,
                              .kde_probes = 3};
  std::vector<trace::TraceRecord> recs = {
      {0x401000, 0xAABB0010, 0}, {0x401004, 0xAABB0020, 1}, {0x401000, 0xAABB0010, 2},
      {0x401008, 0xCCDD0030, 3}, {0x401004, 0xAABB0020, 4}, {0x401000, 0xAABB0040, 5},
      {0x40100C, 0xAABB0010, 6},
  };

  for (const double temperature : {0.7, 1e-2}) {
    auto m = model::init_model(dims, 99);
    kde::KdeWindow window(50, 1e-2);
    for (std::size_t i = 0; i < 5; ++i) window.push(model::step_embedding(m, recs[i]));
    const auto dist = kde::distribution_vector(window, dims.kde_probes).values;

    std::vector<model::TrainingSample> batch;
    model::TrainingSample s0;
    s0.begin = 0;
    s0.length = 5;
    s0.target_address = recs[5].address;
    s0.target_frequency = 2.0;
    s0.target_reuse = 7.0;
    s0.distribution = dist;
    batch.push_back(s0);
    model::TrainingSample s1 = s0;
    s1.begin = 1;
    s1.target_address = recs[6].address;
    s1.target_frequency = 1.0;
    s1.target_reuse = 3.0;
    batch.push_back(s1);

    const model::LossWeights w{0.4, 0.35, 0.25};
    model::DeapGradients grads(m);
    auto refs = model::parameter_refs(m, grads, true);
    const auto report = nn::grad_check(
        refs, [&] { return model::evaluate_batch(m, recs, batch, w, temperature).total; },
        [&] {
          grads.zero();
          model::accumulate_gradients(m, recs, batch, w, temperature, grads);
        });
    require(report.max_rel_error < 1e-4,
            fmt("max relative error %.3g at temperature %.3g (group ", report.max_rel_error,
                temperature) +
                report.worst_group + ")");
  }
}

// ---------------------------------------------------------------------------
// Learnability: defaults on a cyclic miss trace, held-out top-1 accuracy.

// Period-8 cyclic miss trace whose addresses and instruction addresses differ
// in every byte, so each byte head has to track the cycle position.
trace::LabeledTrace spread_cycle(std::size_t total) {
  static const std::uint32_t addrs[8] = {0x9D3A1C45, 0x27B8E691, 0x5EC47D02, 0xF1096AB3,
                                         0x83D725F8, 0x4A61B3C7, 0xC8F4082A, 0x36E5D97C};
  static const std::uint32_t pcs[8] = {0x1B72A9E4, 0xA40C5F18, 0x6391E8D5, 0xD8264B90,
                                       0x0FB3762B, 0x95E8C143, 0x2C5A30F7, 0x7E0D94A6};
  std::vector<trace::TraceRecord> recs;
  recs.reserve(total);
  for (std::size_t i = 0; i < total; ++i) recs.push_back({pcs[i % 8], addrs[i % 8], i});
  return trace::label_trace(std::move(recs), total + 1);
}

void check_learnability() {
  const std::size_t total = 32768;
  const std::size_t train_len = (total * 4) / 5;
  const auto full = spread_cycle(total);

  std::vector<trace::TraceRecord> head(full.records.begin(),
                                       full.records.begin() + static_cast<long>(train_len));
  const auto train = trace::label_trace(std::move(head), train_len + 1);

  const model::ModelDims dims;  // published defaults
  auto m = model::init_model(dims, 7);
  const model::TrainConfig cfg;  // published defaults
  const auto losses = model::train_model(m, train, cfg);
  require(losses.size() == cfg.epochs, "unexpected epoch count");

  const double initial = (losses[0].total + losses[1].total) / 2.0;
  const double final_s =
      (losses[cfg.epochs - 2].total + losses[cfg.epochs - 1].total) / 2.0;
  require(final_s < 0.5 * initial,
          fmt("smoothed total loss %.4f not below half of initial %.4f", final_s, initial));

  // Held-out windows drawn strictly after the training prefix.
  std::array<std::uint64_t, 4> correct{};
  std::uint64_t count = 0;
  for (std::size_t t = train_len + cfg.sequence_length; t < total; ++t) {
    const std::span<const trace::TraceRecord> window(full.records.data() + t -
                                                         cfg.sequence_length,
                                                     cfg.sequence_length);
    const auto probs = model::prefetch_forward(m, window);
    const auto target = embed::tokenize(full.records[t].address);
    for (std::size_t b = 0; b < 4; ++b) {
      const auto it = std::max_element(probs[b].begin(), probs[b].end());
      if (static_cast<std::size_t>(it - probs[b].begin()) == target.b[b]) ++correct[b];
    }
    ++count;
  }
  require(count > 100, "too few held-out windows");
  for (std::size_t b = 0; b < 4; ++b) {
    const double acc = static_cast<double>(correct[b]) / static_cast<double>(count);
    require(acc > 0.90, fmt("byte %.0f held-out top-1 accuracy %.4f <= 0.90",
                            static_cast<double>(b), acc));
  }
}

// ---------------------------------------------------------------------------
// LeCaR convergence under a workload where frequency is the right expert.

sim::FutureScorer adversarial_recency_scorer(const trace::LabeledTrace& t) {
  auto positions = std::make_shared<std::unordered_map<std::uint32_t, std::vector<std::uint64_t>>>();
  for (const auto& rec : t.records) (*positions)[rec.address].push_back(rec.index);
  return [positions](std::uint32_t address, std::uint64_t now) -> std::pair<double, double> {
    const auto& ps = (*positions)[address];
    const auto it = std::upper_bound(ps.begin(), ps.end(), now);
    const double f = static_cast<double>(ps.end() - it);
    // Recency signal is deliberately wrong: one-shot fillers claim immediate
    // reuse, recurring heavy hitters claim none.
    const double r = address >= 0xD0000000u ? 0.0 : 1e6;
    return {f, r};
  };
}

void check_lecar_convergence() {
  trace::SynthOptions opt;
  opt.heavy_count = 24;
  opt.filler_share = 0.5;
  const auto t = trace::synth_trace(trace::SynthKind::adversarial, 10000, 5, opt);
  const auto m = model::make_model({.byte_embedding_dim = 2,
                                    .combiner_hidden = 2,
                                    .address_embedding_size = 2,
                                    .lstm_hidden = 2,
                                    .decoder_hidden = 2,
                                    .kde_probes = 2});

  sim::SimConfig cfg;
  cfg.capacity = 32;
  cfg.admission = {.alpha = 0.0, .beta = 1e18};  // admit everything
  cfg.prefetch_n = 0;
  cfg.lecar_lambda = 0.45;
  sim::LearnedOptions options;
  options.scorer = adversarial_recency_scorer(t);

  const auto stats = sim::run_learned(t, m, cfg, options);
  require(stats.accesses == 10000, "unexpected access count");
  require(stats.final_w_f > 0.9,
          fmt("frequency weight %.4f <= 0.9 after %.0f misses", stats.final_w_f,
              static_cast<double>(stats.accesses - stats.hits)));

  cfg.lecar_lambda = 0.0;
  const auto frozen = sim::run_learned(t, m, cfg, options);
  require(frozen.final_w_f == 0.5 && frozen.final_w_r == 0.5,
          fmt("weights (%.17g, %.17g) drifted with a zero learning rate", frozen.final_w_f,
              frozen.final_w_r));
}

// ---------------------------------------------------------------------------
// End-to-end superiority at desk scale.

// Program-like trace: phase-interleaved zipf hot set, sequential loop sweeps
// with persistent position, and one-shot scans, each in its own address
// region with its own instruction addresses.
trace::LabeledTrace make_program_trace(std::uint64_t seed, std::size_t length) {
  Rng rng(seed);
  constexpr std::size_t kHot = 24;
  constexpr std::size_t kLoop = 64;
  std::vector<double> cdf(kHot);
  double total = 0.0;
  for (std::size_t k = 0; k < kHot; ++k) {
    total += 1.0 / static_cast<double>(k + 1);
    cdf[k] = total;
  }

  std::vector<trace::TraceRecord> recs;
  recs.reserve(length);
  std::size_t loop_pos = 0;
  std::uint32_t scan_next = 0;
  const auto push = [&](std::uint32_t pc, std::uint32_t addr) {
    recs.push_back({pc, addr, recs.size()});
  };
  while (recs.size() < length) {
    const std::size_t hot_len = 400 + rng.next_below(200);
    for (std::size_t i = 0; i < hot_len && recs.size() < length; ++i) {
      const double u = rng.next_double() * total;
      const auto k = static_cast<std::size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      push(0x00400000u + static_cast<std::uint32_t>(k % 8) * 4,
           0x10000000u + static_cast<std::uint32_t>(k) * 0x100u);
    }
    const std::size_t loop_len = 250 + rng.next_below(100);
    for (std::size_t i = 0; i < loop_len && recs.size() < length; ++i) {
      push(0x00401000u + static_cast<std::uint32_t>(loop_pos % 4) * 4,
           0x20000000u + static_cast<std::uint32_t>(loop_pos % kLoop) * 4);
      ++loop_pos;
    }
    const std::size_t scan_len = 60 + rng.next_below(40);
    for (std::size_t i = 0; i < scan_len && recs.size() < length; ++i) {
      push(0x00402000u, 0x30000000u + scan_next * 4);
      ++scan_next;
    }
  }
  return trace::label_trace(std::move(recs), length + 1);
}

void check_end_to_end() {
  const std::size_t length = 100000;
  const model::ModelDims dims;  // published defaults
  auto m = model::init_model(dims, 13);

  model::TrainConfig tcfg;  // published defaults except epochs and the sampling cap
  tcfg.epochs = 10;
  tcfg.windows_per_epoch = 4096;
  for (const std::uint64_t seed : {101ull, 102ull, 103ull})
    model::train_model(m, make_program_trace(seed, length), tcfg);

  sim::SimConfig scfg;  // published defaults
  const std::vector<std::string> names = {"learned", "lru",  "lfu",
                                          "fifo",    "lifo", "belady"};
  std::map<std::string, double> mean;
  for (const std::uint64_t seed : {104ull, 105ull}) {
    const auto t = make_program_trace(seed, length);
    const auto rep = sim::run_simulation(t, m, scfg, names);
    for (const auto& p : rep.policies) mean[p.policy] += p.hit_rate / 2.0;
  }

  const double best_baseline =
      std::max({mean["lru"], mean["lfu"], mean["fifo"], mean["lifo"]});
  require(mean["learned"] >= best_baseline + 0.01,
          fmt("learned mean hit rate %.4f does not exceed best baseline %.4f by 0.01",
              mean["learned"], best_baseline));
  require(mean["learned"] <= mean["belady"] + 0.05,
          fmt("learned mean hit rate %.4f above belady %.4f + 0.05", mean["learned"],
              mean["belady"]));
}

// ---------------------------------------------------------------------------
// Determinism: rerunning every command with the same seed reproduces every
// artifact byte for byte.

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot reopen artifact " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void check_determinism() {
  const std::string dir = "acceptance_tmp_determinism";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  {
    std::ofstream out(dir + "/trace.csv");
    for (std::size_t i = 0; i < 400; ++i) {
      const std::size_t k = i % 6;
      out << "0x" << std::hex << (0x400000 + 4 * k) << ",0x" << (0xA0 + k) << std::dec << "\n";
    }
  }

  config::RunConfig c;
  c.trace_path = dir + "/trace.csv";
  c.tables_path = dir + "/tables.bin";
  c.checkpoint_path = dir + "/model.ckpt";
  c.output_dir = dir + "/out";
  c.number_of_epochs = 1;
  c.training_batch_size = 32;
  c.prefetching_input_sequence_length = 20;
  c.lstm_hidden_cell_size = 20;
  c.address_embedding_size = 5;
  c.word2vec_number_of_epochs = 20;
  c.word2vec_encoder_hidden_layer_size = 50;
  c.word2vec_byte_embedding_dimension = 5;
  c.word2vec_context_size = 2;
  c.miss_buffer_size = 30;
  c.test_simulation_prefetching_interval = 10;
  c.test_simulation_batch_size = 5000;
  c.rng_seed = 9;
  config::validate_config(c);

  const std::vector<std::string> artifacts = {
      c.tables_path,          dir + "/out/pretrain_log.json", c.checkpoint_path,
      dir + "/out/training_curve.csv", dir + "/out/report_trace.json",
      dir + "/out/report_trace.csv",   dir + "/out/comparison.csv"};

  const auto run_all = [&] {
    pipeline::cmd_pretrain(c);
    pipeline::cmd_train(c);
    const auto report = pipeline::cmd_simulate(c);
    pipeline::cmd_report({report}, dir + "/out/comparison.csv");
  };

  run_all();
  std::map<std::string, std::string> first;
  for (const auto& p : artifacts) first[p] = slurp(p);
  run_all();
  for (const auto& p : artifacts)
    require(slurp(p) == first[p], "artifact " + p + " changed across reruns");
}

// ---------------------------------------------------------------------------
// KDE correctness: quadrature mass and the single-sample analytic peak.

void check_kde_correctness() {
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    kde::KdeWindow w(50, 1e-2);
    const std::size_t n = 1 + rng.next_below(50);
    const double center = rng.next_uniform(-20.0, 20.0);
    const double spread = i % 5 == 0 ? 1e-6 : rng.next_uniform(0.05, 5.0);
    for (std::size_t k = 0; k < n; ++k)
      w.push(nn::Vector{center + spread * rng.next_gaussian()});

    const auto h = kde::bandwidth_silverman(w);
    double lo = 1e300;
    double hi = -1e300;
    for (const auto& e : w.entries) {
      lo = std::min(lo, e[0]);
      hi = std::max(hi, e[0]);
    }
    lo -= 10.0 * h[0];
    hi += 10.0 * h[0];
    const std::size_t steps = 20000;
    const double dx = (hi - lo) / static_cast<double>(steps);
    double integral = 0.0;
    for (std::size_t s = 0; s <= steps; ++s) {
      const double x = lo + dx * static_cast<double>(s);
      const double weight = (s == 0 || s == steps) ? 0.5 : 1.0;
      integral += weight * kde::kde_density(w, h, nn::Vector{x});
    }
    integral *= dx;
    require(std::abs(integral - 1.0) <= 0.02,
            fmt("window %.0f: density mass %.5f outside 1 +- 0.02", static_cast<double>(i),
                integral));
  }

  kde::KdeWindow single(50, 1e-2);
  single.push(nn::Vector{3.25});
  const auto h = kde::bandwidth_silverman(single);
  const double peak = kde::kde_density(single, h, nn::Vector{3.25});
  const double expected = 1.0 / std::sqrt(2.0 * 3.14159265358979323846 * h[0] * h[0]);
  require(std::abs(peak - expected) <= 1e-9 * expected,
          fmt("single-sample peak %.12g != analytic %.12g", peak, expected));
}

// ---------------------------------------------------------------------------

struct CriterionDef {
  const char* name;
  void (*fn)();
};

const CriterionDef kCriteria[] = {
    {"baseline_oracle", check_baseline_oracle},
    {"belady_dominance", check_belady_dominance},
    {"gradient_correctness", check_gradient_correctness},
    {"learnability", check_learnability},
    {"lecar_convergence", check_lecar_convergence},
    {"end_to_end", check_end_to_end},
    {"determinism", check_determinism},
    {"kde_correctness", check_kde_correctness},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<const CriterionDef*> todo;
  if (argc > 1) {
    for (const auto& c : kCriteria)
      if (std::string(argv[1]) == c.name) todo.push_back(&c);
    if (todo.empty()) {
      std::fprintf(stderr, "unknown criterion '%s'; available:", argv[1]);
      for (const auto& c : kCriteria) std::fprintf(stderr, " %s", c.name);
      std::fprintf(stderr, "\n");
      return 2;
    }
  } else {
    for (const auto& c : kCriteria) todo.push_back(&c);
  }

  int failures = 0;
  for (const auto* c : todo) {
    try {
      c->fn();
      std::printf("PASS %s\n", c->name);
    } catch (const Failure& f) {
      std::printf("FAIL %s: %s\n", c->name, f.what());
      ++failures;
    } catch (const std::exception& e) {
      std::printf("FAIL %s: unexpected error: %s\n", c->name, e.what());
      ++failures;
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
