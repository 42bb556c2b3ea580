#include "deap/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <deque>
#include <fstream>
#include <memory>
#include <unordered_map>

#include "deap/errors.hpp"
#include "deap/kde.hpp"
#include "json.hpp"

namespace deap::sim {

BufferSampling buffer_sampling_from_string(const std::string& name) {
  if (name == "recent") return BufferSampling::recent;
  if (name == "uniform") return BufferSampling::uniform;
  throw ConfigError("unknown buffer_sampling '" + name + "' (expected recent or uniform)");
}

namespace {

class BatchTracker {
 public:
  BatchTracker(std::size_t batch_size, PolicyStats& stats)
      : batch_size_(batch_size), stats_(stats) {}

  void access(bool hit) {
    ++stats_.accesses;
    ++batch_accesses_;
    if (hit) {
      ++stats_.hits;
      ++batch_hits_;
    }
    if (batch_size_ != 0 && batch_accesses_ == batch_size_) flush();
  }

  void finish() {
    if (batch_accesses_ > 0) flush();
    stats_.hit_rate = stats_.accesses == 0
                          ? 0.0
                          : static_cast<double>(stats_.hits) /
                                static_cast<double>(stats_.accesses);
  }

 private:
  void flush() {
    const double rate =
        static_cast<double>(batch_hits_) / static_cast<double>(batch_accesses_);
    stats_.batches.push_back({stats_.accesses, batch_accesses_, batch_hits_, rate});
    batch_accesses_ = 0;
    batch_hits_ = 0;
  }

  std::size_t batch_size_;
  PolicyStats& stats_;
  std::uint64_t batch_accesses_ = 0;
  std::uint64_t batch_hits_ = 0;
};

void note_peak(SimLog* log, std::size_t residents) {
  if (log != nullptr) log->peak_residents = std::max(log->peak_residents, residents);
}

class BaselineCache {
 public:
  BaselineCache(policy::BaselinePolicy p, std::size_t capacity, const trace::LabeledTrace& t,
                PolicyStats& stats, std::size_t batch_size, SimLog* log)
      : policy_(p), capacity_(capacity), trace_(t), stats_(stats),
        batches_(batch_size, stats), log_(log) {
    if (capacity == 0) throw ConfigError("cache capacity must be positive");
    if (p == policy::BaselinePolicy::belady && !t.labeled())
      throw ConfigError("belady needs a labeled trace");
    stats_.policy = policy::to_string(p);
  }

  void step(const trace::TraceRecord& rec) {
    const std::uint64_t now = rec.index;
    const auto it = residents_.find(rec.address);
    const bool hit = it != residents_.end();
    if (hit) {
      it->second.last_access = now;
      it->second.access_count += 1;
      it->second.next_use = trace_.next_use.empty() ? trace::kNeverUsed
                                                    : trace_.next_use[rec.index];
    } else {
      if (residents_.size() == capacity_) evict(now);
      Entry e;
      e.last_access = now;
      e.insert_time = now;
      e.access_count = 1;
      e.next_use = trace_.next_use.empty() ? trace::kNeverUsed : trace_.next_use[rec.index];
      residents_.emplace(rec.address, e);
    }
    assert(residents_.size() <= capacity_);
    note_peak(log_, residents_.size());
    if (log_ != nullptr) log_->hit_per_step.push_back(hit ? 1 : 0);
    batches_.access(hit);
  }

  void finish() { batches_.finish(); }

 private:
  struct Entry {
    std::uint64_t last_access = 0;
    std::uint64_t insert_time = 0;
    std::uint64_t access_count = 0;
    std::size_t next_use = trace::kNeverUsed;
  };

  void evict(std::uint64_t now) {
    std::uint32_t victim;
    if (policy_ == policy::BaselinePolicy::belady) {
      std::vector<policy::BeladyCandidate> cands;
      cands.reserve(residents_.size());
      for (const auto& [addr, e] : residents_) cands.push_back({addr, e.next_use});
      victim = policy::belady_evict(cands);
    } else {
      std::vector<policy::ResidentInfo> cands;
      cands.reserve(residents_.size());
      for (const auto& [addr, e] : residents_)
        cands.push_back({addr, e.last_access, e.insert_time, e.access_count});
      victim = policy::baseline_evict(policy_, cands);
    }
    residents_.erase(victim);
    ++stats_.evictions;
    if (log_ != nullptr) log_->evictions.push_back({now, victim});
  }

  policy::BaselinePolicy policy_;
  std::size_t capacity_;
  const trace::LabeledTrace& trace_;
  PolicyStats& stats_;
  BatchTracker batches_;
  SimLog* log_;
  std::unordered_map<std::uint32_t, Entry> residents_;
};

class LearnedCache {
 public:
  LearnedCache(const model::DeapModel& m, const SimConfig& cfg, const LearnedOptions& options,
               PolicyStats& stats, SimLog* log)
      : model_(m), cfg_(cfg), scorer_(options.scorer), stats_(stats),
        batches_(cfg.batch_size, stats), log_(log),
        kde_window_(cfg.kde_window, cfg.kde_bandwidth_floor),
        sampler_(cfg.rng_seed ^ 0x9e3779b97f4a7c15ull) {
    if (cfg.capacity == 0) throw ConfigError("cache capacity must be positive");
    lecar_ = policy::make_lecar(cfg.capacity, cfg.lecar_lambda, cfg.rng_seed,
                                cfg.lecar_discount);
    lecar_.w_f = options.initial_w_f;
    lecar_.w_r = 1.0 - options.initial_w_f;
    stats_.policy = "learned";
  }

  void step(const trace::TraceRecord& rec) {
    const std::uint64_t now = rec.index;
    const auto it = residents_.find(rec.address);
    const bool hit = it != residents_.end();
    if (hit) {
      it->second.last_access = now;
      it->second.access_count += 1;
      if (it->second.prefetched_unused) {
        it->second.prefetched_unused = false;
        ++stats_.prefetch_useful;
      }
    } else {
      miss(rec, now);
    }
    assert(residents_.size() <= cfg_.capacity);
    note_peak(log_, residents_.size());
    if (log_ != nullptr) log_->hit_per_step.push_back(hit ? 1 : 0);
    batches_.access(hit);
  }

  void finish() {
    batches_.finish();
    stats_.final_w_f = lecar_.w_f;
    stats_.final_w_r = lecar_.w_r;
  }

 private:
  struct Entry {
    std::uint64_t last_access = 0;
    std::uint64_t insert_time = 0;
    std::uint64_t access_count = 0;
    nn::Vector embedding;  // address embedding cached at insert
    double f = 0.0;
    double r = 0.0;
    bool prefetched_unused = false;
  };

  nn::Vector current_distribution() const {
    return kde::distribution_vector(kde_window_, model_.dims.kde_probes).values;
  }

  std::pair<double, double> score_address(std::uint32_t address, std::uint64_t now,
                                          const nn::Vector& dist,
                                          const nn::Vector* embedding) const {
    if (scorer_) return scorer_(address, now);
    if (embedding != nullptr) return model::decode_future(model_, *embedding, dist);
    return model::decode_future(model_, model::address_embedding(model_, address), dist);
  }

  void miss(const trace::TraceRecord& rec, std::uint64_t now) {
    // (1) remember the miss
    miss_ring_.push_back(rec);
    if (miss_ring_.size() > cfg_.miss_buffer_capacity) miss_ring_.pop_front();
    // (2) regret update
    policy::lecar_update(lecar_, rec.address, now);
    // (3) score the missed address against the pre-miss distribution
    const nn::Vector dist = current_distribution();
    const auto [f, r] = score_address(rec.address, now, dist, nullptr);
    // (4) admission
    if (policy::admit(f, r, cfg_.admission)) {
      ++stats_.admissions;
      if (residents_.size() == cfg_.capacity) evict(now, dist);
      insert(rec.address, now, f, r, /*prefetched=*/false);
    } else {
      ++stats_.rejections;
    }
    if (!scorer_) kde_window_.push(model::step_embedding(model_, rec));
    // (5) periodic prefetch, after the access is resolved
    if (cfg_.prefetch_n > 0 && cfg_.prefetch_interval > 0 &&
        (now + 1) % cfg_.prefetch_interval == 0 &&
        miss_ring_.size() >= cfg_.prefetch_window)
      prefetch(now);
  }

  void insert(std::uint32_t address, std::uint64_t now, double f, double r, bool prefetched) {
    Entry e;
    e.last_access = now;
    e.insert_time = now;
    e.access_count = prefetched ? 0 : 1;
    if (!scorer_) e.embedding = model::address_embedding(model_, address);
    e.f = f;
    e.r = r;
    e.prefetched_unused = prefetched;
    residents_.emplace(address, std::move(e));
  }

  void evict(std::uint64_t now, const nn::Vector& dist) {
    std::vector<policy::EvictionCandidateScore> scores;
    scores.reserve(residents_.size());
    for (const auto& [addr, e] : residents_) {
      double f = e.f, r = e.r;
      if (!cfg_.stale_scores) {
        const auto fresh = score_address(addr, now, dist, &e.embedding);
        f = fresh.first;
        r = fresh.second;
      }
      scores.push_back({addr, std::max(f, 0.0), std::max(r, 0.0), e.last_access});
    }
    const auto choice = policy::lecar_choose_victim(lecar_, scores, now);
    residents_.erase(choice.address);
    ++stats_.evictions;
    if (log_ != nullptr) log_->evictions.push_back({now, choice.address});
  }

  void prefetch(std::uint64_t now) {
    std::vector<trace::TraceRecord> window;
    window.reserve(cfg_.prefetch_window);
    if (cfg_.buffer_sampling == BufferSampling::recent) {
      const std::size_t start = miss_ring_.size() - cfg_.prefetch_window;
      for (std::size_t i = start; i < miss_ring_.size(); ++i)
        window.push_back(miss_ring_[i]);
    } else {
      // Sample without replacement, keep chronological order.
      std::vector<std::size_t> idx(miss_ring_.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      for (std::size_t i = 0; i < cfg_.prefetch_window; ++i) {
        const std::size_t j = i + sampler_.next_below(idx.size() - i);
        std::swap(idx[i], idx[j]);
      }
      idx.resize(cfg_.prefetch_window);
      std::sort(idx.begin(), idx.end());
      for (const std::size_t i : idx) window.push_back(miss_ring_[i]);
    }

    const auto rows = model::prefetch_forward(model_, window);
    const auto candidates = policy::select_prefetch_candidates(rows, cfg_.prefetch_n);
    const nn::Vector dist = current_distribution();
    for (const auto& cand : candidates) {
      if (residents_.contains(cand.address)) continue;  // refreshing nothing
      const auto [f, r] = score_address(cand.address, now, dist, nullptr);
      if (residents_.size() == cfg_.capacity) evict(now, dist);
      insert(cand.address, now, f, r, /*prefetched=*/true);
      ++stats_.prefetch_issued;
    }
  }

  const model::DeapModel& model_;
  SimConfig cfg_;
  FutureScorer scorer_;
  PolicyStats& stats_;
  BatchTracker batches_;
  SimLog* log_;
  policy::LeCarState lecar_{};
  kde::KdeWindow kde_window_;
  Rng sampler_;
  std::deque<trace::TraceRecord> miss_ring_;
  std::unordered_map<std::uint32_t, Entry> residents_;
};

}  // namespace

PolicyStats run_baseline(const trace::LabeledTrace& t, policy::BaselinePolicy policy,
                         std::size_t capacity, std::size_t batch_size, SimLog* log) {
  PolicyStats stats;
  BaselineCache cache(policy, capacity, t, stats, batch_size, log);
  for (const auto& rec : t.records) cache.step(rec);
  cache.finish();
  return stats;
}

PolicyStats run_learned(const trace::LabeledTrace& t, const model::DeapModel& m,
                        const SimConfig& cfg, const LearnedOptions& options, SimLog* log) {
  PolicyStats stats;
  LearnedCache cache(m, cfg, options, stats, log);
  for (const auto& rec : t.records) cache.step(rec);
  cache.finish();
  return stats;
}

SimulationReport run_simulation(const trace::LabeledTrace& t, const model::DeapModel& m,
                                const SimConfig& cfg, const std::vector<std::string>& policies,
                                const std::string& trace_name) {
  static const std::vector<std::string> kAll = {"learned", "lru", "lfu",
                                                "fifo",    "lifo", "belady"};
  const auto& chosen = policies.empty() ? kAll : policies;

  SimulationReport report;
  report.trace_name = trace_name;
  report.trace_length = t.size();
  report.capacity = cfg.capacity;
  report.policies.resize(chosen.size());

  std::vector<std::unique_ptr<LearnedCache>> learned;
  std::vector<std::unique_ptr<BaselineCache>> baselines;
  struct Stepper {
    LearnedCache* learned = nullptr;
    BaselineCache* baseline = nullptr;
  };
  std::vector<Stepper> steppers;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (chosen[i] == "learned") {
      learned.push_back(std::make_unique<LearnedCache>(m, cfg, LearnedOptions{},
                                                       report.policies[i], nullptr));
      steppers.push_back({learned.back().get(), nullptr});
    } else {
      baselines.push_back(std::make_unique<BaselineCache>(
          policy::baseline_from_string(chosen[i]), cfg.capacity, t, report.policies[i],
          cfg.batch_size, nullptr));
      steppers.push_back({nullptr, baselines.back().get()});
    }
  }

  for (const auto& rec : t.records)
    for (auto& s : steppers)
      s.learned != nullptr ? s.learned->step(rec) : s.baseline->step(rec);
  for (auto& s : steppers)
    s.learned != nullptr ? s.learned->finish() : s.baseline->finish();
  return report;
}

namespace {

nlohmann::ordered_json policy_to_json(const PolicyStats& p) {
  nlohmann::ordered_json j;
  j["policy"] = p.policy;
  j["accesses"] = p.accesses;
  j["hits"] = p.hits;
  j["hit_rate"] = p.hit_rate;
  j["evictions"] = p.evictions;
  j["admissions"] = p.admissions;
  j["rejections"] = p.rejections;
  j["prefetch_issued"] = p.prefetch_issued;
  j["prefetch_useful"] = p.prefetch_useful;
  j["final_weights"] = {{"frequency", p.final_w_f}, {"recency", p.final_w_r}};
  auto batches = nlohmann::ordered_json::array();
  for (const auto& b : p.batches)
    batches.push_back(nlohmann::ordered_json{{"end", b.end},
                                             {"accesses", b.accesses},
                                             {"hits", b.hits},
                                             {"hit_rate", b.hit_rate}});
  j["batches"] = std::move(batches);
  return j;
}

}  // namespace

std::string report_to_json(const SimulationReport& report) {
  nlohmann::ordered_json j;
  j["trace"] = report.trace_name;
  j["trace_length"] = report.trace_length;
  j["capacity"] = report.capacity;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : report.policies) arr.push_back(policy_to_json(p));
  j["policies"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::string report_to_csv(const SimulationReport& report) {
  std::string out =
      "policy,accesses,hits,hit_rate,evictions,admissions,rejections,"
      "prefetch_issued,prefetch_useful,w_frequency,w_recency\n";
  char buf[512];
  for (const auto& p : report.policies) {
    std::snprintf(buf, sizeof(buf), "%s,%llu,%llu,%.17g,%llu,%llu,%llu,%llu,%llu,%.17g,%.17g\n",
                  p.policy.c_str(), static_cast<unsigned long long>(p.accesses),
                  static_cast<unsigned long long>(p.hits), p.hit_rate,
                  static_cast<unsigned long long>(p.evictions),
                  static_cast<unsigned long long>(p.admissions),
                  static_cast<unsigned long long>(p.rejections),
                  static_cast<unsigned long long>(p.prefetch_issued),
                  static_cast<unsigned long long>(p.prefetch_useful), p.final_w_f,
                  p.final_w_r);
    out += buf;
  }
  return out;
}

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open report for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing report: " + path);
}

}  // namespace

void write_report_json(const SimulationReport& report, const std::string& path) {
  write_text(path, report_to_json(report));
}

void write_report_csv(const SimulationReport& report, const std::string& path) {
  write_text(path, report_to_csv(report));
}

}  // namespace deap::sim
