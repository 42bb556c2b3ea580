// Python bindings for the cache laboratory: trace handling, the model, the
// simulator, and the four pipeline commands.
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "deap/config.hpp"
#include "deap/embed.hpp"
#include "deap/errors.hpp"
#include "deap/kde.hpp"
#include "deap/model.hpp"
#include "deap/pipeline.hpp"
#include "deap/policy.hpp"
#include "deap/sim.hpp"
#include "deap/trace.hpp"

namespace py = pybind11;
using namespace deap;

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trace-driven cache policy laboratory: learned admission, "
            "prefetching, and adaptive eviction against classical baselines.";
#ifdef VERSION_INFO
  m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
  m.attr("__version__") = "dev";
#endif

  // Exceptions. Base first so the derived translators take precedence.
  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto io = py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", io.ptr());
  py::register_exception<EmptyTraceError>(m, "EmptyTraceError", io.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());

  // ---- traces ----
  py::class_<trace::TraceRecord>(m, "TraceRecord")
      .def(py::init([](std::uint32_t pc, std::uint32_t address, std::size_t index) {
             return trace::TraceRecord{pc, address, index};
           }),
           py::arg("pc"), py::arg("address"), py::arg("index") = 0)
      .def_readwrite("pc", &trace::TraceRecord::pc)
      .def_readwrite("address", &trace::TraceRecord::address)
      .def_readwrite("index", &trace::TraceRecord::index)
      .def("__repr__", [](const trace::TraceRecord& r) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "TraceRecord(pc=0x%08x, address=0x%08x, index=%zu)",
                      r.pc, r.address, r.index);
        return std::string(buf);
      });

  py::class_<trace::LabeledTrace>(m, "LabeledTrace")
      .def_readonly("records", &trace::LabeledTrace::records)
      .def_readonly("reuse_distance", &trace::LabeledTrace::reuse_distance)
      .def_readonly("future_frequency", &trace::LabeledTrace::future_frequency)
      .def_readonly("next_use", &trace::LabeledTrace::next_use)
      .def_readonly("label_cap", &trace::LabeledTrace::label_cap)
      .def("labeled", &trace::LabeledTrace::labeled)
      .def("__len__", &trace::LabeledTrace::size);

  m.attr("NEVER_USED") = trace::kNeverUsed;

  m.def("load_trace", &trace::load_trace, py::arg("path"), py::arg("format") = "csv",
        "Read a pc,address CSV trace (unlabeled).");
  m.def("label_trace", &trace::label_trace, py::arg("records"), py::arg("cap"),
        "Attach reuse-distance / future-frequency / next-use labels; cap must "
        "exceed the trace length.");
  m.def(
      "synth_trace",
      [](const std::string& kind, std::size_t length, std::uint64_t seed, std::size_t period,
         std::size_t distinct, double exponent, std::size_t heavy_count, double filler_share) {
        trace::SynthOptions opt;
        opt.period = period;
        opt.distinct = distinct;
        opt.exponent = exponent;
        opt.heavy_count = heavy_count;
        opt.filler_share = filler_share;
        return trace::synth_trace(trace::synth_kind_from_string(kind), length, seed, opt);
      },
      py::arg("kind"), py::arg("length"), py::arg("seed"), py::arg("period") = 8,
      py::arg("distinct") = 64, py::arg("exponent") = 1.0, py::arg("heavy_count") = 16,
      py::arg("filler_share") = 0.5,
      "Deterministic synthetic trace; kind is 'cyclic', 'zipf', or 'adversarial'.");

  // ---- byte views ----
  m.def(
      "tokenize",
      [](std::uint32_t value) {
        const auto t = embed::tokenize(value);
        return py::make_tuple(t.b[0], t.b[1], t.b[2], t.b[3]);
      },
      py::arg("value"), "Split a 32-bit value into its four bytes, most significant first.");
  m.def(
      "recompose",
      [](std::uint8_t b0, std::uint8_t b1, std::uint8_t b2, std::uint8_t b3) {
        return embed::recompose({b0, b1, b2, b3});
      },
      py::arg("b0"), py::arg("b1"), py::arg("b2"), py::arg("b3"),
      "Inverse of tokenize.");

  // ---- kde ----
  py::class_<kde::KdeWindow>(m, "KdeWindow")
      .def(py::init<std::size_t, double>(), py::arg("capacity") = 50,
           py::arg("bandwidth_floor") = 1e-2)
      .def("push", &kde::KdeWindow::push, py::arg("embedding"))
      .def("__len__", &kde::KdeWindow::size)
      .def("dim", &kde::KdeWindow::dim);
  m.def("bandwidth_silverman", &kde::bandwidth_silverman, py::arg("window"));
  m.def("kde_density", &kde::kde_density, py::arg("window"), py::arg("bandwidths"),
        py::arg("query"));
  m.def(
      "distribution_vector",
      [](const kde::KdeWindow& w, std::size_t probes) {
        const auto d = kde::distribution_vector(w, probes);
        return py::make_tuple(d.values, d.cold_start);
      },
      py::arg("window"), py::arg("probes"),
      "Log densities at evenly spaced window entries; returns (values, cold_start).");

  // ---- policies ----
  m.def(
      "admit",
      [](double f, double r, double alpha, double beta) {
        return policy::admit(f, r, {alpha, beta});
      },
      py::arg("f"), py::arg("r"), py::arg("alpha") = 3000.0, py::arg("beta") = 7000.0,
      "Admission gate: admit when f > alpha or r < beta.");
  m.def(
      "select_prefetch_candidates",
      [](const std::array<nn::Vector, 4>& byte_probs, std::size_t n) {
        std::vector<std::pair<std::uint32_t, double>> out;
        for (const auto& c : policy::select_prefetch_candidates(byte_probs, n))
          out.emplace_back(c.address, c.probability);
        return out;
      },
      py::arg("byte_probs"), py::arg("n"),
      "Top-n addresses under the product of per-byte probabilities, as "
      "(address, probability) pairs.");

  // ---- model ----
  py::class_<model::ModelDims>(m, "ModelDims")
      .def(py::init<>())
      .def_readwrite("byte_embedding_dim", &model::ModelDims::byte_embedding_dim)
      .def_readwrite("combiner_hidden", &model::ModelDims::combiner_hidden)
      .def_readwrite("address_embedding_size", &model::ModelDims::address_embedding_size)
      .def_readwrite("lstm_hidden", &model::ModelDims::lstm_hidden)
      .def_readwrite("decoder_hidden", &model::ModelDims::decoder_hidden)
      .def_readwrite("kde_probes", &model::ModelDims::kde_probes)
      .def("__eq__", [](const model::ModelDims& a, const model::ModelDims& b) { return a == b; });

  py::class_<model::DeapModel>(m, "Model")
      .def_readonly("dims", &model::DeapModel::dims)
      .def_readonly("trained_steps", &model::DeapModel::trained_steps)
      .def_readwrite("freeze_byte_tables", &model::DeapModel::freeze_byte_tables);

  m.def("make_model", &model::make_model, py::arg("dims"), "All-zero parameters.");
  m.def("init_model", &model::init_model, py::arg("dims"), py::arg("seed"),
        "Seeded random initialization.");
  m.def("save_checkpoint", &model::save_checkpoint, py::arg("model"), py::arg("path"));
  m.def(
      "load_checkpoint",
      [](const std::string& path) { return model::load_checkpoint(path); }, py::arg("path"));
  m.def("address_embedding", &model::address_embedding, py::arg("model"), py::arg("address"));
  m.def("step_embedding", &model::step_embedding, py::arg("model"), py::arg("record"));
  m.def(
      "prefetch_forward",
      [](const model::DeapModel& mm, const std::vector<trace::TraceRecord>& window) {
        return model::prefetch_forward(mm, window);
      },
      py::arg("model"), py::arg("window"),
      "Four 256-way byte probability rows for the next miss.");
  m.def("decode_future", &model::decode_future, py::arg("model"), py::arg("address_embed"),
        py::arg("distribution"),
        "Raw-unit (frequency, reuse) predictions for one address in context.");

  py::class_<model::Losses>(m, "Losses")
      .def_readonly("prefetching", &model::Losses::prefetching)
      .def_readonly("frequency", &model::Losses::frequency)
      .def_readonly("recency", &model::Losses::recency)
      .def_readonly("total", &model::Losses::total)
      .def("__repr__", [](const model::Losses& l) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "Losses(prefetching=%.6g, frequency=%.6g, recency=%.6g, total=%.6g)",
                      l.prefetching, l.frequency, l.recency, l.total);
        return std::string(buf);
      });

  py::class_<model::TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &model::TrainConfig::epochs)
      .def_readwrite("batch_size", &model::TrainConfig::batch_size)
      .def_readwrite("sequence_length", &model::TrainConfig::sequence_length)
      .def_readwrite("learning_rate", &model::TrainConfig::learning_rate)
      .def_readwrite("temperature", &model::TrainConfig::temperature)
      .def_readwrite("seed", &model::TrainConfig::seed)
      .def_readwrite("windows_per_epoch", &model::TrainConfig::windows_per_epoch)
      .def_readwrite("kde_window", &model::TrainConfig::kde_window)
      .def_readwrite("kde_bandwidth_floor", &model::TrainConfig::kde_bandwidth_floor)
      .def_property(
          "optimizer",
          [](const model::TrainConfig& c) {
            return c.optimizer == nn::OptAlgo::adam ? "adam" : "sgd";
          },
          [](model::TrainConfig& c, const std::string& name) {
            c.optimizer = nn::opt_algo_from_string(name);
          });

  m.def("train_model", &model::train_model, py::arg("model"), py::arg("misses"),
        py::arg("config"),
        "Train on a labeled miss trace; returns per-epoch mean losses.");

  // ---- simulation ----
  py::class_<sim::SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("capacity", &sim::SimConfig::capacity)
      .def_property(
          "admission_alpha",
          [](const sim::SimConfig& c) { return c.admission.alpha; },
          [](sim::SimConfig& c, double v) { c.admission.alpha = v; })
      .def_property(
          "admission_beta", [](const sim::SimConfig& c) { return c.admission.beta; },
          [](sim::SimConfig& c, double v) { c.admission.beta = v; })
      .def_readwrite("prefetch_n", &sim::SimConfig::prefetch_n)
      .def_readwrite("prefetch_interval", &sim::SimConfig::prefetch_interval)
      .def_readwrite("prefetch_window", &sim::SimConfig::prefetch_window)
      .def_readwrite("miss_buffer_capacity", &sim::SimConfig::miss_buffer_capacity)
      .def_readwrite("batch_size", &sim::SimConfig::batch_size)
      .def_readwrite("lecar_lambda", &sim::SimConfig::lecar_lambda)
      .def_readwrite("lecar_discount", &sim::SimConfig::lecar_discount)
      .def_readwrite("rng_seed", &sim::SimConfig::rng_seed)
      .def_readwrite("stale_scores", &sim::SimConfig::stale_scores)
      .def_readwrite("kde_window", &sim::SimConfig::kde_window)
      .def_readwrite("kde_bandwidth_floor", &sim::SimConfig::kde_bandwidth_floor);

  py::class_<sim::BatchPoint>(m, "BatchPoint")
      .def_readonly("end", &sim::BatchPoint::end)
      .def_readonly("accesses", &sim::BatchPoint::accesses)
      .def_readonly("hits", &sim::BatchPoint::hits)
      .def_readonly("hit_rate", &sim::BatchPoint::hit_rate);

  py::class_<sim::PolicyStats>(m, "PolicyStats")
      .def_readonly("policy", &sim::PolicyStats::policy)
      .def_readonly("accesses", &sim::PolicyStats::accesses)
      .def_readonly("hits", &sim::PolicyStats::hits)
      .def_readonly("hit_rate", &sim::PolicyStats::hit_rate)
      .def_readonly("evictions", &sim::PolicyStats::evictions)
      .def_readonly("admissions", &sim::PolicyStats::admissions)
      .def_readonly("rejections", &sim::PolicyStats::rejections)
      .def_readonly("prefetch_issued", &sim::PolicyStats::prefetch_issued)
      .def_readonly("prefetch_useful", &sim::PolicyStats::prefetch_useful)
      .def_readonly("final_w_f", &sim::PolicyStats::final_w_f)
      .def_readonly("final_w_r", &sim::PolicyStats::final_w_r)
      .def_readonly("batches", &sim::PolicyStats::batches)
      .def("__repr__", [](const sim::PolicyStats& s) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "PolicyStats(policy='%s', hit_rate=%.4f)",
                      s.policy.c_str(), s.hit_rate);
        return std::string(buf);
      });

  py::class_<sim::SimulationReport>(m, "SimulationReport")
      .def_readonly("trace_name", &sim::SimulationReport::trace_name)
      .def_readonly("trace_length", &sim::SimulationReport::trace_length)
      .def_readonly("capacity", &sim::SimulationReport::capacity)
      .def_readonly("policies", &sim::SimulationReport::policies);

  m.def(
      "run_baseline",
      [](const trace::LabeledTrace& t, const std::string& name, std::size_t capacity,
         std::size_t batch_size) {
        return sim::run_baseline(t, policy::baseline_from_string(name), capacity, batch_size);
      },
      py::arg("trace"), py::arg("policy"), py::arg("capacity"), py::arg("batch_size") = 10000,
      "Demand-fetch run of one classical policy ('lru', 'lfu', 'fifo', 'lifo', "
      "'belady').");
  m.def(
      "run_simulation",
      [](const trace::LabeledTrace& t, const model::DeapModel& mm, const sim::SimConfig& cfg,
         const std::vector<std::string>& policies, const std::string& trace_name) {
        return sim::run_simulation(t, mm, cfg, policies, trace_name);
      },
      py::arg("trace"), py::arg("model"), py::arg("config"),
      py::arg("policies") = std::vector<std::string>{}, py::arg("trace_name") = "",
      "One pass driving every requested policy; default is learned plus the "
      "five baselines.");
  m.def("report_to_json", &sim::report_to_json, py::arg("report"));
  m.def("report_to_csv", &sim::report_to_csv, py::arg("report"));

  // ---- configuration and pipeline commands ----
  py::class_<config::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("trace_path", &config::RunConfig::trace_path)
      .def_readwrite("tables_path", &config::RunConfig::tables_path)
      .def_readwrite("checkpoint_path", &config::RunConfig::checkpoint_path)
      .def_readwrite("output_dir", &config::RunConfig::output_dir)
      .def_readwrite("resume_from", &config::RunConfig::resume_from)
      .def_readwrite("policies", &config::RunConfig::policies)
      .def("set", &config::apply_config_assignment, py::arg("assignment"),
           "Apply one 'key=value' assignment.")
      .def("text", &config::config_to_text,
           "Canonical key=value rendering of every option.")
      .def("validate", &config::validate_config);

  m.def("load_config", &config::load_config, py::arg("path") = "",
        py::arg("overrides") = std::vector<std::string>{},
        "Read a key=value config file (optional), apply overrides, validate.");

  m.def("pretrain", &pipeline::cmd_pretrain, py::arg("config"),
        "Byte-embedding pretraining; writes the tables artifact, returns its path.");
  m.def("train", &pipeline::cmd_train, py::arg("config"),
        "Full training run; writes checkpoint and loss curve, returns per-epoch losses.");
  m.def("simulate", &pipeline::cmd_simulate, py::arg("config"),
        "Benchmark the checkpoint against the baselines; returns the JSON report path.");
  m.def("report", &pipeline::cmd_report, py::arg("report_paths"), py::arg("output_csv") = "",
        "Merge simulation reports into a comparison table; returns the text table.");
}
