#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deap/config.hpp"
#include "deap/errors.hpp"
#include "deap/pipeline.hpp"

namespace {

// 0 success, 2 config error, 3 I/O error, 4 dimension/format error.
constexpr int kConfigExit = 2;
constexpr int kIoExit = 3;
constexpr int kDataExit = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_path, "key=value config file");
  cmd->add_option("-s,--set", args.sets, "override one config key (key=value, repeatable)")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deapcache: trace-driven cache policy laboratory"};
  app.require_subcommand(1);

  CommonArgs args;

  auto* pretrain = app.add_subcommand("pretrain", "pretrain byte embeddings on a trace");
  add_common(pretrain, args);

  auto* train = app.add_subcommand("train", "train the prefetcher and decoder");
  add_common(train, args);

  auto* simulate = app.add_subcommand("simulate", "run cache policies over a trace");
  add_common(simulate, args);
  std::string policies;
  simulate->add_option("--policies", policies,
                       "comma list of policies (learned,lru,lfu,fifo,lifo,belady)");

  auto* report = app.add_subcommand("report", "merge simulation reports into one table");
  std::vector<std::string> report_inputs;
  std::string report_output = "comparison.csv";
  report->add_option("inputs", report_inputs, "simulation report JSON files")->required();
  report->add_option("-o,--output", report_output, "comparison CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help lands here too; CLI11 returns 0 for it.
    return app.exit(e) == 0 ? 0 : kConfigExit;
  }

  try {
    if (report->parsed()) {
      std::fputs(deap::pipeline::cmd_report(report_inputs, report_output).c_str(), stdout);
      std::printf("wrote %s\n", report_output.c_str());
      return 0;
    }

    auto overrides = args.sets;
    if (simulate->parsed() && !policies.empty()) overrides.push_back("policies=" + policies);
    const auto cfg = deap::config::load_config(args.config_path, overrides);

    if (pretrain->parsed()) {
      const auto path = deap::pipeline::cmd_pretrain(cfg);
      std::printf("wrote %s\n", path.c_str());
    } else if (train->parsed()) {
      const auto losses = deap::pipeline::cmd_train(cfg);
      if (!losses.empty())
        std::printf("trained %zu epochs, final total loss %.6g\n", losses.size(),
                    losses.back().total);
      std::printf("wrote %s\n", cfg.checkpoint_path.c_str());
    } else if (simulate->parsed()) {
      const auto path = deap::pipeline::cmd_simulate(cfg);
      std::printf("wrote %s\n", path.c_str());
    }
    return 0;
  } catch (const deap::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfigExit;
  } catch (const deap::ShapeError& e) {
    std::fprintf(stderr, "dimension error: %s\n", e.what());
    return kDataExit;
  } catch (const deap::FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kDataExit;
  } catch (const deap::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIoExit;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
