#include <cmath>
#include <exception>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "coach/error.hpp"
#include "coach/experiment/experiment.hpp"
#include "coach/io.hpp"

namespace {

using coach::experiment::ExperimentConfig;
using coach::experiment::Pipeline;
using coach::experiment::Stage;

struct Overrides {
  std::string config;
  std::optional<std::string> domain;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<int> count;
  std::optional<double> ratio;
  std::optional<int> episodes;
  std::optional<double> cost;
  std::optional<double> acceptance;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : coach::experiment::load_config(o.config);
  if (o.domain) c.domain = *o.domain;
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.count || o.ratio) {
    coach::experiment::DatasetSpec d = c.datasets[c.primary];
    if (o.count) d.count = *o.count;
    if (o.ratio) d.ratio = *o.ratio;
    c.datasets = {d};
    c.primary = 0;
  }
  if (o.episodes) c.episodes = *o.episodes;
  if (o.cost) c.cost = *o.cost;
  if (o.acceptance) c.acceptance = *o.acceptance;
  coach::experiment::validate(c);
  return c;
}

void print(const coach::experiment::StageOutcome& r) {
  std::cout << coach::experiment::to_string(r.stage) << ": "
            << (r.skipped ? std::string("skipped (inputs unchanged)")
                          : "done in " + coach::format_double(std::round(r.seconds * 100) / 100) + " s")
            << '\n';
}

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--domain", o.domain, "movers | cleanup | rescue | rescue2 | tiny");
  cmd->add_option("--seed", o.seed, "base seed for every random stream");
  cmd->add_option("--out", o.out, "run directory");
  cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Team intervention experiments: generate, train, infer, value, benchmark, report"};
  app.require_subcommand(1);
  Overrides o;

  struct Entry {
    const char* name;
    const char* help;
    std::optional<Stage> stage;
  };
  const Entry entries[] = {
      {"generate", "simulate training and evaluation demonstrations", Stage::kGenerate},
      {"train", "fit behavior models to every training set", Stage::kTrain},
      {"infer", "score mental-state inference accuracy on the evaluation set", Stage::kInfer},
      {"value", "compute the compatibility table for the primary model", Stage::kValue},
      {"benchmark", "run the intervention strategy grid", Stage::kBenchmark},
      {"report", "aggregate benchmark and accuracy results", Stage::kReport},
      {"pipeline", "run every stage, skipping those already up to date", std::nullopt},
  };
  std::vector<std::pair<CLI::App*, const Entry*>> cmds;
  for (const auto& e : entries) {
    auto* cmd = app.add_subcommand(e.name, e.help);
    add_common(cmd, o);
    if (!e.stage || *e.stage == Stage::kGenerate) {
      cmd->add_option("--count", o.count, "training demonstrations (replaces the dataset list)");
      cmd->add_option("--ratio", o.ratio, "supervision ratio (replaces the dataset list)");
    }
    if (!e.stage || *e.stage == Stage::kBenchmark) {
      cmd->add_option("--episodes", o.episodes, "episodes per strategy");
      cmd->add_option("--cost", o.cost, "cost per intervention");
      cmd->add_option("--acceptance", o.acceptance, "probability each agent accepts a recommendation");
    }
    cmds.emplace_back(cmd, &e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    Pipeline pipeline(resolve(o));
    for (auto& [cmd, e] : cmds) {
      if (!cmd->parsed()) continue;
      if (e->stage) {
        print(pipeline.run(*e->stage));
      } else {
        for (const auto& r : pipeline.run_all()) print(r);
      }
      if (!e->stage || *e->stage == Stage::kReport) {
        std::cout << coach::read_file(pipeline.path(Pipeline::kReportAccuracyFile))
                  << coach::read_file(pipeline.path(Pipeline::kReportFile));
      }
    }
  } catch (const coach::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const coach::ValidationError& e) {
    std::cerr << "validation failure: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
