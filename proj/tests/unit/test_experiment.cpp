#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coach/error.hpp"
#include "coach/experiment/experiment.hpp"
#include "coach/io.hpp"

using namespace coach;
using namespace coach::experiment;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("coach_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig c;
  c.domain = "tiny";
  c.datasets = {{40, 1.0}, {60, 0.3}};
  c.primary = 1;
  c.eval_count = 20;
  c.episodes = 15;
  c.grid.deltas = {0, 0.5};
  c.grid.thetas = {0, 0.5};
  c.out = out;
  return c;
}

}  // namespace

TEST_SUITE("experiment") {
  TEST_CASE("config parsing keeps defaults and rejects unknown keys") {
    const auto c = parse_config(R"({"domain": "rescue", "cost": 0, "learner": {"alpha": 1.5}})");
    CHECK(c.domain == "rescue");
    CHECK(c.cost == 0.0);
    CHECK(c.learner.alpha == 1.5);
    CHECK(c.episodes == 100);
    CHECK(c.datasets.size() == 3);
    CHECK_THROWS_AS(parse_config(R"({"domian": "rescue"})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"learner": {"beta": 1}})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"domain": "chess"})"), ValidationError);
    CHECK_THROWS_AS(parse_config(R"({"acceptance": 1.2})"), ValidationError);
    CHECK_THROWS_AS(parse_config("{not json"), ParseError);
    const auto again = parse_config(to_json(c));
    CHECK(to_json(again) == to_json(c));
  }

  TEST_CASE("strategy grid drops the rule family without a compatible set") {
    ExperimentConfig c;
    c.grid.deltas = {0, 1};
    c.grid.thetas = {0.3, 0.5, 0.8};
    // none, centralized, rule x (1 + 3 + 1), value x 2 x (1 + 3 + 1)
    CHECK(c.strategies(true).size() == 2 + 5 + 10);
    CHECK(c.strategies(false).size() == 2 + 10);
  }

  TEST_CASE("stages skip when inputs are unchanged and rerun when they change") {
    const auto dir = fresh_dir("skip");
    {
      Pipeline p(tiny_config(dir));
      for (const auto& o : p.run_all()) CHECK_FALSE(o.skipped);
    }
    {
      Pipeline p(tiny_config(dir));
      for (const auto& o : p.run_all()) CHECK(o.skipped);
    }
    auto changed = tiny_config(dir);
    changed.cost = 0.5;
    Pipeline p(changed);
    CHECK(p.run(Stage::kGenerate).skipped);
    CHECK(p.run(Stage::kValue).skipped);
    CHECK_FALSE(p.run(Stage::kBenchmark).skipped);
    CHECK_FALSE(p.run(Stage::kReport).skipped);
    // A deleted output forces its producer to run again.
    fs::remove(p.path(Pipeline::kValueFile));
    CHECK_FALSE(p.run(Stage::kValue).skipped);
    fs::remove_all(dir);
  }

  TEST_CASE("a consumer refuses a stale or missing upstream artifact") {
    const auto dir = fresh_dir("stale");
    Pipeline p(tiny_config(dir));
    CHECK_THROWS_WITH_AS(p.run(Stage::kTrain), doctest::Contains("run stage 'generate' first"), ValidationError);
    p.run(Stage::kGenerate);
    const auto data = p.path(Pipeline::dataset_file(p.config().datasets[0]));
    write_file_atomic(data, read_file(data) + "\n");
    CHECK_THROWS_WITH_AS(p.run(Stage::kTrain), doctest::Contains("stale"), ValidationError);
    fs::remove(data);
    CHECK_THROWS_WITH_AS(p.run(Stage::kTrain), doctest::Contains("missing"), ValidationError);
    fs::remove_all(dir);
  }

  TEST_CASE("the report stage audits the objective column") {
    const auto dir = fresh_dir("audit");
    Pipeline p(tiny_config(dir));
    p.run_all();
    std::ifstream in(p.path(Pipeline::kEpisodesFile));
    const auto rows = read_episode_csv(in);
    CHECK(rows.size() == 15 * tiny_config(dir).strategies(false).size());
    CHECK(audit_objective(rows).empty());
    auto broken = rows;
    broken[7].objective += 1e-9;
    CHECK(audit_objective(broken) == std::vector<std::size_t>{7});
    fs::remove_all(dir);
  }

  TEST_CASE("malformed episode files name the offending line") {
    std::istringstream short_row("strategy,cost,reward,interventions,objective\nnone,1,-3,0,-3\nnone,1,-3\n");
    CHECK_THROWS_WITH_AS(read_episode_csv(short_row), doctest::Contains("line 3"), ParseError);
    std::istringstream bad_number("strategy,cost,reward,interventions,objective\nnone,1,abc,0,-3\n");
    CHECK_THROWS_WITH_AS(read_episode_csv(bad_number), doctest::Contains("line 2"), ParseError);
    std::istringstream fractional("strategy,cost,reward,interventions,objective\nnone,1,-3,0.5,-3.5\n");
    CHECK_THROWS_WITH_AS(read_episode_csv(fractional), doctest::Contains("line 2"), ParseError);
    std::istringstream no_column("strategy,cost,reward,objective\n");
    CHECK_THROWS_AS(read_episode_csv(no_column), ParseError);
  }

  TEST_CASE("identical configs give byte-identical artifacts") {
    const auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
    Pipeline(tiny_config(a)).run_all();
    auto cb = tiny_config(b);
    cb.jobs = 3;
    Pipeline(cb).run_all();
    for (const char* f : {Pipeline::kEpisodesFile, Pipeline::kSummaryFile, Pipeline::kReportFile,
                          Pipeline::kAccuracyFile, Pipeline::kValueFile})
      CHECK_MESSAGE(read_file(a / f) == read_file(b / f), f);
    fs::remove_all(a);
    fs::remove_all(b);
  }
}
