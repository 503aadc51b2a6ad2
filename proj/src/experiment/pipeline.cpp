#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coach/error.hpp"
#include "coach/experiment/experiment.hpp"
#include "coach/filter/mental_state_filter.hpp"
#include "coach/io.hpp"
#include "coach/random.hpp"

namespace coach::experiment {

using nlohmann::json;
namespace fs = std::filesystem;

const char* const kToolVersion = "coach 1.0.0";

namespace {

constexpr const char* kManifestFile = "manifest.json";

// Sub-stream ids under the run seed.
constexpr std::uint64_t kEvalStream = 1;
constexpr std::uint64_t kBenchmarkStream = 2;
constexpr std::uint64_t kDatasetStream = 100;
constexpr std::uint64_t kLearnerStream = 200;

std::string num(double v) { return format_double(v); }

}  // namespace

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::kGenerate: return "generate";
    case Stage::kTrain: return "train";
    case Stage::kInfer: return "infer";
    case Stage::kValue: return "value";
    case Stage::kBenchmark: return "benchmark";
    case Stage::kReport: return "report";
  }
  return "?";
}

RunManifest RunManifest::load(const fs::path& run_dir) {
  RunManifest m;
  const fs::path p = run_dir / kManifestFile;
  if (!fs::exists(p)) return m;
  json j;
  try {
    j = json::parse(read_file(p));
    m.config_hash = j.at("config_hash").get<std::string>();
    m.tool_version = j.at("tool_version").get<std::string>();
    for (const auto& [name, st] : j.at("stages").items()) {
      StageRecord r;
      r.input_hash = st.at("input_hash").get<std::string>();
      r.outputs = st.at("outputs").get<std::map<std::string, std::string>>();
      r.seconds = st.at("seconds").get<double>();
      m.stages[name] = r;
    }
  } catch (const json::exception& e) {
    throw ParseError("manifest " + p.string() + ": " + e.what());
  }
  return m;
}

void RunManifest::save(const fs::path& run_dir) const {
  json j;
  j["config_hash"] = config_hash;
  j["tool_version"] = tool_version;
  j["stages"] = json::object();
  for (const auto& [name, r] : stages)
    j["stages"][name] = {{"input_hash", r.input_hash}, {"outputs", r.outputs}, {"seconds", r.seconds}};
  write_file_atomic(run_dir / kManifestFile, j.dump(2) + "\n");
}

std::string Pipeline::dataset_file(const DatasetSpec& spec) { return "data/train_" + spec.name() + ".dataset"; }
std::string Pipeline::model_file(const DatasetSpec& spec) { return "models/" + spec.name() + ".model"; }

Pipeline::Pipeline(ExperimentConfig config) : config_(std::move(config)) {
  validate(config_);
  fs::create_directories(config_.out);
  manifest_ = RunManifest::load(config_.out);
  auto cfg = json::parse(to_json(config_));
  cfg.erase("out");
  cfg.erase("jobs");
  manifest_.config_hash = sha256_hex(cfg.dump());
  manifest_.tool_version = kToolVersion;
}

const domains::BuiltDomain& Pipeline::built() {
  if (!built_) built_ = std::make_unique<domains::BuiltDomain>(domains::build_domain(config_.domain));
  return *built_;
}

const team::SyntheticTeam& Pipeline::team() {
  if (!team_) team_ = std::make_unique<team::SyntheticTeam>(built(), config_.team);
  return *team_;
}

std::string Pipeline::input_hash(Stage stage) const {
  const json cfg = json::parse(to_json(config_));
  json in;
  in["tool"] = kToolVersion;
  in["stage"] = to_string(stage);
  auto upstream = [&](Stage s) {
    auto it = manifest_.stages.find(to_string(s));
    in["upstream"][to_string(s)] = it == manifest_.stages.end() ? json(nullptr) : json(it->second.outputs);
  };
  switch (stage) {
    case Stage::kGenerate:
      for (const char* k : {"domain", "seed", "datasets", "eval_count", "team"}) in[k] = cfg[k];
      break;
    case Stage::kTrain:
      upstream(Stage::kGenerate);
      for (const char* k : {"seed", "learner"}) in[k] = cfg[k];
      break;
    case Stage::kInfer:
      upstream(Stage::kGenerate);
      upstream(Stage::kTrain);
      break;
    case Stage::kValue:
      upstream(Stage::kTrain);
      for (const char* k : {"primary", "value"}) in[k] = cfg[k];
      break;
    case Stage::kBenchmark:
      upstream(Stage::kTrain);
      upstream(Stage::kValue);
      for (const char* k : {"primary", "seed", "team", "grid", "cost", "acceptance", "episodes"}) in[k] = cfg[k];
      break;
    case Stage::kReport:
      upstream(Stage::kInfer);
      upstream(Stage::kBenchmark);
      break;
  }
  return sha256_hex(in.dump());
}

void Pipeline::require(Stage consumer, Stage producer, const std::string& relative) const {
  auto it = manifest_.stages.find(to_string(producer));
  const std::string where = to_string(consumer) + ": input " + relative;
  if (it == manifest_.stages.end() || !it->second.outputs.count(relative))
    throw ValidationError(where + " has no manifest entry; run stage '" + to_string(producer) + "' first");
  const std::string& expected = it->second.outputs.at(relative);
  const fs::path p = path(relative);
  if (!fs::exists(p)) throw ValidationError(where + " is missing (expected sha256 " + expected + ")");
  if (sha256_file(p) != expected)
    throw ValidationError(where + " is stale: sha256 " + sha256_file(p) + " but the manifest expects " + expected);
}

StageOutcome Pipeline::run(Stage stage) {
  const std::string name = to_string(stage);
  const std::string hash = input_hash(stage);
  auto it = manifest_.stages.find(name);
  if (it != manifest_.stages.end() && it->second.input_hash == hash) {
    bool intact = true;
    for (const auto& [rel, sha] : it->second.outputs)
      intact = intact && fs::exists(path(rel)) && sha256_file(path(rel)) == sha;
    if (intact) return {stage, true, 0.0};
  }
  const auto t0 = std::chrono::steady_clock::now();
  manifest_.stages.erase(name);
  produce(stage);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest_.stages[name].input_hash = hash;
  manifest_.stages[name].seconds = secs;
  manifest_.save(config_.out);
  return {stage, false, secs};
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> out;
  for (Stage s : {Stage::kGenerate, Stage::kTrain, Stage::kInfer, Stage::kValue, Stage::kBenchmark, Stage::kReport})
    out.push_back(run(s));
  return out;
}

void Pipeline::produce(Stage stage) {
  auto& record = manifest_.stages[to_string(stage)];
  auto emit = [&](const std::string& relative, const std::string& contents) {
    fs::create_directories(path(relative).parent_path());
    write_file_atomic(path(relative), contents);
    record.outputs[relative] = sha256_hex(contents);
  };
  auto emit_file = [&](const std::string& relative, auto&& writer) {
    fs::create_directories(path(relative).parent_path());
    writer(path(relative));
    record.outputs[relative] = sha256_file(path(relative));
  };
  const auto& c = config_;
  auto num_latents = [&] { return built().config().num_latents; };

  switch (stage) {
    case Stage::kGenerate: {
      for (std::size_t k = 0; k < c.datasets.size(); ++k) {
        const auto& d = c.datasets[k];
        auto data = team::generate_dataset(team(), d.count, d.ratio, derive_seed(c.seed, kDatasetStream + k), c.jobs);
        emit_file(dataset_file(d), [&](const fs::path& p) { save_dataset(p, data); });
      }
      auto eval = team::generate_dataset(team(), c.eval_count, 1.0, derive_seed(c.seed, kEvalStream), c.jobs);
      emit_file(kEvalFile, [&](const fs::path& p) { save_dataset(p, eval); });
      break;
    }
    case Stage::kTrain: {
      std::ostringstream log;
      log << "dataset,iterations,converged,final_elbo\n";
      for (std::size_t k = 0; k < c.datasets.size(); ++k) {
        const auto& d = c.datasets[k];
        require(stage, Stage::kGenerate, dataset_file(d));
        const auto data = load_dataset(path(dataset_file(d)));
        auto options = c.learner;
        options.seed = derive_seed(c.seed, kLearnerStream + k);
        options.jobs = c.jobs;
        const std::vector<int> sizes(built().config().num_agents, num_latents());
        const auto fit = btil::fit(data, built().task, sizes, options);
        emit_file(model_file(d), [&](const fs::path& p) { save_models(p, fit.models); });
        log << d.name() << ',' << fit.elbo.size() << ',' << (fit.converged ? 1 : 0) << ','
            << (fit.elbo.empty() ? "" : num(fit.elbo.back())) << '\n';
      }
      emit("models/training.csv", log.str());
      break;
    }
    case Stage::kInfer: {
      require(stage, Stage::kGenerate, kEvalFile);
      const auto eval = load_dataset(path(kEvalFile));
      std::ostringstream rows, summary;
      rows << "dataset,count,ratio,episode,accuracy\n";
      summary << "dataset,count,ratio,episodes,mean,standard_error,random_baseline\n";
      for (const auto& d : c.datasets) {
        require(stage, Stage::kTrain, model_file(d));
        const auto models = load_models(path(model_file(d)));
        const auto acc = filter::inference_accuracy(eval, models, built().task);
        for (std::size_t e = 0; e < acc.per_episode.size(); ++e)
          rows << d.name() << ',' << d.count << ',' << num(d.ratio) << ',' << e << ',' << num(acc.per_episode[e])
               << '\n';
        summary << d.name() << ',' << d.count << ',' << num(d.ratio) << ',' << acc.per_episode.size() << ','
                << num(acc.mean) << ',' << num(acc.standard_error) << ',' << num(1.0 / num_latents()) << '\n';
      }
      emit(kAccuracyFile, rows.str());
      emit(kAccuracySummaryFile, summary.str());
      break;
    }
    case Stage::kValue: {
      const auto& d = c.datasets[c.primary];
      require(stage, Stage::kTrain, model_file(d));
      const auto models = load_models(path(model_file(d)));
      const auto table = evaluate_team_value(built().task, models, c.value);
      emit_file(kValueFile, [&](const fs::path& p) { save_table(p, table); });
      break;
    }
    case Stage::kBenchmark: {
      const auto& d = c.datasets[c.primary];
      require(stage, Stage::kTrain, model_file(d));
      require(stage, Stage::kValue, kValueFile);
      const auto models = load_models(path(model_file(d)));
      const auto table = load_table(path(kValueFile));
      const intervention::Runner runner(team(), models, &table);
      const auto grid = c.strategies(built().domain->has_compatibility_rule());
      const auto rows =
          intervention::run_benchmark(runner, grid, c.episodes, derive_seed(c.seed, kBenchmarkStream), c.jobs);
      std::ostringstream episodes, summary;
      intervention::write_episode_csv(episodes, rows);
      intervention::write_summary_csv(summary, rows);
      emit(kEpisodesFile, episodes.str());
      emit(kSummaryFile, summary.str());
      break;
    }
    case Stage::kReport: {
      require(stage, Stage::kBenchmark, kEpisodesFile);
      require(stage, Stage::kInfer, kAccuracySummaryFile);
      std::ifstream in(path(kEpisodesFile));
      const auto rows = read_episode_csv(in);
      const auto bad = audit_objective(rows);
      if (!bad.empty())
        throw ValidationError("report: objective identity fails on " + std::to_string(bad.size()) +
                              " episode rows, first at data row " + std::to_string(bad.front() + 1));

      struct Group {
        std::string strategy;
        double cost;
        std::vector<double> reward, count, objective;
      };
      std::vector<Group> groups;
      for (const auto& r : rows) {
        if (groups.empty() || groups.back().strategy != r.strategy || groups.back().cost != r.cost)
          groups.push_back({r.strategy, r.cost, {}, {}, {}});
        groups.back().reward.push_back(r.reward);
        groups.back().count.push_back(r.interventions);
        groups.back().objective.push_back(r.objective);
      }
      std::vector<double> means;
      for (const auto& g : groups) means.push_back(intervention::summarize(g.objective).mean);
      std::ostringstream out;
      out << "domain,strategy,cost,episodes,rank_by_objective";
      for (const char* m : {"reward", "interventions", "objective"})
        for (const char* stat : {"mean", "se", "q1", "median", "q3"}) out << ',' << m << '_' << stat;
      out << '\n';
      for (std::size_t g = 0; g < groups.size(); ++g) {
        int rank = 1;
        for (std::size_t h = 0; h < groups.size(); ++h)
          if (means[h] > means[g] || (means[h] == means[g] && h < g)) ++rank;
        out << c.domain << ',' << groups[g].strategy << ',' << num(groups[g].cost) << ','
            << groups[g].objective.size() << ',' << rank;
        for (const auto* v : {&groups[g].reward, &groups[g].count, &groups[g].objective}) {
          const auto q = intervention::summarize(*v);
          out << ',' << num(q.mean) << ',' << num(q.standard_error) << ',' << num(q.q1) << ',' << num(q.median)
              << ',' << num(q.q3);
        }
        out << '\n';
      }
      emit(kReportFile, out.str());

      std::istringstream lines(read_file(path(kAccuracySummaryFile)));
      std::ostringstream table;
      std::string line;
      std::getline(lines, line);
      table << "domain," << line << '\n';
      while (std::getline(lines, line))
        if (!line.empty()) table << c.domain << ',' << line << '\n';
      emit(kReportAccuracyFile, table.str());
      break;
    }
  }
}

std::vector<EpisodeRow> read_episode_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("episode csv: empty input");
  std::vector<std::string> header;
  {
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  auto col = [&](const char* name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ParseError(std::string("episode csv line 1: missing column '") + name + "'");
  };
  const std::size_t c_strategy = col("strategy"), c_cost = col("cost"), c_reward = col("reward"),
                    c_count = col("interventions"), c_objective = col("objective");
  std::vector<EpisodeRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size())
      throw ParseError("episode csv line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                       " fields, got " + std::to_string(cells.size()));
    try {
      EpisodeRow r;
      r.strategy = cells[c_strategy];
      r.cost = parse_double(cells[c_cost]);
      r.reward = parse_double(cells[c_reward]);
      const double count = parse_double(cells[c_count]);
      if (count < 0 || count != static_cast<int>(count)) throw ParseError("intervention count not a whole number");
      r.interventions = static_cast<int>(count);
      r.objective = parse_double(cells[c_objective]);
      rows.push_back(r);
    } catch (const ParseError& e) {
      throw ParseError("episode csv line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<std::size_t> audit_objective(const std::vector<EpisodeRow>& rows) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].objective != rows[i].reward - rows[i].cost * rows[i].interventions) bad.push_back(i);
  return bad;
}

}  // namespace coach::experiment
