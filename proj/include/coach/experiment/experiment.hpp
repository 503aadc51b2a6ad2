#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coach/btil/btil.hpp"
#include "coach/compatibility.hpp"
#include "coach/intervention/engine.hpp"
#include "coach/team/synthetic_team.hpp"

namespace coach::experiment {

struct DatasetSpec {
  int count = 500;
  double ratio = 1.0;
  [[nodiscard]] std::string name() const;  // e.g. "500@0.3"
};

struct GridSpec {
  std::vector<intervention::Kind> kinds{intervention::Kind::kNone, intervention::Kind::kCentralized,
                                        intervention::Kind::kRule, intervention::Kind::kValue};
  std::vector<intervention::Wrapper> wrappers{intervention::Wrapper::kDeterministic,
                                              intervention::Wrapper::kConfidence,
                                              intervention::Wrapper::kExpectation};
  std::vector<double> deltas{0, 1, 2, 5, 10, 20};
  std::vector<double> thetas{0, 0.3, 0.5, 0.8};
};

struct ExperimentConfig {
  std::string domain = "movers";
  std::uint64_t seed = 1;
  /// Training sets; every one is fit and scored for inference accuracy.
  std::vector<DatasetSpec> datasets{{150, 1.0}, {500, 0.3}, {500, 1.0}};
  /// Index into `datasets` of the model used for values and benchmarking.
  int primary = 1;
  int eval_count = 100;
  team::TeamParams team;
  btil::FitOptions learner;
  ValueOptions value;
  GridSpec grid;
  double cost = 1.0;
  double acceptance = 1.0;
  int episodes = 100;
  std::filesystem::path out = "runs/default";
  int jobs = 1;

  /// Strategy grid; rule-based entries are dropped for domains without C_s.
  [[nodiscard]] std::vector<intervention::StrategyConfig> strategies(bool has_rule) const;
};

/// Reads JSON; absent keys keep their defaults, unknown keys are errors.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_json(const ExperimentConfig& config);
/// Throws ValidationError on any out-of-range field.
void validate(const ExperimentConfig& config);

/// Per-run record of what each stage consumed and produced.
struct StageRecord {
  std::string input_hash;
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  double seconds = 0.0;
};

struct RunManifest {
  std::string config_hash;
  std::string tool_version;
  std::map<std::string, StageRecord> stages;

  static RunManifest load(const std::filesystem::path& run_dir);
  void save(const std::filesystem::path& run_dir) const;
};

enum class Stage { kGenerate, kTrain, kInfer, kValue, kBenchmark, kReport };
std::string to_string(Stage stage);

struct StageOutcome {
  Stage stage;
  bool skipped = false;
  double seconds = 0.0;
};

/// Runs stages against `config.out`, skipping those whose inputs and outputs
/// still match the manifest. Upstream artifacts must exist and match their
/// recorded hashes.
class Pipeline {
 public:
  explicit Pipeline(ExperimentConfig config);

  StageOutcome run(Stage stage);
  std::vector<StageOutcome> run_all();

  [[nodiscard]] const ExperimentConfig& config() const noexcept { return config_; }
  [[nodiscard]] const RunManifest& manifest() const noexcept { return manifest_; }
  [[nodiscard]] std::filesystem::path path(const std::string& relative) const { return config_.out / relative; }

  /// Artifact locations relative to the run directory.
  static std::string dataset_file(const DatasetSpec& spec);
  static std::string model_file(const DatasetSpec& spec);
  static constexpr const char* kEvalFile = "data/eval.dataset";
  static constexpr const char* kAccuracyFile = "infer/accuracy.csv";
  static constexpr const char* kAccuracySummaryFile = "infer/accuracy_summary.csv";
  static constexpr const char* kValueFile = "value/table.txt";
  static constexpr const char* kEpisodesFile = "benchmark/episodes.csv";
  static constexpr const char* kSummaryFile = "benchmark/summary.csv";
  static constexpr const char* kReportFile = "report/report.csv";
  static constexpr const char* kReportAccuracyFile = "report/accuracy.csv";

 private:
  const domains::BuiltDomain& built();
  const team::SyntheticTeam& team();
  [[nodiscard]] std::string input_hash(Stage stage) const;
  void require(Stage consumer, Stage producer, const std::string& relative) const;
  void produce(Stage stage);

  ExperimentConfig config_;
  RunManifest manifest_;
  std::unique_ptr<domains::BuiltDomain> built_;
  std::unique_ptr<team::SyntheticTeam> team_;
};

/// One parsed row of a benchmark episode CSV.
struct EpisodeRow {
  std::string strategy;
  double cost = 0.0;
  double reward = 0.0;
  int interventions = 0;
  double objective = 0.0;
};

/// Throws ParseError naming the 1-based line on malformed input.
std::vector<EpisodeRow> read_episode_csv(std::istream& in);

/// Rows whose objective differs from reward - cost * interventions.
std::vector<std::size_t> audit_objective(const std::vector<EpisodeRow>& rows);

extern const char* const kToolVersion;

}  // namespace coach::experiment
