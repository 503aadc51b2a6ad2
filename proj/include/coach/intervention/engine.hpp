#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "coach/behavior_model.hpp"
#include "coach/compatibility.hpp"
#include "coach/filter/mental_state_filter.hpp"
#include "coach/team/synthetic_team.hpp"

namespace coach::intervention {

enum class Kind { kNone, kCentralized, kRule, kValue };
enum class Wrapper { kDeterministic, kConfidence, kExpectation };

struct StrategyConfig {
  Kind kind = Kind::kNone;
  Wrapper wrapper = Wrapper::kDeterministic;
  double delta = 0.0;  // benefit threshold
  double theta = 0.0;  // certainty threshold
  double cost = 0.0;
  double acceptance = 1.0;

  /// Stable, human-readable id such as "value/confidence/delta=2/theta=0.5".
  [[nodiscard]] std::string label() const;
};

std::string to_string(Kind kind);
std::string to_string(Wrapper wrapper);
Kind parse_kind(const std::string& text);
Wrapper parse_wrapper(const std::string& text);
void validate(const StrategyConfig& config);

struct Decision {
  bool intervene = false;
  ProfileId recommendation = 0;
};

/// Probability of a joint profile under the product of per-agent posteriors.
double profile_probability(const filter::FilterState& belief, const JointSpace& profiles, ProfileId x);

/// Phi_{f,theta}: f(x_hat) gated by p(x_hat) > theta.
template <class F>
bool confidence_wrap(F&& f, const filter::FilterState& belief, const JointSpace& profiles, double theta) {
  const auto est = filter::map_estimate(belief);
  const ProfileId x_hat = profiles.encode(est);
  return f(x_hat) && profile_probability(belief, profiles, x_hat) > theta;
}

/// Phi_{f,E}: E_p[f(x)] > 0.5 with p the product posterior.
template <class F>
bool expectation_wrap(F&& f, const filter::FilterState& belief, const JointSpace& profiles) {
  double e = 0.0;
  for (ProfileId x = 0; x < profiles.size(); ++x)
    if (f(x)) e += profile_probability(belief, profiles, x);
  return e > 0.5;
}

/// Turns the filter's posterior into z_t and x_int for one strategy.
///   rule:  f(x|s) = 1(x not in C_s), recommends the compatible profile with
///          the highest V (lowest id without a table)
///   value: f(x|s) = 1(benefit(x|s) > delta), recommends argmax_x V(s, x)
class Controller {
 public:
  Controller(const StrategyConfig& config, const domains::BuiltDomain& built, const CompatibilityTable* table);

  [[nodiscard]] bool fires(StateId s, ProfileId x) const;
  [[nodiscard]] ProfileId recommend(StateId s) const;
  [[nodiscard]] Decision decide(const filter::FilterState& belief) const;
  [[nodiscard]] const JointSpace& profiles() const noexcept { return profiles_; }

 private:
  StrategyConfig config_;
  const domains::BuiltDomain* built_;
  const CompatibilityTable* table_;
  JointSpace profiles_;
};

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  double reward = 0.0;
  int interventions = 0;
  double objective = 0.0;  // reward - cost * interventions
  int length = 0;
};

/// Runs intervened episodes for one domain. The team, models, and table are
/// shared read-only across episodes and threads.
class Runner {
 public:
  Runner(const team::SyntheticTeam& team, std::span<const AgentBehaviorModel> models,
         const CompatibilityTable* table);

  [[nodiscard]] EpisodeMetrics run_episode(const StrategyConfig& strategy, std::uint64_t seed) const;
  /// Same, also returning the rollout record.
  [[nodiscard]] EpisodeMetrics run_episode(const StrategyConfig& strategy, std::uint64_t seed,
                                           team::RolloutRecord* record) const;

  [[nodiscard]] const team::SyntheticTeam& team() const noexcept { return *team_; }
  [[nodiscard]] const filter::MentalStateFilter& filter() const noexcept { return filter_; }
  [[nodiscard]] const CompatibilityTable* table() const noexcept { return table_; }

 private:
  const team::SyntheticTeam* team_;
  filter::MentalStateFilter filter_;
  const CompatibilityTable* table_;
};

struct BenchmarkRow {
  StrategyConfig strategy;
  int episode = 0;
  EpisodeMetrics metrics;
};

/// Every strategy runs on the same episode seeds derive_seed(base_seed, k).
/// Rows come out strategy-major in grid order regardless of `jobs`.
std::vector<BenchmarkRow> run_benchmark(const Runner& runner, std::span<const StrategyConfig> grid, int episodes,
                                        std::uint64_t base_seed, int jobs = 1);

struct Quartiles {
  double mean = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double standard_error = 0.0;
};
/// Mean, standard error, and linear-interpolation quartiles.
Quartiles summarize(std::vector<double> values);

void write_episode_csv(std::ostream& out, std::span<const BenchmarkRow> rows);
void write_summary_csv(std::ostream& out, std::span<const BenchmarkRow> rows);

}  // namespace coach::intervention
