#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "coach/domains/domain.hpp"
#include "coach/random.hpp"
#include "coach/trajectory.hpp"

namespace coach::team {

struct TeamParams {
  /// Softmax temperature applied to local Q-values.
  double temperature = 0.1;
  /// Discount of the agent-local planning problem.
  double local_gamma = 0.99;
};

/// Simulated team members: bounded-rational policies from value iteration on
/// each agent's local projection plus the domain's hand-written T_x rules.
class SyntheticTeam {
 public:
  explicit SyntheticTeam(const domains::BuiltDomain& built, TeamParams params = {});

  [[nodiscard]] const domains::BuiltDomain& built() const noexcept { return *built_; }
  [[nodiscard]] int num_agents() const noexcept { return built_->config().num_agents; }
  [[nodiscard]] const TeamParams& params() const noexcept { return params_; }

  /// pi_i(. | belief, x) as a row over agent i's actions.
  [[nodiscard]] RowVector policy(int agent, const domains::WorldState& belief, LatentId x) const;
  /// Local policy table for (agent, x): local states x actions.
  [[nodiscard]] const Matrix& local_policy(int agent, LatentId x) const {
    return policies_[agent][x];
  }
  [[nodiscard]] Vector latent_transition(int agent, LatentId x, std::span<const int> observed_actions,
                                         const domains::WorldState& belief) const;

 private:
  const domains::BuiltDomain* built_;
  TeamParams params_;
  std::vector<std::vector<Matrix>> policies_;
};

/// Called before agents act at every step that is not the last, with the
/// history so far (states up to t, actions up to t-1). Returning a profile
/// recommends it to the agents.
using InterventionHook =
    std::function<std::optional<std::vector<LatentId>>(int t, const Trajectory& history)>;

struct RolloutOptions {
  /// Probability each agent adopts a recommended mental state.
  double acceptance = 1.0;
  InterventionHook hook;
};

struct RolloutRecord {
  Trajectory trajectory;  // always labeled with the true mental states
  /// beliefs[t][i]: agent i's point estimate at step t.
  std::vector<std::vector<domains::WorldState>> beliefs;
  std::vector<double> rewards;
  /// 1 when the hook recommended a profile at step t.
  std::vector<std::uint8_t> interventions;

  [[nodiscard]] double total_reward() const;
  [[nodiscard]] int intervention_count() const;
};

/// Samples one decentralized episode; stops at task completion or the horizon.
RolloutRecord rollout(const SyntheticTeam& team, std::uint64_t seed, const RolloutOptions& options = {});

/// `count` rollouts with seeds derive_seed(seed, k); the first
/// ceil(ratio * count) keep their labels. Work may be split across `jobs`
/// threads without changing the result.
LabeledDataset generate_dataset(const SyntheticTeam& team, int count, double supervision_ratio,
                                std::uint64_t seed, int jobs = 1);

}  // namespace coach::team
