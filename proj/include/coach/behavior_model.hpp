#pragma once

#include <concepts>
#include <cstdint>
#include <map>

#include "coach/types.hpp"

namespace coach {

/// Latent dynamics T(x'|x, a, s'). Blocks are stored per context (s', a) as an
/// |X|x|X| matrix (row x, column x'); contexts without a block use `fallback`.
class LatentTransitionTable {
 public:
  LatentTransitionTable() = default;
  LatentTransitionTable(int num_latents, std::int32_t num_states, std::int32_t num_joint_actions,
                        Matrix fallback);

  [[nodiscard]] static std::int64_t context_key(StateId next, JointActionId a,
                                                std::int32_t num_joint_actions) {
    return static_cast<std::int64_t>(next) * num_joint_actions + a;
  }
  [[nodiscard]] std::int64_t key(StateId next, JointActionId a) const {
    return context_key(next, a, num_joint_actions_);
  }

  [[nodiscard]] const Matrix& at(StateId next, JointActionId a) const {
    const auto it = blocks_.find(key(next, a));
    return it == blocks_.end() ? fallback_ : it->second;
  }
  /// Null when the context uses the fallback block.
  [[nodiscard]] const Matrix* find(std::int64_t key) const {
    const auto it = blocks_.find(key);
    return it == blocks_.end() ? nullptr : &it->second;
  }
  void set(StateId next, JointActionId a, Matrix block);

  [[nodiscard]] const Matrix& fallback() const noexcept { return fallback_; }
  [[nodiscard]] const std::map<std::int64_t, Matrix>& blocks() const noexcept { return blocks_; }
  [[nodiscard]] int num_latents() const noexcept { return num_latents_; }
  [[nodiscard]] std::int32_t num_states() const noexcept { return num_states_; }
  [[nodiscard]] std::int32_t num_joint_actions() const noexcept { return num_joint_actions_; }

 private:
  int num_latents_ = 0;
  std::int32_t num_states_ = 0;
  std::int32_t num_joint_actions_ = 0;
  Matrix fallback_;
  std::map<std::int64_t, Matrix> blocks_;
};

/// One team member's behavior (X_i, b_{x_i}, T_{x_i}, pi_i) as categorical tables
/// indexed by the owning TaskModel's dense state and joint-action ids.
class AgentBehaviorModel {
 public:
  AgentBehaviorModel() = default;
  /// initial_belief: S x X. policy: (S*X) x A_i with row s*X + x.
  AgentBehaviorModel(int num_latents, int num_actions, Matrix initial_belief, Matrix policy,
                     LatentTransitionTable latent_transition);

  /// Uniform tables of the given shape.
  static AgentBehaviorModel uniform(int num_latents, int num_actions, std::int32_t num_states,
                                    std::int32_t num_joint_actions);

  [[nodiscard]] int num_latents() const noexcept { return num_latents_; }
  [[nodiscard]] int num_actions() const noexcept { return num_actions_; }
  [[nodiscard]] std::int32_t num_states() const noexcept {
    return static_cast<std::int32_t>(initial_belief_.rows());
  }
  [[nodiscard]] std::int32_t num_joint_actions() const noexcept {
    return latent_transition_.num_joint_actions();
  }

  [[nodiscard]] auto initial(StateId s) const { return initial_belief_.row(s).transpose(); }
  [[nodiscard]] auto policy_rows(StateId s) const {
    return policy_.middleRows(static_cast<Eigen::Index>(s) * num_latents_, num_latents_);
  }
  /// pi(a_i | s, x) for every x.
  [[nodiscard]] auto action_likelihood(StateId s, ActionId a) const {
    return policy_rows(s).col(a);
  }
  [[nodiscard]] const Matrix& transition(StateId next, JointActionId a) const {
    return latent_transition_.at(next, a);
  }

  [[nodiscard]] const Matrix& initial_belief() const noexcept { return initial_belief_; }
  [[nodiscard]] const Matrix& policy() const noexcept { return policy_; }
  [[nodiscard]] const LatentTransitionTable& latent_transition() const noexcept {
    return latent_transition_;
  }
  Matrix& mutable_initial_belief() noexcept { return initial_belief_; }
  Matrix& mutable_policy() noexcept { return policy_; }
  LatentTransitionTable& mutable_latent_transition() noexcept { return latent_transition_; }

 private:
  int num_latents_ = 0;
  int num_actions_ = 0;
  Matrix initial_belief_;
  Matrix policy_;
  LatentTransitionTable latent_transition_;
};

/// Anything message passing and filtering can read behavior tables from.
template <class M>
concept BehaviorTables = requires(const M& m, StateId s, JointActionId a, ActionId ai) {
  { m.num_latents() } -> std::convertible_to<int>;
  m.initial(s);
  m.action_likelihood(s, ai);
  m.transition(s, a);
};

}  // namespace coach
