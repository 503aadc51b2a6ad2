#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coach/joint_space.hpp"
#include "coach/types.hpp"

namespace coach {

/// Sparse row-stochastic transition table T(s'|s,a), stored CSR-style with one
/// row per (s, a) pair. When every row has exactly one successor with
/// probability one, offsets and probabilities are left empty.
class TransitionTable {
 public:
  struct Entry {
    StateId next;
    double prob;
  };

  TransitionTable() = default;
  /// Deterministic table: `next[s * num_actions + a]`.
  TransitionTable(std::int32_t num_states, std::int32_t num_actions, std::vector<StateId> next);
  /// General table. `offsets` has num_states*num_actions+1 entries.
  TransitionTable(std::int32_t num_states, std::int32_t num_actions,
                  std::vector<std::int64_t> offsets, std::vector<StateId> next,
                  std::vector<double> probs);

  [[nodiscard]] std::int32_t num_states() const noexcept { return num_states_; }
  [[nodiscard]] std::int32_t num_actions() const noexcept { return num_actions_; }
  [[nodiscard]] bool deterministic() const noexcept { return offsets_.empty(); }

  /// Calls f(next, prob) for every successor of (s, a).
  template <class F>
  void for_each(StateId s, JointActionId a, F&& f) const {
    const std::int64_t row = static_cast<std::int64_t>(s) * num_actions_ + a;
    if (offsets_.empty()) {
      f(next_[row], 1.0);
      return;
    }
    for (std::int64_t k = offsets_[row]; k < offsets_[row + 1]; ++k) f(next_[k], probs_[k]);
  }

  /// Successor of a deterministic row; only valid when deterministic().
  [[nodiscard]] StateId next(StateId s, JointActionId a) const {
    return next_[static_cast<std::int64_t>(s) * num_actions_ + a];
  }

  [[nodiscard]] std::vector<Entry> row(StateId s, JointActionId a) const;

  /// Position of the first successor of (s, a) in the flat entry list.
  [[nodiscard]] std::int64_t entry_begin(StateId s, JointActionId a) const {
    const std::int64_t row = static_cast<std::int64_t>(s) * num_actions_ + a;
    return offsets_.empty() ? row : offsets_[row];
  }
  [[nodiscard]] std::int64_t num_entries() const noexcept { return static_cast<std::int64_t>(next_.size()); }

 private:
  std::int32_t num_states_ = 0;
  std::int32_t num_actions_ = 0;
  std::vector<std::int64_t> offsets_;
  std::vector<StateId> next_;
  std::vector<double> probs_;
};

/// Tabular multi-agent task: (n, S, A = x_i A_i, T_s, R, gamma, h) plus the
/// absorbing terminal set. Observations are handled by the owning domain.
struct TaskModel {
  std::string name;
  JointSpace actions;
  std::int32_t num_states = 0;
  StateId initial_state = 0;
  TransitionTable transition;
  /// R(s, a), row-major over (s, a).
  std::vector<double> reward;
  std::vector<std::uint8_t> terminal;
  double gamma = 0.95;
  int horizon = 1;

  [[nodiscard]] int num_agents() const noexcept { return actions.num_agents(); }
  [[nodiscard]] std::int32_t num_joint_actions() const noexcept { return actions.size(); }
  [[nodiscard]] double r(StateId s, JointActionId a) const {
    return reward[static_cast<std::int64_t>(s) * actions.size() + a];
  }
  [[nodiscard]] bool is_terminal(StateId s) const { return terminal[s] != 0; }
};

}  // namespace coach
