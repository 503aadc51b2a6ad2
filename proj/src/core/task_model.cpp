#include "coach/task_model.hpp"

#include <stdexcept>

namespace coach {

TransitionTable::TransitionTable(std::int32_t num_states, std::int32_t num_actions,
                                 std::vector<StateId> next)
    : num_states_(num_states), num_actions_(num_actions), next_(std::move(next)) {
  if (static_cast<std::int64_t>(next_.size()) != static_cast<std::int64_t>(num_states) * num_actions)
    throw std::invalid_argument("TransitionTable: next has wrong size");
}

TransitionTable::TransitionTable(std::int32_t num_states, std::int32_t num_actions,
                                 std::vector<std::int64_t> offsets, std::vector<StateId> next,
                                 std::vector<double> probs)
    : num_states_(num_states),
      num_actions_(num_actions),
      offsets_(std::move(offsets)),
      next_(std::move(next)),
      probs_(std::move(probs)) {
  if (static_cast<std::int64_t>(offsets_.size()) !=
      static_cast<std::int64_t>(num_states) * num_actions + 1)
    throw std::invalid_argument("TransitionTable: offsets has wrong size");
  if (next_.size() != probs_.size() || offsets_.back() != static_cast<std::int64_t>(next_.size()))
    throw std::invalid_argument("TransitionTable: entry arrays inconsistent with offsets");
}

std::vector<TransitionTable::Entry> TransitionTable::row(StateId s, JointActionId a) const {
  std::vector<Entry> out;
  for_each(s, a, [&](StateId n, double p) { out.push_back({n, p}); });
  return out;
}

}  // namespace coach
