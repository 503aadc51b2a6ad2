#include "coach/behavior_model.hpp"

#include <stdexcept>

namespace coach {

LatentTransitionTable::LatentTransitionTable(int num_latents, std::int32_t num_states,
                                             std::int32_t num_joint_actions, Matrix fallback)
    : num_latents_(num_latents),
      num_states_(num_states),
      num_joint_actions_(num_joint_actions),
      fallback_(std::move(fallback)) {}

void LatentTransitionTable::set(StateId next, JointActionId a, Matrix block) {
  if (block.rows() != num_latents_ || block.cols() != num_latents_)
    throw std::invalid_argument("LatentTransitionTable::set: block must be |X| x |X|");
  blocks_[key(next, a)] = std::move(block);
}

AgentBehaviorModel::AgentBehaviorModel(int num_latents, int num_actions, Matrix initial_belief,
                                       Matrix policy, LatentTransitionTable latent_transition)
    : num_latents_(num_latents),
      num_actions_(num_actions),
      initial_belief_(std::move(initial_belief)),
      policy_(std::move(policy)),
      latent_transition_(std::move(latent_transition)) {}

AgentBehaviorModel AgentBehaviorModel::uniform(int num_latents, int num_actions,
                                               std::int32_t num_states,
                                               std::int32_t num_joint_actions) {
  Matrix b = Matrix::Constant(num_states, num_latents, 1.0 / num_latents);
  Matrix pi = Matrix::Constant(static_cast<Eigen::Index>(num_states) * num_latents, num_actions,
                               1.0 / num_actions);
  LatentTransitionTable tx(num_latents, num_states, num_joint_actions,
                           Matrix::Constant(num_latents, num_latents, 1.0 / num_latents));
  return {num_latents, num_actions, std::move(b), std::move(pi), std::move(tx)};
}

}  // namespace coach
