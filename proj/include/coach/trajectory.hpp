#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coach/types.hpp"

namespace coach {

/// One episode: states s^0..s^L and joint actions a^0..a^{L-1}. Latent labels,
/// when present, cover every agent at every state index (L+1 entries each).
struct Trajectory {
  std::uint64_t seed = 0;
  std::vector<StateId> states;
  std::vector<JointActionId> actions;
  std::vector<std::vector<LatentId>> latents;

  [[nodiscard]] bool labeled() const noexcept { return !latents.empty(); }
  [[nodiscard]] int length() const noexcept { return static_cast<int>(actions.size()); }
};

/// Demonstrations; a trajectory is either fully labeled or not at all.
struct LabeledDataset {
  std::string domain;
  int num_agents = 0;
  std::vector<Trajectory> trajectories;

  [[nodiscard]] std::size_t labeled_count() const;
  [[nodiscard]] double supervision_ratio() const;
};

}  // namespace coach
