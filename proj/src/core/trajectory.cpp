#include "coach/trajectory.hpp"

#include <algorithm>

namespace coach {

std::size_t LabeledDataset::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(trajectories.begin(), trajectories.end(),
                                                [](const Trajectory& t) { return t.labeled(); }));
}

double LabeledDataset::supervision_ratio() const {
  if (trajectories.empty()) return 0.0;
  return static_cast<double>(labeled_count()) / static_cast<double>(trajectories.size());
}

}  // namespace coach
