#pragma once

#include <span>
#include <vector>

#include "coach/behavior_model.hpp"
#include "coach/task_model.hpp"
#include "coach/trajectory.hpp"

namespace coach::filter {

/// p(x_i^t | s^{0:t}, a^{0:t-1}) for every agent.
struct FilterState {
  std::vector<Vector> belief;
  int t = 0;
  StateId state = 0;
};

/// Task-time inference of each member's mental state from the observable
/// stream, using learned behavior models.
class MentalStateFilter {
 public:
  MentalStateFilter(std::span<const AgentBehaviorModel> models, const JointSpace& joint);

  [[nodiscard]] FilterState init(StateId s0) const;
  /// F(t,j) ∝ sum_k F(t-1,k) T(j|k,a^{t-1},s^t) pi(a_i^{t-1}|s^{t-1},k).
  [[nodiscard]] FilterState step(const FilterState& prev, JointActionId action, StateId next) const;

  [[nodiscard]] int num_agents() const noexcept { return static_cast<int>(models_.size()); }
  [[nodiscard]] const AgentBehaviorModel& model(int agent) const { return models_[agent]; }

 private:
  std::vector<AgentBehaviorModel> models_;
  JointSpace joint_;
};

/// (1 - p_a) * belief + p_a * delta(x_int) per agent.
FilterState apply_intervention(FilterState state, std::span<const LatentId> profile, double acceptance);

/// Per-agent argmax; ties go to the lowest id.
std::vector<LatentId> map_estimate(const FilterState& state);

struct AccuracySummary {
  std::vector<double> per_episode;
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Fraction of agent-steps whose MAP estimate equals the true label,
/// averaged over the n(L+1) agent-steps of each episode.
AccuracySummary inference_accuracy(const LabeledDataset& eval, std::span<const AgentBehaviorModel> models,
                                   const TaskModel& task);

}  // namespace coach::filter
