#pragma once

#include <string>
#include <vector>

#include "coach/behavior_model.hpp"
#include "coach/task_model.hpp"
#include "coach/trajectory.hpp"

namespace coach {

inline constexpr double kStochasticTolerance = 1e-9;

/// Every violated invariant, one human-readable line each. Empty means valid.
using ValidationReport = std::vector<std::string>;

ValidationReport validate_model(const TaskModel& task);
ValidationReport validate_model(const AgentBehaviorModel& behavior);
/// Also checks dimensions against the task.
ValidationReport validate_model(const AgentBehaviorModel& behavior, const TaskModel& task,
                                int agent);
ValidationReport validate_trajectory(const Trajectory& traj, const TaskModel& task);

/// Throws ValidationError listing the report when it is not empty.
void require_valid(const ValidationReport& report, const std::string& what);

}  // namespace coach
