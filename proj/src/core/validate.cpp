#include "coach/validate.hpp"

#include <cmath>
#include <sstream>

#include "coach/error.hpp"

namespace coach {
namespace {

template <class Row>
bool stochastic(const Row& row) {
  double sum = 0.0;
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    if (!(row(k) >= 0.0) || !std::isfinite(row(k))) return false;
    sum += row(k);
  }
  return std::abs(sum - 1.0) <= kStochasticTolerance;
}

std::string fmt_row_sum(double sum) {
  std::ostringstream os;
  os.precision(12);
  os << sum;
  return os.str();
}

}  // namespace

ValidationReport validate_model(const TaskModel& task) {
  ValidationReport report;
  const auto S = task.num_states;
  const auto A = task.num_joint_actions();
  if (task.num_agents() < 1) report.push_back("task has no agents");
  if (S <= 0) report.push_back("task has no states");
  if (!(task.gamma > 0.0 && task.gamma <= 1.0)) report.push_back("gamma outside (0, 1]");
  if (task.horizon < 1) report.push_back("horizon < 1");
  if (task.initial_state < 0 || task.initial_state >= S) report.push_back("initial state out of range");
  if (task.transition.num_states() != S || task.transition.num_actions() != A) {
    report.push_back("transition table shape does not match states x joint actions");
    return report;
  }
  if (static_cast<std::int64_t>(task.reward.size()) != static_cast<std::int64_t>(S) * A)
    report.push_back("reward table shape does not match states x joint actions");
  if (static_cast<std::int32_t>(task.terminal.size()) != S)
    report.push_back("terminal mask size does not match states");
  for (StateId s = 0; s < S; ++s) {
    for (JointActionId a = 0; a < A; ++a) {
      double sum = 0.0;
      bool in_range = true;
      task.transition.for_each(s, a, [&](StateId n, double p) {
        sum += p;
        if (n < 0 || n >= S || !(p >= 0.0)) in_range = false;
      });
      if (!in_range)
        report.push_back("transition (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                         ") has an out-of-range successor or negative probability");
      if (std::abs(sum - 1.0) > kStochasticTolerance)
        report.push_back("transition row (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                         ") sums to " + fmt_row_sum(sum));
      if (static_cast<std::int64_t>(task.reward.size()) == static_cast<std::int64_t>(S) * A &&
          !std::isfinite(task.r(s, a)))
        report.push_back("reward (s=" + std::to_string(s) + ", a=" + std::to_string(a) +
                         ") is not finite");
    }
  }
  return report;
}

ValidationReport validate_model(const AgentBehaviorModel& behavior) {
  ValidationReport report;
  const int X = behavior.num_latents();
  const int A = behavior.num_actions();
  if (X <= 0) report.push_back("behavior has no latent states");
  if (behavior.initial_belief().cols() != X)
    report.push_back("dimension mismatch: initial belief has " +
                     std::to_string(behavior.initial_belief().cols()) + " latent columns, expected " +
                     std::to_string(X));
  if (behavior.policy().rows() != static_cast<Eigen::Index>(behavior.num_states()) * X)
    report.push_back("dimension mismatch: policy has " + std::to_string(behavior.policy().rows()) +
                     " rows, expected states*|X| = " +
                     std::to_string(static_cast<Eigen::Index>(behavior.num_states()) * X));
  if (behavior.policy().cols() != A)
    report.push_back("dimension mismatch: policy has " + std::to_string(behavior.policy().cols()) +
                     " action columns, expected " + std::to_string(A));
  const auto& tx = behavior.latent_transition();
  if (tx.num_latents() != X || tx.fallback().rows() != X || tx.fallback().cols() != X)
    report.push_back("dimension mismatch: latent transition is not |X| x |X|");
  if (!report.empty()) return report;

  for (Eigen::Index s = 0; s < behavior.initial_belief().rows(); ++s)
    if (!stochastic(behavior.initial_belief().row(s)))
      report.push_back("initial belief row s=" + std::to_string(s) + " is not stochastic");
  for (Eigen::Index r = 0; r < behavior.policy().rows(); ++r)
    if (!stochastic(behavior.policy().row(r)))
      report.push_back("policy row (s=" + std::to_string(r / X) + ", x=" + std::to_string(r % X) +
                       ") is not stochastic");
  for (int x = 0; x < X; ++x)
    if (!stochastic(tx.fallback().row(x)))
      report.push_back("latent transition fallback row x=" + std::to_string(x) +
                       " is not stochastic");
  for (const auto& [key, block] : tx.blocks()) {
    for (int x = 0; x < X; ++x)
      if (!stochastic(block.row(x)))
        report.push_back("latent transition row (s'=" +
                         std::to_string(key / tx.num_joint_actions()) +
                         ", a=" + std::to_string(key % tx.num_joint_actions()) +
                         ", x=" + std::to_string(x) + ") is not stochastic");
    if (key < 0 || key >= static_cast<std::int64_t>(tx.num_states()) * tx.num_joint_actions())
      report.push_back("latent transition context " + std::to_string(key) + " out of range");
  }
  return report;
}

ValidationReport validate_model(const AgentBehaviorModel& behavior, const TaskModel& task,
                                int agent) {
  ValidationReport report;
  if (agent < 0 || agent >= task.num_agents()) {
    report.push_back("agent index out of range");
    return report;
  }
  if (behavior.num_states() != task.num_states)
    report.push_back("dimension mismatch: behavior covers " +
                     std::to_string(behavior.num_states()) + " states, task has " +
                     std::to_string(task.num_states));
  if (behavior.num_actions() != task.actions.radix(agent))
    report.push_back("dimension mismatch: behavior has " + std::to_string(behavior.num_actions()) +
                     " actions, task agent has " + std::to_string(task.actions.radix(agent)));
  if (behavior.latent_transition().num_joint_actions() != task.num_joint_actions())
    report.push_back("dimension mismatch: latent transition joint actions differ from task");
  if (!report.empty()) return report;
  return validate_model(behavior);
}

ValidationReport validate_trajectory(const Trajectory& traj, const TaskModel& task) {
  ValidationReport report;
  if (traj.states.size() != traj.actions.size() + 1)
    report.push_back("trajectory needs exactly one more state than actions");
  for (StateId s : traj.states)
    if (s < 0 || s >= task.num_states) report.push_back("state id " + std::to_string(s) + " out of range");
  for (JointActionId a : traj.actions)
    if (a < 0 || a >= task.num_joint_actions())
      report.push_back("joint action id " + std::to_string(a) + " out of range");
  if (traj.labeled()) {
    if (static_cast<int>(traj.latents.size()) != task.num_agents())
      report.push_back("latent labels must cover every agent");
    for (const auto& row : traj.latents)
      if (row.size() != traj.states.size()) report.push_back("latent labels must cover every state");
  }
  return report;
}

void require_valid(const ValidationReport& report, const std::string& what) {
  if (report.empty()) return;
  std::string msg = what + " failed validation:";
  for (const auto& line : report) msg += "\n  - " + line;
  throw ValidationError(msg);
}

}  // namespace coach
