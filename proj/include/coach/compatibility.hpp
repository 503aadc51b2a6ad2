#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "coach/behavior_model.hpp"
#include "coach/joint_space.hpp"
#include "coach/task_model.hpp"

namespace coach {

/// g(x|s) = V(s, x): discounted return of the learned team policy on the
/// centralized, fully observable model, for every state and joint profile.
class CompatibilityTable {
 public:
  CompatibilityTable() = default;
  CompatibilityTable(JointSpace profiles, Matrix value, double gamma, double residual, int sweeps);

  [[nodiscard]] const JointSpace& profiles() const noexcept { return profiles_; }
  [[nodiscard]] std::int32_t num_states() const noexcept { return static_cast<std::int32_t>(value_.rows()); }
  [[nodiscard]] std::int32_t num_profiles() const noexcept { return profiles_.size(); }
  [[nodiscard]] double value(StateId s, ProfileId x) const { return value_(s, x); }
  [[nodiscard]] const Matrix& values() const noexcept { return value_; }
  [[nodiscard]] double gamma() const noexcept { return gamma_; }
  [[nodiscard]] double residual() const noexcept { return residual_; }
  [[nodiscard]] int sweeps() const noexcept { return sweeps_; }

  /// argmax_x V(s, x), lowest joint id on ties.
  [[nodiscard]] ProfileId best_profile(StateId s) const { return best_[s]; }
  /// max_x' V(s, x') - V(s, x).
  [[nodiscard]] double regret(StateId s, ProfileId x) const { return value_(s, best_[s]) - value_(s, x); }
  [[nodiscard]] double benefit(StateId s, ProfileId x, double cost) const { return regret(s, x) - cost; }

 private:
  JointSpace profiles_;
  Matrix value_;  // S x P
  std::vector<ProfileId> best_;
  double gamma_ = 0.0;
  double residual_ = 0.0;
  int sweeps_ = 0;
};

struct ValueOptions {
  /// Negative means "use the task's discount".
  double gamma = -1.0;
  /// Required bound on the final Bellman residual (max norm).
  double tol = 1e-6;
  int max_sweeps = 20000;
};

/// Policy evaluation on the chain over (s, x): a ~ prod_i pi_i(.|s, x_i),
/// s' ~ T(.|s, a), x'_i ~ T_i(.|x_i, a, s'). Terminal states have value 0.
/// Throws NumericalError with the residual when the sweep cap is reached.
CompatibilityTable evaluate_team_value(const TaskModel& task, std::span<const AgentBehaviorModel> models,
                                       const ValueOptions& options = {});

/// One synchronous Bellman backup of `value` minus `value` (max norm).
double bellman_residual(const TaskModel& task, std::span<const AgentBehaviorModel> models, const Matrix& value,
                        double gamma);

void write_table(std::ostream& out, const CompatibilityTable& table);
CompatibilityTable read_table(std::istream& in);
void save_table(const std::filesystem::path& path, const CompatibilityTable& table);
CompatibilityTable load_table(const std::filesystem::path& path);

}  // namespace coach
