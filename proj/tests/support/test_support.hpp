#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "coach/behavior_model.hpp"
#include "coach/domains/domain.hpp"
#include "coach/random.hpp"
#include "coach/team/synthetic_team.hpp"
#include "coach/trajectory.hpp"

namespace coach::testing {

/// Shared tiny-domain instance; building it is cheap but tests reuse it.
inline const domains::BuiltDomain& tiny() {
  static const domains::BuiltDomain built = domains::build_tiny();
  return built;
}

/// Dirichlet(1)-style random row with every entry strictly positive.
inline Vector random_row(int n, Rng& rng) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = 0.05 + uniform01(rng);
  return v / v.sum();
}

/// Random behavior models with an explicit latent block for every (s', a).
inline std::vector<AgentBehaviorModel> random_models(const TaskModel& task, int num_latents, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AgentBehaviorModel> out;
  for (int i = 0; i < task.num_agents(); ++i) {
    const int A = task.actions.radix(i);
    Matrix init(task.num_states, num_latents);
    for (StateId s = 0; s < task.num_states; ++s) init.row(s) = random_row(num_latents, rng).transpose();
    Matrix pol(static_cast<Eigen::Index>(task.num_states) * num_latents, A);
    for (Eigen::Index r = 0; r < pol.rows(); ++r) pol.row(r) = random_row(A, rng).transpose();
    LatentTransitionTable lt(num_latents, task.num_states, task.num_joint_actions(),
                             Matrix::Constant(num_latents, num_latents, 1.0 / num_latents));
    for (StateId s = 0; s < task.num_states; ++s)
      for (JointActionId a = 0; a < task.num_joint_actions(); ++a) {
        Matrix block(num_latents, num_latents);
        for (int x = 0; x < num_latents; ++x) block.row(x) = random_row(num_latents, rng).transpose();
        lt.set(s, a, block);
      }
    out.emplace_back(num_latents, A, init, pol, lt);
  }
  return out;
}

/// Trajectory sampled from the task model itself with random joint actions.
inline Trajectory random_walk(const TaskModel& task, int length, Rng& rng) {
  Trajectory t;
  StateId s = task.initial_state;
  t.states.push_back(s);
  for (int k = 0; k < length; ++k) {
    const JointActionId a = static_cast<JointActionId>(uniform01(rng) * task.num_joint_actions());
    Vector w = Vector::Zero(task.num_states);
    task.transition.for_each(s, a, [&](StateId n, double p) { w(n) += p; });
    s = sample_categorical(w, rng);
    t.actions.push_back(a);
    t.states.push_back(s);
  }
  return t;
}

/// Calls f(digits) for every tuple in the mixed-radix space.
inline void for_each_tuple(const std::vector<int>& radices, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> d(radices.size(), 0);
  while (true) {
    f(d);
    std::size_t k = d.size();
    while (k > 0) {
      --k;
      if (++d[k] < radices[k]) break;
      d[k] = 0;
      if (k == 0) return;
    }
    if (d.empty()) return;
  }
}

inline double max_abs(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace coach::testing
