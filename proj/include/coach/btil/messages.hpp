#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "coach/behavior_model.hpp"
#include "coach/error.hpp"
#include "coach/joint_space.hpp"
#include "coach/trajectory.hpp"

namespace coach::btil {

/// Per-agent normalized forward/backward messages over (time, latent). Row t
/// of `forward` and `backward` each sum to one. `log_normalizer` is the log of
/// the unnormalized total mass, log p(a_i^{0:L-1}, latent path | s, a_{-i}).
struct Messages {
  Matrix forward;
  Matrix backward;
  double log_normalizer = 0.0;
};

namespace detail {
inline void normalize_or_throw(auto&& row, int agent, int t, const char* what) {
  const double z = row.sum();
  if (!(z > 0.0) || !std::isfinite(z))
    throw NumericalError(std::string(what) + ": zero probability mass for agent " + std::to_string(agent) +
                         " at step " + std::to_string(t));
  row /= z;
}
}  // namespace detail

/// F(0,j) ∝ b(j|s0) pi(a_i^0|j,s0); F(t,j) ∝ sum_k F(t-1,k) T(j|k,a^{t-1},s^t) pi(a_i^t|j,s^t).
/// The final step has no action and so no action likelihood.
template <BehaviorTables M>
Matrix forward_messages(const M& model, int agent, const Trajectory& traj, const JointSpace& joint,
                        double* log_normalizer = nullptr) {
  const int L = traj.length();
  const int X = model.num_latents();
  Matrix F(L + 1, X);
  double log_z = 0.0;
  auto emit = [&](int t) -> Vector {
    if (t == L) return Vector::Ones(X);
    return model.action_likelihood(traj.states[t], joint.component(traj.actions[t], agent));
  };
  F.row(0) = model.initial(traj.states[0]).transpose().cwiseProduct(emit(0).transpose());
  for (int t = 0; t <= L; ++t) {
    if (t > 0) {
      const auto& T = model.transition(traj.states[t], traj.actions[t - 1]);
      F.row(t) = (F.row(t - 1) * T).cwiseProduct(emit(t).transpose());
    }
    const double z = F.row(t).sum();
    detail::normalize_or_throw(F.row(t), agent, t, "forward message");
    log_z += std::log(z);
  }
  if (log_normalizer) *log_normalizer = log_z;
  return F;
}

/// B(L,.) = 1; B(t,k) ∝ sum_j T(j|k,a^t,s^{t+1}) pi(a_i^{t+1}|j,s^{t+1}) B(t+1,j).
template <BehaviorTables M>
Matrix backward_messages(const M& model, int agent, const Trajectory& traj, const JointSpace& joint) {
  const int L = traj.length();
  const int X = model.num_latents();
  Matrix B(L + 1, X);
  B.row(L).setOnes();
  for (int t = L - 1; t >= 0; --t) {
    Vector next = B.row(t + 1).transpose();
    if (t + 1 < L)
      next = next.cwiseProduct(
          Vector(model.action_likelihood(traj.states[t + 1], joint.component(traj.actions[t + 1], agent))));
    const auto& T = model.transition(traj.states[t + 1], traj.actions[t]);
    B.row(t) = (T * next).transpose();
    detail::normalize_or_throw(B.row(t), agent, t, "backward message");
  }
  return B;
}

template <BehaviorTables M>
Messages messages(const M& model, int agent, const Trajectory& traj, const JointSpace& joint) {
  Messages m;
  m.forward = forward_messages(model, agent, traj, joint, &m.log_normalizer);
  m.backward = backward_messages(model, agent, traj, joint);
  return m;
}

/// q(x_i^t) ∝ F(t) ⊙ B(t), one row per step.
Matrix smoothed_marginals(const Messages& m);

/// q(x_i^t = k, x_i^{t+1} = j) ∝ F(t,k) T(j|k,a^t,s^{t+1}) pi(a_i^{t+1}|j,s^{t+1}) B(t+1,j).
template <BehaviorTables M>
std::vector<Matrix> pairwise_marginals(const M& model, int agent, const Trajectory& traj,
                                       const JointSpace& joint, const Messages& m) {
  const int L = traj.length();
  std::vector<Matrix> out;
  out.reserve(L);
  for (int t = 0; t < L; ++t) {
    RowVector right = m.backward.row(t + 1);
    if (t + 1 < L)
      right = right.cwiseProduct(
          model.action_likelihood(traj.states[t + 1], joint.component(traj.actions[t + 1], agent)).transpose());
    const auto& T = model.transition(traj.states[t + 1], traj.actions[t]);
    Matrix p = m.forward.row(t).transpose().asDiagonal() * T * right.asDiagonal();
    const double z = p.sum();
    if (!(z > 0.0)) throw NumericalError("pairwise marginal: zero mass at step " + std::to_string(t));
    out.push_back(p / z);
  }
  return out;
}

}  // namespace coach::btil
