#pragma once

#include <cstdint>
#include <vector>

#include "coach/task_model.hpp"
#include "coach/types.hpp"

namespace coach {

/// Single-decision-maker tabular MDP used to derive ground-truth policies.
struct TabularMdp {
  std::int32_t num_states = 0;
  std::int32_t num_actions = 0;
  TransitionTable transition;
  std::vector<double> reward;  // row-major (s, a)
  std::vector<std::uint8_t> terminal;  // optional; terminal states have value 0
};

struct ValueIterationResult {
  Vector value;
  Matrix q;  // num_states x num_actions
  double residual = 0.0;
  int sweeps = 0;
};

/// Optimal values by synchronous value iteration. Stops once the largest
/// Bellman update is below `tol`; throws NumericalError with the residual when
/// `max_sweeps` is exhausted first.
ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma, double tol = 1e-10,
                                     int max_sweeps = 100000);

/// Row-wise softmax of Q / temperature. Exactly tied actions get equal mass.
Matrix softmax_policy(const Matrix& q, double temperature);

}  // namespace coach
