#include "coach/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "coach/error.hpp"

namespace coach {

ValueIterationResult value_iteration(const TabularMdp& mdp, double gamma, double tol,
                                     int max_sweeps) {
  const auto S = mdp.num_states;
  const auto A = mdp.num_actions;
  ValueIterationResult out;
  out.value = Vector::Zero(S);
  out.q = Matrix::Zero(S, A);
  Vector next(S);
  const bool has_terminal = !mdp.terminal.empty();
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    double residual = 0.0;
    for (StateId s = 0; s < S; ++s) {
      if (has_terminal && mdp.terminal[s]) {
        out.q.row(s).setZero();
        next(s) = 0.0;
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      for (ActionId a = 0; a < A; ++a) {
        double expect = 0.0;
        mdp.transition.for_each(s, a, [&](StateId n, double p) { expect += p * out.value(n); });
        const double q = mdp.reward[static_cast<std::int64_t>(s) * A + a] + gamma * expect;
        out.q(s, a) = q;
        best = std::max(best, q);
      }
      next(s) = best;
      residual = std::max(residual, std::abs(best - out.value(s)));
    }
    out.value.swap(next);
    out.residual = residual;
    out.sweeps = sweep;
    if (residual < tol) return out;
  }
  std::ostringstream msg;
  msg << "value iteration did not converge in " << max_sweeps << " sweeps (residual "
      << out.residual << ", tol " << tol << ")";
  throw NumericalError(msg.str());
}

Matrix softmax_policy(const Matrix& q, double temperature) {
  Matrix pi(q.rows(), q.cols());
  for (Eigen::Index s = 0; s < q.rows(); ++s) {
    const double best = q.row(s).maxCoeff();
    auto row = pi.row(s);
    row = ((q.row(s).array() - best) / temperature).exp().matrix();
    row /= row.sum();
  }
  return pi;
}

}  // namespace coach
