#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coach/behavior_model.hpp"
#include "coach/btil/messages.hpp"
#include "coach/task_model.hpp"
#include "coach/trajectory.hpp"

namespace coach::btil {

struct FitOptions {
  /// Symmetric Dirichlet concentration on every table row.
  double alpha = 1.01;
  /// Extra prior mass on x' = x in every T_x row, so contexts never seen in
  /// training default to "keep the current mental state".
  double stickiness = 0.5;
  int max_iters = 100;
  /// Stop once |ELBO_k - ELBO_{k-1}| < tol * |ELBO_{k-1}|.
  double tol = 1e-4;
  /// Seeds the random initial responsibilities used when nothing is labeled.
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct FitResult {
  std::vector<AgentBehaviorModel> models;
  /// ELBO after each E-step; non-decreasing up to round-off.
  std::vector<double> elbo;
  bool converged = false;
};

/// Mean-field variational Bayes for (b_x, T_x, pi) of every agent with
/// Dirichlet posteriors on each table row. Labeled trajectories contribute
/// their label counts directly. Returns the posterior modes.
FitResult fit(const LabeledDataset& data, const TaskModel& task, std::span<const int> latent_sizes,
              const FitOptions& options = {});

/// Posterior modes from the labeled trajectories alone (no E-step).
std::vector<AgentBehaviorModel> count_estimate(const LabeledDataset& data, const TaskModel& task,
                                               std::span<const int> latent_sizes, const FitOptions& options);

}  // namespace coach::btil
