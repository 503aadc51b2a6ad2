#include "coach/team/synthetic_team.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "coach/error.hpp"
#include "coach/mdp.hpp"

namespace coach::team {

using domains::WorldState;

SyntheticTeam::SyntheticTeam(const domains::BuiltDomain& built, TeamParams params)
    : built_(&built), params_(params) {
  if (!(params_.temperature > 0.0)) throw ValidationError("team: temperature must be positive");
  const auto& cfg = built.config();
  policies_.resize(cfg.num_agents);
  for (int i = 0; i < cfg.num_agents; ++i) {
    for (int x = 0; x < cfg.num_latents; ++x) {
      const auto mdp = built.domain->local_mdp(i, x);
      const auto vi = value_iteration(mdp, params_.local_gamma);
      policies_[i].push_back(softmax_policy(vi.q, params_.temperature));
    }
  }
}

RowVector SyntheticTeam::policy(int agent, const WorldState& belief, LatentId x) const {
  return policies_[agent][x].row(built_->domain->local_state(agent, belief));
}

Vector SyntheticTeam::latent_transition(int agent, LatentId x, std::span<const int> observed_actions,
                                        const WorldState& belief) const {
  return built_->domain->latent_rule(agent, x, observed_actions, belief);
}

double RolloutRecord::total_reward() const { return std::accumulate(rewards.begin(), rewards.end(), 0.0); }

int RolloutRecord::intervention_count() const {
  return static_cast<int>(std::count(interventions.begin(), interventions.end(), 1));
}

namespace {

StateId sample_next(const TaskModel& task, StateId s, JointActionId a, Rng& rng) {
  if (task.transition.deterministic()) return task.transition.next(s, a);
  const double u = uniform01(rng);
  double acc = 0.0;
  StateId chosen = -1;
  StateId last = -1;
  task.transition.for_each(s, a, [&](StateId n, double p) {
    if (p <= 0.0) return;
    last = n;
    acc += p;
    if (chosen < 0 && u < acc) chosen = n;
  });
  return chosen < 0 ? last : chosen;
}

}  // namespace

RolloutRecord rollout(const SyntheticTeam& team, std::uint64_t seed, const RolloutOptions& options) {
  const auto& built = team.built();
  const auto& task = built.task;
  const auto& domain = *built.domain;
  const int n = team.num_agents();
  const int h = task.horizon;
  Rng rng(seed);

  RolloutRecord rec;
  auto& traj = rec.trajectory;
  traj.seed = seed;
  traj.latents.assign(n, {});

  StateId s = task.initial_state;
  std::vector<WorldState> belief(n, built.state(s));
  std::vector<LatentId> x(n);
  for (int i = 0; i < n; ++i) x[i] = sample_categorical(domain.initial_latent_distribution(i), rng);

  std::vector<int> acts(n);
  std::vector<int> seen(n);
  for (int t = 0;; ++t) {
    traj.states.push_back(s);
    const bool last = task.is_terminal(s) || t == h;
    std::uint8_t intervened = 0;
    if (options.hook && !last) {
      if (auto rec_profile = options.hook(t, traj)) {
        if (static_cast<int>(rec_profile->size()) != n)
          throw ValidationError("intervention profile has the wrong number of agents");
        intervened = 1;
        for (int i = 0; i < n; ++i)
          if (bernoulli(options.acceptance, rng)) x[i] = (*rec_profile)[i];
      }
    }
    rec.interventions.push_back(intervened);
    for (int i = 0; i < n; ++i) traj.latents[i].push_back(x[i]);
    rec.beliefs.push_back(belief);
    if (last) break;

    for (int i = 0; i < n; ++i) acts[i] = sample_categorical(team.policy(i, belief[i], x[i]), rng);
    const JointActionId a = task.actions.encode(acts);
    const StateId next = sample_next(task, s, a, rng);
    traj.actions.push_back(a);
    rec.rewards.push_back(task.r(s, a));

    const WorldState& truth = built.state(next);
    for (int i = 0; i < n; ++i) {
      const auto obs = domain.observe(i, truth);
      belief[i] = domains::update_belief(belief[i], obs, n, domain.num_objects());
      for (int j = 0; j < n; ++j) seen[j] = (j == i || obs.sees_agent(j)) ? acts[j] : domains::kUnobservedAction;
      x[i] = sample_categorical(team.latent_transition(i, x[i], seen, belief[i]), rng);
    }
    s = next;
  }
  return rec;
}

LabeledDataset generate_dataset(const SyntheticTeam& team, int count, double supervision_ratio,
                                std::uint64_t seed, int jobs) {
  if (count < 1) throw ValidationError("dataset count must be at least 1");
  if (!(supervision_ratio >= 0.0 && supervision_ratio <= 1.0))
    throw ValidationError("supervision ratio must lie in [0, 1]");
  LabeledDataset data;
  data.domain = team.built().config().name;
  data.num_agents = team.num_agents();
  data.trajectories.resize(count);
  const auto labeled = static_cast<int>(std::ceil(supervision_ratio * count - 1e-12));
  auto work = [&](int begin, int stride) {
    for (int k = begin; k < count; k += stride) {
      auto rec = rollout(team, derive_seed(seed, static_cast<std::uint64_t>(k)));
      if (k >= labeled) rec.trajectory.latents.clear();
      data.trajectories[k] = std::move(rec.trajectory);
    }
  };
  jobs = std::clamp(jobs, 1, count);
  if (jobs == 1) {
    work(0, 1);
    return data;
  }
  std::vector<std::exception_ptr> errors(jobs);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < jobs; ++w)
      pool.emplace_back([&, w] {
        try {
          work(w, jobs);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return data;
}

}  // namespace coach::team
