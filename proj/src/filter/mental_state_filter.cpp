#include "coach/filter/mental_state_filter.hpp"

#include <cmath>
#include <string>

#include "coach/error.hpp"

namespace coach::filter {

MentalStateFilter::MentalStateFilter(std::span<const AgentBehaviorModel> models, const JointSpace& joint)
    : models_(models.begin(), models.end()), joint_(joint) {
  if (static_cast<int>(models_.size()) != joint.num_agents())
    throw ValidationError("filter: need one behavior model per agent");
}

FilterState MentalStateFilter::init(StateId s0) const {
  FilterState f;
  f.state = s0;
  for (const auto& m : models_) f.belief.emplace_back(m.initial(s0));
  return f;
}

FilterState MentalStateFilter::step(const FilterState& prev, JointActionId action, StateId next) const {
  FilterState f;
  f.t = prev.t + 1;
  f.state = next;
  for (int i = 0; i < num_agents(); ++i) {
    const auto& m = models_[i];
    const Vector weighted = prev.belief[i].cwiseProduct(Vector(m.action_likelihood(prev.state, joint_.component(action, i))));
    Vector b = m.transition(next, action).transpose() * weighted;
    const double z = b.sum();
    if (!(z > 0.0) || !std::isfinite(z))
      throw NumericalError("filter: model gives zero probability to the observed action of agent " +
                           std::to_string(i) + " at step " + std::to_string(f.t));
    f.belief.push_back(b / z);
  }
  return f;
}

FilterState apply_intervention(FilterState state, std::span<const LatentId> profile, double acceptance) {
  if (!(acceptance >= 0.0 && acceptance <= 1.0)) throw ValidationError("acceptance probability must lie in [0, 1]");
  if (profile.size() != state.belief.size()) throw ValidationError("intervention profile has the wrong number of agents");
  for (std::size_t i = 0; i < profile.size(); ++i) {
    auto& b = state.belief[i];
    if (profile[i] < 0 || profile[i] >= b.size()) throw ValidationError("intervention latent out of range");
    b *= 1.0 - acceptance;
    b(profile[i]) += acceptance;
  }
  return state;
}

std::vector<LatentId> map_estimate(const FilterState& state) {
  std::vector<LatentId> out;
  for (const auto& b : state.belief) {
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < b.size(); ++k)
      if (b(k) > b(best)) best = k;
    out.push_back(static_cast<LatentId>(best));
  }
  return out;
}

AccuracySummary inference_accuracy(const LabeledDataset& eval, std::span<const AgentBehaviorModel> models,
                                   const TaskModel& task) {
  MentalStateFilter filter(models, task.actions);
  AccuracySummary out;
  for (const auto& traj : eval.trajectories) {
    if (!traj.labeled()) throw ValidationError("inference accuracy needs labeled evaluation trajectories");
    auto f = filter.init(traj.states[0]);
    int hits = 0;
    int total = 0;
    for (int t = 0;; ++t) {
      const auto est = map_estimate(f);
      for (int i = 0; i < filter.num_agents(); ++i, ++total)
        if (est[i] == traj.latents[i][t]) ++hits;
      if (t == traj.length()) break;
      f = filter.step(f, traj.actions[t], traj.states[t + 1]);
    }
    out.per_episode.push_back(static_cast<double>(hits) / total);
  }
  const auto n = static_cast<double>(out.per_episode.size());
  if (n == 0) throw ValidationError("inference accuracy needs at least one trajectory");
  for (double a : out.per_episode) out.mean += a / n;
  double var = 0.0;
  for (double a : out.per_episode) var += (a - out.mean) * (a - out.mean);
  out.standard_error = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
  return out;
}

}  // namespace coach::filter
