#include "coach/btil/btil.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <thread>

#include <unsupported/Eigen/SpecialFunctions>

#include "coach/error.hpp"
#include "coach/random.hpp"

namespace coach::btil {

Matrix smoothed_marginals(const Messages& m) {
  Matrix q = m.forward.cwiseProduct(m.backward);
  for (Eigen::Index t = 0; t < q.rows(); ++t) {
    const double z = q.row(t).sum();
    if (!(z > 0.0)) throw NumericalError("smoothed marginal: zero mass at step " + std::to_string(t));
    q.row(t) /= z;
  }
  return q;
}

namespace {

// Expected sufficient statistics of one agent's tables.
struct Counts {
  std::map<StateId, RowVector> initial;
  std::map<StateId, Matrix> policy;  // X x A_i per visited state
  std::map<std::int64_t, Matrix> transition;
};

// Per-trajectory responsibilities for one agent.
struct Responsibility {
  Matrix single;  // (L+1) x X
  std::vector<Matrix> pairwise;
  double log_normalizer = 0.0;
};

class Learner {
 public:
  Learner(const LabeledDataset& data, const TaskModel& task, std::span<const int> sizes,
          const FitOptions& opt)
      : data_(data), task_(task), sizes_(sizes.begin(), sizes.end()), opt_(opt) {
    const int n = task.num_agents();
    if (data.trajectories.empty()) throw ValidationError("fit: dataset is empty");
    if (static_cast<int>(sizes_.size()) != n) throw ValidationError("fit: need one latent size per agent");
    if (!(opt.alpha > 0.0)) throw ValidationError("fit: prior concentration must be positive");
    if (!(opt.stickiness >= 0.0)) throw ValidationError("fit: stickiness must be nonnegative");
    for (int x : sizes_)
      if (x < 1) throw ValidationError("fit: latent sizes must be positive");
    labeled_.assign(n, Counts{});
    for (const auto& traj : data.trajectories) {
      if (!traj.labeled()) continue;
      for (int i = 0; i < n; ++i) add_labeled(i, traj, labeled_[i]);
    }
  }

  FitResult run() {
    const int n = task_.num_agents();
    FitResult result;
    std::vector<Counts> counts = labeled_;
    const bool any_label = std::any_of(data_.trajectories.begin(), data_.trajectories.end(),
                                       [](const Trajectory& t) { return t.labeled(); });
    if (!any_label) counts = random_start();

    std::vector<Counts> next(n);
    for (int it = 0; it < opt_.max_iters; ++it) {
      std::vector<AgentBehaviorModel> tilde;
      for (int i = 0; i < n; ++i) tilde.push_back(expected_log_tables(i, counts[i]));
      double elbo = 0.0;
      for (int i = 0; i < n; ++i) {
        next[i] = labeled_[i];
        elbo += labeled_log_score(i, tilde[i]);
      }
      const auto resp = e_step(tilde);
      for (std::size_t k = 0; k < resp.size(); ++k) {
        const auto& traj = data_.trajectories[unlabeled_[k / n]];
        const int i = static_cast<int>(k % n);
        elbo += resp[k].log_normalizer;
        add_expected(i, traj, resp[k], next[i]);
      }
      for (int i = 0; i < n; ++i) elbo -= kl_to_prior(counts[i]);
      if (!std::isfinite(elbo)) throw NumericalError("fit: ELBO is not finite at iteration " + std::to_string(it));
      result.elbo.push_back(elbo);
      counts.swap(next);
      if (it > 0) {
        const double prev = result.elbo[result.elbo.size() - 2];
        if (std::abs(elbo - prev) < opt_.tol * std::abs(prev)) {
          result.converged = true;
          break;
        }
      }
    }
    for (int i = 0; i < n; ++i) result.models.push_back(posterior_mode(i, counts[i]));
    return result;
  }

  std::vector<AgentBehaviorModel> modes_of_labeled() {
    std::vector<AgentBehaviorModel> out;
    for (int i = 0; i < task_.num_agents(); ++i) out.push_back(posterior_mode(i, labeled_[i]));
    return out;
  }

 private:
  int actions_of(int i) const { return task_.actions.radix(i); }

  void add_labeled(int i, const Trajectory& traj, Counts& c) const {
    const int X = sizes_[i];
    const auto& lab = traj.latents.at(i);
    for (int t = 0; t <= traj.length(); ++t)
      if (lab.at(t) < 0 || lab[t] >= X) throw ValidationError("fit: latent label out of range");
    row_of(c.initial, traj.states[0], X)(lab[0]) += 1.0;
    for (int t = 0; t < traj.length(); ++t) {
      block_of(c.policy, traj.states[t], X, actions_of(i))(lab[t], task_.actions.component(traj.actions[t], i)) += 1.0;
      const auto key = LatentTransitionTable::context_key(traj.states[t + 1], traj.actions[t], task_.num_joint_actions());
      block_of(c.transition, key, X, X)(lab[t], lab[t + 1]) += 1.0;
    }
  }

  void add_expected(int i, const Trajectory& traj, const Responsibility& r, Counts& c) const {
    const int X = sizes_[i];
    row_of(c.initial, traj.states[0], X) += r.single.row(0);
    for (int t = 0; t < traj.length(); ++t) {
      block_of(c.policy, traj.states[t], X, actions_of(i)).col(task_.actions.component(traj.actions[t], i)) +=
          r.single.row(t).transpose();
      const auto key = LatentTransitionTable::context_key(traj.states[t + 1], traj.actions[t], task_.num_joint_actions());
      block_of(c.transition, key, X, X) += r.pairwise[t];
    }
  }

  template <class K>
  static auto row_of(std::map<K, RowVector>& m, K key, int X) -> RowVector& {
    auto [it, inserted] = m.try_emplace(key);
    if (inserted) it->second = RowVector::Zero(X);
    return it->second;
  }
  template <class K>
  static auto block_of(std::map<K, Matrix>& m, K key, int rows, int cols) -> Matrix& {
    auto [it, inserted] = m.try_emplace(key);
    if (inserted) it->second = Matrix::Zero(rows, cols);
    return it->second;
  }

  Eigen::ArrayXd flat_prior(Eigen::Index k) const { return Eigen::ArrayXd::Constant(k, opt_.alpha); }
  Eigen::ArrayXd sticky_prior(int X, int x) const {
    Eigen::ArrayXd a = flat_prior(X);
    a(x) += opt_.stickiness;
    return a;
  }

  // exp(E[log theta]) for a Dirichlet(prior + c) row.
  static RowVector tilde_row(const RowVector& c, const Eigen::ArrayXd& prior) {
    const Eigen::ArrayXd beta = c.transpose().array() + prior;
    return (beta.digamma() - Eigen::numext::digamma(beta.sum())).exp().matrix().transpose();
  }
  Matrix tilde_transition(const Matrix& c) const {
    const auto X = static_cast<int>(c.rows());
    Matrix t(X, X);
    for (int x = 0; x < X; ++x) t.row(x) = tilde_row(c.row(x), sticky_prior(X, x));
    return t;
  }

  AgentBehaviorModel expected_log_tables(int i, const Counts& c) const {
    const int X = sizes_[i];
    const int A = actions_of(i);
    const auto S = task_.num_states;
    Matrix b(S, X);
    b.rowwise() = tilde_row(RowVector::Zero(X), flat_prior(X));
    for (const auto& [s, row] : c.initial) b.row(s) = tilde_row(row, flat_prior(X));
    Matrix pi(static_cast<Eigen::Index>(S) * X, A);
    pi.rowwise() = tilde_row(RowVector::Zero(A), flat_prior(A));
    for (const auto& [s, block] : c.policy)
      for (int x = 0; x < X; ++x)
        pi.row(static_cast<Eigen::Index>(s) * X + x) = tilde_row(block.row(x), flat_prior(A));
    LatentTransitionTable tx(X, S, task_.num_joint_actions(), tilde_transition(Matrix::Zero(X, X)));
    for (const auto& [key, block] : c.transition)
      tx.set(static_cast<StateId>(key / task_.num_joint_actions()),
             static_cast<JointActionId>(key % task_.num_joint_actions()), tilde_transition(block));
    return {X, A, std::move(b), std::move(pi), std::move(tx)};
  }

  // Mode of Dirichlet(prior + c): max(prior + c - 1, 0), uniform if all zero.
  static RowVector mode_row(const RowVector& c, const Eigen::ArrayXd& prior) {
    RowVector m = (c.transpose().array() + prior - 1.0).max(0.0).matrix().transpose();
    const double z = m.sum();
    if (!(z > 0.0)) return RowVector::Constant(c.size(), 1.0 / static_cast<double>(c.size()));
    return m / z;
  }
  Matrix mode_transition(const Matrix& c) const {
    const auto X = static_cast<int>(c.rows());
    Matrix t(X, X);
    for (int x = 0; x < X; ++x) t.row(x) = mode_row(c.row(x), sticky_prior(X, x));
    return t;
  }

  AgentBehaviorModel posterior_mode(int i, const Counts& c) const {
    const int X = sizes_[i];
    const int A = actions_of(i);
    auto model = AgentBehaviorModel::uniform(X, A, task_.num_states, task_.num_joint_actions());
    for (const auto& [s, row] : c.initial) model.mutable_initial_belief().row(s) = mode_row(row, flat_prior(X));
    for (const auto& [s, block] : c.policy)
      for (int x = 0; x < X; ++x)
        model.mutable_policy().row(static_cast<Eigen::Index>(s) * X + x) = mode_row(block.row(x), flat_prior(A));
    LatentTransitionTable tx(X, task_.num_states, task_.num_joint_actions(), mode_transition(Matrix::Zero(X, X)));
    for (const auto& [key, block] : c.transition)
      tx.set(static_cast<StateId>(key / task_.num_joint_actions()),
             static_cast<JointActionId>(key % task_.num_joint_actions()), mode_transition(block));
    model.mutable_latent_transition() = std::move(tx);
    return model;
  }

  // KL(Dir(prior + c) || Dir(prior)).
  static double kl_row(const RowVector& c, const Eigen::ArrayXd& prior) {
    const Eigen::ArrayXd cc = c.transpose().array();
    const Eigen::ArrayXd beta = cc + prior;
    const double sb = beta.sum();
    double kl = std::lgamma(sb) - std::lgamma(prior.sum());
    for (Eigen::Index k = 0; k < beta.size(); ++k) kl += std::lgamma(prior(k)) - std::lgamma(beta(k));
    kl += (cc * (beta.digamma() - Eigen::numext::digamma(sb))).sum();
    return kl;
  }

  double kl_to_prior(const Counts& c) const {
    double kl = 0.0;
    for (const auto& [s, row] : c.initial) kl += kl_row(row, flat_prior(row.size()));
    for (const auto& [s, block] : c.policy)
      for (Eigen::Index x = 0; x < block.rows(); ++x) kl += kl_row(block.row(x), flat_prior(block.cols()));
    for (const auto& [key, block] : c.transition)
      for (Eigen::Index x = 0; x < block.rows(); ++x)
        kl += kl_row(block.row(x), sticky_prior(static_cast<int>(block.cols()), static_cast<int>(x)));
    return kl;
  }

  // E_q[log p(actions, latents)] along labeled paths under the tilde tables.
  double labeled_log_score(int i, const AgentBehaviorModel& tilde) const {
    double score = 0.0;
    for (const auto& traj : data_.trajectories) {
      if (!traj.labeled()) continue;
      const auto& lab = traj.latents[i];
      score += std::log(tilde.initial(traj.states[0])(lab[0]));
      for (int t = 0; t < traj.length(); ++t) {
        score += std::log(tilde.action_likelihood(traj.states[t], task_.actions.component(traj.actions[t], i))(lab[t]));
        score += std::log(tilde.transition(traj.states[t + 1], traj.actions[t])(lab[t], lab[t + 1]));
      }
    }
    return score;
  }

  std::vector<Responsibility> e_step(const std::vector<AgentBehaviorModel>& tilde) {
    const int n = task_.num_agents();
    if (unlabeled_.empty())
      for (std::size_t k = 0; k < data_.trajectories.size(); ++k)
        if (!data_.trajectories[k].labeled()) unlabeled_.push_back(k);
    std::vector<Responsibility> out(unlabeled_.size() * n);
    auto work = [&](std::size_t begin, std::size_t stride) {
      for (std::size_t k = begin; k < out.size(); k += stride) {
        const auto& traj = data_.trajectories[unlabeled_[k / n]];
        const int i = static_cast<int>(k % n);
        const auto m = messages(tilde[i], i, traj, task_.actions);
        out[k].single = smoothed_marginals(m);
        out[k].pairwise = pairwise_marginals(tilde[i], i, traj, task_.actions, m);
        out[k].log_normalizer = m.log_normalizer;
      }
    };
    const auto jobs = static_cast<std::size_t>(std::clamp(opt_.jobs, 1, 64));
    if (jobs == 1 || out.size() < 2) {
      work(0, 1);
      return out;
    }
    std::vector<std::exception_ptr> errors(jobs);
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < jobs; ++w)
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
    return out;
  }

  // Random responsibilities break the symmetry between latent ids.
  std::vector<Counts> random_start() const {
    const int n = task_.num_agents();
    std::vector<Counts> c(n);
    Rng rng(opt_.seed);
    for (const auto& traj : data_.trajectories) {
      for (int i = 0; i < n; ++i) {
        const int X = sizes_[i];
        Responsibility r;
        r.single.resize(traj.length() + 1, X);
        for (Eigen::Index t = 0; t < r.single.rows(); ++t) {
          for (int x = 0; x < X; ++x) r.single(t, x) = 0.5 + uniform01(rng);
          r.single.row(t) /= r.single.row(t).sum();
        }
        for (int t = 0; t < traj.length(); ++t)
          r.pairwise.push_back(r.single.row(t).transpose() * r.single.row(t + 1));
        add_expected(i, traj, r, c[i]);
      }
    }
    return c;
  }

  const LabeledDataset& data_;
  const TaskModel& task_;
  std::vector<int> sizes_;
  FitOptions opt_;
  std::vector<Counts> labeled_;
  std::vector<std::size_t> unlabeled_;
};

}  // namespace

FitResult fit(const LabeledDataset& data, const TaskModel& task, std::span<const int> latent_sizes,
              const FitOptions& options) {
  if (options.max_iters < 1) throw ValidationError("fit: max_iters must be at least 1");
  return Learner(data, task, latent_sizes, options).run();
}

std::vector<AgentBehaviorModel> count_estimate(const LabeledDataset& data, const TaskModel& task,
                                               std::span<const int> latent_sizes, const FitOptions& options) {
  return Learner(data, task, latent_sizes, options).modes_of_labeled();
}

}  // namespace coach::btil
