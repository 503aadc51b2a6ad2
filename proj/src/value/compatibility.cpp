#include "coach/compatibility.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "coach/error.hpp"
#include "coach/io.hpp"

namespace coach {

CompatibilityTable::CompatibilityTable(JointSpace profiles, Matrix value, double gamma, double residual,
                                       int sweeps)
    : profiles_(std::move(profiles)), value_(std::move(value)), gamma_(gamma), residual_(residual), sweeps_(sweeps) {
  if (value_.cols() != profiles_.size()) throw ValidationError("value table: column count must equal profile count");
  best_.resize(value_.rows());
  for (Eigen::Index s = 0; s < value_.rows(); ++s) {
    Eigen::Index best = 0;
    for (Eigen::Index x = 1; x < value_.cols(); ++x)
      if (value_(s, x) > value_(s, best)) best = x;
    best_[s] = static_cast<ProfileId>(best);
  }
}

namespace {

constexpr int kMaxTeam = 8;
using Blocks = std::array<const Matrix*, kMaxTeam>;

// The chain over (s, x) as a linear operator: (P v)(s, x) and the expected
// one-step reward r(s, x) under the learned team policy.
class Chain {
 public:
  Chain(const TaskModel& task, std::span<const AgentBehaviorModel> models, double gamma)
      : task_(task), models_(models), n_(task.num_agents()), gamma_(gamma) {
    if (static_cast<int>(models.size()) != n_) throw ValidationError("value: need one behavior model per agent");
    if (n_ > kMaxTeam) throw ValidationError("value: team too large");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("value: discount must lie in [0, 1)");
    std::vector<int> sizes;
    for (int i = 0; i < n_; ++i) {
      const auto& m = models[i];
      if (m.num_states() != task.num_states || m.num_actions() != task.actions.radix(i) ||
          m.num_joint_actions() != task.num_joint_actions())
        throw ValidationError("value: behavior model " + std::to_string(i) +
                              " does not match the task (dimension mismatch)");
      sizes.push_back(m.num_latents());
    }
    profiles_ = JointSpace(sizes);
    P_ = profiles_.size();
    for (int i = 0; i < n_; ++i) fallback_[i] = &models[i].latent_transition().fallback();

    std::unordered_map<std::int64_t, int> context;
    for (int i = 0; i < n_; ++i) {
      for (const auto& [key, block] : models[i].latent_transition().blocks()) {
        auto [it, inserted] = context.try_emplace(key, static_cast<int>(learned_.size()));
        if (inserted) learned_.push_back(fallback_);
        learned_[it->second][i] = &block;
      }
    }
    const std::int32_t J = task.num_joint_actions();
    entry_context_.assign(task.transition.num_entries(), -1);
    if (!context.empty()) {
      for (StateId s = 0; s < task.num_states; ++s) {
        for (JointActionId a = 0; a < J; ++a) {
          std::int64_t e = task.transition.entry_begin(s, a);
          task.transition.for_each(s, a, [&](StateId next, double) {
            const auto it = context.find(LatentTransitionTable::context_key(next, a, J));
            if (it != context.end()) entry_context_[e] = it->second;
            ++e;
          });
        }
      }
    }
    cache_ = Matrix::Zero(task.num_states, P_);
    fresh_.assign(task.num_states, 0);
    scratch_.resize(2 * static_cast<std::size_t>(P_));
  }

  [[nodiscard]] const JointSpace& profiles() const { return profiles_; }
  [[nodiscard]] double gamma() const { return gamma_; }

  // x'-expectation of v(s', .) under per-agent latent transitions.
  void propagate(const double* v, const Blocks& T, double* out) {
    double* a = scratch_.data();
    double* b = a + P_;
    std::copy(v, v + P_, a);
    for (int i = 0; i < n_; ++i) {
      const int X = profiles_.radix(i);
      const std::int32_t inner = profiles_.stride(i);
      const std::int32_t outer = P_ / (X * inner);
      const Matrix& t = *T[i];
      for (std::int32_t o = 0; o < outer; ++o) {
        const std::int32_t base = o * X * inner;
        for (int x = 0; x < X; ++x) {
          for (std::int32_t r = 0; r < inner; ++r) {
            double acc = 0.0;
            for (int y = 0; y < X; ++y) acc += t(x, y) * a[base + y * inner + r];
            b[base + x * inner + r] = acc;
          }
        }
      }
      std::swap(a, b);
    }
    std::copy(a, a + P_, out);
  }

  void invalidate(StateId s) { fresh_[s] = 0; }
  void invalidate_all() { std::fill(fresh_.begin(), fresh_.end(), 0); }

  // out = r(s, .) * reward_scale + gamma * (P v)(s, .)
  void backup(const Matrix& v, StateId s, double reward_scale, double* out) {
    std::fill(out, out + P_, 0.0);
    if (task_.is_terminal(s)) return;
    const std::int32_t J = task_.num_joint_actions();
    std::array<const double*, kMaxTeam> pi{};
    std::array<int, kMaxTeam> A{};
    for (int i = 0; i < n_; ++i) {
      A[i] = models_[i].num_actions();
      pi[i] = models_[i].policy().data() + static_cast<std::int64_t>(s) * profiles_.radix(i) * A[i];
    }
    weights_.resize(P_);
    q_.resize(P_);
    u_.resize(P_);
    for (JointActionId a = 0; a < J; ++a) {
      // Kronecker product of the per-agent action-likelihood columns.
      std::int32_t len = 1;
      weights_[0] = 1.0;
      for (int i = 0; i < n_; ++i) {
        const int X = profiles_.radix(i);
        const int ai = task_.actions.component(a, i);
        for (std::int32_t j = len - 1; j >= 0; --j) {
          const double wj = weights_[j];
          for (int k = X - 1; k >= 0; --k) weights_[j * X + k] = wj * pi[i][k * A[i] + ai];
        }
        len *= X;
      }
      double wmax = 0.0;
      for (std::int32_t x = 0; x < P_; ++x) wmax = std::max(wmax, weights_[x]);
      if (wmax == 0.0) continue;
      std::fill(q_.begin(), q_.end(), 0.0);
      std::int64_t e = task_.transition.entry_begin(s, a);
      task_.transition.for_each(s, a, [&](StateId next, double prob) {
        const int ctx = entry_context_[e++];
        const double* f;
        if (ctx < 0) {
          if (!fresh_[next]) {
            propagate(v.row(next).data(), fallback_, cache_.row(next).data());
            fresh_[next] = 1;
          }
          f = cache_.row(next).data();
        } else {
          propagate(v.row(next).data(), learned_[ctx], u_.data());
          f = u_.data();
        }
        for (std::int32_t x = 0; x < P_; ++x) q_[x] += prob * f[x];
      });
      const double r = reward_scale * task_.r(s, a);
      for (std::int32_t x = 0; x < P_; ++x) out[x] += weights_[x] * (r + gamma_ * q_[x]);
    }
  }

  // out = reward_scale * r + gamma * P v over every state.
  void apply(const Matrix& v, double reward_scale, Matrix& out) {
    invalidate_all();
    out.resize(v.rows(), v.cols());
    for (StateId s = 0; s < task_.num_states; ++s) backup(v, s, reward_scale, out.row(s).data());
    invalidate_all();
  }

  double residual(const Matrix& v) {
    Matrix b;
    apply(v, 1.0, b);
    return (b - v).cwiseAbs().maxCoeff();
  }

 private:
  const TaskModel& task_;
  std::span<const AgentBehaviorModel> models_;
  int n_;
  double gamma_;
  JointSpace profiles_;
  std::int32_t P_ = 0;
  Blocks fallback_{};
  std::vector<Blocks> learned_;
  std::vector<int> entry_context_;
  Matrix cache_;
  std::vector<std::uint8_t> fresh_;
  std::vector<double> scratch_, weights_, q_, u_;
};

double dot(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b).sum(); }

// BiCGSTAB on (I - gamma P) v = r with the operator applied matrix-free.
// Returns the number of operator applications used.
int krylov_solve(Chain& chain, Matrix& v, double tol, int max_applies) {
  Matrix rhs;
  chain.apply(Matrix::Zero(v.rows(), v.cols()), 1.0, rhs);
  auto op = [&](const Matrix& x, Matrix& out) {
    chain.apply(x, 0.0, out);
    out = x - out;
  };
  Matrix tmp;
  op(v, tmp);
  Matrix r = rhs - tmp;
  const Matrix r_hat = r;
  Matrix p = Matrix::Zero(v.rows(), v.cols());
  Matrix w = p, s, t;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  int applies = 2;
  while (applies + 2 <= max_applies) {
    const double rho_next = dot(r_hat, r);
    if (rho_next == 0.0 || omega == 0.0) break;
    const double beta = (rho_next / rho) * (alpha / omega);
    rho = rho_next;
    p = r + beta * (p - omega * w);
    op(p, w);
    const double denom = dot(r_hat, w);
    if (denom == 0.0) break;
    alpha = rho / denom;
    s = r - alpha * w;
    op(s, t);
    applies += 2;
    const double tt = dot(t, t);
    omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
    v += alpha * p + omega * s;
    r = s - omega * t;
    if (!r.allFinite()) throw NumericalError("value: Krylov iteration produced non-finite residuals");
    if (r.cwiseAbs().maxCoeff() < 0.1 * tol) break;
  }
  return applies;
}

double resolve_gamma(const TaskModel& task, const ValueOptions& o) { return o.gamma < 0.0 ? task.gamma : o.gamma; }

}  // namespace

CompatibilityTable evaluate_team_value(const TaskModel& task, std::span<const AgentBehaviorModel> models,
                                       const ValueOptions& options) {
  if (!(options.tol > 0.0)) throw ValidationError("value: tolerance must be positive");
  if (options.max_sweeps < 1) throw ValidationError("value: max_sweeps must be at least 1");
  const double gamma = resolve_gamma(task, options);
  Chain chain(task, models, gamma);
  Matrix V = Matrix::Zero(task.num_states, chain.profiles().size());
  int sweeps = krylov_solve(chain, V, options.tol, options.max_sweeps / 2);
  // Gauss-Seidel polish from the highest state id down until a full
  // synchronous backup moves no entry by more than tol.
  Matrix next_row(1, chain.profiles().size());
  double residual = chain.residual(V);
  ++sweeps;
  while (!(residual < options.tol)) {
    if (!std::isfinite(residual)) throw NumericalError("value: evaluation diverged");
    if (sweeps >= options.max_sweeps) {
      std::ostringstream msg;
      msg << "value: policy evaluation did not converge in " << options.max_sweeps << " sweeps (residual "
          << residual << ", tol " << options.tol << ")";
      throw NumericalError(msg.str());
    }
    for (StateId s = task.num_states - 1; s >= 0; --s) {
      chain.backup(V, s, 1.0, next_row.data());
      V.row(s) = next_row;
      chain.invalidate(s);
    }
    chain.invalidate_all();
    residual = chain.residual(V);
    sweeps += 2;
  }
  return {chain.profiles(), std::move(V), gamma, residual, sweeps};
}

double bellman_residual(const TaskModel& task, std::span<const AgentBehaviorModel> models, const Matrix& value,
                        double gamma) {
  Chain chain(task, models, gamma);
  if (value.rows() != task.num_states || value.cols() != chain.profiles().size())
    throw ValidationError("value: table shape does not match the task and models");
  return chain.residual(value);
}

void write_table(std::ostream& out, const CompatibilityTable& t) {
  out << "coach-values 1\n";
  out << "profiles";
  for (int r : t.profiles().radices()) out << ' ' << r;
  out << "\nstates " << t.num_states() << "\ngamma " << format_double(t.gamma()) << "\nresidual "
      << format_double(t.residual()) << "\nsweeps " << t.sweeps() << '\n';
  for (StateId s = 0; s < t.num_states(); ++s) {
    for (ProfileId x = 0; x < t.num_profiles(); ++x) {
      if (x) out << ' ';
      out << format_double(t.value(s, x));
    }
    out << '\n';
  }
  out << "end\n";
}

CompatibilityTable read_table(std::istream& in) {
  std::string line;
  auto next_line = [&](const char* what) -> std::istringstream {
    if (!std::getline(in, line)) throw ParseError(std::string("value table truncated before ") + what);
    return std::istringstream(line);
  };
  auto expect = [](std::istringstream& ss, const char* word) {
    std::string tok;
    ss >> tok;
    if (tok != word) throw ParseError("value table: expected '" + std::string(word) + "', got '" + tok + "'");
  };
  {
    auto ss = next_line("header");
    expect(ss, "coach-values");
    int version = 0;
    ss >> version;
    if (version != 1) throw ParseError("value table: unsupported format version " + std::to_string(version));
  }
  std::vector<int> radices;
  {
    auto ss = next_line("profiles");
    expect(ss, "profiles");
    int r = 0;
    while (ss >> r) radices.push_back(r);
    if (radices.empty()) throw ParseError("value table: no profile radices");
  }
  std::int64_t S = 0;
  {
    auto ss = next_line("states");
    expect(ss, "states");
    if (!(ss >> S) || S < 0) throw ParseError("value table: bad state count");
  }
  std::string tok;
  auto ss = next_line("gamma");
  expect(ss, "gamma");
  ss >> tok;
  const double gamma = parse_double(tok);
  ss = next_line("residual");
  expect(ss, "residual");
  ss >> tok;
  const double residual = parse_double(tok);
  ss = next_line("sweeps");
  expect(ss, "sweeps");
  int sweeps = 0;
  ss >> sweeps;
  JointSpace profiles(radices);
  Matrix V(S, profiles.size());
  for (std::int64_t s = 0; s < S; ++s) {
    auto row = next_line("all rows");
    for (ProfileId x = 0; x < profiles.size(); ++x) {
      if (!(row >> tok)) throw ParseError("value table: row " + std::to_string(s) + " is short");
      V(s, x) = parse_double(tok);
    }
  }
  auto tail = next_line("end");
  expect(tail, "end");
  return {profiles, std::move(V), gamma, residual, sweeps};
}

void save_table(const std::filesystem::path& path, const CompatibilityTable& table) {
  std::ostringstream out;
  write_table(out, table);
  write_file_atomic(path, out.str());
}

CompatibilityTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open value table " + path.string());
  return read_table(in);
}

}  // namespace coach
