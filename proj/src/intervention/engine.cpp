#include "coach/intervention/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

#include "coach/error.hpp"
#include "coach/io.hpp"
#include "coach/random.hpp"

namespace coach::intervention {

namespace {

std::string num(double v) { return format_double(v); }

}  // namespace

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kCentralized: return "centralized";
    case Kind::kRule: return "rule";
    case Kind::kValue: return "value";
  }
  return "?";
}

std::string to_string(Wrapper wrapper) {
  switch (wrapper) {
    case Wrapper::kDeterministic: return "deterministic";
    case Wrapper::kConfidence: return "confidence";
    case Wrapper::kExpectation: return "expectation";
  }
  return "?";
}

Kind parse_kind(const std::string& text) {
  for (Kind k : {Kind::kNone, Kind::kCentralized, Kind::kRule, Kind::kValue})
    if (to_string(k) == text) return k;
  throw ValidationError("unknown strategy kind '" + text + "' (expected none|centralized|rule|value)");
}

Wrapper parse_wrapper(const std::string& text) {
  for (Wrapper w : {Wrapper::kDeterministic, Wrapper::kConfidence, Wrapper::kExpectation})
    if (to_string(w) == text) return w;
  throw ValidationError("unknown wrapper '" + text + "' (expected deterministic|confidence|expectation)");
}

void validate(const StrategyConfig& c) {
  if (!(c.theta >= 0.0 && c.theta <= 1.0)) throw ValidationError("theta must lie in [0, 1], got " + num(c.theta));
  if (!(c.acceptance >= 0.0 && c.acceptance <= 1.0))
    throw ValidationError("acceptance must lie in [0, 1], got " + num(c.acceptance));
  if (!(c.cost >= 0.0) || !std::isfinite(c.cost)) throw ValidationError("cost must be finite and >= 0");
  if (!std::isfinite(c.delta)) throw ValidationError("delta must be finite");
}

std::string StrategyConfig::label() const {
  std::string out = to_string(kind);
  if (kind == Kind::kRule || kind == Kind::kValue) {
    out += "/" + to_string(wrapper);
    if (kind == Kind::kValue) out += "/delta=" + num(delta);
    if (wrapper == Wrapper::kConfidence) out += "/theta=" + num(theta);
  }
  return out;
}

double profile_probability(const filter::FilterState& belief, const JointSpace& profiles, ProfileId x) {
  double p = 1.0;
  for (int i = 0; i < profiles.num_agents(); ++i) p *= belief.belief[i](profiles.component(x, i));
  return p;
}

Controller::Controller(const StrategyConfig& config, const domains::BuiltDomain& built,
                       const CompatibilityTable* table)
    : config_(config), built_(&built), table_(table) {
  validate(config_);
  const auto& cfg = built.config();
  profiles_ = JointSpace(std::vector<int>(cfg.num_agents, cfg.num_latents));
  if ((config_.kind == Kind::kValue || config_.kind == Kind::kCentralized) && table_ == nullptr)
    throw ValidationError(to_string(config_.kind) + " strategy needs a compatibility table");
  if (table_ != nullptr &&
      (table_->num_states() != built.task.num_states || !(table_->profiles() == profiles_)))
    throw ValidationError("compatibility table does not match domain " + cfg.name);
  if (config_.kind == Kind::kRule) {
    if (!built.domain->has_compatibility_rule())
      throw ValidationError("domain " + cfg.name + " has no compatible-set rule for the rule-based strategy");
  }
}

bool Controller::fires(StateId s, ProfileId x) const {
  switch (config_.kind) {
    case Kind::kNone: return false;
    case Kind::kCentralized: return true;
    case Kind::kValue: return table_->benefit(s, x, config_.cost) > config_.delta;
    case Kind::kRule: {
      std::vector<int> digits(profiles_.num_agents());
      profiles_.decode_into(x, digits);
      return !built_->domain->compatible(built_->state(s), digits);
    }
  }
  return false;
}

ProfileId Controller::recommend(StateId s) const {
  if (config_.kind != Kind::kRule) return table_ ? table_->best_profile(s) : 0;
  std::vector<int> digits(profiles_.num_agents());
  ProfileId best = -1;
  for (ProfileId x = 0; x < profiles_.size(); ++x) {
    profiles_.decode_into(x, digits);
    if (!built_->domain->compatible(built_->state(s), digits)) continue;
    if (best < 0 || (table_ && table_->value(s, x) > table_->value(s, best))) best = x;
  }
  if (best < 0) throw ValidationError("empty compatible set at state " + std::to_string(s));
  return best;
}

Decision Controller::decide(const filter::FilterState& belief) const {
  const StateId s = belief.state;
  if (config_.kind == Kind::kNone) return {};
  if (config_.kind == Kind::kCentralized) return {true, recommend(s)};
  auto f = [&](ProfileId x) { return fires(s, x); };
  bool z = false;
  switch (config_.wrapper) {
    case Wrapper::kDeterministic: z = f(profiles_.encode(filter::map_estimate(belief))); break;
    case Wrapper::kConfidence: z = confidence_wrap(f, belief, profiles_, config_.theta); break;
    case Wrapper::kExpectation: z = expectation_wrap(f, belief, profiles_); break;
  }
  if (!z) return {};
  return {true, recommend(s)};
}

Runner::Runner(const team::SyntheticTeam& team, std::span<const AgentBehaviorModel> models,
               const CompatibilityTable* table)
    : team_(&team), filter_(models, team.built().task.actions), table_(table) {}

EpisodeMetrics Runner::run_episode(const StrategyConfig& strategy, std::uint64_t seed) const {
  return run_episode(strategy, seed, nullptr);
}

EpisodeMetrics Runner::run_episode(const StrategyConfig& strategy, std::uint64_t seed,
                                   team::RolloutRecord* record) const {
  const Controller controller(strategy, team_->built(), table_);
  filter::FilterState belief;
  team::RolloutOptions options;
  options.acceptance = strategy.acceptance;
  if (strategy.kind != Kind::kNone) {
    options.hook = [&](int t, const Trajectory& history) -> std::optional<std::vector<LatentId>> {
      try {
        belief = t == 0 ? filter_.init(history.states[0])
                        : filter_.step(belief, history.actions[t - 1], history.states[t]);
      } catch (const NumericalError& e) {
        throw NumericalError(strategy.label() + " episode seed " + std::to_string(seed) + ": " + e.what());
      }
      const Decision d = controller.decide(belief);
      if (!d.intervene) return std::nullopt;
      auto profile = controller.profiles().decode(d.recommendation);
      belief = filter::apply_intervention(std::move(belief), profile, strategy.acceptance);
      return profile;
    };
  }
  team::RolloutRecord rec = team::rollout(*team_, seed, options);
  EpisodeMetrics m;
  m.seed = seed;
  m.reward = rec.total_reward();
  m.interventions = rec.intervention_count();
  m.objective = m.reward - strategy.cost * m.interventions;
  m.length = rec.trajectory.length();
  if (record) *record = std::move(rec);
  return m;
}

std::vector<BenchmarkRow> run_benchmark(const Runner& runner, std::span<const StrategyConfig> grid, int episodes,
                                        std::uint64_t base_seed, int jobs) {
  if (episodes < 1) throw ValidationError("episode count must be >= 1");
  for (const auto& c : grid) validate(c);
  const std::size_t total = grid.size() * static_cast<std::size_t>(episodes);
  std::vector<BenchmarkRow> rows(total);
  std::vector<std::exception_ptr> errors(total);
  auto work = [&](std::size_t k) {
    const auto& strategy = grid[k / episodes];
    const int e = static_cast<int>(k % episodes);
    try {
      rows[k] = {strategy, e, runner.run_episode(strategy, derive_seed(base_seed, e))};
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  if (n == 1) {
    for (std::size_t k = 0; k < total; ++k) work(k);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < total; k += n) work(k);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

Quartiles summarize(std::vector<double> v) {
  Quartiles q;
  if (v.empty()) return q;
  const double n = static_cast<double>(v.size());
  q.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - q.mean) * (x - q.mean);
    q.standard_error = std::sqrt(ss / (n - 1.0) / n);
  }
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double h = (n - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  return q;
}

void write_episode_csv(std::ostream& out, std::span<const BenchmarkRow> rows) {
  out << "strategy,kind,wrapper,delta,theta,cost,acceptance,episode,seed,reward,interventions,objective,length\n";
  for (const auto& r : rows) {
    const auto& c = r.strategy;
    out << c.label() << ',' << to_string(c.kind) << ',' << to_string(c.wrapper) << ',' << num(c.delta) << ','
        << num(c.theta) << ',' << num(c.cost) << ',' << num(c.acceptance) << ',' << r.episode << ','
        << r.metrics.seed << ',' << num(r.metrics.reward) << ',' << r.metrics.interventions << ','
        << num(r.metrics.objective) << ',' << r.metrics.length << '\n';
  }
}

void write_summary_csv(std::ostream& out, std::span<const BenchmarkRow> rows) {
  out << "strategy,kind,wrapper,delta,theta,cost,acceptance,episodes";
  for (const char* m : {"reward", "interventions", "objective"})
    for (const char* stat : {"mean", "se", "q1", "median", "q3"}) out << ',' << m << '_' << stat;
  out << '\n';
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    std::vector<double> reward, count, objective;
    while (j < rows.size() && rows[j].strategy.label() == rows[i].strategy.label() &&
           rows[j].strategy.cost == rows[i].strategy.cost && rows[j].strategy.acceptance == rows[i].strategy.acceptance) {
      reward.push_back(rows[j].metrics.reward);
      count.push_back(rows[j].metrics.interventions);
      objective.push_back(rows[j].metrics.objective);
      ++j;
    }
    const auto& c = rows[i].strategy;
    out << c.label() << ',' << to_string(c.kind) << ',' << to_string(c.wrapper) << ',' << num(c.delta) << ','
        << num(c.theta) << ',' << num(c.cost) << ',' << num(c.acceptance) << ',' << (j - i);
    for (auto* v : {&reward, &count, &objective}) {
      const Quartiles q = summarize(*v);
      out << ',' << num(q.mean) << ',' << num(q.standard_error) << ',' << num(q.q1) << ',' << num(q.median) << ','
          << num(q.q3);
    }
    out << '\n';
    i = j;
  }
}

}  // namespace coach::intervention
