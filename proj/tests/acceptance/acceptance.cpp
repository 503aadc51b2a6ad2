// Acceptance checks. Each criterion prints one PASS/FAIL line; every
// tolerance used is a named constant below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coach/btil/btil.hpp"
#include "coach/btil/messages.hpp"
#include "coach/compatibility.hpp"
#include "coach/error.hpp"
#include "coach/experiment/experiment.hpp"
#include "coach/filter/mental_state_filter.hpp"
#include "coach/io.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace coach;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and sizes.
constexpr double kDecouplingTol = 1e-9;
constexpr int kDecouplingTrajectories = 50;
constexpr double kDecouplingSeconds = 10.0;
constexpr double kFilterTol = 1e-9;
constexpr double kFilterSeconds = 10.0;
constexpr double kValueTol = 1e-6;
constexpr double kValueSolverTol = 1e-10;
constexpr int kValueRollouts = 100000;
constexpr double kValueStandardErrors = 3.0;
constexpr double kValueSeconds = 60.0;
constexpr double kElboSlack = 1e-6;
constexpr double kCountTol = 1e-8;
constexpr double kAccuracyFloor = 0.80;
constexpr double kBaselineStandardErrors = 2.0;
constexpr int kTrainingSeeds = 5;
constexpr double kRuleStandardErrors = 1.0;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream ss;
  ss.precision(digits);
  ss << v;
  return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Minimal CSV table keyed by header name.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static Csv read(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw ValidationError("cannot open " + p.string());
    Csv c;
    std::string line;
    auto split = [](const std::string& s) {
      std::vector<std::string> out;
      std::stringstream ss(s);
      std::string cell;
      while (std::getline(ss, cell, ',')) out.push_back(cell);
      return out;
    };
    std::getline(in, line);
    c.header = split(line);
    while (std::getline(in, line))
      if (!line.empty()) c.rows.push_back(split(line));
    return c;
  }
  [[nodiscard]] std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("csv has no column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
  [[nodiscard]] double num(std::size_t row, const std::string& name) const {
    return std::strtod(rows[row][col(name)].c_str(), nullptr);
  }
  [[nodiscard]] const std::string& str(std::size_t row, const std::string& name) const { return rows[row][col(name)]; }
};

struct Context {
  fs::path configs;
  fs::path cache;

  [[nodiscard]] experiment::ExperimentConfig config(const std::string& domain, std::uint64_t seed) const {
    auto c = experiment::load_config(configs / (domain + ".json"));
    c.seed = seed;
    c.out = cache / domain / ("seed" + std::to_string(seed));
    c.jobs = 1;
    return c;
  }
};

// Per-strategy means over the benchmark episodes of one run.
struct StrategyStats {
  std::string label;
  int episodes = 0;
  double reward = 0.0;
  double interventions = 0.0;
  double objective = 0.0;
  double objective_se = 0.0;
};

std::vector<StrategyStats> strategy_stats(const Csv& csv) {
  std::vector<StrategyStats> out;
  std::map<std::string, std::vector<double>> objectives;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& label = csv.str(r, "strategy");
    if (out.empty() || out.back().label != label) out.push_back({label});
    auto& s = out.back();
    ++s.episodes;
    s.reward += csv.num(r, "reward");
    s.interventions += csv.num(r, "interventions");
    s.objective += csv.num(r, "objective");
    objectives[label].push_back(csv.num(r, "objective"));
  }
  for (auto& s : out) {
    s.reward /= s.episodes;
    s.interventions /= s.episodes;
    s.objective /= s.episodes;
    double var = 0.0;
    for (double j : objectives[s.label]) var += (j - s.objective) * (j - s.objective);
    s.objective_se = s.episodes > 1 ? std::sqrt(var / (s.episodes - 1) / s.episodes) : 0.0;
  }
  return out;
}

const StrategyStats& find(const std::vector<StrategyStats>& all, const std::string& label) {
  for (const auto& s : all)
    if (s.label == label) return s;
  throw ValidationError("benchmark has no strategy " + label);
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

Csv benchmark(const Context& ctx, const std::string& domain) {
  experiment::Pipeline p(ctx.config(domain, 1));
  p.run_all();
  return Csv::read(p.path(experiment::Pipeline::kEpisodesFile));
}

Verdict decoupling(const Context&) {
  const auto& task = testing::tiny().task;
  Rng rng(23);
  double worst = 0.0;
  for (int trial = 0; trial < kDecouplingTrajectories; ++trial) {
    const auto models = testing::random_models(task, 2, 500 + trial);
    const auto traj = testing::random_walk(task, 1 + trial % task.horizon, rng);
    const auto joint = oracle::joint_smoothed_marginals(models, traj, task.actions);
    for (int i = 0; i < 2; ++i) {
      const Matrix q = btil::smoothed_marginals(btil::messages(models[i], i, traj, task.actions));
      worst = std::max(worst, testing::max_abs(q, joint[i]));
    }
  }
  return {worst <= kDecouplingTol,
          "max |decoupled - joint| = " + fmt(worst) + " over " + std::to_string(kDecouplingTrajectories) +
              " trajectories (tol " + fmt(kDecouplingTol) + ")"};
}

Verdict filter_oracle(const Context&) {
  const auto& task = testing::tiny().task;
  Rng rng(404);
  double worst = 0.0;
  int checks = 0;
  for (int rep = 0; rep < 8; ++rep) {
    const auto models = testing::random_models(task, 2, 600 + rep);
    const auto traj = testing::random_walk(task, task.horizon, rng);
    const filter::MentalStateFilter f(models, task.actions);
    for (double acceptance : {0.0, 0.3, 1.0}) {
      std::map<int, oracle::Delivery> schedule;
      schedule[rep % 3] = {{rep % 2, 1 - rep % 2}, acceptance};
      schedule[4] = {{1, 1}, acceptance};
      auto state = f.init(traj.states[0]);
      for (int t = 0;; ++t) {
        if (auto it = schedule.find(t); it != schedule.end())
          state = filter::apply_intervention(state, it->second.profile, it->second.acceptance);
        const auto expected = oracle::enumerate_filter(models, traj, task.actions, t, schedule);
        for (int i = 0; i < 2; ++i) worst = std::max(worst, (state.belief[i] - expected[i]).cwiseAbs().maxCoeff());
        ++checks;
        if (t == traj.length()) break;
        state = f.step(state, traj.actions[t], traj.states[t + 1]);
      }
    }
  }
  return {worst <= kFilterTol, "max |filter - enumeration| = " + fmt(worst) + " over " + std::to_string(checks) +
                                   " posteriors, p_a in {0, 0.3, 1} (tol " + fmt(kFilterTol) + ")"};
}

Verdict value_oracle(const Context&) {
  const auto& task = testing::tiny().task;
  double worst = 0.0;
  double worst_z = 0.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto models = testing::random_models(task, 2, seed);
    ValueOptions opt;
    opt.tol = kValueSolverTol;
    const auto table = evaluate_team_value(task, models, opt);
    const auto chain = oracle::dense_chain(task, models);
    const Vector series = oracle::value_by_series(chain, task.gamma, 1000);
    for (StateId s = 0; s < table.num_states(); ++s)
      for (ProfileId x = 0; x < table.num_profiles(); ++x)
        worst = std::max(worst, std::abs(table.value(s, x) - series(chain.index(s, x))));
    for (ProfileId x = 0; x < table.num_profiles(); ++x) {
      const auto mc = oracle::value_by_sampling(chain, task.initial_state, x, task.gamma, kValueRollouts, 600,
                                                derive_seed(seed, static_cast<std::uint64_t>(x)));
      worst_z = std::max(worst_z, std::abs(mc.mean - table.value(task.initial_state, x)) / mc.standard_error);
    }
  }
  return {worst <= kValueTol && worst_z <= kValueStandardErrors,
          "max |V - truncated expectation| = " + fmt(worst) + " (tol " + fmt(kValueTol) +
              "), worst Monte Carlo gap = " + fmt(worst_z, 3) + " SE over " + std::to_string(kValueRollouts) +
              " rollouts (limit " + fmt(kValueStandardErrors) + ")"};
}

Verdict learner(const Context&) {
  double worst_drop = 0.0;
  auto track = [&](const std::vector<double>& elbo) {
    for (std::size_t k = 1; k < elbo.size(); ++k) worst_drop = std::max(worst_drop, elbo[k - 1] - elbo[k]);
  };
  team::SyntheticTeam tiny(testing::tiny());
  for (double ratio : {0.0, 0.3}) {
    btil::FitOptions opt;
    opt.tol = 1e-12;
    opt.max_iters = 40;
    track(btil::fit(team::generate_dataset(tiny, 300, ratio, 8), testing::tiny().task, std::vector<int>{2, 2}, opt)
              .elbo);
  }
  const auto rescue = domains::build_rescue();
  team::SyntheticTeam rescue_team(rescue);
  {
    btil::FitOptions opt;
    opt.tol = 1e-10;
    opt.max_iters = 30;
    const int X = rescue.config().num_latents;
    track(btil::fit(team::generate_dataset(rescue_team, 150, 0.3, 2), rescue.task, std::vector<int>{X, X}, opt).elbo);
  }

  double worst_gap = 0.0;
  const auto labeled = team::generate_dataset(tiny, 200, 1.0, 3);
  btil::FitOptions flat;
  flat.alpha = 1.0;
  flat.stickiness = 0.0;
  for (const auto& opt : {flat, btil::FitOptions{}}) {
    const auto fit = btil::fit(labeled, testing::tiny().task, std::vector<int>{2, 2}, opt);
    worst_gap = std::max(worst_gap, oracle::count_estimator_gap(labeled, testing::tiny().task, fit.models, opt.alpha,
                                                                opt.stickiness));
  }
  return {worst_drop <= kElboSlack && worst_gap <= kCountTol,
          "largest ELBO decrease = " + fmt(worst_drop) + " (slack " + fmt(kElboSlack) +
              "), supervised fit vs counts = " + fmt(worst_gap) + " (tol " + fmt(kCountTol) + ")"};
}

Verdict accuracy(const Context& ctx) {
  bool pass = true;
  std::ostringstream detail;
  for (const std::string domain : {"movers", "rescue", "rescue2", "cleanup"}) {
    std::map<std::string, double> sum;
    double min_full = 1.0;
    double min_margin = 1e9;
    for (int seed = 1; seed <= kTrainingSeeds; ++seed) {
      experiment::Pipeline p(ctx.config(domain, static_cast<std::uint64_t>(seed)));
      for (auto st : {experiment::Stage::kGenerate, experiment::Stage::kTrain, experiment::Stage::kInfer}) p.run(st);
      const auto csv = Csv::read(p.path(experiment::Pipeline::kAccuracySummaryFile));
      for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto& name = csv.str(r, "dataset");
        const double mean = csv.num(r, "mean");
        const double margin =
            (mean - csv.num(r, "random_baseline")) / std::max(csv.num(r, "standard_error"), 1e-300);
        sum[name] += mean / kTrainingSeeds;
        min_margin = std::min(min_margin, margin);
        if (name == "500@1") min_full = std::min(min_full, mean);
      }
    }
    for (const char* need : {"500@1", "500@0.3", "150@1"})
      if (!sum.count(need)) throw ValidationError(domain + " config lacks dataset " + need);
    const bool ordered = sum["500@1"] >= sum["500@0.3"] && sum["500@0.3"] >= sum["150@1"];
    const bool floor = (domain != "movers" && domain != "rescue") || min_full > kAccuracyFloor;
    const bool above = min_margin >= kBaselineStandardErrors;
    pass = pass && ordered && floor && above;
    detail << domain << " [" << (ordered && floor && above ? "ok" : "FAIL") << "] mean over seeds 500@1 "
           << fmt(sum["500@1"]) << " / 500@0.3 " << fmt(sum["500@0.3"]) << " / 150@1 " << fmt(sum["150@1"])
           << ", lowest 500@1 " << fmt(min_full) << ", lowest margin " << fmt(min_margin, 3) << " SE; ";
  }
  return {pass, detail.str()};
}

Verdict cost_one_trend(const Context& ctx) {
  bool pass = true;
  std::ostringstream detail;
  for (const std::string domain : {"movers", "cleanup"}) {
    if (ctx.config(domain, 1).cost != 1.0) throw ValidationError(domain + " config must use cost 1");
    const auto stats = strategy_stats(benchmark(ctx, domain));
    const auto& none = find(stats, "none");
    const auto& central = find(stats, "centralized");
    const StrategyStats* best = nullptr;
    double top_other_reward = -1e300;
    for (const auto& s : stats) {
      if (starts_with(s.label, "value/") && (!best || s.objective > best->objective)) best = &s;
      if (s.label != "centralized") top_other_reward = std::max(top_other_reward, s.reward);
    }
    const bool beats = best && best->objective > none.objective && best->objective > central.objective;
    const bool top_reward = central.reward >= top_other_reward;
    pass = pass && beats && top_reward;
    detail << domain << " [" << (beats && top_reward ? "ok" : "FAIL") << "] best " << (best ? best->label : "-")
           << " J " << fmt(best ? best->objective : 0) << " vs none " << fmt(none.objective) << ", centralized "
           << fmt(central.objective) << "; centralized reward " << fmt(central.reward) << " vs best other "
           << fmt(top_other_reward) << "; ";
  }
  return {pass, detail.str()};
}

Verdict cost_zero_trend(const Context& ctx) {
  bool pass = true;
  std::ostringstream detail;
  for (const std::string domain : {"rescue", "rescue2"}) {
    if (ctx.config(domain, 1).cost != 0.0) throw ValidationError(domain + " config must use cost 0");
    const auto csv = benchmark(ctx, domain);
    bool full = true;
    for (std::size_t r = 0; r < csv.rows.size(); ++r)
      if (csv.str(r, "strategy") == "centralized") full = full && csv.num(r, "interventions") == csv.num(r, "length");
    const auto stats = strategy_stats(csv);
    const auto& none = find(stats, "none");
    const auto& central = find(stats, "centralized");
    const StrategyStats* best = nullptr;
    for (const auto& s : stats)
      if (starts_with(s.label, "value/") && s.reward > none.reward && s.interventions < central.interventions &&
          (!best || s.reward > best->reward))
        best = &s;
    const bool ok = full && best != nullptr;
    pass = pass && ok;
    detail << domain << " [" << (ok ? "ok" : "FAIL") << "] ";
    if (best)
      detail << best->label << " reward " << fmt(best->reward) << " with " << fmt(best->interventions)
             << " interventions";
    else
      detail << "no value strategy beats the baseline";
    detail << " vs none reward " << fmt(none.reward) << ", centralized " << fmt(central.interventions)
           << " interventions" << (full ? " (= episode length)" : " (NOT episode length)") << "; ";
  }
  return {pass, detail.str()};
}

Verdict value_vs_rule(const Context& ctx) {
  const auto stats = strategy_stats(benchmark(ctx, "movers"));
  const StrategyStats* value = nullptr;
  const StrategyStats* rule = nullptr;
  for (const auto& s : stats) {
    if (starts_with(s.label, "value/") && (!value || s.objective > value->objective)) value = &s;
    if (starts_with(s.label, "rule/") && (!rule || s.objective > rule->objective)) rule = &s;
  }
  if (!value || !rule) return {false, "benchmark lacks value or rule strategies"};
  const bool ok = value->objective >= rule->objective - kRuleStandardErrors * rule->objective_se;
  return {ok, "best value " + value->label + " J " + fmt(value->objective) + " vs best rule " + rule->label + " J " +
                  fmt(rule->objective) + " (SE " + fmt(rule->objective_se, 3) + ")"};
}

Verdict objective_audit(const Context& ctx) {
  std::size_t rows = 0;
  std::size_t bad = 0;
  std::vector<std::string> runs;
  auto audit = [&](const fs::path& file) {
    const auto csv = Csv::read(file);
    for (std::size_t r = 0; r < csv.rows.size(); ++r, ++rows)
      if (csv.num(r, "objective") != csv.num(r, "reward") - csv.num(r, "cost") * csv.num(r, "interventions")) ++bad;
  };
  for (const std::string domain : {"movers", "cleanup", "rescue", "rescue2", "tiny"}) {
    experiment::Pipeline p(ctx.config(domain, 1));
    p.run_all();
    audit(p.path(experiment::Pipeline::kEpisodesFile));
    runs.push_back(domain);
  }
  std::string list;
  for (const auto& r : runs) list += (list.empty() ? "" : ",") + r;
  return {bad == 0 && rows > 0,
          std::to_string(bad) + " of " + std::to_string(rows) + " episode rows violate J = R - c*Z (" + list + ")"};
}

Verdict determinism(const Context& ctx) {
  const fs::path a = ctx.cache / "determinism" / "a";
  const fs::path b = ctx.cache / "determinism" / "b";
  for (const auto& dir : {a, b}) {
    fs::remove_all(dir);
    auto c = ctx.config("tiny", 1);
    c.seed = experiment::load_config(ctx.configs / "tiny.json").seed;
    c.out = dir;
    experiment::Pipeline(c).run_all();
  }
  std::set<std::string> names;
  for (const auto& dir : {a, b})
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".csv") names.insert(fs::relative(e.path(), dir).string());
  std::size_t differ = 0;
  for (const auto& n : names)
    if (!fs::exists(a / n) || !fs::exists(b / n) || read_file(a / n) != read_file(b / n)) ++differ;
  return {differ == 0 && !names.empty(),
          std::to_string(names.size() - differ) + " of " + std::to_string(names.size()) + " CSVs byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  std::string configs, cache;
  app.add_option("--criterion", only, "run one criterion (1-10); 0 runs all")->check(CLI::Range(0, 10));
  app.add_option("--configs", configs, "directory with <domain>.json run configs")->required();
  app.add_option("--cache", cache, "directory for cached pipeline runs")->required();
  CLI11_PARSE(app, argc, argv);

  const Context ctx{configs, cache};
  struct Criterion {
    int id;
    std::function<Verdict(const Context&)> run;
    double time_limit;
  };
  const std::vector<Criterion> all{
      {1, decoupling, kDecouplingSeconds},  {2, filter_oracle, kFilterSeconds}, {3, value_oracle, kValueSeconds},
      {4, learner, 0},                      {5, accuracy, 0},                   {6, cost_one_trend, 0},
      {7, cost_zero_trend, 0},              {8, value_vs_rule, 0},              {9, objective_audit, 0},
      {10, determinism, 0}};

  bool ok = true;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    if (c.time_limit > 0 && secs >= c.time_limit) {
      v.pass = false;
      v.detail += "; runtime " + fmt(secs, 3) + " s exceeds " + fmt(c.time_limit) + " s";
    }
    std::cout << "criterion " << c.id << ": " << (v.pass ? "PASS" : "FAIL") << " (" << fmt(secs, 3) << " s) "
              << v.detail << std::endl;
    ok = ok && v.pass;
  }
  return ok ? 0 : 1;
}
