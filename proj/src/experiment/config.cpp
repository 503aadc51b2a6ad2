#include <cmath>
#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coach/error.hpp"
#include "coach/experiment/experiment.hpp"
#include "coach/io.hpp"

namespace coach::experiment {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ValidationError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

std::string DatasetSpec::name() const { return std::to_string(count) + "@" + format_double(ratio); }

std::vector<intervention::StrategyConfig> ExperimentConfig::strategies(bool has_rule) const {
  using intervention::Kind;
  using intervention::StrategyConfig;
  using intervention::Wrapper;
  std::vector<StrategyConfig> out;
  auto base = [&](Kind k, Wrapper w) {
    StrategyConfig c;
    c.kind = k;
    c.wrapper = w;
    c.cost = cost;
    c.acceptance = acceptance;
    return c;
  };
  for (Kind k : grid.kinds) {
    if (k == Kind::kNone || k == Kind::kCentralized) {
      out.push_back(base(k, Wrapper::kDeterministic));
      continue;
    }
    if (k == Kind::kRule && !has_rule) continue;
    for (Wrapper w : grid.wrappers) {
      const std::vector<double> deltas = k == Kind::kValue ? grid.deltas : std::vector<double>{0.0};
      const std::vector<double> thetas = w == Wrapper::kConfidence ? grid.thetas : std::vector<double>{0.0};
      for (double d : deltas)
        for (double th : thetas) {
          auto c = base(k, w);
          c.delta = d;
          c.theta = th;
          out.push_back(c);
        }
    }
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  check_keys(j, "config",
             {"domain", "seed", "datasets", "primary", "eval_count", "team", "learner", "value", "grid", "cost",
              "acceptance", "episodes", "out", "jobs"});
  ExperimentConfig c;
  read(j, "domain", c.domain, "config");
  read(j, "seed", c.seed, "config");
  if (j.contains("datasets")) {
    c.datasets.clear();
    for (const auto& d : j.at("datasets")) {
      check_keys(d, "config.datasets[]", {"count", "ratio"});
      DatasetSpec spec;
      read(d, "count", spec.count, "config.datasets[]");
      read(d, "ratio", spec.ratio, "config.datasets[]");
      c.datasets.push_back(spec);
    }
  }
  read(j, "primary", c.primary, "config");
  read(j, "eval_count", c.eval_count, "config");
  if (j.contains("team")) {
    const auto& t = j.at("team");
    check_keys(t, "config.team", {"temperature", "local_gamma"});
    read(t, "temperature", c.team.temperature, "config.team");
    read(t, "local_gamma", c.team.local_gamma, "config.team");
  }
  if (j.contains("learner")) {
    const auto& l = j.at("learner");
    check_keys(l, "config.learner", {"alpha", "stickiness", "max_iters", "tol"});
    read(l, "alpha", c.learner.alpha, "config.learner");
    read(l, "stickiness", c.learner.stickiness, "config.learner");
    read(l, "max_iters", c.learner.max_iters, "config.learner");
    read(l, "tol", c.learner.tol, "config.learner");
  }
  if (j.contains("value")) {
    const auto& v = j.at("value");
    check_keys(v, "config.value", {"gamma", "tol", "max_sweeps"});
    if (v.contains("gamma") && !v.at("gamma").is_null()) read(v, "gamma", c.value.gamma, "config.value");
    read(v, "tol", c.value.tol, "config.value");
    read(v, "max_sweeps", c.value.max_sweeps, "config.value");
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, "config.grid", {"kinds", "wrappers", "deltas", "thetas"});
    if (g.contains("kinds")) {
      c.grid.kinds.clear();
      for (const auto& k : g.at("kinds")) c.grid.kinds.push_back(intervention::parse_kind(k.get<std::string>()));
    }
    if (g.contains("wrappers")) {
      c.grid.wrappers.clear();
      for (const auto& w : g.at("wrappers"))
        c.grid.wrappers.push_back(intervention::parse_wrapper(w.get<std::string>()));
    }
    read(g, "deltas", c.grid.deltas, "config.grid");
    read(g, "thetas", c.grid.thetas, "config.grid");
  }
  read(j, "cost", c.cost, "config");
  read(j, "acceptance", c.acceptance, "config");
  read(j, "episodes", c.episodes, "config");
  std::string out = c.out.string();
  read(j, "out", out, "config");
  c.out = out;
  read(j, "jobs", c.jobs, "config");
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_json(const ExperimentConfig& c) {
  json j;
  j["domain"] = c.domain;
  j["seed"] = c.seed;
  j["datasets"] = json::array();
  for (const auto& d : c.datasets) j["datasets"].push_back({{"count", d.count}, {"ratio", d.ratio}});
  j["primary"] = c.primary;
  j["eval_count"] = c.eval_count;
  j["team"] = {{"temperature", c.team.temperature}, {"local_gamma", c.team.local_gamma}};
  j["learner"] = {{"alpha", c.learner.alpha},
                  {"stickiness", c.learner.stickiness},
                  {"max_iters", c.learner.max_iters},
                  {"tol", c.learner.tol}};
  j["value"] = {{"gamma", c.value.gamma < 0 ? json(nullptr) : json(c.value.gamma)},
                {"tol", c.value.tol},
                {"max_sweeps", c.value.max_sweeps}};
  json kinds = json::array(), wrappers = json::array();
  for (auto k : c.grid.kinds) kinds.push_back(intervention::to_string(k));
  for (auto w : c.grid.wrappers) wrappers.push_back(intervention::to_string(w));
  j["grid"] = {{"kinds", kinds}, {"wrappers", wrappers}, {"deltas", c.grid.deltas}, {"thetas", c.grid.thetas}};
  j["cost"] = c.cost;
  j["acceptance"] = c.acceptance;
  j["episodes"] = c.episodes;
  j["out"] = c.out.string();
  j["jobs"] = c.jobs;
  return j.dump(2);
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& msg) { throw ValidationError("config: " + msg); };
  const auto names = domains::domain_names();
  if (std::find(names.begin(), names.end(), c.domain) == names.end()) fail("unknown domain '" + c.domain + "'");
  if (c.datasets.empty()) fail("datasets must not be empty");
  for (const auto& d : c.datasets) {
    if (d.count < 1) fail("dataset count must be >= 1");
    if (!(d.ratio >= 0.0 && d.ratio <= 1.0)) fail("dataset ratio must lie in [0, 1]");
  }
  if (c.primary < 0 || c.primary >= static_cast<int>(c.datasets.size())) fail("primary must index datasets");
  if (c.eval_count < 1) fail("eval_count must be >= 1");
  if (!(c.team.temperature > 0.0)) fail("team.temperature must be > 0");
  if (!(c.team.local_gamma > 0.0 && c.team.local_gamma < 1.0)) fail("team.local_gamma must lie in (0, 1)");
  if (!(c.learner.alpha > 0.0)) fail("learner.alpha must be > 0");
  if (!(c.learner.stickiness >= 0.0)) fail("learner.stickiness must be >= 0");
  if (c.learner.max_iters < 1) fail("learner.max_iters must be >= 1");
  if (!(c.learner.tol > 0.0)) fail("learner.tol must be > 0");
  if (c.value.gamma >= 0.0 && !(c.value.gamma > 0.0 && c.value.gamma < 1.0)) fail("value.gamma must lie in (0, 1)");
  if (!(c.value.tol > 0.0)) fail("value.tol must be > 0");
  if (c.value.max_sweeps < 1) fail("value.max_sweeps must be >= 1");
  if (c.grid.kinds.empty()) fail("grid.kinds must not be empty");
  if (c.grid.wrappers.empty()) fail("grid.wrappers must not be empty");
  if (c.grid.deltas.empty()) fail("grid.deltas must not be empty");
  if (c.grid.thetas.empty()) fail("grid.thetas must not be empty");
  for (double d : c.grid.deltas)
    if (!std::isfinite(d)) fail("grid.deltas must be finite");
  for (double t : c.grid.thetas)
    if (!(t >= 0.0 && t <= 1.0)) fail("grid.thetas must lie in [0, 1]");
  if (!(c.cost >= 0.0) || !std::isfinite(c.cost)) fail("cost must be finite and >= 0");
  if (!(c.acceptance >= 0.0 && c.acceptance <= 1.0)) fail("acceptance must lie in [0, 1]");
  if (c.episodes < 1) fail("episodes must be >= 1");
  if (c.jobs < 1) fail("jobs must be >= 1");
  if (c.out.empty()) fail("out must not be empty");
}

}  // namespace coach::experiment
