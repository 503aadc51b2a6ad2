#include <doctest.h>

#include <cmath>
#include <sstream>

#include "coach/error.hpp"
#include "coach/intervention/engine.hpp"
#include "test_support.hpp"

using namespace coach;
using namespace coach::intervention;

namespace {

filter::FilterState belief_of(std::vector<Vector> b, StateId s = 0) {
  filter::FilterState f;
  f.belief = std::move(b);
  f.state = s;
  return f;
}

filter::FilterState random_belief(int agents, int latents, StateId s, Rng& rng) {
  std::vector<Vector> b;
  for (int i = 0; i < agents; ++i) b.push_back(testing::random_row(latents, rng));
  return belief_of(std::move(b), s);
}

StrategyConfig make(Kind k, Wrapper w = Wrapper::kDeterministic, double delta = 0.0, double theta = 0.0,
                    double cost = 0.0) {
  StrategyConfig c;
  c.kind = k;
  c.wrapper = w;
  c.delta = delta;
  c.theta = theta;
  c.cost = cost;
  return c;
}

struct TinyFixture {
  TinyFixture()
      : models(testing::random_models(testing::tiny().task, 2, 77)),
        table(evaluate_team_value(testing::tiny().task, models)),
        team(testing::tiny()),
        runner(team, models, &table) {}
  std::vector<AgentBehaviorModel> models;
  CompatibilityTable table;
  team::SyntheticTeam team;
  Runner runner;
};

}  // namespace

TEST_SUITE("intervention") {
  TEST_CASE("wrappers on a two-point posterior") {
    const JointSpace one({2});
    const auto b = belief_of({(Vector(2) << 0.6, 0.4).finished()});
    auto f_first = [](ProfileId x) { return x == 0; };
    auto f_second = [](ProfileId x) { return x == 1; };
    CHECK(confidence_wrap(f_first, b, one, 0.5));
    CHECK_FALSE(confidence_wrap(f_first, b, one, 0.6));
    CHECK_FALSE(confidence_wrap(f_first, b, one, 1.0));
    CHECK(expectation_wrap(f_first, b, one));
    CHECK_FALSE(confidence_wrap(f_second, b, one, 0.0));
    CHECK_FALSE(expectation_wrap(f_second, b, one));
  }

  TEST_CASE("joint profile probability is the product of the member posteriors") {
    const JointSpace two({2, 3});
    const auto b = belief_of({(Vector(2) << 0.3, 0.7).finished(), (Vector(3) << 0.2, 0.5, 0.3).finished()});
    CHECK(profile_probability(b, two, two.encode(std::vector<int>{1, 1})) == doctest::Approx(0.35));
    CHECK(profile_probability(b, two, two.encode(std::vector<int>{0, 2})) == doctest::Approx(0.09));
    // MAP profile (1, 1) has joint mass 0.35, so theta = 0.4 blocks it.
    auto always = [](ProfileId) { return true; };
    CHECK(confidence_wrap(always, b, two, 0.3));
    CHECK_FALSE(confidence_wrap(always, b, two, 0.4));
  }

  TEST_CASE("value decisions follow benefit over threshold") {
    TinyFixture fx;
    const auto& table = fx.table;
    Rng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
      const StateId s = static_cast<StateId>(uniform01(rng) * table.num_states());
      const auto b = random_belief(2, 2, s, rng);
      const ProfileId x_hat = table.profiles().encode(filter::map_estimate(b));
      for (double cost : {0.0, 0.05}) {
        for (double delta : {0.0, 0.01, 0.1}) {
          const Controller det(make(Kind::kValue, Wrapper::kDeterministic, delta, 0.0, cost), testing::tiny(), &table);
          const bool expected = table.value(s, table.best_profile(s)) - table.value(s, x_hat) - cost > delta;
          const Decision d = det.decide(b);
          CHECK(d.intervene == expected);
          if (d.intervene) CHECK(d.recommendation == table.best_profile(s));
          const Controller conf0(make(Kind::kValue, Wrapper::kConfidence, delta, 0.0, cost), testing::tiny(), &table);
          CHECK(conf0.decide(b).intervene == expected);
        }
      }
    }
  }

  TEST_CASE("raising delta never adds interventions") {
    TinyFixture fx;
    Rng rng(8);
    const std::vector<double> deltas{-1.0, 0.0, 0.01, 0.05, 0.2, 1.0, 10.0};
    for (int rep = 0; rep < 200; ++rep) {
      const StateId s = static_cast<StateId>(uniform01(rng) * fx.table.num_states());
      const auto b = random_belief(2, 2, s, rng);
      for (Wrapper w : {Wrapper::kDeterministic, Wrapper::kConfidence, Wrapper::kExpectation}) {
        bool previous = true;
        for (double delta : deltas) {
          const bool now = Controller(make(Kind::kValue, w, delta, 0.3), testing::tiny(), &fx.table).decide(b).intervene;
          CHECK((previous || !now));
          previous = now;
        }
      }
    }
  }

  TEST_CASE("rule decisions use the compatible set") {
    const auto movers = domains::build_movers();
    const StateId s0 = movers.task.initial_state;
    const Controller rule(make(Kind::kRule), movers, nullptr);
    const auto& P = rule.profiles();
    CHECK_FALSE(rule.fires(s0, P.encode(std::vector<int>{1, 1})));
    CHECK(rule.fires(s0, P.encode(std::vector<int>{0, 1})));
    CHECK(rule.fires(s0, P.encode(std::vector<int>{3, 3})));
    CHECK(rule.recommend(s0) == P.encode(std::vector<int>{0, 0}));

    Matrix v = Matrix::Zero(movers.task.num_states, P.size());
    v(s0, P.encode(std::vector<int>{2, 2})) = 5.0;
    v(s0, P.encode(std::vector<int>{0, 1})) = 9.0;  // higher but incompatible
    const CompatibilityTable table(P, v, 0.99, 0.0, 1);
    const Controller ranked(make(Kind::kRule), movers, &table);
    CHECK(ranked.recommend(s0) == P.encode(std::vector<int>{2, 2}));

    auto sure = [&](int a, int b) {
      Vector p0 = Vector::Zero(4), p1 = Vector::Zero(4);
      p0(a) = 1.0;
      p1(b) = 1.0;
      return belief_of({p0, p1}, s0);
    };
    CHECK(rule.decide(sure(0, 1)).intervene);
    CHECK_FALSE(rule.decide(sure(1, 1)).intervene);
  }

  TEST_CASE("no intervention, centralized control, and the objective identity") {
    TinyFixture fx;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto none = fx.runner.run_episode(make(Kind::kNone, Wrapper::kDeterministic, 0, 0, 1.0), seed);
      CHECK(none.interventions == 0);
      CHECK(none.objective == none.reward);
      team::RolloutRecord rec;
      const auto central = fx.runner.run_episode(make(Kind::kCentralized, Wrapper::kDeterministic, 0, 0, 0.7), seed, &rec);
      CHECK(central.interventions == central.length);
      CHECK(central.objective == central.reward - 0.7 * central.interventions);
      // With full acceptance every step before the last runs the recommended profile.
      for (int t = 0; t < rec.trajectory.length(); ++t) {
        std::vector<int> x{rec.trajectory.latents[0][t], rec.trajectory.latents[1][t]};
        CHECK(fx.table.profiles().encode(x) == fx.table.best_profile(rec.trajectory.states[t]));
      }
    }
  }

  TEST_CASE("benchmark output is deterministic and independent of workers") {
    TinyFixture fx;
    const std::vector<StrategyConfig> grid{make(Kind::kNone), make(Kind::kCentralized, Wrapper::kDeterministic, 0, 0, 1),
                                           make(Kind::kValue, Wrapper::kExpectation, 0.01, 0, 1)};
    const auto a = run_benchmark(fx.runner, grid, 30, 99, 1);
    const auto b = run_benchmark(fx.runner, grid, 30, 99, 3);
    std::ostringstream ea, eb, sa, sb;
    write_episode_csv(ea, a);
    write_episode_csv(eb, b);
    write_summary_csv(sa, a);
    write_summary_csv(sb, b);
    CHECK(ea.str() == eb.str());
    CHECK(sa.str() == sb.str());
    REQUIRE(a.size() == 90);
    CHECK(a[0].strategy.label() == "none");
    CHECK(a[30].strategy.label() == "centralized");
    CHECK(a[31].metrics.seed == a[1].metrics.seed);

    std::istringstream lines(sa.str());
    std::string line;
    int count = 0;
    std::size_t width = 0;
    while (std::getline(lines, line)) {
      const auto commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
      if (count == 0) width = commas;
      CHECK(commas == width);
      ++count;
    }
    CHECK(count == 4);
    CHECK(width + 1 == 7 + 1 + 15);
  }

  TEST_CASE("quartiles use linear interpolation") {
    const auto q = summarize({4.0, 1.0, 3.0, 2.0});
    CHECK(q.mean == 2.5);
    CHECK(q.q1 == doctest::Approx(1.75));
    CHECK(q.median == doctest::Approx(2.5));
    CHECK(q.q3 == doctest::Approx(3.25));
    CHECK(q.standard_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    const auto single = summarize({7.0});
    CHECK(single.q1 == 7.0);
    CHECK(single.standard_error == 0.0);
  }

  TEST_CASE("labels and validation") {
    CHECK(make(Kind::kValue, Wrapper::kConfidence, 2, 0.5).label() == "value/confidence/delta=2/theta=0.5");
    CHECK(make(Kind::kRule, Wrapper::kExpectation).label() == "rule/expectation");
    CHECK(parse_kind("value") == Kind::kValue);
    CHECK_THROWS_AS(parse_kind("oracle"), ValidationError);
    CHECK_THROWS_AS(parse_wrapper("soft"), ValidationError);
    CHECK_THROWS_AS(validate(make(Kind::kValue, Wrapper::kConfidence, 0, 1.5)), ValidationError);
    CHECK_THROWS_AS(Controller(make(Kind::kValue), testing::tiny(), nullptr), ValidationError);
    CHECK_THROWS_AS(Controller(make(Kind::kRule), testing::tiny(), nullptr), ValidationError);
  }
}
