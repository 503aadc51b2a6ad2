#include <doctest.h>

#include <map>

#include "coach/error.hpp"
#include "coach/filter/mental_state_filter.hpp"
#include "coach/team/synthetic_team.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace coach;

TEST_SUITE("filter") {
  TEST_CASE("filter equals path enumeration with and without deliveries") {
    const auto& task = testing::tiny().task;
    Rng rng(404);
    for (int rep = 0; rep < 6; ++rep) {
      const auto models = testing::random_models(task, 2, 500 + rep);
      const auto traj = testing::random_walk(task, 6, rng);
      filter::MentalStateFilter f(models, task.actions);
      for (double acceptance : {0.0, 0.3, 1.0}) {
        CAPTURE(rep);
        CAPTURE(acceptance);
        std::map<int, oracle::Delivery> schedule;
        schedule[1] = {{1, 0}, acceptance};
        schedule[4] = {{0, 1}, acceptance};
        auto state = f.init(traj.states[0]);
        double worst = 0.0;
        for (int t = 0;; ++t) {
          if (auto it = schedule.find(t); it != schedule.end())
            state = filter::apply_intervention(state, it->second.profile, it->second.acceptance);
          const auto expected = oracle::enumerate_filter(models, traj, task.actions, t, schedule);
          for (int i = 0; i < 2; ++i) worst = std::max(worst, (state.belief[i] - expected[i]).cwiseAbs().maxCoeff());
          if (t == traj.length()) break;
          state = f.step(state, traj.actions[t], traj.states[t + 1]);
        }
        CHECK(worst <= 1e-9);
      }
    }
  }

  TEST_CASE("a delivery with zero acceptance leaves the belief unchanged") {
    filter::FilterState s;
    s.belief = {Vector::Constant(3, 1.0 / 3), (Vector(3) << 0.2, 0.5, 0.3).finished()};
    const std::vector<LatentId> profile{2, 0};
    const auto same = filter::apply_intervention(s, profile, 0.0);
    CHECK(same.belief[0] == s.belief[0]);
    CHECK(same.belief[1] == s.belief[1]);
    const auto half = filter::apply_intervention(s, profile, 0.5);
    CHECK(half.belief[1](0) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(half.belief[1](1) == doctest::Approx(0.25).epsilon(1e-14));
    const auto full = filter::apply_intervention(s, profile, 1.0);
    CHECK(full.belief[0](2) == 1.0);
    CHECK(full.belief[0](0) == 0.0);
    CHECK_THROWS_AS(filter::apply_intervention(s, profile, 1.5), ValidationError);
    CHECK_THROWS_AS(filter::apply_intervention(s, std::vector<LatentId>{3, 0}, 0.5), ValidationError);
  }

  TEST_CASE("map estimate breaks ties toward the lowest id") {
    filter::FilterState s;
    s.belief = {(Vector(3) << 0.4, 0.4, 0.2).finished(), (Vector(3) << 0.1, 0.45, 0.45).finished()};
    CHECK(filter::map_estimate(s) == std::vector<LatentId>{0, 1});
  }

  TEST_CASE("accuracy counts every agent-step including the initial one") {
    const auto& task = testing::tiny().task;
    const auto models = testing::random_models(task, 2, 71);
    team::SyntheticTeam team(testing::tiny());
    const auto eval = team::generate_dataset(team, 20, 1.0, 9);
    const auto acc = filter::inference_accuracy(eval, models, task);
    REQUIRE(acc.per_episode.size() == 20);
    filter::MentalStateFilter f(models, task.actions);
    for (std::size_t e = 0; e < eval.trajectories.size(); ++e) {
      const auto& traj = eval.trajectories[e];
      auto state = f.init(traj.states[0]);
      int hits = 0;
      for (int t = 0; t <= traj.length(); ++t) {
        const auto est = filter::map_estimate(state);
        for (int i = 0; i < 2; ++i) hits += est[i] == traj.latents[i][t];
        if (t < traj.length()) state = f.step(state, traj.actions[t], traj.states[t + 1]);
      }
      CHECK(acc.per_episode[e] == doctest::Approx(hits / (2.0 * (traj.length() + 1))).epsilon(1e-15));
    }
    LabeledDataset unlabeled = eval;
    unlabeled.trajectories[3].latents.clear();
    CHECK_THROWS_AS(filter::inference_accuracy(unlabeled, models, task), ValidationError);
  }
}
