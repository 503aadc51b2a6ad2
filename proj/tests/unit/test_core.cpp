#include <doctest.h>

#include <sstream>

#include "coach/io.hpp"
#include "coach/joint_space.hpp"
#include "coach/random.hpp"
#include "coach/validate.hpp"
#include "test_support.hpp"

using namespace coach;

TEST_SUITE("core") {
  TEST_CASE("joint ids are row-major with agent 0 most significant") {
    const JointSpace js{6, 6};
    CHECK(js.encode(std::vector<int>{0, 0}) == 0);
    CHECK(js.decode(0) == std::vector<int>{0, 0});
    CHECK(js.encode(std::vector<int>{5, 5}) == 35);
    CHECK(js.encode(std::vector<int>{1, 0}) == 6);
    CHECK(js.component(35, 1) == 5);
  }

  TEST_CASE("joint encoding is a bijection on a three-agent space") {
    const std::vector<int> radices{3, 4, 5};
    const JointSpace js(radices);
    std::vector<int> seen(js.size(), 0);
    int expected = 0;
    testing::for_each_tuple(radices, [&](const std::vector<int>& v) {
      const int id = js.encode(v);
      // Independent row-major oracle.
      CHECK(id == (v[0] * 4 + v[1]) * 5 + v[2]);
      CHECK(id == expected++);
      CHECK(js.decode(id) == v);
      ++seen[id];
    });
    for (int c : seen) CHECK(c == 1);
  }

  TEST_CASE("out-of-range components are rejected") {
    const JointSpace js{6, 6};
    CHECK_THROWS_AS((void)js.encode(std::vector<int>{6, 0}), std::out_of_range);
    CHECK_THROWS_AS((void)js.encode(std::vector<int>{-1, 0}), std::out_of_range);
    CHECK_THROWS_AS((void)js.decode(36), std::out_of_range);
    CHECK_THROWS_AS((void)js.encode(std::vector<int>{1}), std::out_of_range);
  }

  TEST_CASE("sample_categorical") {
    Rng rng(7);
    Vector degenerate(3);
    degenerate << 1, 0, 0;
    for (int k = 0; k < 1000; ++k) CHECK(sample_categorical(degenerate, rng) == 0);

    Vector half(2);
    half << 0.5, 0.5;
    int zeros = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) zeros += sample_categorical(half, rng) == 0;
    CHECK(zeros / static_cast<double>(n) >= 0.49);
    CHECK(zeros / static_cast<double>(n) <= 0.51);

    Rng a(99), b(99);
    Vector w(4);
    w << 0.1, 0.2, 0.3, 0.4;
    for (int k = 0; k < 200; ++k) CHECK(sample_categorical(w, a) == sample_categorical(w, b));

    CHECK_THROWS_AS(sample_categorical(Vector::Zero(3), rng), std::invalid_argument);
    Vector neg(2);
    neg << -0.1, 1.1;
    CHECK_THROWS_AS(sample_categorical(neg, rng), std::invalid_argument);
  }

  TEST_CASE("validate_model reports broken rows and dimension mismatches") {
    CHECK(validate_model(testing::tiny().task).empty());

    TaskModel task;
    task.name = "two";
    task.actions = JointSpace{1};
    task.num_states = 2;
    task.transition = TransitionTable(2, 1, {0, 2, 3}, {0, 1, 1}, {0.5, 0.48, 1.0});
    task.reward = {0.0, 0.0};
    task.terminal = {0, 0};
    task.gamma = 0.9;
    task.horizon = 3;
    const auto report = validate_model(task);
    REQUIRE(report.size() == 1);
    CHECK(report[0].find("s=0") != std::string::npos);
    CHECK(report[0].find("a=0") != std::string::npos);

    auto models = testing::random_models(testing::tiny().task, 2, 3);
    CHECK(validate_model(models[0], testing::tiny().task, 0).empty());
    Matrix wide = Matrix::Constant(testing::tiny().task.num_states, 3, 1.0 / 3);
    models[0].mutable_initial_belief() = wide;
    CHECK_FALSE(validate_model(models[0]).empty());
  }

  TEST_CASE("models and datasets survive a text round trip") {
    const auto& task = testing::tiny().task;
    const auto models = testing::random_models(task, 2, 11);
    std::stringstream ss;
    write_models(ss, models);
    const auto back = read_models(ss);
    REQUIRE(back.size() == models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
      CHECK(back[i].policy() == models[i].policy());
      CHECK(back[i].initial_belief() == models[i].initial_belief());
      CHECK(back[i].latent_transition().blocks().size() == models[i].latent_transition().blocks().size());
    }

    team::SyntheticTeam team(testing::tiny());
    const auto data = team::generate_dataset(team, 20, 0.5, 4);
    std::stringstream ds;
    write_dataset(ds, data);
    const auto again = read_dataset(ds);
    REQUIRE(again.trajectories.size() == data.trajectories.size());
    for (std::size_t k = 0; k < data.trajectories.size(); ++k) {
      CHECK(again.trajectories[k].states == data.trajectories[k].states);
      CHECK(again.trajectories[k].actions == data.trajectories[k].actions);
      CHECK(again.trajectories[k].latents == data.trajectories[k].latents);
    }
  }

  TEST_CASE("sha256 of a known string") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }
}
