#include <algorithm>
#include <string>

#include "coach/domains/domain.hpp"

namespace coach::domains {
namespace {

constexpr double kJoinSwitch = 0.1;

bool all_done(const WorldState& s, int n) {
  return std::all_of(s.status.begin(), s.status.begin() + n, [](std::int8_t v) { return v != 0; });
}

// Two responders. Sites: city hall (1 person, solo), campsite (2, solo), and
// the mall (4), reached by repairing either bridge together.
class Rescue final : public Domain {
 public:
  enum Site { kCityHall = 0, kCampsite = 1, kBridge1 = 2, kBridge2 = 3 };
  static constexpr int kMall = 2;

  Rescue(DomainConfig cfg, GridMap map) : Domain(std::move(cfg), std::move(map)) {
    cells_ = {map_.landmark("city_hall"), map_.landmark("campsite"), map_.landmark("bridge1"),
              map_.landmark("bridge2")};
    config_.latent_cells = {cells_.begin(), cells_.end()};
  }

  WorldState initial_state() const override {
    WorldState s;
    s.pos[0] = static_cast<std::int16_t>(map_.landmark("start0"));
    s.pos[1] = static_cast<std::int16_t>(map_.landmark("start1"));
    return s;
  }

  Outcomes step(const WorldState& s, std::span<const int> a) const override {
    WorldState n = s;
    double reward = 0.0;
    for (int j = 0; j < 2; ++j) {
      if (a[j] != kInteract) {
        n.pos[j] = static_cast<std::int16_t>(moved(s.pos[j], a[j]));
        continue;
      }
      if (s.pos[j] == cells_[kCityHall] && n.status[0] == 0) {
        n.status[0] = 1;
        reward += 1.0;
      } else if (s.pos[j] == cells_[kCampsite] && n.status[1] == 0) {
        n.status[1] = 1;
        reward += 2.0;
      }
    }
    const bool at_bridge = s.pos[0] == s.pos[1] && (s.pos[0] == cells_[kBridge1] || s.pos[0] == cells_[kBridge2]);
    if (at_bridge && a[0] == kInteract && a[1] == kInteract && n.status[kMall] == 0) {
      n.status[kMall] = 1;
      reward += 4.0;
    }
    Outcomes out;
    out.add(n, 1.0, reward);
    return out;
  }

  bool is_complete(const WorldState& s) const override { return all_done(s, 3); }

  Observation observe(int agent, const WorldState& s) const override {
    Observation obs;
    obs.values = s;
    const int r = config_.visibility_radius;
    const int me = s.pos[agent];
    for (int j = 0; j < 2; ++j)
      if (j == agent || map_.chebyshev(me, s.pos[j]) <= r || map_.is_landmark(s.pos[j]))
        obs.agents_visible |= static_cast<std::uint8_t>(1U << j);
    if (map_.chebyshev(me, cells_[kCityHall]) <= r) obs.objects_visible |= 1U;
    if (map_.chebyshev(me, cells_[kCampsite]) <= r) obs.objects_visible |= 2U;
    if (map_.chebyshev(me, cells_[kBridge1]) <= r || map_.chebyshev(me, cells_[kBridge2]) <= r)
      obs.objects_visible |= 4U;
    return obs;
  }

  Vector latent_rule(int agent, int x, std::span<const int> seen, const WorldState& b) const override {
    Vector p = Vector::Zero(config_.num_latents);
    std::vector<int> open;
    for (int k = 0; k < 4; ++k)
      if (!site_done(b, k)) open.push_back(k);
    const int mate = 1 - agent;
    const bool mate_seen = seen[mate] != kUnobservedAction;
    const bool mate_took_mine =
        mate_seen && x <= kCampsite && seen[mate] == kInteract && b.pos[mate] == cells_[x];
    if (site_done(b, x) || mate_took_mine) {
      std::vector<int> options;
      for (int k : open)
        if (k != x) options.push_back(k);
      if (options.empty()) {
        p(x) = 1.0;
        return p;
      }
      for (int k : options) p(k) = 1.0 / static_cast<double>(options.size());
      return p;
    }
    p(x) = 1.0;
    if (mate_seen && b.status[kMall] == 0) {
      for (int k : {kBridge1, kBridge2}) {
        if (k != x && b.pos[mate] == cells_[k]) {
          p(x) = 1.0 - kJoinSwitch;
          p(k) = kJoinSwitch;
        }
      }
    }
    return p;
  }

  TabularMdp local_mdp(int, int x) const override {
    LocalSpec spec;
    spec.target_cell = cells_[x];
    return make_local_mdp(spec);
  }

 private:
  static bool site_done(const WorldState& b, int site) {
    return site >= kBridge1 ? b.status[kMall] != 0 : b.status[site] != 0;
  }

  std::array<int, 4> cells_{};
};

// Three responders. Campsite (1 person) is solo; city hall and the mall
// (2 each) need at least two responders acting together.
class RescueTwo final : public Domain {
 public:
  enum Site { kCampsite = 0, kCityHall = 1, kMall = 2 };

  RescueTwo(DomainConfig cfg, GridMap map) : Domain(std::move(cfg), std::move(map)) {
    cells_ = {map_.landmark("campsite"), map_.landmark("city_hall"), map_.landmark("mall")};
    config_.latent_cells = {cells_.begin(), cells_.end()};
  }

  WorldState initial_state() const override {
    WorldState s;
    for (int j = 0; j < 3; ++j) s.pos[j] = static_cast<std::int16_t>(map_.landmark("start" + std::to_string(j)));
    return s;
  }

  Outcomes step(const WorldState& s, std::span<const int> a) const override {
    WorldState n = s;
    std::array<int, 3> workers{};
    for (int j = 0; j < 3; ++j) {
      if (a[j] != kInteract) {
        n.pos[j] = static_cast<std::int16_t>(moved(s.pos[j], a[j]));
        continue;
      }
      for (int k = 0; k < 3; ++k)
        if (s.pos[j] == cells_[k]) ++workers[k];
    }
    double reward = 0.0;
    if (workers[kCampsite] >= 1 && s.status[kCampsite] == 0) {
      n.status[kCampsite] = 1;
      reward += 1.0;
    }
    for (int k : {kCityHall, kMall}) {
      if (workers[k] >= 2 && s.status[k] == 0) {
        n.status[k] = 1;
        reward += 2.0;
      }
    }
    Outcomes out;
    out.add(n, 1.0, reward);
    return out;
  }

  bool is_complete(const WorldState& s) const override { return all_done(s, 3); }

  Observation observe(int agent, const WorldState& s) const override {
    Observation obs;
    obs.values = s;
    const int r = config_.visibility_radius;
    const int me = s.pos[agent];
    for (int j = 0; j < 3; ++j)
      if (j == agent || map_.chebyshev(me, s.pos[j]) <= r || map_.is_landmark(s.pos[j]))
        obs.agents_visible |= static_cast<std::uint8_t>(1U << j);
    for (int k = 0; k < 3; ++k)
      if (map_.chebyshev(me, cells_[k]) <= 1) obs.objects_visible |= static_cast<std::uint8_t>(1U << k);
    return obs;
  }

  Vector latent_rule(int agent, int x, std::span<const int> seen, const WorldState& b) const override {
    Vector p = Vector::Zero(config_.num_latents);
    std::vector<int> open;
    for (int k = 0; k < 3; ++k)
      if (b.status[k] == 0) open.push_back(k);
    bool mate_took_mine = false;
    for (int j = 0; j < 3; ++j)
      if (j != agent && x == kCampsite && seen[j] == kInteract && b.pos[j] == cells_[x]) mate_took_mine = true;
    if (b.status[x] != 0 || mate_took_mine) {
      std::vector<int> options;
      for (int k : open)
        if (k != x) options.push_back(k);
      if (options.empty()) {
        p(x) = 1.0;
        return p;
      }
      for (int k : options) p(k) = 1.0 / static_cast<double>(options.size());
      return p;
    }
    p(x) = 1.0;
    for (int j = 0; j < 3; ++j) {
      if (j == agent || seen[j] == kUnobservedAction) continue;
      for (int k : {kCityHall, kMall}) {
        if (k != x && b.status[k] == 0 && b.pos[j] == cells_[k]) {
          p(x) -= kJoinSwitch;
          p(k) += kJoinSwitch;
        }
      }
    }
    return p;
  }

  TabularMdp local_mdp(int, int x) const override {
    LocalSpec spec;
    spec.target_cell = cells_[x];
    return make_local_mdp(spec);
  }

 private:
  std::array<int, 3> cells_{};
};

}  // namespace

std::shared_ptr<const Domain> make_rescue() {
  DomainConfig cfg;
  cfg.name = "rescue";
  cfg.num_agents = 2;
  cfg.num_objects = 3;
  cfg.num_actions = 6;
  cfg.num_latents = 4;
  cfg.horizon = 30;
  cfg.gamma = 0.95;
  cfg.visibility_radius = 1;
  cfg.agent_names = {"police", "firefighter"};
  cfg.action_names = {"north", "south", "west", "east", "stay", "rescue"};
  cfg.latent_names = {"city_hall", "campsite", "bridge1", "bridge2"};
  cfg.max_total_reward = 7.0;
  return std::make_shared<Rescue>(std::move(cfg), GridMap::parse(map_asset("rescue")));
}

std::shared_ptr<const Domain> make_rescue_two() {
  DomainConfig cfg;
  cfg.name = "rescue2";
  cfg.num_agents = 3;
  cfg.num_objects = 3;
  cfg.num_actions = 6;
  cfg.num_latents = 3;
  cfg.horizon = 15;
  cfg.gamma = 0.95;
  cfg.visibility_radius = 0;
  cfg.agent_names = {"police", "firefighter", "emt"};
  cfg.action_names = {"north", "south", "west", "east", "stay", "rescue"};
  cfg.latent_names = {"campsite", "city_hall", "mall"};
  cfg.max_total_reward = 5.0;
  return std::make_shared<RescueTwo>(std::move(cfg), GridMap::parse(map_asset("rescue2")));
}

}  // namespace coach::domains
