#include <algorithm>
#include <string>

#include "coach/domains/domain.hpp"

namespace coach::domains {
namespace {

// Bag status: 0 at its site, 1 + j carried by agent j, 3 in the truck.
constexpr std::int8_t kAtSite = 0;
constexpr std::int8_t kInTruck = 3;
constexpr int kBags = 4;
constexpr int kTruckLatent = 4;

class Cleanup final : public Domain {
 public:
  Cleanup(DomainConfig cfg, GridMap map) : Domain(std::move(cfg), std::move(map)) {
    truck_ = map_.landmark("truck");
    for (int k = 0; k < kBags; ++k) site_[k] = map_.landmark("bag" + std::to_string(k + 1));
    config_.latent_cells = {site_[0], site_[1], site_[2], site_[3], truck_};
  }

  WorldState initial_state() const override {
    WorldState s;
    s.pos[0] = static_cast<std::int16_t>(map_.landmark("start0"));
    s.pos[1] = static_cast<std::int16_t>(map_.landmark("start1"));
    return s;
  }

  Outcomes step(const WorldState& s, std::span<const int> a) const override {
    WorldState n = s;
    for (int j = 0; j < 2; ++j) {
      if (a[j] != kInteract) {
        n.pos[j] = static_cast<std::int16_t>(moved(s.pos[j], a[j]));
        continue;
      }
      const int held = carried_by(n, j);
      if (held >= 0) {
        if (s.pos[j] == truck_) n.status[held] = kInTruck;
        continue;
      }
      for (int k = 0; k < kBags; ++k) {
        if (site_[k] == s.pos[j] && n.status[k] == kAtSite) {
          n.status[k] = static_cast<std::int8_t>(1 + j);
          break;
        }
      }
    }
    Outcomes out;
    out.add(n, 1.0, -1.0);
    return out;
  }

  bool is_complete(const WorldState& s) const override {
    return std::all_of(s.status.begin(), s.status.begin() + kBags,
                       [](std::int8_t v) { return v == kInTruck; });
  }

  Observation observe(int agent, const WorldState& s) const override {
    Observation obs;
    obs.values = s;
    const int r = config_.visibility_radius;
    const int me = s.pos[agent];
    for (int j = 0; j < 2; ++j)
      if (j == agent || map_.chebyshev(me, s.pos[j]) <= r || map_.is_landmark(s.pos[j]))
        obs.agents_visible |= static_cast<std::uint8_t>(1U << j);
    for (int k = 0; k < kBags; ++k) {
      const int st = s.status[k];
      bool seen = map_.chebyshev(me, site_[k]) <= r;
      if (st == 1 + agent) seen = true;
      if (st >= 1 && st <= 2 && obs.sees_agent(st - 1)) seen = true;
      if (st == kInTruck && map_.chebyshev(me, truck_) <= r) seen = true;
      if (seen) obs.objects_visible |= static_cast<std::uint8_t>(1U << k);
    }
    return obs;
  }

  Vector initial_latent_distribution(int) const override {
    Vector p = Vector::Zero(config_.num_latents);
    p.head(kBags).setConstant(1.0 / kBags);
    return p;
  }

  Vector latent_rule(int agent, int x, std::span<const int>, const WorldState& b) const override {
    Vector p = Vector::Zero(config_.num_latents);
    if (carried_by(b, agent) >= 0) {
      p(kTruckLatent) = 1.0;
      return p;
    }
    std::vector<int> remaining;
    for (int k = 0; k < kBags; ++k)
      if (b.status[k] == kAtSite) remaining.push_back(k);
    if (remaining.empty()) {
      p(x) = 1.0;
      return p;
    }
    if (x == kTruckLatent || b.status[x] != kAtSite) {
      for (int k : remaining) p(k) = 1.0 / static_cast<double>(remaining.size());
      return p;
    }
    p(x) = 1.0;
    return p;
  }

  int num_local_states() const override { return 2 * map_.num_cells(); }
  int local_state(int agent, const WorldState& b) const override {
    return b.pos[agent] + (carried_by(b, agent) >= 0 ? map_.num_cells() : 0);
  }

  TabularMdp local_mdp(int, int x) const override {
    LocalSpec spec;
    spec.with_carry = true;
    if (x == kTruckLatent) {
      spec.target_cell = truck_;
      spec.required_carry = 1;
    } else {
      spec.target_cell = site_[x];
    }
    return make_local_mdp(spec);
  }

 private:
  static int carried_by(const WorldState& s, int agent) {
    for (int k = 0; k < kBags; ++k)
      if (s.status[k] == 1 + agent) return k;
    return -1;
  }

  int truck_ = -1;
  std::array<int, kBags> site_{};
};

}  // namespace

std::shared_ptr<const Domain> make_cleanup() {
  DomainConfig cfg;
  cfg.name = "cleanup";
  cfg.num_agents = 2;
  cfg.num_objects = kBags;
  cfg.num_actions = 6;
  cfg.num_latents = 5;
  cfg.horizon = 200;
  cfg.gamma = 0.99;
  cfg.visibility_radius = 1;
  cfg.agent_names = {"alice", "rob"};
  cfg.action_names = {"north", "south", "west", "east", "stay", "pickup_drop"};
  cfg.latent_names = {"bag1", "bag2", "bag3", "bag4", "truck"};
  return std::make_shared<Cleanup>(std::move(cfg), GridMap::parse(map_asset("cleanup")));
}

}  // namespace coach::domains
