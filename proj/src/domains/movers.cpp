#include <algorithm>

#include "coach/domains/domain.hpp"

namespace coach::domains {
namespace {

// Box status codes.
constexpr std::int8_t kHome = 0;
constexpr std::int8_t kCarried = 1;
constexpr std::int8_t kDelivered = 2;
constexpr int kBoxes = 3;
constexpr int kTruckLatent = 3;
constexpr double kWanderSwitch = 0.1;

bool is_move(int a) { return a >= kMoveNorth && a <= kMoveEast; }

class Movers final : public Domain {
 public:
  Movers(DomainConfig cfg, GridMap map) : Domain(std::move(cfg), std::move(map)) {
    truck_ = map_.landmark("truck");
    for (int k = 0; k < kBoxes; ++k) site_[k] = map_.landmark("box" + std::to_string(k + 1));
    config_.latent_cells = {site_[0], site_[1], site_[2], truck_};
  }

  WorldState initial_state() const override {
    WorldState s;
    s.pos[0] = static_cast<std::int16_t>(map_.landmark("start0"));
    s.pos[1] = static_cast<std::int16_t>(map_.landmark("start1"));
    return s;
  }

  Outcomes step(const WorldState& s, std::span<const int> a) const override {
    WorldState n = s;
    const int carried = carried_box(s);
    if (carried >= 0) {
      if ((a[0] == kInteract || a[1] == kInteract) && s.pos[0] == truck_) {
        n.status[carried] = kDelivered;
      } else if (a[0] == a[1] && is_move(a[0])) {
        const auto to = static_cast<std::int16_t>(moved(s.pos[0], a[0]));
        n.pos[0] = n.pos[1] = to;
      }
    } else {
      for (int j = 0; j < 2; ++j) {
        if (!is_move(a[j])) continue;
        const int to = moved(s.pos[j], a[j]);
        if (to != truck_) n.pos[j] = static_cast<std::int16_t>(to);
      }
      if (a[0] == kInteract && a[1] == kInteract && s.pos[0] == s.pos[1]) {
        for (int k = 0; k < kBoxes; ++k)
          if (site_[k] == s.pos[0] && s.status[k] == kHome) n.status[k] = kCarried;
      }
    }
    Outcomes out;
    out.add(n, 1.0, -1.0);
    return out;
  }

  bool is_complete(const WorldState& s) const override {
    return std::all_of(s.status.begin(), s.status.begin() + kBoxes,
                       [](std::int8_t v) { return v == kDelivered; });
  }

  Observation observe(int agent, const WorldState& s) const override {
    Observation obs;
    obs.values = s;
    const int r = config_.visibility_radius;
    const int me = s.pos[agent];
    for (int j = 0; j < 2; ++j)
      if (j == agent || map_.chebyshev(me, s.pos[j]) <= r || map_.is_landmark(s.pos[j]))
        obs.agents_visible |= static_cast<std::uint8_t>(1U << j);
    for (int k = 0; k < kBoxes; ++k) {
      const bool near_site = map_.chebyshev(me, site_[k]) <= r;
      const bool delivered_seen = s.status[k] == kDelivered && map_.chebyshev(me, truck_) <= r;
      if (near_site || s.status[k] == kCarried || delivered_seen)
        obs.objects_visible |= static_cast<std::uint8_t>(1U << k);
    }
    return obs;
  }

  Vector initial_latent_distribution(int) const override {
    Vector p = Vector::Zero(config_.num_latents);
    p.head(kBoxes).setConstant(1.0 / kBoxes);
    return p;
  }

  Vector latent_rule(int agent, int x, std::span<const int> seen, const WorldState& b) const override {
    Vector p = Vector::Zero(config_.num_latents);
    if (carried_box(b) >= 0) {
      p(kTruckLatent) = 1.0;
      return p;
    }
    std::vector<int> remaining;
    for (int k = 0; k < kBoxes; ++k)
      if (b.status[k] == kHome) remaining.push_back(k);
    auto spread = [&](int exclude) {
      std::vector<int> options;
      for (int k : remaining)
        if (k != exclude) options.push_back(k);
      if (options.empty()) {
        p(x) = 1.0;
        return;
      }
      for (int k : options) p(k) += 1.0 / static_cast<double>(options.size());
    };
    if (x == kTruckLatent || b.status[x] != kHome) {
      if (remaining.empty()) p(x) = 1.0;
      else spread(-1);
      return p;
    }
    const int r = config_.visibility_radius;
    const int mate = 1 - agent;
    const bool around = map_.chebyshev(b.pos[agent], site_[x]) <= r;
    const bool mate_there = seen[mate] != kUnobservedAction && map_.chebyshev(b.pos[mate], site_[x]) <= r;
    if (around && !mate_there && remaining.size() > 1) {
      p(x) = 1.0 - kWanderSwitch;
      Vector q = Vector::Zero(config_.num_latents);
      for (int k : remaining)
        if (k != x) q(k) = 1.0 / static_cast<double>(remaining.size() - 1);
      p += kWanderSwitch * q;
      return p;
    }
    p(x) = 1.0;
    return p;
  }

  int num_local_states() const override { return 2 * map_.num_cells(); }
  int local_state(int agent, const WorldState& b) const override {
    return b.pos[agent] + (carried_box(b) >= 0 ? map_.num_cells() : 0);
  }

  TabularMdp local_mdp(int, int x) const override {
    LocalSpec spec;
    spec.with_carry = true;
    spec.blocked_unless_carry = truck_;
    if (x == kTruckLatent) {
      spec.target_cell = truck_;
      spec.required_carry = 1;
    } else {
      spec.target_cell = site_[x];
    }
    return make_local_mdp(spec);
  }

  bool has_compatibility_rule() const override { return true; }
  bool compatible(const WorldState& s, std::span<const int> x) const override {
    if (carried_box(s) >= 0) return x[0] == kTruckLatent && x[1] == kTruckLatent;
    return x[0] == x[1] && x[0] != kTruckLatent && s.status[x[0]] == kHome;
  }

 private:
  static int carried_box(const WorldState& s) {
    for (int k = 0; k < kBoxes; ++k)
      if (s.status[k] == kCarried) return k;
    return -1;
  }

  int truck_ = -1;
  std::array<int, kBoxes> site_{};
};

}  // namespace

std::shared_ptr<const Domain> make_movers() {
  DomainConfig cfg;
  cfg.name = "movers";
  cfg.num_agents = 2;
  cfg.num_objects = kBoxes;
  cfg.num_actions = 6;
  cfg.num_latents = 4;
  cfg.horizon = 200;
  cfg.gamma = 0.99;
  cfg.visibility_radius = 2;
  cfg.agent_names = {"alice", "rob"};
  cfg.action_names = {"north", "south", "west", "east", "stay", "pickup_drop"};
  cfg.latent_names = {"box1", "box2", "box3", "truck"};
  return std::make_shared<Movers>(std::move(cfg), GridMap::parse(map_asset("movers")));
}

}  // namespace coach::domains
