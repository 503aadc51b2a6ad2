#include "coach/domains/domain.hpp"

namespace coach::domains {
namespace {

// Two agents in a three-cell corridor who score once they meet at either end.
// Moves slip (no movement) with a small probability.
constexpr double kSlip = 0.1;
constexpr double kGiveUp = 0.2;
enum TinyAction : int { kLeft = 0, kHold = 1, kRight = 2 };

class Tiny final : public Domain {
 public:
  Tiny(DomainConfig cfg, GridMap map) : Domain(std::move(cfg), std::move(map)) {
    ends_ = {map_.landmark("left"), map_.landmark("right")};
    config_.latent_cells = {ends_[0], ends_[1]};
  }

  WorldState initial_state() const override {
    WorldState s;
    s.pos[0] = s.pos[1] = static_cast<std::int16_t>(map_.landmark("start0"));
    return s;
  }

  Outcomes step(const WorldState& s, std::span<const int> a) const override {
    Outcomes out;
    if (met(s)) {
      WorldState done;
      done.status[0] = 1;
      out.add(done, 1.0, 1.0);
      return out;
    }
    std::array<std::array<int, 2>, 2> to{};
    std::array<std::array<double, 2>, 2> pr{};
    std::array<int, 2> n{};
    for (int j = 0; j < 2; ++j) {
      const int target = shift(s.pos[j], a[j]);
      if (target == s.pos[j]) {
        to[j] = {target, target};
        pr[j] = {1.0, 0.0};
        n[j] = 1;
      } else {
        to[j] = {target, s.pos[j]};
        pr[j] = {1.0 - kSlip, kSlip};
        n[j] = 2;
      }
    }
    for (int u = 0; u < n[0]; ++u) {
      for (int v = 0; v < n[1]; ++v) {
        WorldState next = s;
        next.pos[0] = static_cast<std::int16_t>(to[0][u]);
        next.pos[1] = static_cast<std::int16_t>(to[1][v]);
        out.add(next, pr[0][u] * pr[1][v], 0.0);
      }
    }
    return out;
  }

  bool is_complete(const WorldState& s) const override { return s.status[0] == 1; }

  Observation observe(int, const WorldState& s) const override {
    Observation obs;
    obs.values = s;
    obs.agents_visible = 0x3;
    obs.objects_visible = 0x1;
    return obs;
  }

  Vector latent_rule(int agent, int x, std::span<const int>, const WorldState& b) const override {
    Vector p = Vector::Zero(2);
    const bool waiting = b.pos[agent] == ends_[x] && b.pos[1 - agent] != ends_[x];
    if (waiting) {
      p(x) = 1.0 - kGiveUp;
      p(1 - x) = kGiveUp;
    } else {
      p(x) = 1.0;
    }
    return p;
  }

  TabularMdp local_mdp(int, int x) const override {
    const int cells = map_.num_cells();
    const int A = config_.num_actions;
    TabularMdp mdp;
    mdp.num_states = cells;
    mdp.num_actions = A;
    std::vector<std::int64_t> offsets{0};
    std::vector<StateId> next;
    std::vector<double> probs;
    for (int c = 0; c < cells; ++c) {
      for (int a = 0; a < A; ++a) {
        const int t = shift(c, a);
        next.push_back(t);
        probs.push_back(t == c ? 1.0 : 1.0 - kSlip);
        if (t != c) {
          next.push_back(c);
          probs.push_back(kSlip);
        }
        offsets.push_back(static_cast<std::int64_t>(next.size()));
        mdp.reward.push_back(c == ends_[x] && a == kHold ? 0.0 : -1.0);
      }
    }
    mdp.transition = TransitionTable(cells, A, std::move(offsets), std::move(next), std::move(probs));
    return mdp;
  }

 private:
  bool met(const WorldState& s) const { return s.pos[0] == s.pos[1] && (s.pos[0] == ends_[0] || s.pos[0] == ends_[1]); }

  int shift(int cell, int action) const {
    if (action == kLeft) return moved(cell, kMoveWest);
    if (action == kRight) return moved(cell, kMoveEast);
    return cell;
  }

  std::array<int, 2> ends_{};
};

}  // namespace

std::shared_ptr<const Domain> make_tiny() {
  DomainConfig cfg;
  cfg.name = "tiny";
  cfg.num_agents = 2;
  cfg.num_objects = 1;
  cfg.num_actions = 3;
  cfg.num_latents = 2;
  cfg.horizon = 6;
  cfg.gamma = 0.95;
  cfg.visibility_radius = 2;
  cfg.agent_names = {"left_agent", "right_agent"};
  cfg.action_names = {"left", "stay", "right"};
  cfg.latent_names = {"left_end", "right_end"};
  cfg.max_total_reward = 1.0;
  return std::make_shared<Tiny>(std::move(cfg), GridMap::parse(map_asset("tiny")));
}

}  // namespace coach::domains
