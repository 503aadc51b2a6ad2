#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "coach/domains/grid_map.hpp"
#include "coach/mdp.hpp"
#include "coach/task_model.hpp"
#include "coach/types.hpp"

namespace coach::domains {

inline constexpr int kMaxAgents = 3;
inline constexpr int kMaxObjects = 4;
/// Teammate action symbol meaning "not observed this step".
inline constexpr int kUnobservedAction = -1;

/// Shared per-agent action ids. `kInteract` is pickup/drop or rescue.
enum Action : int { kMoveNorth = 0, kMoveSouth = 1, kMoveWest = 2, kMoveEast = 3, kStay = 4, kInteract = 5 };

/// Factored task state: agent cells and per-object status codes.
struct WorldState {
  std::array<std::int16_t, kMaxAgents> pos{};
  std::array<std::int8_t, kMaxObjects> status{};
  bool operator==(const WorldState&) const = default;
};

/// One agent's view of the world: values of hidden components are unspecified.
struct Observation {
  WorldState values;
  std::uint8_t agents_visible = 0;
  std::uint8_t objects_visible = 0;

  [[nodiscard]] bool sees_agent(int j) const noexcept { return (agents_visible >> j) & 1U; }
  [[nodiscard]] bool sees_object(int k) const noexcept { return (objects_visible >> k) & 1U; }
};

/// Last-seen memory: visible components overwrite the belief.
WorldState update_belief(const WorldState& belief, const Observation& obs, int num_agents,
                         int num_objects);

struct Outcome {
  WorldState next;
  double prob = 1.0;
  double reward = 0.0;
};

/// Up to four stochastic outcomes of one joint action.
struct Outcomes {
  std::array<Outcome, 4> items{};
  int count = 0;
  void add(const WorldState& next, double prob, double reward) { items[count++] = {next, prob, reward}; }
  [[nodiscard]] std::span<const Outcome> view() const { return {items.data(), static_cast<std::size_t>(count)}; }
};

struct DomainConfig {
  std::string name;
  int num_agents = 0;
  int num_objects = 0;
  int num_actions = 0;
  int num_latents = 0;
  int horizon = 1;
  double gamma = 0.95;
  int visibility_radius = 0;
  std::vector<std::string> agent_names;
  std::vector<std::string> action_names;
  /// Mental state k means "currently heading for latent_targets[k]".
  std::vector<std::string> latent_names;
  std::vector<int> latent_cells;
  /// Reward bookkeeping for rescue-style tasks (0 when unused).
  double max_total_reward = 0.0;
};

/// Rules of one teaming domain: deterministic or lightly stochastic grid
/// dynamics, partial observability, and the hand-written mental-state rules
/// used by the ground-truth agents.
class Domain {
 public:
  virtual ~Domain() = default;

  [[nodiscard]] const DomainConfig& config() const noexcept { return config_; }
  [[nodiscard]] const GridMap& map() const noexcept { return map_; }
  [[nodiscard]] int num_agents() const noexcept { return config_.num_agents; }
  [[nodiscard]] int num_objects() const noexcept { return config_.num_objects; }

  [[nodiscard]] virtual WorldState initial_state() const = 0;
  [[nodiscard]] virtual Outcomes step(const WorldState& s, std::span<const int> actions) const = 0;
  [[nodiscard]] virtual bool is_complete(const WorldState& s) const = 0;
  [[nodiscard]] virtual Observation observe(int agent, const WorldState& s) const = 0;

  /// Distribution of the mental state at task start.
  [[nodiscard]] virtual Vector initial_latent_distribution(int agent) const;
  /// Hand-crafted T_x(x' | x, observed actions, belief after the step).
  /// `observed_actions[j]` is kUnobservedAction for teammates out of view.
  [[nodiscard]] virtual Vector latent_rule(int agent, int latent,
                                           std::span<const int> observed_actions,
                                           const WorldState& belief) const = 0;

  /// Agent-centric projection used to derive ground-truth policies.
  [[nodiscard]] virtual int num_local_states() const;
  [[nodiscard]] virtual int local_state(int agent, const WorldState& belief) const;
  /// Single-agent MDP whose reward marks the target of `latent`.
  [[nodiscard]] virtual TabularMdp local_mdp(int agent, int latent) const = 0;

  /// Hand-specified compatible profiles C_s; throws when the domain has none.
  [[nodiscard]] virtual bool has_compatibility_rule() const { return false; }
  [[nodiscard]] virtual bool compatible(const WorldState& s, std::span<const int> profile) const;

  [[nodiscard]] std::uint64_t pack(const WorldState& s) const;
  [[nodiscard]] std::string render(const WorldState& s) const;

 protected:
  Domain(DomainConfig config, GridMap map) : config_(std::move(config)), map_(std::move(map)) {}

  /// Cell after a move (or the same cell when blocked).
  [[nodiscard]] int moved(int cell, int action) const;
  /// Position-only local MDP over cells with an optional "carrying" bit.
  struct LocalSpec {
    bool with_carry = false;
    int target_cell = -1;
    int target_action = kInteract;
    int required_carry = -1;       // -1 any, 0 not carrying, 1 carrying
    int blocked_unless_carry = -1;  // cell enterable only while carrying
    double slip = 0.0;
  };
  [[nodiscard]] TabularMdp make_local_mdp(const LocalSpec& spec) const;

  DomainConfig config_;
  GridMap map_;
};

/// Dense enumeration of every state reachable from the initial state.
struct StateIndex {
  std::vector<WorldState> states;
  std::unordered_map<std::uint64_t, StateId> ids;

  [[nodiscard]] StateId id(std::uint64_t key) const;
  [[nodiscard]] std::int32_t size() const noexcept { return static_cast<std::int32_t>(states.size()); }
};

/// A domain together with its materialized TaskModel.
struct BuiltDomain {
  std::shared_ptr<const Domain> domain;
  TaskModel task;
  StateIndex index;

  [[nodiscard]] const DomainConfig& config() const { return domain->config(); }
  [[nodiscard]] const WorldState& state(StateId s) const { return index.states.at(s); }
  [[nodiscard]] StateId id_of(const WorldState& s) const { return index.id(domain->pack(s)); }
};

/// BFS from the initial state over all joint actions. Completed states are
/// absorbing with zero reward.
BuiltDomain build_task(std::shared_ptr<const Domain> domain);

BuiltDomain build_movers();
BuiltDomain build_cleanup();
BuiltDomain build_rescue();
BuiltDomain build_rescue_two();
BuiltDomain build_tiny();
/// movers | cleanup | rescue | rescue2 | tiny
BuiltDomain build_domain(const std::string& name);
std::vector<std::string> domain_names();

std::shared_ptr<const Domain> make_movers();
std::shared_ptr<const Domain> make_cleanup();
std::shared_ptr<const Domain> make_rescue();
std::shared_ptr<const Domain> make_rescue_two();
std::shared_ptr<const Domain> make_tiny();

/// Raw text of the bundled map asset for a domain.
std::string_view map_asset(const std::string& name);

}  // namespace coach::domains
