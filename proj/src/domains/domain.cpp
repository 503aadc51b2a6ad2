#include "coach/domains/domain.hpp"

#include <sstream>

#include "coach/error.hpp"

namespace coach::domains {

WorldState update_belief(const WorldState& belief, const Observation& obs, int num_agents,
                         int num_objects) {
  WorldState next = belief;
  for (int j = 0; j < num_agents; ++j)
    if (obs.sees_agent(j)) next.pos[j] = obs.values.pos[j];
  for (int k = 0; k < num_objects; ++k)
    if (obs.sees_object(k)) next.status[k] = obs.values.status[k];
  return next;
}

Vector Domain::initial_latent_distribution(int /*agent*/) const {
  return Vector::Constant(config_.num_latents, 1.0 / config_.num_latents);
}

int Domain::num_local_states() const { return map_.num_cells(); }

int Domain::local_state(int agent, const WorldState& belief) const { return belief.pos[agent]; }

bool Domain::compatible(const WorldState&, std::span<const int>) const {
  throw ValidationError("domain " + config_.name + " has no hand-specified compatible set");
}

std::uint64_t Domain::pack(const WorldState& s) const {
  std::uint64_t key = 0;
  for (int j = 0; j < kMaxAgents; ++j) key = (key << 8) | static_cast<std::uint8_t>(s.pos[j]);
  for (int k = 0; k < kMaxObjects; ++k) key = (key << 4) | (static_cast<std::uint8_t>(s.status[k]) & 0xF);
  return key;
}

std::string Domain::render(const WorldState& s) const {
  auto rows = map_.rows();
  for (int j = 0; j < num_agents(); ++j) {
    const int cell = s.pos[j];
    char& ch = rows[map_.row(cell)][map_.col(cell)];
    ch = (ch >= '0' && ch <= '9' && ch != '0' + j) ? '*' : static_cast<char>('0' + j);
  }
  std::ostringstream os;
  for (const auto& r : rows) os << r << '\n';
  os << "status:";
  for (int k = 0; k < num_objects(); ++k) os << ' ' << static_cast<int>(s.status[k]);
  os << '\n';
  return os.str();
}

int Domain::moved(int cell, int action) const {
  if (action < kMoveNorth || action > kMoveEast) return cell;
  const int n = map_.neighbor(cell, static_cast<Direction>(action));
  return n < 0 ? cell : n;
}

TabularMdp Domain::make_local_mdp(const LocalSpec& spec) const {
  const int cells = map_.num_cells();
  const int layers = spec.with_carry ? 2 : 1;
  const int A = config_.num_actions;
  TabularMdp mdp;
  mdp.num_states = cells * layers;
  mdp.num_actions = A;
  std::vector<std::int64_t> offsets{0};
  std::vector<StateId> next;
  std::vector<double> probs;
  mdp.reward.reserve(static_cast<std::size_t>(mdp.num_states) * A);
  for (int layer = 0; layer < layers; ++layer) {
    for (int cell = 0; cell < cells; ++cell) {
      for (int a = 0; a < A; ++a) {
        int to = moved(cell, a);
        if (to == spec.blocked_unless_carry && layer == 0) to = cell;
        const int base = layer * cells;
        if (to != cell && spec.slip > 0.0) {
          next.push_back(base + to);
          probs.push_back(1.0 - spec.slip);
          next.push_back(base + cell);
          probs.push_back(spec.slip);
        } else {
          next.push_back(base + to);
          probs.push_back(1.0);
        }
        offsets.push_back(static_cast<std::int64_t>(next.size()));
        const bool carry_ok = spec.required_carry < 0 || spec.required_carry == layer;
        const bool at_goal = cell == spec.target_cell && a == spec.target_action && carry_ok;
        mdp.reward.push_back(at_goal ? 0.0 : -1.0);
      }
    }
  }
  mdp.transition = TransitionTable(mdp.num_states, A, std::move(offsets), std::move(next), std::move(probs));
  return mdp;
}

StateId StateIndex::id(std::uint64_t key) const {
  const auto it = ids.find(key);
  if (it == ids.end()) throw ValidationError("state is not reachable in this task");
  return it->second;
}

BuiltDomain build_task(std::shared_ptr<const Domain> domain) {
  const auto& cfg = domain->config();
  BuiltDomain built;
  built.domain = domain;
  JointSpace joint(std::vector<int>(cfg.num_agents, cfg.num_actions));
  const auto J = joint.size();

  auto& index = built.index;
  auto intern = [&](const WorldState& s) {
    const auto key = domain->pack(s);
    const auto [it, inserted] = index.ids.try_emplace(key, static_cast<StateId>(index.states.size()));
    if (inserted) index.states.push_back(s);
    return it->second;
  };
  intern(domain->initial_state());

  std::vector<std::int64_t> offsets{0};
  std::vector<StateId> next;
  std::vector<double> probs;
  std::vector<double> reward;
  std::vector<std::uint8_t> terminal;
  std::vector<int> acts(cfg.num_agents);
  bool deterministic = true;
  for (std::size_t s = 0; s < index.states.size(); ++s) {
    const WorldState ws = index.states[s];
    const bool done = domain->is_complete(ws);
    terminal.push_back(done ? 1 : 0);
    for (JointActionId a = 0; a < J; ++a) {
      if (done) {
        next.push_back(static_cast<StateId>(s));
        probs.push_back(1.0);
        reward.push_back(0.0);
      } else {
        joint.decode_into(a, acts);
        const auto outcomes = domain->step(ws, acts);
        double r = 0.0;
        for (const auto& o : outcomes.view()) {
          next.push_back(intern(o.next));
          probs.push_back(o.prob);
          r += o.prob * o.reward;
        }
        if (outcomes.count != 1) deterministic = false;
        reward.push_back(r);
      }
      offsets.push_back(static_cast<std::int64_t>(next.size()));
    }
  }

  auto& task = built.task;
  task.name = cfg.name;
  task.actions = joint;
  task.num_states = index.size();
  task.initial_state = 0;
  if (deterministic) {
    probs.clear();
    probs.shrink_to_fit();
    offsets.clear();
    offsets.shrink_to_fit();
    task.transition = TransitionTable(task.num_states, J, std::move(next));
  } else {
    task.transition = TransitionTable(task.num_states, J, std::move(offsets), std::move(next), std::move(probs));
  }
  task.reward = std::move(reward);
  task.terminal = std::move(terminal);
  task.gamma = cfg.gamma;
  task.horizon = cfg.horizon;
  return built;
}

BuiltDomain build_movers() { return build_task(make_movers()); }
BuiltDomain build_cleanup() { return build_task(make_cleanup()); }
BuiltDomain build_rescue() { return build_task(make_rescue()); }
BuiltDomain build_rescue_two() { return build_task(make_rescue_two()); }
BuiltDomain build_tiny() { return build_task(make_tiny()); }

std::vector<std::string> domain_names() { return {"movers", "cleanup", "rescue", "rescue2", "tiny"}; }

BuiltDomain build_domain(const std::string& name) {
  if (name == "movers") return build_movers();
  if (name == "cleanup") return build_cleanup();
  if (name == "rescue") return build_rescue();
  if (name == "rescue2") return build_rescue_two();
  if (name == "tiny") return build_tiny();
  throw ValidationError("unknown domain '" + name + "' (expected movers|cleanup|rescue|rescue2|tiny)");
}

}  // namespace coach::domains
