#include "capasim/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "capasim/errors.hpp"

namespace capasim {

CapabilityCatalog::CapabilityCatalog(std::vector<Capability> capabilities, std::vector<CapabilityLink> links,
                                     double terminal_penalty, RestorationCredit credit)
    : capabilities_(std::move(capabilities)),
      links_(std::move(links)),
      terminal_penalty_(terminal_penalty),
      credit_(credit) {
  validate();
}

CapabilityCatalog CapabilityCatalog::paper_default() {
  using A = ActionId;
  using P = Polarity;
  // Ranks follow the order of the central-capability list; they are stored
  // but not consulted by any computation.
  std::vector<Capability> caps = {
      {"life", 1}, {"bodily_health", 2}, {"bodily_integrity", 3}, {"practical_reason", 6}, {"affiliation", 7},
  };
  // Each action's total reward sits on one designated link.
  std::vector<CapabilityLink> links = {
      {A::RequestPHC, "bodily_health", 10.0, -5.0, 1.0, P::Restores, false},
      {A::RequestPHC, "affiliation", 0.0, 0.0, 0.2, P::Restores, true},
      {A::RequestPHC, "life", 0.0, 0.0, std::nullopt, P::Restores, false},
      {A::RequestPHC, "bodily_integrity", 0.0, 0.0, std::nullopt, P::Restores, false},
      {A::SkipPHC, "practical_reason", -5.0, -5.0, std::nullopt, P::Deprives, false},
      {A::EngageSocial, "affiliation", 10.0, -5.0, 0.8, P::Restores, true},
      {A::StayDisengaged, "practical_reason", -5.0, -5.0, std::nullopt, P::Deprives, false},
  };
  return CapabilityCatalog(std::move(caps), std::move(links), 100.0);
}

bool CapabilityCatalog::has_capability(const CapabilityId& id) const noexcept {
  return std::any_of(capabilities_.begin(), capabilities_.end(), [&](const Capability& c) { return c.id == id; });
}

std::vector<CapabilityId> CapabilityCatalog::evaluated_capabilities() const {
  std::vector<Capability> sorted = capabilities_;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.rank < b.rank; });
  std::vector<CapabilityId> out;
  for (const auto& c : sorted) {
    if (!evaluation_links(c.id).empty()) out.push_back(c.id);
  }
  return out;
}

std::vector<const CapabilityLink*> CapabilityCatalog::links_for(ActionId a) const {
  std::vector<const CapabilityLink*> out;
  for (const auto& l : links_)
    if (l.action == a) out.push_back(&l);
  return out;
}

std::vector<const CapabilityLink*> CapabilityCatalog::evaluation_links(const CapabilityId& c) const {
  std::vector<const CapabilityLink*> out;
  for (const auto& l : links_)
    if (l.capability == c && l.evaluation_weight) out.push_back(&l);
  return out;
}

void CapabilityCatalog::validate() const {
  std::set<CapabilityId> ids;
  for (const auto& c : capabilities_) {
    if (!ids.insert(c.id).second) throw ConfigError("catalog.capabilities", "duplicate capability '" + c.id + "'");
  }
  std::set<std::pair<ActionId, CapabilityId>> seen;
  double max_reward = 0.0;
  for (const auto& l : links_) {
    const auto where = std::string(to_string(l.action)) + "/" + l.capability;
    if (!ids.count(l.capability)) throw ConfigError("catalog.links", "unknown capability in link " + where);
    if (!seen.insert({l.action, l.capability}).second) throw ConfigError("catalog.links", "duplicate link " + where);
    if (l.evaluation_weight && *l.evaluation_weight == 0.0)
      throw ConfigError("evaluation.weights", "zero evaluation weight on link " + where);
    max_reward = std::max({max_reward, std::abs(l.reward_possible), std::abs(l.reward_impossible)});
  }
  if (!(terminal_penalty_ > max_reward))
    throw ConfigError("reward.terminal_penalty", "terminal penalty must strictly exceed every link reward");
}

SimState make_initial_state(std::vector<AgentProfile> agents, const HealthScale& scale, const PolicyRules& policy) {
  SimState s;
  s.scale = scale;
  s.agents = std::move(agents);
  s.ledger = BudgetLedger(policy.initial_budget);
  return s;
}

void advance_timestep(SimState& state) noexcept {
  ++state.timestep;
  state.phc_served_this_step = 0;
  state.engagements_this_step = 0;
}

std::vector<ActionId> FeasibilityPartition::possible() const {
  std::vector<ActionId> out;
  for (auto a : kAllActions)
    if (is_possible(a)) out.push_back(a);
  return out;
}

std::vector<ActionId> FeasibilityPartition::impossible() const {
  std::vector<ActionId> out;
  for (auto a : kAllActions)
    if (!is_possible(a)) out.push_back(a);
  return out;
}

FeasibilityPartition evaluate_gates(const AgentProfile& agent, const SimState& state, const WorldModel& world,
                                    const PolicyRules& policy) {
  FeasibilityPartition f;
  const bool admitted = !policy.phc_requires_registration || agent.registered;
  const bool phc_slot = !world.phc_capacity() || state.phc_served_this_step < *world.phc_capacity();
  const bool funded = !policy.budget_gates_phc || state.ledger.remaining() >= policy.cost_phc;
  f.set_possible(ActionId::RequestPHC, admitted && phc_slot && funded);
  f.set_possible(ActionId::SkipPHC, true);
  f.set_possible(ActionId::EngageSocial, social_worker_nearby(world, agent.position, state.engagements_this_step));
  f.set_possible(ActionId::StayDisengaged, true);
  return f;
}

namespace {

const AgentProfile& checked_agent(const SimState& state, int agent_index) {
  if (agent_index < 0 || agent_index >= static_cast<int>(state.agents.size()))
    throw ArgumentError("agent index " + std::to_string(agent_index) + " out of range");
  return state.agents[static_cast<std::size_t>(agent_index)];
}

}  // namespace

FeasibilityPartition feasible_actions(const SimState& state, int agent_index, const WorldModel& world,
                                      const PolicyRules& policy) {
  const auto& agent = checked_agent(state, agent_index);
  if (agent.done) throw ContractViolation("feasible_actions called for a done agent");
  return evaluate_gates(agent, state, world, policy);
}

TransitionRecord apply_transition(SimState& state, int agent_index, ActionId action, const WorldModel& world,
                                  const PolicyRules& policy) {
  const auto& checked = checked_agent(state, agent_index);
  if (checked.done) throw ContractViolation("transition called for a done agent");

  TransitionRecord rec;
  rec.agent_index = agent_index;
  rec.action = action;
  rec.feasibility = evaluate_gates(checked, state, world, policy);
  rec.feasible = rec.feasibility.is_possible(action);
  rec.before = checked;

  AgentProfile& agent = state.agents[static_cast<std::size_t>(agent_index)];
  const int max_level = state.scale.max_level();
  auto shift_health = [&](int steps) { agent.health = std::clamp(agent.health + steps, 0, max_level); };
  auto charge = [&](Service service) {
    const Money amount = service == Service::PHC ? policy.cost_phc : policy.cost_icu;
    state.ledger.append(state.timestep, agent_index, service, amount);
    rec.billed = service;
    rec.amount += amount;
  };

  if (!rec.feasible) {
    // Infeasible attempts only cost health.
    shift_health(-1);
  } else {
    switch (action) {
      case ActionId::RequestPHC:
        shift_health(+1);
        agent.position = world.facility(Facility::PHC);
        ++state.phc_served_this_step;
        charge(Service::PHC);
        break;
      case ActionId::EngageSocial: {
        ++state.engagements_this_step;
        const bool pending = policy.phc_requires_registration && !agent.registered;
        if (pending) {
          agent.engagements = std::min(agent.engagements + 1, policy.engagement_threshold);
          shift_health(-state.scale.steps_of(policy.engagement_health_cost));
          if (agent.engagements == policy.engagement_threshold) {
            agent.registered = true;
            agent.position = world.facility(Facility::SocialServices);
          }
        }
        break;
      }
      case ActionId::SkipPHC:
      case ActionId::StayDisengaged:
        shift_health(-1);
        break;
    }
  }
  agent.peak_health = std::max(agent.peak_health, agent.health);

  agent.terminal = is_terminal(agent, state.scale);
  if (agent.terminal == TerminalKind::Deprived) {
    agent.position = world.facility(Facility::ICU);
    charge(Service::ICU);
  }
  agent.done = agent.terminal != TerminalKind::NotTerminal;
  rec.after = agent;
  rec.budget_exhausted = state.ledger.exhausted();
  return rec;
}

std::pair<SimState, TransitionRecord> transition(SimState state, int agent_index, ActionId action,
                                                 const WorldModel& world, const PolicyRules& policy) {
  auto rec = apply_transition(state, agent_index, action, world, policy);
  return {std::move(state), std::move(rec)};
}

TerminalKind is_terminal(const AgentProfile& agent, const HealthScale& scale) noexcept {
  if (agent.health <= 0) return TerminalKind::Deprived;
  if (agent.health >= scale.max_level()) return TerminalKind::Healthy;
  return TerminalKind::NotTerminal;
}

TerminalKind is_terminal(const SimState& state, int agent_index) {
  return is_terminal(checked_agent(state, agent_index), state.scale);
}

double reward(const AgentProfile& before, ActionId action, const AgentProfile& after,
              const FeasibilityPartition& feasibility, const CapabilityCatalog& catalog) {
  if (after.terminal == TerminalKind::Deprived || after.health <= 0) return -catalog.terminal_penalty();

  const bool possible = feasibility.is_possible(action);
  const bool progressed = after.peak_health > before.peak_health || after.engagements > before.engagements;
  double total = 0.0;
  for (const auto* link : catalog.links_for(action)) {
    if (!possible) {
      total += link->reward_impossible;
    } else if (link->polarity == Polarity::Restores && catalog.credit() == RestorationCredit::OnProgress &&
               !progressed) {
      // restoration without progress earns nothing
    } else {
      total += link->reward_possible;
    }
  }
  return total;
}

double reward(const SimState& state, int agent_index, ActionId action, const SimState& next_state,
              const FeasibilityPartition& feasibility, const CapabilityCatalog& catalog) {
  return reward(checked_agent(state, agent_index), action, checked_agent(next_state, agent_index), feasibility,
                catalog);
}

}  // namespace capasim
