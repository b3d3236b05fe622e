#pragma once

#include <bitset>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "capasim/agents.hpp"
#include "capasim/types.hpp"
#include "capasim/world.hpp"

namespace capasim {

// ---------------------------------------------------------------------------
// Capability catalog
// ---------------------------------------------------------------------------

using CapabilityId = std::string;

enum class Polarity : std::uint8_t { Restores, Deprives };

/// How the possible-reward of a restoring link is credited.
///  - OnProgress: paid only if the transition advanced the agent (new health
///    peak this episode, or an engagement step). Repeating a restoration
///    after a relapse earns nothing, so no reward cycle is profitable.
///  - Always: paid on every feasible execution.
enum class RestorationCredit : std::uint8_t { OnProgress, Always };

struct Capability {
  CapabilityId id;
  int rank = 0;  // 1 = most important

  friend bool operator==(const Capability&, const Capability&) = default;
};

/// One element of the action-capability relation.
struct CapabilityLink {
  ActionId action = ActionId::RequestPHC;
  CapabilityId capability;
  double reward_possible = 0.0;
  double reward_impossible = 0.0;
  std::optional<double> evaluation_weight;  // set => used by the capability metric
  Polarity polarity = Polarity::Restores;
  bool weight_if_restored = false;

  friend bool operator==(const CapabilityLink&, const CapabilityLink&) = default;
};

class CapabilityCatalog {
 public:
  CapabilityCatalog() = default;
  CapabilityCatalog(std::vector<Capability> capabilities, std::vector<CapabilityLink> links,
                    double terminal_penalty, RestorationCredit credit = RestorationCredit::OnProgress);

  /// Bodily Health, Affiliation, Life, Bodily Integrity, Practical Reason with
  /// the default action links, rewards (+10 / -5) and weights.
  static CapabilityCatalog paper_default();

  const std::vector<Capability>& capabilities() const noexcept { return capabilities_; }
  const std::vector<CapabilityLink>& links() const noexcept { return links_; }
  double terminal_penalty() const noexcept { return terminal_penalty_; }
  RestorationCredit credit() const noexcept { return credit_; }

  bool has_capability(const CapabilityId& id) const noexcept;
  /// Capabilities with at least one weighted link, by rank.
  std::vector<CapabilityId> evaluated_capabilities() const;
  std::vector<const CapabilityLink*> links_for(ActionId a) const;
  std::vector<const CapabilityLink*> evaluation_links(const CapabilityId& c) const;

  /// Throws ConfigError on duplicate links, dangling capabilities, zero weights
  /// or a terminal penalty that does not strictly dominate every link reward.
  void validate() const;

  friend bool operator==(const CapabilityCatalog&, const CapabilityCatalog&) = default;

 private:
  std::vector<Capability> capabilities_;
  std::vector<CapabilityLink> links_;
  double terminal_penalty_ = 100.0;
  RestorationCredit credit_ = RestorationCredit::OnProgress;
};

// ---------------------------------------------------------------------------
// State, feasibility, transition
// ---------------------------------------------------------------------------

struct SimState {
  int timestep = 0;
  HealthScale scale;
  std::vector<AgentProfile> agents;
  BudgetLedger ledger;
  int phc_served_this_step = 0;
  int engagements_this_step = 0;

  friend bool operator==(const SimState&, const SimState&) = default;
};

SimState make_initial_state(std::vector<AgentProfile> agents, const HealthScale& scale, const PolicyRules& policy);

/// Moves to the next timestep and frees per-timestep capacity.
void advance_timestep(SimState& state) noexcept;

class FeasibilityPartition {
 public:
  FeasibilityPartition() = default;

  bool is_possible(ActionId a) const noexcept { return possible_.test(index_of(a)); }
  void set_possible(ActionId a, bool value) noexcept { possible_.set(index_of(a), value); }
  std::vector<ActionId> possible() const;
  std::vector<ActionId> impossible() const;
  unsigned long bits() const noexcept { return possible_.to_ulong(); }

  friend bool operator==(const FeasibilityPartition&, const FeasibilityPartition&) = default;

 private:
  std::bitset<kNumActions> possible_;
};

/// Gate evaluation for a single profile without the done/index checks. Used
/// for evaluating terminal states as well.
FeasibilityPartition evaluate_gates(const AgentProfile& agent, const SimState& state, const WorldModel& world,
                                    const PolicyRules& policy);

/// Throws ArgumentError for a bad index and ContractViolation for a done agent.
FeasibilityPartition feasible_actions(const SimState& state, int agent_index, const WorldModel& world,
                                      const PolicyRules& policy);

struct TransitionRecord {
  int agent_index = 0;
  ActionId action = ActionId::RequestPHC;
  FeasibilityPartition feasibility;
  bool feasible = false;
  AgentProfile before;
  AgentProfile after;
  std::optional<Service> billed;
  Money amount;
  bool budget_exhausted = false;
};

/// In-place deterministic transition for one agent.
TransitionRecord apply_transition(SimState& state, int agent_index, ActionId action, const WorldModel& world,
                                  const PolicyRules& policy);

std::pair<SimState, TransitionRecord> transition(SimState state, int agent_index, ActionId action,
                                                 const WorldModel& world, const PolicyRules& policy);

TerminalKind is_terminal(const AgentProfile& agent, const HealthScale& scale) noexcept;
TerminalKind is_terminal(const SimState& state, int agent_index);

/// Capability-sum reward, or -rho when `after` is in the deprived terminal state.
double reward(const AgentProfile& before, ActionId action, const AgentProfile& after,
              const FeasibilityPartition& feasibility, const CapabilityCatalog& catalog);

double reward(const SimState& state, int agent_index, ActionId action, const SimState& next_state,
              const FeasibilityPartition& feasibility, const CapabilityCatalog& catalog);

inline double reward(const TransitionRecord& rec, const CapabilityCatalog& catalog) {
  return reward(rec.before, rec.action, rec.after, rec.feasibility, catalog);
}

}  // namespace capasim
