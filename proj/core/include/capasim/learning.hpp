#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <unordered_map>
#include <vector>

#include "capasim/agents.hpp"
#include "capasim/mdp.hpp"
#include "capasim/world.hpp"

namespace capasim {

using Rng = std::mt19937_64;

/// Everything the dynamics need, fixed for a scenario.
struct Environment {
  WorldModel world;
  PolicyRules policy;
  HealthScale scale;
  CapabilityCatalog catalog;
  std::vector<AgentProfile> initial_agents;
};

struct Hyperparameters {
  double gamma = 0.99;
  double learning_rate = 0.2;
  double epsilon = 0.1;
  double epsilon_decay = 0.995;
  double epsilon_floor = 0.01;
  int episodes = 300;
  int max_steps = 50;
  std::uint64_t seed = 0;
  bool mask_infeasible = false;
  bool full_coordinate_keys = false;

  /// Throws ConfigError (path under "learning.") on out-of-range values.
  void validate() const;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

/// Agent-local state: no information about other agents.
struct StateKey {
  int health = 0;
  int peak_health = 0;
  bool registered = false;
  int engagements = 0;
  int position = 0;  // position class (0 street, 1 PHC, 2 social services, 3 ICU) or cell index

  std::uint64_t packed() const noexcept;
  static StateKey unpack(std::uint64_t v) noexcept;

  friend auto operator<=>(const StateKey&, const StateKey&) = default;
};

StateKey make_state_key(const AgentProfile& agent, const WorldModel& world, bool full_coordinates);

class QTable {
 public:
  using Row = std::array<double, kNumActions>;

  /// Missing entries read as zero.
  Row values(const StateKey& s) const;
  double value(const StateKey& s, ActionId a) const { return values(s)[index_of(a)]; }
  void set(const StateKey& s, ActionId a, double q);
  double max_value(const StateKey& s) const;
  /// argmax with ties broken by action order a1 < a2 < a3 < a4.
  ActionId greedy(const StateKey& s) const;
  ActionId greedy(const StateKey& s, const FeasibilityPartition& allowed) const;

  std::size_t size() const noexcept { return rows_.size(); }
  /// Entries ordered by packed key.
  std::map<std::uint64_t, Row> sorted() const;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::unordered_map<std::uint64_t, Row> rows_;
};

/// epsilon-greedy over the full action set, or over `allowed` when given.
ActionId select_action(const QTable& q, const StateKey& s, double epsilon, Rng& rng,
                       const FeasibilityPartition* allowed = nullptr);

/// Watkins backup on Q(s, a) only.
void q_update(QTable& q, const StateKey& s, ActionId a, double r, const StateKey& s_next, bool terminal,
              const Hyperparameters& hyper);

/// max(floor, epsilon * decay^episode)
double epsilon_schedule(int episode, const Hyperparameters& hyper);

struct TraceStep {
  int timestep = 0;
  int agent_id = 0;
  StateKey state;
  FeasibilityPartition feasibility;
  ActionId action = ActionId::RequestPHC;
  bool feasible = false;
  double reward = 0.0;
  StateKey next_state;
  TerminalKind terminal = TerminalKind::NotTerminal;
  double health_after = 0.0;
  bool registered_after = false;
  Money billed;
};

struct AgentEpisode {
  int agent_id = 0;
  double total_return = 0.0;
  int steps = 0;
  TerminalKind terminal = TerminalKind::NotTerminal;
  bool truncated = false;
  std::vector<ActionId> actions;
};

struct EpisodeTrace {
  std::vector<TraceStep> steps;
  std::vector<AgentEpisode> agents;
  int length = 0;  // environment timesteps executed
  Money ledger_delta;
  SimState final_state;

  std::vector<const TraceStep*> steps_for(int agent_id) const;
};

/// Chooses an action from the agent-local key and the current feasibility.
using ActionPolicy = std::function<ActionId(const StateKey&, const FeasibilityPartition&)>;

/// One episode over the whole population. With `learn` set, each agent picks
/// epsilon-greedy from its own table and updates it online; otherwise agents
/// act greedily and tables are left untouched.
EpisodeTrace run_episode(const Environment& env, std::vector<QTable>& qtables, const Hyperparameters& hyper,
                         std::vector<Rng>& rngs, double epsilon, bool learn = true);

/// Episode driven by arbitrary per-agent policies (no learning).
EpisodeTrace run_policy_episode(const Environment& env, const std::vector<ActionPolicy>& policies, int max_steps,
                                bool full_coordinate_keys);

/// Per-agent RNG streams derived from (seed, agent id).
std::vector<Rng> make_agent_rngs(std::uint64_t seed, const std::vector<AgentProfile>& agents);

struct TrainResult {
  std::vector<QTable> qtables;
  std::vector<std::vector<double>> returns;  // [agent][episode]
  std::vector<double> epsilons;              // [episode]
};

TrainResult train(const Environment& env, const Hyperparameters& hyper);

struct OracleResult {
  std::map<std::uint64_t, double> values;
  std::map<std::uint64_t, ActionId> policy;
  std::map<std::uint64_t, QTable::Row> q;
  int sweeps = 0;
  double residual = 0.0;

  ActionId action(const StateKey& s) const;
  bool contains(const StateKey& s) const { return policy.count(s.packed()) > 0; }
};

inline constexpr std::size_t kOracleStateLimit = 100000;

/// Exact value iteration over the single-agent MDP reachable from
/// env.initial_agents[agent_index]. Throws OracleUnavailable when the state
/// space is too large or the local key is not Markov (budget-gated PHC).
OracleResult value_iteration_oracle(const Environment& env, int agent_index, double gamma, double tolerance = 1e-10,
                                    bool mask_infeasible = false, bool full_coordinate_keys = false);

struct Rollout {
  std::vector<ActionId> actions;
  std::vector<StateKey> states;
  int steps = 0;
  TerminalKind terminal = TerminalKind::NotTerminal;
  bool truncated = false;
  Money cost;
  EpisodeTrace trace;
};

/// epsilon = 0 rollout of a single agent alone in the environment.
Rollout greedy_rollout(const ActionPolicy& policy, const Environment& env, int agent_index, int max_steps,
                       bool full_coordinate_keys = false);

/// The returned policies hold a reference; `q` / `oracle` must outlive them.
ActionPolicy greedy_policy(const QTable& q, bool mask_infeasible = false);
ActionPolicy oracle_policy(const OracleResult& oracle);

/// Environment restricted to one agent (index kept as the only entry).
Environment single_agent(const Environment& env, int agent_index);

}  // namespace capasim
