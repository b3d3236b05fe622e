#include "capasim/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "capasim/errors.hpp"

namespace capasim {

void Hyperparameters::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("learning.gamma", "must satisfy 0 <= gamma < 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0))
    throw ConfigError("learning.learning_rate", "must satisfy 0 < learning_rate <= 1");
  if (!(epsilon_floor > 0.0 && epsilon_floor <= epsilon))
    throw ConfigError("learning.epsilon_floor", "must satisfy 0 < epsilon_floor <= epsilon");
  if (!(epsilon <= 1.0)) throw ConfigError("learning.epsilon", "must be <= 1");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
    throw ConfigError("learning.epsilon_decay", "must satisfy 0 < epsilon_decay <= 1");
  if (episodes < 0) throw ConfigError("learning.episodes", "must be non-negative");
  if (max_steps < 1) throw ConfigError("learning.max_steps", "must be positive");
}

std::uint64_t StateKey::packed() const noexcept {
  return static_cast<std::uint64_t>(health & 0xff) | (static_cast<std::uint64_t>(peak_health & 0xff) << 8) |
         (static_cast<std::uint64_t>(registered ? 1 : 0) << 16) |
         (static_cast<std::uint64_t>(engagements & 0xff) << 24) |
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(position)) << 32);
}

StateKey StateKey::unpack(std::uint64_t v) noexcept {
  StateKey k;
  k.health = static_cast<int>(v & 0xff);
  k.peak_health = static_cast<int>((v >> 8) & 0xff);
  k.registered = ((v >> 16) & 1) != 0;
  k.engagements = static_cast<int>((v >> 24) & 0xff);
  k.position = static_cast<int>(v >> 32);
  return k;
}

StateKey make_state_key(const AgentProfile& agent, const WorldModel& world, bool full_coordinates) {
  StateKey k;
  k.health = agent.health;
  k.peak_health = agent.peak_health;
  k.registered = agent.registered;
  k.engagements = agent.engagements;
  if (full_coordinates) {
    k.position = world.cell_index(agent.position);
  } else {
    const auto f = world.facility_at(agent.position);
    k.position = f ? 1 + static_cast<int>(*f) : 0;
  }
  return k;
}

QTable::Row QTable::values(const StateKey& s) const {
  const auto it = rows_.find(s.packed());
  return it == rows_.end() ? Row{} : it->second;
}

void QTable::set(const StateKey& s, ActionId a, double q) { rows_[s.packed()][index_of(a)] = q; }

double QTable::max_value(const StateKey& s) const {
  const auto row = values(s);
  return *std::max_element(row.begin(), row.end());
}

ActionId QTable::greedy(const StateKey& s) const {
  const auto row = values(s);
  // max_element returns the first maximum, i.e. the lowest action index.
  return kAllActions[static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin())];
}

ActionId QTable::greedy(const StateKey& s, const FeasibilityPartition& allowed) const {
  const auto row = values(s);
  std::optional<ActionId> best;
  for (auto a : kAllActions) {
    if (!allowed.is_possible(a)) continue;
    if (!best || row[index_of(a)] > row[index_of(*best)]) best = a;
  }
  return best.value_or(ActionId::SkipPHC);
}

std::map<std::uint64_t, QTable::Row> QTable::sorted() const { return {rows_.begin(), rows_.end()}; }

ActionId select_action(const QTable& q, const StateKey& s, double epsilon, Rng& rng,
                       const FeasibilityPartition* allowed) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (epsilon > 0.0 && coin(rng) < epsilon) {
    if (allowed) {
      const auto options = allowed->possible();
      std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
      return options[pick(rng)];
    }
    std::uniform_int_distribution<std::size_t> pick(0, kNumActions - 1);
    return kAllActions[pick(rng)];
  }
  return allowed ? q.greedy(s, *allowed) : q.greedy(s);
}

void q_update(QTable& q, const StateKey& s, ActionId a, double r, const StateKey& s_next, bool terminal,
              const Hyperparameters& hyper) {
  const double current = q.value(s, a);
  const double bootstrap = terminal ? 0.0 : hyper.gamma * q.max_value(s_next);
  q.set(s, a, current + hyper.learning_rate * (r + bootstrap - current));
}

double epsilon_schedule(int episode, const Hyperparameters& hyper) {
  if (episode < 0) throw ArgumentError("episode must be non-negative");
  return std::max(hyper.epsilon_floor, hyper.epsilon * std::pow(hyper.epsilon_decay, episode));
}

std::vector<const TraceStep*> EpisodeTrace::steps_for(int agent_id) const {
  std::vector<const TraceStep*> out;
  for (const auto& s : steps)
    if (s.agent_id == agent_id) out.push_back(&s);
  return out;
}

namespace {

using Chooser = std::function<ActionId(std::size_t, const StateKey&, const FeasibilityPartition&)>;
using Observer = std::function<void(std::size_t, const TraceStep&)>;

EpisodeTrace drive_episode(const Environment& env, int max_steps, bool full_coordinates, const Chooser& choose,
                           const Observer& observe) {
  EpisodeTrace trace;
  SimState state = make_initial_state(env.initial_agents, env.scale, env.policy);
  const Money billed_before = state.ledger.total_billed();
  for (const auto& a : state.agents) {
    AgentEpisode summary;
    summary.agent_id = a.id;
    trace.agents.push_back(std::move(summary));
  }

  for (int t = 0; t < max_steps; ++t) {
    if (std::all_of(state.agents.begin(), state.agents.end(), [](const auto& a) { return a.done; })) break;
    for (std::size_t i = 0; i < state.agents.size(); ++i) {
      if (state.agents[i].done) continue;
      const int idx = static_cast<int>(i);
      TraceStep step;
      step.timestep = state.timestep;
      step.agent_id = state.agents[i].id;
      step.state = make_state_key(state.agents[i], env.world, full_coordinates);
      step.feasibility = feasible_actions(state, idx, env.world, env.policy);
      step.action = choose(i, step.state, step.feasibility);

      const auto rec = apply_transition(state, idx, step.action, env.world, env.policy);
      step.feasible = rec.feasible;
      step.reward = reward(rec, env.catalog);
      step.next_state = make_state_key(rec.after, env.world, full_coordinates);
      step.terminal = rec.after.terminal;
      step.health_after = env.scale.value(rec.after.health);
      step.registered_after = rec.after.registered;
      step.billed = rec.amount;
      if (observe) observe(i, step);

      auto& summary = trace.agents[i];
      summary.total_return += step.reward;
      summary.steps += 1;
      summary.terminal = step.terminal;
      summary.actions.push_back(step.action);
      trace.steps.push_back(step);
    }
    advance_timestep(state);
    trace.length = t + 1;
  }
  for (std::size_t i = 0; i < state.agents.size(); ++i) trace.agents[i].truncated = !state.agents[i].done;
  trace.ledger_delta = state.ledger.total_billed() - billed_before;
  trace.final_state = std::move(state);
  return trace;
}

}  // namespace

EpisodeTrace run_episode(const Environment& env, std::vector<QTable>& qtables, const Hyperparameters& hyper,
                         std::vector<Rng>& rngs, double epsilon, bool learn) {
  if (qtables.size() != env.initial_agents.size() || rngs.size() != env.initial_agents.size())
    throw ArgumentError("need one Q-table and one RNG per agent");
  auto choose = [&](std::size_t i, const StateKey& s, const FeasibilityPartition& f) {
    const FeasibilityPartition* mask = hyper.mask_infeasible ? &f : nullptr;
    if (!learn) return mask ? qtables[i].greedy(s, f) : qtables[i].greedy(s);
    return select_action(qtables[i], s, epsilon, rngs[i], mask);
  };
  Observer observe;
  if (learn) {
    observe = [&](std::size_t i, const TraceStep& step) {
      q_update(qtables[i], step.state, step.action, step.reward, step.next_state,
               step.terminal != TerminalKind::NotTerminal, hyper);
    };
  }
  return drive_episode(env, hyper.max_steps, hyper.full_coordinate_keys, choose, observe);
}

EpisodeTrace run_policy_episode(const Environment& env, const std::vector<ActionPolicy>& policies, int max_steps,
                                bool full_coordinate_keys) {
  if (policies.size() != env.initial_agents.size()) throw ArgumentError("need one policy per agent");
  auto choose = [&](std::size_t i, const StateKey& s, const FeasibilityPartition& f) { return policies[i](s, f); };
  return drive_episode(env, max_steps, full_coordinate_keys, choose, {});
}

std::vector<Rng> make_agent_rngs(std::uint64_t seed, const std::vector<AgentProfile>& agents) {
  std::vector<Rng> rngs;
  rngs.reserve(agents.size());
  for (const auto& a : agents) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a.id)};
    rngs.emplace_back(seq);
  }
  return rngs;
}

TrainResult train(const Environment& env, const Hyperparameters& hyper) {
  hyper.validate();
  TrainResult result;
  result.qtables.resize(env.initial_agents.size());
  result.returns.resize(env.initial_agents.size());
  auto rngs = make_agent_rngs(hyper.seed, env.initial_agents);
  for (int e = 0; e < hyper.episodes; ++e) {
    const double eps = epsilon_schedule(e, hyper);
    const auto trace = run_episode(env, result.qtables, hyper, rngs, eps, true);
    for (std::size_t i = 0; i < trace.agents.size(); ++i) result.returns[i].push_back(trace.agents[i].total_return);
    result.epsilons.push_back(eps);
  }
  return result;
}

ActionId OracleResult::action(const StateKey& s) const {
  const auto it = policy.find(s.packed());
  if (it == policy.end()) throw ArgumentError("state not covered by the oracle policy");
  return it->second;
}

Environment single_agent(const Environment& env, int agent_index) {
  if (agent_index < 0 || agent_index >= static_cast<int>(env.initial_agents.size()))
    throw ArgumentError("agent index " + std::to_string(agent_index) + " out of range");
  Environment out = env;
  out.initial_agents = {env.initial_agents[static_cast<std::size_t>(agent_index)]};
  return out;
}

OracleResult value_iteration_oracle(const Environment& env, int agent_index, double gamma, double tolerance,
                                    bool mask_infeasible, bool full_coordinate_keys) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ArgumentError("oracle requires 0 <= gamma < 1");
  if (env.policy.budget_gates_phc)
    throw OracleUnavailable("budget-gated PHC makes the agent-local state non-Markov");
  const std::size_t positions =
      full_coordinate_keys ? static_cast<std::size_t>(env.world.width()) * env.world.height() : 4;
  const std::size_t levels = static_cast<std::size_t>(env.scale.levels);
  const std::size_t bound =
      levels * levels * 2 * static_cast<std::size_t>(env.policy.engagement_threshold + 1) * positions;
  if (bound > kOracleStateLimit)
    throw OracleUnavailable("state space bound " + std::to_string(bound) + " exceeds " +
                            std::to_string(kOracleStateLimit));

  const Environment solo = single_agent(env, agent_index);
  struct Edge {
    ActionId action;
    double reward;
    std::uint64_t next;
    bool next_terminal;
  };
  std::map<std::uint64_t, std::vector<Edge>> edges;  // non-terminal states only
  std::map<std::uint64_t, AgentProfile> reps;

  std::queue<AgentProfile> frontier;
  const auto& start = solo.initial_agents.front();
  reps.emplace(make_state_key(start, env.world, full_coordinate_keys).packed(), start);
  frontier.push(start);
  while (!frontier.empty()) {
    const AgentProfile profile = frontier.front();
    frontier.pop();
    const auto key = make_state_key(profile, env.world, full_coordinate_keys).packed();
    if (profile.done) continue;
    SimState base = make_initial_state({profile}, env.scale, env.policy);
    const auto feas = feasible_actions(base, 0, env.world, env.policy);
    auto& out = edges[key];
    for (auto a : kAllActions) {
      if (mask_infeasible && !feas.is_possible(a)) continue;
      SimState s = base;
      const auto rec = apply_transition(s, 0, a, env.world, env.policy);
      const auto next = make_state_key(rec.after, env.world, full_coordinate_keys).packed();
      out.push_back({a, reward(rec, env.catalog), next, rec.after.done});
      if (reps.emplace(next, rec.after).second) {
        if (reps.size() > kOracleStateLimit) throw OracleUnavailable("reachable state count exceeds limit");
        frontier.push(rec.after);
      }
    }
  }

  OracleResult result;
  for (const auto& [k, _] : reps) result.values[k] = 0.0;
  auto q_of = [&](const Edge& e, const std::map<std::uint64_t, double>& v) {
    return e.reward + (e.next_terminal ? 0.0 : gamma * v.at(e.next));
  };
  constexpr int kMaxSweeps = 10'000'000;
  for (result.sweeps = 0; result.sweeps < kMaxSweeps;) {
    auto next = result.values;
    double residual = 0.0;
    for (const auto& [k, out] : edges) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& e : out) best = std::max(best, q_of(e, result.values));
      residual = std::max(residual, std::abs(best - result.values[k]));
      next[k] = best;
    }
    result.values = std::move(next);
    ++result.sweeps;
    result.residual = residual;
    if (residual < tolerance) break;
  }

  constexpr double kTie = 1e-9;
  for (const auto& [k, out] : edges) {
    QTable::Row row;
    row.fill(-std::numeric_limits<double>::infinity());
    for (const auto& e : out) row[index_of(e.action)] = q_of(e, result.values);
    const double best = *std::max_element(row.begin(), row.end());
    for (auto a : kAllActions) {
      if (row[index_of(a)] >= best - kTie) {
        result.policy[k] = a;
        break;
      }
    }
    result.q[k] = row;
  }
  return result;
}

ActionPolicy greedy_policy(const QTable& q, bool mask_infeasible) {
  return [&q, mask_infeasible](const StateKey& s, const FeasibilityPartition& f) {
    return mask_infeasible ? q.greedy(s, f) : q.greedy(s);
  };
}

ActionPolicy oracle_policy(const OracleResult& oracle) {
  return [&oracle](const StateKey& s, const FeasibilityPartition&) { return oracle.action(s); };
}

Rollout greedy_rollout(const ActionPolicy& policy, const Environment& env, int agent_index, int max_steps,
                       bool full_coordinate_keys) {
  const Environment solo = single_agent(env, agent_index);
  Rollout r;
  r.trace = run_policy_episode(solo, {policy}, max_steps, full_coordinate_keys);
  for (const auto& step : r.trace.steps) {
    r.actions.push_back(step.action);
    r.states.push_back(step.state);
  }
  r.steps = static_cast<int>(r.actions.size());
  r.terminal = r.trace.agents.front().terminal;
  r.truncated = r.trace.agents.front().truncated;
  r.cost = r.trace.final_state.ledger.total_billed();
  return r;
}

}  // namespace capasim
