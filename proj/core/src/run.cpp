#include "capasim/run.hpp"

#include <charconv>
#include <fstream>
#include <future>
#include <sstream>

#include "capasim/errors.hpp"

namespace capasim {

using nlohmann::json;

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool matches_oracle(const QTable& q, const OracleResult& oracle, const std::vector<const TraceStep*>& steps,
                    bool mask_infeasible) {
  for (const auto* step : steps) {
    if (!oracle.contains(step->state)) return false;
    const ActionId trained = mask_infeasible ? q.greedy(step->state, step->feasibility) : q.greedy(step->state);
    if (trained != oracle.action(step->state)) return false;
  }
  return true;
}

namespace {

std::vector<double> final_capabilities(const Environment& env, const SimState& final_state, std::size_t agent,
                                       const EvaluationConfig& metrics) {
  const auto feas = evaluate_gates(final_state.agents[agent], final_state, env.world, env.policy);
  std::vector<double> out;
  for (const auto& c : env.catalog.evaluated_capabilities())
    out.push_back(central_capability(feas, env.catalog, c, std::nullopt, metrics.state_dependent_weights));
  return out;
}

json strategy_json(const std::vector<ActionId>& actions) {
  json out = json::array();
  for (auto a : actions) out.push_back(std::string(to_string(a)));
  return out;
}

json key_json(const StateKey& k) {
  return {{"health", k.health},
          {"peak_health", k.peak_health},
          {"registered", k.registered},
          {"engagements", k.engagements},
          {"position", k.position}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& config, const std::string& label) {
  const Environment env = build_environment(config);
  const Hyperparameters& hyper = config.learning;

  RunResult run;
  run.config = config;
  run.label = label;
  run.hash = config_hash(config);
  run.training = train(env, hyper);

  auto tables = run.training.qtables;
  auto rngs = make_agent_rngs(hyper.seed, env.initial_agents);
  run.rollout = run_episode(env, tables, hyper, rngs, 0.0, /*learn=*/false);

  const auto& metrics = config.evaluation.metrics;
  std::vector<CapabilityReport> caps;
  std::vector<FunctioningReport> funcs;
  bool all_match = true;
  for (std::size_t i = 0; i < env.initial_agents.size(); ++i) {
    const int id = env.initial_agents[i].id;
    AgentOutcome out;
    out.agent_id = id;
    out.registered_initially = env.initial_agents[i].registered;
    out.strategy = run.rollout.agents[i];
    out.capabilities = capability_report(run.rollout, id, env.catalog, metrics);
    out.functionings = functioning_report(run.rollout, id);
    for (const auto& e : run.rollout.final_state.ledger.entries())
      if (e.agent_index == static_cast<int>(i)) out.cost += e.amount;
    try {
      const auto oracle = value_iteration_oracle(env, static_cast<int>(i), hyper.gamma, 1e-10, hyper.mask_infeasible,
                                                 hyper.full_coordinate_keys);
      out.oracle_rollout = greedy_rollout(oracle_policy(oracle), env, static_cast<int>(i), hyper.max_steps,
                                          hyper.full_coordinate_keys);
      out.oracle_match =
          matches_oracle(run.training.qtables[i], oracle, run.rollout.steps_for(id), hyper.mask_infeasible);
      all_match = all_match && *out.oracle_match;
    } catch (const OracleUnavailable& e) {
      run.oracle_note = e.what();
    }
    caps.push_back(out.capabilities);
    funcs.push_back(out.functionings);
    run.agents.push_back(std::move(out));
  }
  run.costs = cost_report(run.rollout.final_state.ledger, label);
  run.aggregate = population_aggregate(caps, funcs, metrics);
  const bool terminated =
      std::none_of(run.rollout.agents.begin(), run.rollout.agents.end(), [](const auto& a) { return a.truncated; });
  run.converged = hyper.episodes > 0 && terminated && all_match;
  return run;
}

CompareResult compare_policies(const ScenarioConfig& config) {
  ScenarioConfig on = config;
  on.policy.phc_requires_registration = true;
  ScenarioConfig off = config;
  off.policy.phc_requires_registration = false;

  auto fut_on = std::async(std::launch::async, [&] { return run_scenario(on, "policy_on"); });
  auto fut_off = std::async(std::launch::async, [&] { return run_scenario(off, "policy_off"); });
  CompareResult cmp{fut_on.get(), fut_off.get(), {}, {}};
  cmp.costs = compare_costs(cmp.policy_on.costs, cmp.policy_off.costs);

  for (std::size_t i = 0; i < cmp.policy_on.agents.size(); ++i) {
    const auto& a_on = cmp.policy_on.agents[i];
    const auto& a_off = cmp.policy_off.agents[i];
    AgentDiff d;
    d.agent_id = a_on.agent_id;
    d.strategy_length_on = a_on.strategy.steps;
    d.strategy_length_off = a_off.strategy.steps;
    d.cost_on = a_on.cost;
    d.cost_off = a_off.cost;
    d.capabilities = a_on.capabilities.capabilities;
    for (const auto& c : d.capabilities) {
      d.time_to_max_on.push_back(a_on.capabilities.time_to_max(c));
      d.time_to_max_off.push_back(a_off.capabilities.time_to_max(c));
    }
    cmp.diffs.push_back(std::move(d));
  }
  return cmp;
}

OracleReport oracle_report(const ScenarioConfig& config) {
  const Environment env = build_environment(config);
  const Hyperparameters& hyper = config.learning;
  const auto training = train(env, hyper);

  OracleReport report;
  report.config = config;
  for (std::size_t i = 0; i < env.initial_agents.size(); ++i) {
    const int idx = static_cast<int>(i);
    OracleAgentReport a;
    a.agent_id = env.initial_agents[i].id;
    a.oracle = value_iteration_oracle(env, idx, hyper.gamma, 1e-10, hyper.mask_infeasible, hyper.full_coordinate_keys);
    a.oracle_rollout = greedy_rollout(oracle_policy(a.oracle), env, idx, hyper.max_steps, hyper.full_coordinate_keys);
    a.trained_rollout = greedy_rollout(greedy_policy(training.qtables[i], hyper.mask_infeasible), env, idx,
                                       hyper.max_steps, hyper.full_coordinate_keys);
    a.match = true;
    for (const auto& step : a.trained_rollout.trace.steps) {
      const ActionId optimal = a.oracle.contains(step.state) ? a.oracle.action(step.state) : step.action;
      a.rows.push_back({step.state, step.action, optimal});
      a.match = a.match && a.oracle.contains(step.state) && optimal == step.action;
    }
    report.agents.push_back(std::move(a));
  }
  return report;
}

json summary_json(const RunResult& run) {
  const auto capabilities = run.aggregate.capabilities;
  const Environment env = build_environment(run.config);
  json agents = json::array();
  for (std::size_t i = 0; i < run.agents.size(); ++i) {
    const auto& a = run.agents[i];
    const auto& profile = run.rollout.final_state.agents[i];
    const auto finals = final_capabilities(env, run.rollout.final_state, i, run.config.evaluation.metrics);
    json final_caps = json::object();
    json ttm = json::object();
    for (std::size_t c = 0; c < capabilities.size(); ++c) {
      final_caps[capabilities[c]] = finals[c];
      ttm[capabilities[c]] = a.capabilities.time_to_max(capabilities[c]);
    }
    agents.push_back({
        {"id", a.agent_id},
        {"registered_initially", a.registered_initially},
        {"strategy", strategy_json(a.strategy.actions)},
        {"strategy_length", a.strategy.steps},
        {"terminal", std::string(to_string(a.strategy.terminal))},
        {"truncated", a.strategy.truncated},
        {"return", a.strategy.total_return},
        {"cost_cents", a.cost.cents()},
        {"final_health", run.config.population.scale.value(profile.health)},
        {"final_registered", profile.registered},
        {"final_capabilities", final_caps},
        {"time_to_max", ttm},
        {"oracle_match", a.oracle_match ? json(*a.oracle_match) : json(nullptr)},
        {"oracle_strategy", a.oracle_rollout ? strategy_json(a.oracle_rollout->actions) : json(nullptr)},
    });
  }
  json per_agent = json::object();
  for (const auto& [agent, m] : run.costs.per_agent) per_agent[std::to_string(agent)] = m.cents();
  return {
      {"label", run.label},
      {"seed", run.config.learning.seed},
      {"config_hash", run.hash},
      {"config", to_json(run.config)},
      {"episodes", run.config.learning.episodes},
      {"converged", run.converged},
      {"oracle_note", run.oracle_note ? json(*run.oracle_note) : json(nullptr)},
      {"agents", agents},
      {"costs",
       {{"total_cents", run.costs.total.cents()},
        {"phc_cents", run.costs.per_service.at(Service::PHC).cents()},
        {"icu_cents", run.costs.per_service.at(Service::ICU).cents()},
        {"per_agent_cents", per_agent},
        {"remaining_cents", run.costs.remaining.cents()},
        {"budget_exhausted", run.costs.exhausted}}},
  };
}

json comparison_json(const CompareResult& cmp) {
  json diffs = json::array();
  for (const auto& d : cmp.diffs) {
    json ttm = json::object();
    for (std::size_t c = 0; c < d.capabilities.size(); ++c) {
      ttm[d.capabilities[c]] = {{"policy_on", d.time_to_max_on[c]},
                                {"policy_off", d.time_to_max_off[c]},
                                {"delta", d.time_to_max_on[c] - d.time_to_max_off[c]}};
    }
    diffs.push_back({{"agent_id", d.agent_id},
                     {"strategy_length", {{"policy_on", d.strategy_length_on},
                                          {"policy_off", d.strategy_length_off},
                                          {"delta", d.strategy_length_on - d.strategy_length_off}}},
                     {"cost_cents", {{"policy_on", d.cost_on.cents()},
                                     {"policy_off", d.cost_off.cents()},
                                     {"delta", (d.cost_on - d.cost_off).cents()}}},
                     {"time_to_max", ttm}});
  }
  return {{"seed", cmp.policy_on.config.learning.seed},
          {"total_cost_cents",
           {{"policy_on", cmp.costs.policy_on.total.cents()},
            {"policy_off", cmp.costs.policy_off.total.cents()},
            {"delta", cmp.costs.difference.cents()}}},
          {"agents", diffs},
          {"policy_on", summary_json(cmp.policy_on)},
          {"policy_off", summary_json(cmp.policy_off)}};
}

json oracle_json(const OracleReport& report) {
  json agents = json::array();
  for (const auto& a : report.agents) {
    json policy = json::array();
    for (const auto& [k, action] : a.oracle.policy) {
      policy.push_back({{"state", key_json(StateKey::unpack(k))},
                        {"action", std::string(to_string(action))},
                        {"value", a.oracle.values.at(k)}});
    }
    json rows = json::array();
    for (const auto& r : a.rows) {
      rows.push_back({{"state", key_json(r.state)},
                      {"trained", std::string(to_string(r.trained))},
                      {"optimal", std::string(to_string(r.optimal))},
                      {"match", r.trained == r.optimal}});
    }
    agents.push_back({{"agent_id", a.agent_id},
                      {"match", a.match},
                      {"sweeps", a.oracle.sweeps},
                      {"residual", a.oracle.residual},
                      {"optimal_policy", policy},
                      {"optimal_rollout", strategy_json(a.oracle_rollout.actions)},
                      {"optimal_terminal", std::string(to_string(a.oracle_rollout.terminal))},
                      {"trained_rollout", strategy_json(a.trained_rollout.actions)},
                      {"comparison", rows}});
  }
  return {{"config_hash", config_hash(report.config)}, {"seed", report.config.learning.seed}, {"agents", agents}};
}

std::string learning_curves_csv(const RunResult& run) {
  std::ostringstream out;
  out << "episode,agent_id,return,epsilon\n";
  const auto& t = run.training;
  for (std::size_t e = 0; e < t.epsilons.size(); ++e) {
    for (std::size_t i = 0; i < t.returns.size(); ++i) {
      out << e << ',' << run.agents[i].agent_id << ',' << format_number(t.returns[i][e]) << ','
          << format_number(t.epsilons[e]) << '\n';
    }
  }
  return out.str();
}

std::string rollout_csv(const RunResult& run) {
  std::ostringstream out;
  out << "step,agent_id,action,feasible,reward,health,registered";
  for (const auto& c : run.aggregate.capabilities) out << ',' << c;
  out << '\n';
  std::map<int, std::size_t> cursor;
  std::map<int, const CapabilityReport*> reports;
  for (const auto& a : run.agents) reports[a.agent_id] = &a.capabilities;
  for (const auto& s : run.rollout.steps) {
    const auto& rep = *reports.at(s.agent_id);
    const std::size_t k = cursor[s.agent_id]++;
    out << s.timestep << ',' << s.agent_id << ',' << to_string(s.action) << ',' << (s.feasible ? 1 : 0) << ','
        << format_number(s.reward) << ',' << format_number(s.health_after) << ',' << (s.registered_after ? 1 : 0);
    for (const double v : rep.scores[k]) out << ',' << format_number(v);
    out << '\n';
  }
  return out.str();
}

std::string ledger_csv(const RunResult& run) {
  std::ostringstream out;
  out << "timestep,agent,service,amount_cents,remaining_cents\n";
  const auto& ledger = run.rollout.final_state.ledger;
  Money remaining = ledger.initial();
  for (const auto& e : ledger.entries()) {
    remaining -= e.amount;
    out << e.timestep << ',' << e.agent_index << ',' << to_string(e.service) << ',' << e.amount.cents() << ','
        << remaining.cents() << '\n';
  }
  return out.str();
}

void write_run_outputs(const RunResult& run, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (run.config.output.wants("csv")) {
    write_file(dir / "learning_curves.csv", learning_curves_csv(run));
    write_file(dir / "rollout.csv", rollout_csv(run));
    write_file(dir / "ledger.csv", ledger_csv(run));
  }
  if (run.config.output.wants("json")) write_file(dir / "summary.json", summary_json(run).dump(2) + "\n");
}

void write_compare_outputs(const CompareResult& cmp, const std::filesystem::path& dir) {
  write_run_outputs(cmp.policy_on, dir / "policy_on");
  write_run_outputs(cmp.policy_off, dir / "policy_off");
  if (cmp.policy_on.config.output.wants("json"))
    write_file(dir / "comparison.json", comparison_json(cmp).dump(2) + "\n");
  if (cmp.policy_on.config.output.wants("csv")) {
    std::ostringstream out;
    out << "agent_id,strategy_length_on,strategy_length_off,strategy_length_delta,cost_on_cents,cost_off_cents,"
           "cost_delta_cents";
    const auto caps = cmp.diffs.empty() ? std::vector<CapabilityId>{} : cmp.diffs.front().capabilities;
    for (const auto& c : caps) out << ",ttm_" << c << "_on,ttm_" << c << "_off,ttm_" << c << "_delta";
    out << '\n';
    for (const auto& d : cmp.diffs) {
      out << d.agent_id << ',' << d.strategy_length_on << ',' << d.strategy_length_off << ','
          << d.strategy_length_on - d.strategy_length_off << ',' << d.cost_on.cents() << ',' << d.cost_off.cents()
          << ',' << (d.cost_on - d.cost_off).cents();
      for (std::size_t c = 0; c < caps.size(); ++c) {
        out << ',' << d.time_to_max_on[c] << ',' << d.time_to_max_off[c] << ','
            << d.time_to_max_on[c] - d.time_to_max_off[c];
      }
      out << '\n';
    }
    write_file(dir / "comparison.csv", out.str());
  }
}

void write_oracle_outputs(const OracleReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "oracle.json", oracle_json(report).dump(2) + "\n");
}

}  // namespace capasim
