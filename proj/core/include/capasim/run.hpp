#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "capasim/evaluation.hpp"
#include "capasim/learning.hpp"
#include "capasim/scenario.hpp"

namespace capasim {

/// Greedy Q action equals the oracle action on every step of `steps`.
bool matches_oracle(const QTable& q, const OracleResult& oracle, const std::vector<const TraceStep*>& steps,
                    bool mask_infeasible);

struct AgentOutcome {
  int agent_id = 0;
  bool registered_initially = false;
  AgentEpisode strategy;  // from the joint greedy rollout
  CapabilityReport capabilities;
  FunctioningReport functionings;
  Money cost;
  std::optional<Rollout> oracle_rollout;
  std::optional<bool> oracle_match;
};

struct RunResult {
  ScenarioConfig config;
  std::string label;
  std::string hash;
  TrainResult training;
  EpisodeTrace rollout;  // joint greedy rollout
  std::vector<AgentOutcome> agents;
  CostReport costs;
  PopulationAggregate aggregate;
  bool converged = false;
  std::optional<std::string> oracle_note;  // why the oracle was skipped
};

/// Train, roll out greedily, evaluate.
RunResult run_scenario(const ScenarioConfig& config, const std::string& label = "scenario");

struct AgentDiff {
  int agent_id = 0;
  int strategy_length_on = 0;
  int strategy_length_off = 0;
  Money cost_on;
  Money cost_off;
  std::vector<CapabilityId> capabilities;
  std::vector<int> time_to_max_on;
  std::vector<int> time_to_max_off;
};

struct CompareResult {
  RunResult policy_on;
  RunResult policy_off;
  CostComparison costs;
  std::vector<AgentDiff> diffs;
};

/// Same scenario and seed with the registration gate on and off; the two arms
/// run concurrently.
CompareResult compare_policies(const ScenarioConfig& config);

struct OracleAgentReport {
  int agent_id = 0;
  OracleResult oracle;
  Rollout oracle_rollout;
  Rollout trained_rollout;
  struct Row {
    StateKey state;
    ActionId trained;
    ActionId optimal;
  };
  std::vector<Row> rows;  // states visited by the trained greedy rollout
  bool match = false;
};

struct OracleReport {
  ScenarioConfig config;
  std::vector<OracleAgentReport> agents;
};

/// Throws OracleUnavailable when any agent's MDP cannot be enumerated.
OracleReport oracle_report(const ScenarioConfig& config);

nlohmann::json summary_json(const RunResult& run);
nlohmann::json comparison_json(const CompareResult& cmp);
nlohmann::json oracle_json(const OracleReport& report);

/// learning_curves.csv, rollout.csv, ledger.csv, summary.json
void write_run_outputs(const RunResult& run, const std::filesystem::path& dir);
/// policy_on/, policy_off/, comparison.json, comparison.csv
void write_compare_outputs(const CompareResult& cmp, const std::filesystem::path& dir);
void write_oracle_outputs(const OracleReport& report, const std::filesystem::path& dir);

std::string learning_curves_csv(const RunResult& run);
std::string rollout_csv(const RunResult& run);
std::string ledger_csv(const RunResult& run);

/// Shortest round-trip decimal, independent of the C locale.
std::string format_number(double v);

}  // namespace capasim
