#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "capasim/agents.hpp"
#include "capasim/evaluation.hpp"
#include "capasim/learning.hpp"
#include "capasim/world.hpp"

namespace capasim {

struct RewardConfig {
  double terminal_penalty = 100.0;
  RestorationCredit restoration_credit = RestorationCredit::OnProgress;

  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

/// capability -> action ("a1".."a4") -> evaluation weight
using WeightTable = std::map<CapabilityId, std::map<std::string, double>>;

struct EvaluationSection {
  WeightTable weights = {{"bodily_health", {{"a1", 1.0}}}, {"affiliation", {{"a3", 0.8}, {"a1", 0.2}}}};
  EvaluationConfig metrics;

  friend bool operator==(const EvaluationSection&, const EvaluationSection&) = default;
};

struct OutputConfig {
  std::string directory;  // empty = CLI default
  std::vector<std::string> formats = {"csv", "json"};

  bool wants(const std::string& format) const;
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

/// Complete scenario. Defaults reproduce the two-agent healthcare scenario.
struct ScenarioConfig {
  WorldConfig world;
  PolicyRules policy;
  PopulationSpec population = PopulationSpec::two_agent_default();
  Hyperparameters learning;
  RewardConfig reward;
  EvaluationSection evaluation;
  OutputConfig output;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Parses and validates. Unknown keys raise ConfigError with the key path;
/// malformed JSON raises ParseError with line and column.
ScenarioConfig parse_config(const std::string& text);

nlohmann::json to_json(const ScenarioConfig& config);
ScenarioConfig from_json(const nlohmann::json& j);

/// Canonical compact JSON (keys sorted).
std::string serialize_config(const ScenarioConfig& config);

/// Hex SHA-256 of serialize_config(config).
std::string config_hash(const ScenarioConfig& config);

CapabilityCatalog build_catalog(const ScenarioConfig& config);
Environment build_environment(const ScenarioConfig& config);

}  // namespace capasim
