#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capasim/learning.hpp"
#include "capasim/mdp.hpp"

namespace capasim {

struct EvaluationConfig {
  /// Off: a link's indicator is action feasibility. On: links flagged
  /// `weight_if_restored` also require the action to be executed that step.
  bool state_dependent_weights = false;
  double capability_threshold = 0.5;  // scores strictly below are "low"
  double health_threshold = 1.0;      // health strictly below is "low"
  int histogram_bins = 4;

  friend bool operator==(const EvaluationConfig&, const EvaluationConfig&) = default;
};

/// Weighted share of evaluation-linked actions that are feasible:
///   sum(alpha_k * a_k) / sum(|alpha_k|), a_k = 1 iff a_k is possible.
/// Throws UndefinedMetric when `capability` has no weighted link.
double central_capability(const FeasibilityPartition& feasibility, const CapabilityCatalog& catalog,
                          const CapabilityId& capability, std::optional<ActionId> realized = std::nullopt,
                          bool state_dependent_weights = false);

struct CapabilityReport {
  int agent_id = 0;
  std::vector<CapabilityId> capabilities;
  std::vector<int> timesteps;
  std::vector<std::vector<double>> scores;  // [step][capability]
  std::vector<FeasibilityPartition> indicators;

  double score(std::size_t step, const CapabilityId& c) const;
  /// First step whose score reaches 1.0, or -1.
  int time_to_max(const CapabilityId& c) const;
};

CapabilityReport capability_report(const EpisodeTrace& trace, int agent_id, const CapabilityCatalog& catalog,
                                   const EvaluationConfig& config = {});

struct Functioning {
  int timestep = 0;
  double health = 0.0;  // after the realized action
  bool registered = false;
  TerminalKind terminal = TerminalKind::NotTerminal;
  ActionId action = ActionId::RequestPHC;
};

struct FunctioningReport {
  int agent_id = 0;
  std::vector<Functioning> series;
};

FunctioningReport functioning_report(const EpisodeTrace& trace, int agent_id);

struct LowCluster {
  int step = 0;
  CapabilityId capability;
  std::vector<int> agent_ids;
};

struct PopulationAggregate {
  std::vector<CapabilityId> capabilities;
  std::vector<std::vector<double>> mean;                    // [step][capability]
  std::vector<std::vector<std::vector<int>>> histogram;     // [step][capability][bin] over [-1, 1]
  std::vector<LowCluster> low_clusters;
};

/// Series of different lengths are aligned at step 0; finished agents carry
/// their last value forward. `functionings`, when non-empty, must parallel
/// `reports` and enables low-capability/low-functioning cluster detection.
PopulationAggregate population_aggregate(const std::vector<CapabilityReport>& reports,
                                         const std::vector<FunctioningReport>& functionings = {},
                                         const EvaluationConfig& config = {});

struct CostReport {
  std::string label;
  Money total;
  std::map<Service, Money> per_service;
  std::map<int, Money> per_agent;
  Money remaining;
  bool exhausted = false;
};

CostReport cost_report(const BudgetLedger& ledger, const std::string& label);

struct CostComparison {
  CostReport policy_on;
  CostReport policy_off;
  Money difference;  // on - off
};

CostComparison compare_costs(CostReport policy_on, CostReport policy_off);

}  // namespace capasim
