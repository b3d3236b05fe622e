#include "capasim/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "capasim/errors.hpp"

namespace capasim {

double central_capability(const FeasibilityPartition& feasibility, const CapabilityCatalog& catalog,
                          const CapabilityId& capability, std::optional<ActionId> realized,
                          bool state_dependent_weights) {
  const auto links = catalog.evaluation_links(capability);
  if (links.empty()) throw UndefinedMetric("capability '" + capability + "' has no evaluation links");
  double num = 0.0;
  double den = 0.0;
  for (const auto* l : links) {
    const double alpha = *l->evaluation_weight;
    bool indicator = feasibility.is_possible(l->action);
    if (state_dependent_weights && l->weight_if_restored) indicator = indicator && realized == l->action;
    if (indicator) num += alpha;
    den += std::abs(alpha);
  }
  return num / den;
}

double CapabilityReport::score(std::size_t step, const CapabilityId& c) const {
  const auto it = std::find(capabilities.begin(), capabilities.end(), c);
  if (it == capabilities.end()) throw ArgumentError("capability '" + c + "' not in report");
  return scores.at(step)[static_cast<std::size_t>(it - capabilities.begin())];
}

int CapabilityReport::time_to_max(const CapabilityId& c) const {
  for (std::size_t t = 0; t < scores.size(); ++t) {
    if (score(t, c) >= 1.0 - 1e-12) return static_cast<int>(t);
  }
  return -1;
}

CapabilityReport capability_report(const EpisodeTrace& trace, int agent_id, const CapabilityCatalog& catalog,
                                   const EvaluationConfig& config) {
  CapabilityReport report;
  report.agent_id = agent_id;
  report.capabilities = catalog.evaluated_capabilities();
  for (const auto* step : trace.steps_for(agent_id)) {
    std::vector<double> row;
    for (const auto& c : report.capabilities) {
      row.push_back(central_capability(step->feasibility, catalog, c, step->action, config.state_dependent_weights));
    }
    report.timesteps.push_back(step->timestep);
    report.scores.push_back(std::move(row));
    report.indicators.push_back(step->feasibility);
  }
  return report;
}

FunctioningReport functioning_report(const EpisodeTrace& trace, int agent_id) {
  FunctioningReport report;
  report.agent_id = agent_id;
  for (const auto* step : trace.steps_for(agent_id)) {
    report.series.push_back({step->timestep, step->health_after, step->registered_after, step->terminal, step->action});
  }
  return report;
}

PopulationAggregate population_aggregate(const std::vector<CapabilityReport>& reports,
                                         const std::vector<FunctioningReport>& functionings,
                                         const EvaluationConfig& config) {
  if (reports.empty()) throw ArgumentError("population_aggregate needs at least one report");
  if (!functionings.empty() && functionings.size() != reports.size())
    throw ArgumentError("functioning reports must parallel capability reports");
  if (config.histogram_bins < 1) throw ArgumentError("histogram_bins must be positive");

  PopulationAggregate agg;
  agg.capabilities = reports.front().capabilities;
  std::size_t length = 0;
  for (const auto& r : reports) {
    if (r.capabilities != agg.capabilities) throw ArgumentError("reports disagree on capability set");
    length = std::max(length, r.scores.size());
  }
  const std::size_t ncap = agg.capabilities.size();
  const auto bins = static_cast<std::size_t>(config.histogram_bins);

  for (std::size_t t = 0; t < length; ++t) {
    std::vector<double> mean(ncap, 0.0);
    std::vector<std::vector<int>> hist(ncap, std::vector<int>(bins, 0));
    std::vector<std::vector<int>> low(ncap);
    std::size_t contributing = 0;
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const auto& r = reports[i];
      if (r.scores.empty()) continue;
      ++contributing;
      const std::size_t at = std::min(t, r.scores.size() - 1);
      for (std::size_t c = 0; c < ncap; ++c) {
        const double s = r.scores[at][c];
        mean[c] += s;
        const auto bin = static_cast<std::size_t>(
            std::clamp(static_cast<long>(std::floor((s + 1.0) / 2.0 * static_cast<double>(bins))), 0L,
                       static_cast<long>(bins) - 1));
        ++hist[c][bin];
        if (!functionings.empty() && !functionings[i].series.empty()) {
          const auto& f = functionings[i].series[std::min(t, functionings[i].series.size() - 1)];
          if (s < config.capability_threshold && f.health < config.health_threshold) low[c].push_back(r.agent_id);
        }
      }
    }
    for (auto& m : mean) m = contributing ? m / static_cast<double>(contributing) : 0.0;
    agg.mean.push_back(std::move(mean));
    agg.histogram.push_back(std::move(hist));
    for (std::size_t c = 0; c < ncap; ++c) {
      if (!low[c].empty()) agg.low_clusters.push_back({static_cast<int>(t), agg.capabilities[c], low[c]});
    }
  }
  return agg;
}

CostReport cost_report(const BudgetLedger& ledger, const std::string& label) {
  CostReport r;
  r.label = label;
  r.per_service[Service::PHC] = Money{};
  r.per_service[Service::ICU] = Money{};
  for (const auto& e : ledger.entries()) {
    r.total += e.amount;
    r.per_service[e.service] += e.amount;
    r.per_agent[e.agent_index] += e.amount;
  }
  r.remaining = ledger.remaining();
  r.exhausted = ledger.exhausted();
  return r;
}

CostComparison compare_costs(CostReport policy_on, CostReport policy_off) {
  CostComparison c{std::move(policy_on), std::move(policy_off), Money{}};
  c.difference = c.policy_on.total - c.policy_off.total;
  return c;
}

}  // namespace capasim
