#include "capasim/world.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "capasim/agents.hpp"
#include "capasim/errors.hpp"

namespace capasim {
namespace {

std::string cell_str(Cell c) { return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")"; }

}  // namespace

WorldModel::WorldModel(int width, int height, std::array<Cell, 3> facilities, std::vector<Cell> social_workers,
                       std::optional<int> phc_capacity, std::optional<int> street_team_capacity)
    : width_(width),
      height_(height),
      facilities_(facilities),
      social_workers_(std::move(social_workers)),
      phc_capacity_(phc_capacity),
      street_team_capacity_(street_team_capacity) {
  if (width_ < 2 || height_ < 2) throw ConfigError("world", "grid must be at least 2x2");
  for (std::size_t i = 0; i < facilities_.size(); ++i) {
    const auto key = "world.facilities." + std::string(to_string(static_cast<Facility>(i)));
    const Cell c = facilities_[i];
    if (!in_bounds(c)) throw ConfigError(key, "cell " + cell_str(c) + " is out of bounds");
    if (!is_edge(c)) throw ConfigError(key, "cell " + cell_str(c) + " is not on the grid edge");
    for (std::size_t j = 0; j < i; ++j) {
      if (facilities_[j] == c) throw ConfigError(key, "cell " + cell_str(c) + " is shared with another facility");
    }
  }
  for (const Cell w : social_workers_) {
    if (!in_bounds(w)) throw ConfigError("world.social_workers", "cell " + cell_str(w) + " is out of bounds");
  }
  if (phc_capacity_ && *phc_capacity_ < 1) throw ConfigError("world.phc_capacity", "must be positive");
  if (street_team_capacity_ && *street_team_capacity_ < 1)
    throw ConfigError("world.street_team_capacity", "must be positive");
}

bool WorldModel::in_bounds(Cell c) const noexcept {
  return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
}

bool WorldModel::is_edge(Cell c) const noexcept {
  return in_bounds(c) && (c.row == 0 || c.col == 0 || c.row == height_ - 1 || c.col == width_ - 1);
}

std::optional<Facility> WorldModel::facility_at(Cell c) const noexcept {
  for (std::size_t i = 0; i < facilities_.size(); ++i) {
    if (facilities_[i] == c) return static_cast<Facility>(i);
  }
  return std::nullopt;
}

WorldModel build_world(const WorldConfig& config, const PopulationSpec& population) {
  if (config.width < 2 || config.height < 2) throw ConfigError("world", "grid must be at least 2x2");
  const std::array<Cell, 3> facilities = {
      config.phc.value_or(Cell{0, config.width / 2}),
      config.social_services.value_or(Cell{config.height / 2, 0}),
      config.icu.value_or(Cell{config.height / 2, config.width - 1}),
  };
  std::vector<Cell> workers;
  if (config.social_workers) {
    workers = *config.social_workers;
  } else {
    const std::vector<Cell> fac(facilities.begin(), facilities.end());
    workers = resolve_start_cells(population, config.width, config.height, fac);
  }
  return WorldModel(config.width, config.height, facilities, std::move(workers), config.phc_capacity,
                    config.street_team_capacity);
}

bool is_adjacent(const WorldModel& world, Cell a, Cell b) {
  if (!world.in_bounds(a) || !world.in_bounds(b)) throw ArgumentError("adjacency query with out-of-bounds cell");
  return std::abs(a.row - b.row) <= 1 && std::abs(a.col - b.col) <= 1;
}

bool social_worker_nearby(const WorldModel& world, Cell agent_pos, int engagements_this_step) {
  if (const auto cap = world.street_team_capacity(); cap && engagements_this_step >= *cap) return false;
  return std::any_of(world.social_workers().begin(), world.social_workers().end(),
                     [&](Cell w) { return is_adjacent(world, w, agent_pos); });
}

void PolicyRules::validate() const {
  if (engagement_threshold < 1) throw ConfigError("policy.engagement_threshold", "must be >= 1");
  if (cost_phc < Money{}) throw ConfigError("policy.cost_phc_cents", "must be non-negative");
  if (!(cost_icu > cost_phc)) throw ConfigError("policy.cost_icu_cents", "must exceed cost_phc_cents");
  if (engagement_health_cost < 0.0) throw ConfigError("policy.engagement_health_cost", "must be non-negative");
}

void BudgetLedger::append(int timestep, int agent_index, Service service, Money amount) {
  if (!entries_.empty() && timestep < entries_.back().timestep) {
    throw ContractViolation("ledger entries must be timestep-monotone");
  }
  entries_.push_back({timestep, agent_index, service, amount});
  billed_ += amount;
}

BudgetLedger bill(BudgetLedger ledger, int timestep, int agent_index, Service service, const PolicyRules& policy) {
  ledger.append(timestep, agent_index, service, service == Service::PHC ? policy.cost_phc : policy.cost_icu);
  return ledger;
}

}  // namespace capasim
