#pragma once

#include <array>
#include <optional>
#include <vector>

#include "capasim/types.hpp"

namespace capasim {

struct PopulationSpec;

/// Physical-environment section of a scenario. Unset facility cells and
/// social workers are filled in by build_world's default layout.
struct WorldConfig {
  int width = 6;
  int height = 6;
  std::optional<Cell> phc;
  std::optional<Cell> social_services;
  std::optional<Cell> icu;
  std::optional<std::vector<Cell>> social_workers;
  std::optional<int> phc_capacity;          // per-timestep slots; nullopt = unlimited
  std::optional<int> street_team_capacity;  // per-timestep slots; nullopt = unlimited

  friend bool operator==(const WorldConfig&, const WorldConfig&) = default;
};

/// Validated, immutable grid with facilities on edge cells.
class WorldModel {
 public:
  WorldModel(int width, int height, std::array<Cell, 3> facilities, std::vector<Cell> social_workers,
             std::optional<int> phc_capacity = std::nullopt,
             std::optional<int> street_team_capacity = std::nullopt);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Cell facility(Facility f) const noexcept { return facilities_[static_cast<std::size_t>(f)]; }
  const std::vector<Cell>& social_workers() const noexcept { return social_workers_; }
  std::optional<int> phc_capacity() const noexcept { return phc_capacity_; }
  std::optional<int> street_team_capacity() const noexcept { return street_team_capacity_; }

  bool in_bounds(Cell c) const noexcept;
  bool is_edge(Cell c) const noexcept;
  /// The facility at `c`, if any.
  std::optional<Facility> facility_at(Cell c) const noexcept;
  int cell_index(Cell c) const noexcept { return c.row * width_ + c.col; }

 private:
  int width_;
  int height_;
  std::array<Cell, 3> facilities_;
  std::vector<Cell> social_workers_;
  std::optional<int> phc_capacity_;
  std::optional<int> street_team_capacity_;
};

/// Builds the world for a population. Default layout: PHC at the top-edge
/// midpoint, social services at the left-edge midpoint, ICU at the right-edge
/// midpoint, and one social worker on each agent's start cell.
WorldModel build_world(const WorldConfig& config, const PopulationSpec& population);

/// Chebyshev distance <= 1, co-location included.
bool is_adjacent(const WorldModel& world, Cell a, Cell b);

/// True iff some social worker is adjacent to `agent_pos` and the street team
/// still has capacity this timestep.
bool social_worker_nearby(const WorldModel& world, Cell agent_pos, int engagements_this_step = 0);

/// Regulatory environment.
struct PolicyRules {
  bool phc_requires_registration = true;
  int engagement_threshold = 2;
  Money cost_phc = Money::euros(30);
  Money cost_icu = Money::euros(1000);
  Money initial_budget = Money::euros(5000);
  double engagement_health_cost = 0.0;
  bool budget_gates_phc = false;

  /// Throws ConfigError on violated invariants.
  void validate() const;

  friend bool operator==(const PolicyRules&, const PolicyRules&) = default;
};

struct LedgerEntry {
  int timestep = 0;
  int agent_index = 0;
  Service service = Service::PHC;
  Money amount;

  friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

/// Append-only healthcare budget. remaining() may go negative; exhaustion is
/// a flag, never a failure.
class BudgetLedger {
 public:
  BudgetLedger() = default;
  explicit BudgetLedger(Money initial) : initial_(initial) {}

  Money initial() const noexcept { return initial_; }
  Money total_billed() const noexcept { return billed_; }
  Money remaining() const noexcept { return initial_ - billed_; }
  bool exhausted() const noexcept { return remaining() < Money{}; }
  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }

  /// Throws ContractViolation if `timestep` precedes the last entry.
  void append(int timestep, int agent_index, Service service, Money amount);

  friend bool operator==(const BudgetLedger&, const BudgetLedger&) = default;

 private:
  Money initial_;
  Money billed_;
  std::vector<LedgerEntry> entries_;
};

BudgetLedger bill(BudgetLedger ledger, int timestep, int agent_index, Service service, const PolicyRules& policy);

}  // namespace capasim
