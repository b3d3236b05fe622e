#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capasim/types.hpp"

namespace capasim {

class WorldModel;

/// Conversion-factor state of one person. Health is stored as a level index
/// on the scenario's HealthScale.
struct AgentProfile {
  int id = 0;
  int health = 1;
  int peak_health = 1;  // highest level reached this episode
  bool registered = false;
  int engagements = 0;
  Cell position;
  Cell start;
  bool done = false;
  TerminalKind terminal = TerminalKind::NotTerminal;
  /// Socio-demographic extension attributes; unused by the dynamics.
  std::map<std::string, std::string> attributes;

  friend bool operator==(const AgentProfile&, const AgentProfile&) = default;
};

struct AgentGroup {
  int count = 1;
  double health = 0.5;
  bool registered = false;
  std::optional<Cell> start;  // nullopt = "auto"

  friend bool operator==(const AgentGroup&, const AgentGroup&) = default;
};

struct PopulationSpec {
  HealthScale scale;
  std::vector<AgentGroup> groups;

  /// One registered and one non-registered agent, both at health 0.5.
  static PopulationSpec two_agent_default();
  int total() const noexcept;

  friend bool operator==(const PopulationSpec&, const PopulationSpec&) = default;
};

/// Start cell per agent, in population order. Auto cells take the row-major
/// first free interior cell, then any free non-facility cell.
std::vector<Cell> resolve_start_cells(const PopulationSpec& spec, int width, int height,
                                      const std::vector<Cell>& facility_cells);

std::vector<AgentProfile> init_population(const PopulationSpec& spec, const WorldModel& world);

/// health' = clamp(health + delta, 0, max). `delta` must be a multiple of the
/// scale's step.
AgentProfile apply_health_delta(AgentProfile profile, double delta, const HealthScale& scale);

}  // namespace capasim
