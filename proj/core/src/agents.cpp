#include "capasim/agents.hpp"

#include <algorithm>

#include "capasim/errors.hpp"
#include "capasim/world.hpp"

namespace capasim {

PopulationSpec PopulationSpec::two_agent_default() {
  PopulationSpec spec;
  spec.groups = {
      AgentGroup{.count = 1, .health = 0.5, .registered = true, .start = std::nullopt},
      AgentGroup{.count = 1, .health = 0.5, .registered = false, .start = std::nullopt},
  };
  return spec;
}

int PopulationSpec::total() const noexcept {
  int n = 0;
  for (const auto& g : groups) n += g.count;
  return n;
}

std::vector<Cell> resolve_start_cells(const PopulationSpec& spec, int width, int height,
                                      const std::vector<Cell>& facility_cells) {
  if (spec.groups.empty() || spec.total() < 1) throw ConfigError("population", "population must be nonempty");

  std::vector<Cell> taken = facility_cells;
  auto is_taken = [&](Cell c) { return std::find(taken.begin(), taken.end(), c) != taken.end(); };
  auto in_bounds = [&](Cell c) { return c.row >= 0 && c.row < height && c.col >= 0 && c.col < width; };

  // Explicit cells are reserved first so that auto placement never lands on them.
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    const auto path = "population.groups[" + std::to_string(g) + "]";
    if (group.count < 1) throw ConfigError(path + ".count", "must be >= 1");
    if (!group.start) continue;
    if (!in_bounds(*group.start)) throw ConfigError(path + ".start", "cell is out of bounds");
    if (is_taken(*group.start)) throw ConfigError(path + ".start", "cell is occupied");
    if (group.count != 1) throw ConfigError(path + ".start", "an explicit start cell requires count 1");
    taken.push_back(*group.start);
  }

  auto next_free = [&]() -> Cell {
    for (int r = 1; r + 1 < height; ++r)
      for (int c = 1; c + 1 < width; ++c)
        if (!is_taken({r, c})) return {r, c};
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        if (!is_taken({r, c})) return {r, c};
    throw ConfigError("population", "no free cell left for auto placement");
  };

  std::vector<Cell> cells;
  for (const auto& group : spec.groups) {
    for (int k = 0; k < group.count; ++k) {
      if (group.start) {
        cells.push_back(*group.start);
      } else {
        const Cell c = next_free();
        taken.push_back(c);
        cells.push_back(c);
      }
    }
  }
  return cells;
}

std::vector<AgentProfile> init_population(const PopulationSpec& spec, const WorldModel& world) {
  if (spec.scale.levels < 3) throw ConfigError("population.health_levels", "need at least 3 levels");
  if (!(spec.scale.delta > 0.0)) throw ConfigError("population.health_delta", "must be positive");

  const std::vector<Cell> facilities = {world.facility(Facility::PHC), world.facility(Facility::SocialServices),
                                        world.facility(Facility::ICU)};
  const auto starts = resolve_start_cells(spec, world.width(), world.height(), facilities);

  std::vector<AgentProfile> agents;
  agents.reserve(starts.size());
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    int level = 0;
    try {
      level = spec.scale.steps_of(group.health);
    } catch (const ArgumentError& e) {
      throw ConfigError("population.groups[" + std::to_string(g) + "].health", e.what());
    }
    if (level <= 0 || level >= spec.scale.max_level()) {
      throw ConfigError("population.groups[" + std::to_string(g) + "].health",
                        "initial health must lie strictly between 0 and the maximum level");
    }
    for (int k = 0; k < group.count; ++k) {
      AgentProfile p;
      p.id = static_cast<int>(agents.size());
      p.health = level;
      p.peak_health = level;
      p.registered = group.registered;
      p.start = starts[agents.size()];
      p.position = p.start;
      agents.push_back(std::move(p));
    }
  }
  return agents;
}

AgentProfile apply_health_delta(AgentProfile profile, double delta, const HealthScale& scale) {
  const int steps = scale.steps_of(delta);
  profile.health = std::clamp(profile.health + steps, 0, scale.max_level());
  return profile;
}

}  // namespace capasim
