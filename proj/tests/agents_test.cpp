#include <gtest/gtest.h>

#include <random>

#include "capasim/agents.hpp"
#include "capasim/errors.hpp"
#include "capasim/world.hpp"

namespace capasim {
namespace {

TEST(AgentsTest, DefaultPopulationIsOneRegisteredOneNot) {
  const auto spec = PopulationSpec::two_agent_default();
  const auto world = build_world(WorldConfig{}, spec);
  const auto agents = init_population(spec, world);
  ASSERT_EQ(agents.size(), 2u);
  EXPECT_TRUE(agents[0].registered);
  EXPECT_FALSE(agents[1].registered);
  for (const auto& a : agents) {
    EXPECT_DOUBLE_EQ(spec.scale.value(a.health), 0.5);
    EXPECT_FALSE(a.done);
    EXPECT_EQ(a.position, a.start);
  }
  EXPECT_EQ(agents[0].start, (Cell{1, 1}));
  EXPECT_EQ(agents[1].start, (Cell{1, 2}));
}

TEST(AgentsTest, EmptyPopulationIsAConfigError) {
  PopulationSpec spec;
  EXPECT_THROW(resolve_start_cells(spec, 6, 6, {}), ConfigError);
  spec.groups = {AgentGroup{.count = 0}};
  EXPECT_THROW(resolve_start_cells(spec, 6, 6, {}), ConfigError);
}

TEST(AgentsTest, InitializationIsDeterministic) {
  PopulationSpec spec;
  spec.groups = {AgentGroup{.count = 3, .health = 0.5, .registered = false}};
  const auto world = build_world(WorldConfig{}, spec);
  const auto a = init_population(spec, world);
  const auto b = init_population(spec, world);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[2].start, (Cell{1, 3}));
  EXPECT_EQ(a[2].id, 2);
}

TEST(AgentsTest, ExplicitStartCellsAreChecked) {
  PopulationSpec spec;
  spec.groups = {AgentGroup{.start = Cell{0, 3}}};  // PHC cell
  EXPECT_THROW(resolve_start_cells(spec, 6, 6, {Cell{0, 3}}), ConfigError);
  spec.groups = {AgentGroup{.start = Cell{9, 9}}};
  EXPECT_THROW(resolve_start_cells(spec, 6, 6, {}), ConfigError);
  spec.groups = {AgentGroup{.start = Cell{2, 2}}, AgentGroup{.start = Cell{2, 2}}};
  EXPECT_THROW(resolve_start_cells(spec, 6, 6, {}), ConfigError);
  // auto placement skips explicitly reserved cells
  spec.groups = {AgentGroup{}, AgentGroup{.start = Cell{1, 1}}};
  EXPECT_EQ(resolve_start_cells(spec, 6, 6, {}), (std::vector<Cell>{{1, 2}, {1, 1}}));
}

TEST(AgentsTest, InitialHealthMustBeStrictlyInside) {
  PopulationSpec spec;
  spec.groups = {AgentGroup{.health = 1.5}};
  const auto world = build_world(WorldConfig{}, spec);
  EXPECT_THROW(init_population(spec, world), ConfigError);
  spec.groups = {AgentGroup{.health = 0.0}};
  EXPECT_THROW(init_population(spec, world), ConfigError);
  spec.groups = {AgentGroup{.health = 0.7}};
  EXPECT_THROW(init_population(spec, world), ConfigError);
}

TEST(AgentsTest, HealthDeltaExamples) {
  const HealthScale scale;
  AgentProfile p;
  p.health = 2;  // 1.0
  EXPECT_DOUBLE_EQ(scale.value(apply_health_delta(p, +0.5, scale).health), 1.5);
  p.health = 1;
  EXPECT_DOUBLE_EQ(scale.value(apply_health_delta(p, -0.5, scale).health), 0.0);
  p.health = 3;
  EXPECT_DOUBLE_EQ(scale.value(apply_health_delta(p, +0.5, scale).health), 1.5);
  EXPECT_THROW(apply_health_delta(p, 0.3, scale), ArgumentError);
}

TEST(AgentsTest, HealthDeltaChangesNothingElse) {
  const HealthScale scale;
  AgentProfile p;
  p.id = 4;
  p.registered = true;
  p.engagements = 2;
  p.position = {3, 0};
  auto q = apply_health_delta(p, -0.5, scale);
  q.health = p.health;
  EXPECT_EQ(p, q);
}

TEST(AgentsTest, ClampIsIdempotentAtBoundaries) {
  const HealthScale scale;
  std::mt19937 rng(3);
  for (int i = 0; i < 1000; ++i) {
    AgentProfile p;
    p.health = static_cast<int>(rng() % 4);
    const double d = (static_cast<int>(rng() % 7) - 3) * 0.5;
    const auto once = apply_health_delta(p, d, scale);
    EXPECT_GE(once.health, 0);
    EXPECT_LE(once.health, scale.max_level());
    if (once.health == 0 && d < 0) EXPECT_EQ(apply_health_delta(once, d, scale).health, 0);
    if (once.health == scale.max_level() && d > 0)
      EXPECT_EQ(apply_health_delta(once, d, scale).health, scale.max_level());
  }
}

}  // namespace
}  // namespace capasim
