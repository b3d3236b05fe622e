#include <gtest/gtest.h>

#include <random>

#include "capasim/errors.hpp"
#include "capasim/mdp.hpp"
#include "test_support.hpp"

namespace capasim {
namespace {

using testing::default_env;
using testing::profile_at;
using testing::solo_state;

constexpr ActionId a1 = ActionId::RequestPHC;
constexpr ActionId a2 = ActionId::SkipPHC;
constexpr ActionId a3 = ActionId::EngageSocial;
constexpr ActionId a4 = ActionId::StayDisengaged;

TEST(FeasibilityTest, Examples) {
  const auto env = default_env();
  auto reg = solo_state(env, profile_at(env, 1, true));
  auto f = feasible_actions(reg, 0, env.world, env.policy);
  EXPECT_EQ(f.possible(), (std::vector<ActionId>{a1, a2, a3, a4}));

  auto nonreg = profile_at(env, 1, false);
  nonreg.position = {4, 4};  // far from every worker
  f = feasible_actions(solo_state(env, nonreg), 0, env.world, env.policy);
  EXPECT_EQ(f.possible(), (std::vector<ActionId>{a2, a4}));
  EXPECT_EQ(f.impossible(), (std::vector<ActionId>{a1, a3}));

  PolicyRules off = env.policy;
  off.phc_requires_registration = false;
  EXPECT_TRUE(feasible_actions(solo_state(env, nonreg), 0, env.world, off).is_possible(a1));
}

TEST(FeasibilityTest, ErrorPaths) {
  const auto env = default_env();
  auto s = solo_state(env, profile_at(env, 1, true));
  EXPECT_THROW(feasible_actions(s, 1, env.world, env.policy), ArgumentError);
  EXPECT_THROW(feasible_actions(s, -1, env.world, env.policy), ArgumentError);
  s.agents[0].done = true;
  EXPECT_THROW(feasible_actions(s, 0, env.world, env.policy), ContractViolation);
  EXPECT_THROW(apply_transition(s, 0, a1, env.world, env.policy), ContractViolation);
}

TEST(FeasibilityTest, PartitionCoversEveryActionExactlyOnce) {
  const auto env = default_env();
  for (int h = 1; h <= 2; ++h)
    for (bool reg : {false, true})
      for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) {
          auto p = profile_at(env, h, reg);
          p.position = {r, c};
          const auto f = feasible_actions(solo_state(env, p), 0, env.world, env.policy);
          EXPECT_EQ(f.possible().size() + f.impossible().size(), kNumActions);
          EXPECT_TRUE(f.is_possible(a2));
          EXPECT_TRUE(f.is_possible(a4));
        }
}

TEST(FeasibilityTest, BudgetGateAndCapacity) {
  auto env = default_env();
  env.policy.budget_gates_phc = true;
  env.policy.initial_budget = Money::euros(29);
  auto s = solo_state(env, profile_at(env, 1, true));
  EXPECT_FALSE(feasible_actions(s, 0, env.world, env.policy).is_possible(a1));

  const auto base = default_env();
  const WorldModel capped(6, 6, {Cell{0, 3}, Cell{3, 0}, Cell{3, 5}}, {Cell{1, 1}, Cell{1, 2}}, 1, 1);
  auto two = make_initial_state({profile_at(base, 1, true), profile_at(base, 1, true)}, base.scale, base.policy);
  two.agents[1].id = 1;
  apply_transition(two, 0, a1, capped, base.policy);
  EXPECT_FALSE(feasible_actions(two, 1, capped, base.policy).is_possible(a1));
  advance_timestep(two);
  EXPECT_TRUE(feasible_actions(two, 1, capped, base.policy).is_possible(a1));
}

TEST(TransitionTest, RegisteredRequestPHC) {
  const auto env = default_env();
  const auto s = solo_state(env, profile_at(env, 1, true));
  const auto [next, rec] = transition(s, 0, a1, env.world, env.policy);
  EXPECT_TRUE(rec.feasible);
  EXPECT_DOUBLE_EQ(env.scale.value(next.agents[0].health), 1.0);
  EXPECT_EQ(next.agents[0].position, env.world.facility(Facility::PHC));
  EXPECT_EQ(next.ledger.remaining(), Money::euros(4970));
  EXPECT_EQ(rec.billed, Service::PHC);
  EXPECT_FALSE(next.agents[0].done);
  EXPECT_EQ(s.ledger.remaining(), Money::euros(5000));  // input untouched
}

TEST(TransitionTest, SkipAtLowHealthGoesToICU) {
  const auto env = default_env();
  const auto [next, rec] = transition(solo_state(env, profile_at(env, 1, true)), 0, a2, env.world, env.policy);
  EXPECT_EQ(next.agents[0].health, 0);
  EXPECT_EQ(next.agents[0].position, env.world.facility(Facility::ICU));
  EXPECT_EQ(next.agents[0].terminal, TerminalKind::Deprived);
  EXPECT_TRUE(next.agents[0].done);
  EXPECT_EQ(next.ledger.remaining(), Money::euros(4000));
  EXPECT_EQ(rec.billed, Service::ICU);
}

TEST(TransitionTest, SecondEngagementRegisters) {
  const auto env = default_env();
  auto p = profile_at(env, 1, false, 1);
  const auto [next, rec] = transition(solo_state(env, p), 0, a3, env.world, env.policy);
  EXPECT_TRUE(rec.feasible);
  EXPECT_EQ(next.agents[0].engagements, 2);
  EXPECT_TRUE(next.agents[0].registered);
  EXPECT_EQ(next.agents[0].position, env.world.facility(Facility::SocialServices));
  EXPECT_EQ(next.agents[0].health, 1);
  EXPECT_EQ(next.ledger.remaining(), Money::euros(5000));
}

TEST(TransitionTest, EngagementOnlyCountsWhileRegistrationIsPending) {
  const auto env = default_env();
  const auto [reg_next, r1] = transition(solo_state(env, profile_at(env, 1, true)), 0, a3, env.world, env.policy);
  EXPECT_EQ(reg_next.agents[0].engagements, 0);
  const auto off = default_env(false);
  const auto [off_next, r2] = transition(solo_state(off, profile_at(off, 1, false)), 0, a3, off.world, off.policy);
  EXPECT_EQ(off_next.agents[0].engagements, 0);
  EXPECT_FALSE(off_next.agents[0].registered);
}

TEST(TransitionTest, EngagementHealthCost) {
  auto env = default_env();
  env.policy.engagement_health_cost = 0.5;
  const auto [next, rec] = transition(solo_state(env, profile_at(env, 2, false)), 0, a3, env.world, env.policy);
  EXPECT_EQ(next.agents[0].health, 1);
  EXPECT_EQ(next.agents[0].engagements, 1);
}

TEST(TransitionTest, InfeasibleActionCostsHealthOnly) {
  const auto env = default_env();
  auto p = profile_at(env, 2, false);
  p.position = {4, 4};
  for (auto a : {a1, a3}) {
    const auto [next, rec] = transition(solo_state(env, p), 0, a, env.world, env.policy);
    EXPECT_FALSE(rec.feasible);
    EXPECT_EQ(next.agents[0].health, 1);
    EXPECT_EQ(next.agents[0].position, p.position);
    EXPECT_EQ(next.agents[0].engagements, 0);
    EXPECT_FALSE(next.agents[0].registered);
    EXPECT_TRUE(next.ledger.entries().empty());
  }
}

TEST(TransitionTest, TerminalClassification) {
  HealthScale scale;
  AgentProfile p;
  p.health = 0;
  EXPECT_EQ(is_terminal(p, scale), TerminalKind::Deprived);
  p.health = 3;
  EXPECT_EQ(is_terminal(p, scale), TerminalKind::Healthy);
  p.health = 2;
  EXPECT_EQ(is_terminal(p, scale), TerminalKind::NotTerminal);
}

TEST(TransitionTest, DeterministicForEqualInputs) {
  const auto env = default_env();
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto p = profile_at(env, 1 + static_cast<int>(rng() % 2), rng() % 2, static_cast<int>(rng() % 2));
    p.position = {static_cast<int>(rng() % 6), static_cast<int>(rng() % 6)};
    const auto a = kAllActions[rng() % 4];
    const auto s = solo_state(env, p);
    const auto x = transition(s, 0, a, env.world, env.policy);
    const auto y = transition(s, 0, a, env.world, env.policy);
    EXPECT_EQ(x.first, y.first);
    EXPECT_EQ(x.second.after, y.second.after);
  }
}

// Random walks: health stays on the grid, registration never reverts, the
// ledger always conserves the initial budget.
TEST(TransitionTest, RandomWalkInvariants) {
  const auto env = default_env();
  std::mt19937 rng(17);
  for (int walk = 0; walk < 500; ++walk) {
    auto s = make_initial_state(env.initial_agents, env.scale, env.policy);
    for (int t = 0; t < 30; ++t) {
      for (int i = 0; i < 2; ++i) {
        if (s.agents[i].done) continue;
        const bool was_registered = s.agents[i].registered;
        apply_transition(s, i, kAllActions[rng() % 4], env.world, env.policy);
        EXPECT_GE(s.agents[i].health, 0);
        EXPECT_LE(s.agents[i].health, env.scale.max_level());
        if (was_registered) EXPECT_TRUE(s.agents[i].registered);
        EXPECT_EQ(s.ledger.remaining() + s.ledger.total_billed(), s.ledger.initial());
      }
      advance_timestep(s);
    }
  }
}

// Reward table: action x feasibility x (progress | no progress) x terminal.
TEST(RewardTest, ExhaustiveTable) {
  const auto catalog = CapabilityCatalog::paper_default();
  FeasibilityPartition all, none;
  for (auto a : kAllActions) all.set_possible(a, true);
  none.set_possible(a2, true);
  none.set_possible(a4, true);

  AgentProfile before;
  before.health = 1;
  before.peak_health = 2;
  AgentProfile progressed = before;
  progressed.health = 3;
  progressed.peak_health = 3;
  AgentProfile flat = before;
  flat.health = 2;
  AgentProfile engaged = before;
  engaged.engagements = 1;
  AgentProfile dead = before;
  dead.health = 0;
  dead.terminal = TerminalKind::Deprived;

  EXPECT_EQ(reward(before, a1, progressed, all, catalog), 10.0);
  EXPECT_EQ(reward(before, a1, flat, all, catalog), 0.0);
  EXPECT_EQ(reward(before, a1, flat, none, catalog), -5.0);
  EXPECT_EQ(reward(before, a2, flat, all, catalog), -5.0);
  EXPECT_EQ(reward(before, a3, engaged, all, catalog), 10.0);
  EXPECT_EQ(reward(before, a3, before, all, catalog), 0.0);
  EXPECT_EQ(reward(before, a3, flat, none, catalog), -5.0);
  EXPECT_EQ(reward(before, a4, flat, all, catalog), -5.0);
  for (auto a : kAllActions) {
    EXPECT_EQ(reward(before, a, dead, all, catalog), -100.0);
    EXPECT_EQ(reward(before, a, dead, none, catalog), -100.0);
  }

  const CapabilityCatalog literal(catalog.capabilities(), catalog.links(), 100.0, RestorationCredit::Always);
  EXPECT_EQ(reward(before, a1, flat, all, literal), 10.0);
  EXPECT_EQ(reward(before, a3, before, all, literal), 10.0);
  EXPECT_EQ(reward(before, a2, flat, all, literal), -5.0);
}

TEST(RewardTest, FirstRequestFromStartPaysTen) {
  const auto env = default_env();
  const auto s = solo_state(env, profile_at(env, 1, true));
  const auto [next, rec] = transition(s, 0, a1, env.world, env.policy);
  EXPECT_EQ(reward(s, 0, a1, next, rec.feasibility, env.catalog), 10.0);
  EXPECT_EQ(reward(rec, env.catalog), 10.0);
}

TEST(CatalogTest, ValidationRejectsBadCatalogs) {
  const auto base = CapabilityCatalog::paper_default();
  EXPECT_NO_THROW(base.validate());
  EXPECT_THROW(CapabilityCatalog(base.capabilities(), base.links(), 10.0).validate(), ConfigError);

  auto dup = base.links();
  dup.push_back(dup.front());
  EXPECT_THROW(CapabilityCatalog(base.capabilities(), dup, 100.0).validate(), ConfigError);

  auto dangling = base.links();
  dangling.push_back({.action = a4, .capability = "play"});
  EXPECT_THROW(CapabilityCatalog(base.capabilities(), dangling, 100.0).validate(), ConfigError);

  auto zero = base.links();
  zero.front().evaluation_weight = 0.0;
  EXPECT_THROW(CapabilityCatalog(base.capabilities(), zero, 100.0).validate(), ConfigError);
}

TEST(CatalogTest, DefaultCatalogShape) {
  const auto c = CapabilityCatalog::paper_default();
  EXPECT_EQ(c.evaluated_capabilities(), (std::vector<CapabilityId>{"bodily_health", "affiliation"}));
  EXPECT_EQ(c.evaluation_links("affiliation").size(), 2u);
  EXPECT_EQ(c.terminal_penalty(), 100.0);
  EXPECT_EQ(c.credit(), RestorationCredit::OnProgress);
}

}  // namespace
}  // namespace capasim
