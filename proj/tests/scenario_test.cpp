#include <gtest/gtest.h>

#include <random>

#include "capasim/errors.hpp"
#include "capasim/scenario.hpp"

namespace capasim {
namespace {

std::string error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

TEST(ConfigTest, EmptyObjectGivesDefaults) {
  const auto c = parse_config("{}");
  EXPECT_EQ(c, ScenarioConfig{});
  EXPECT_EQ(c.world.width, 6);
  EXPECT_EQ(c.world.height, 6);
  EXPECT_EQ(c.policy.initial_budget, Money::euros(5000));
  EXPECT_EQ(c.policy.cost_phc, Money::euros(30));
  EXPECT_EQ(c.policy.cost_icu, Money::euros(1000));
  EXPECT_EQ(c.policy.engagement_threshold, 2);
  EXPECT_EQ(c.learning.gamma, 0.99);
  EXPECT_EQ(c.learning.learning_rate, 0.2);
  EXPECT_EQ(c.learning.epsilon, 0.1);
  EXPECT_EQ(c.learning.episodes, 300);
  EXPECT_EQ(c.population.total(), 2);
  EXPECT_EQ(c.reward.terminal_penalty, 100.0);
}

TEST(ConfigTest, UnknownKeysAreRejectedWithTheirPath) {
  EXPECT_EQ(error_path(R"({"grdi_size": 3})"), "grdi_size");
  EXPECT_EQ(error_path(R"({"world": {"widht": 3}})"), "world.widht");
  EXPECT_EQ(error_path(R"({"population": {"groups": [{"count": 1, "helth": 0.5}]}})"),
            "population.groups[0].helth");
}

TEST(ConfigTest, OutOfRangeAndMistypedValues) {
  EXPECT_EQ(error_path(R"({"learning": {"gamma": 1.5}})"), "learning.gamma");
  EXPECT_EQ(error_path(R"({"world": {"width": "six"}})"), "world.width");
  EXPECT_EQ(error_path(R"({"world": {"facilities": {"phc": [3, 3]}}})"), "world.facilities.phc");
  EXPECT_EQ(error_path(R"({"reward": {"terminal_penalty": 5}})"), "reward.terminal_penalty");
  EXPECT_EQ(error_path(R"({"reward": {"restoration_credit": "sometimes"}})"), "reward.restoration_credit");
  EXPECT_EQ(error_path(R"({"evaluation": {"weights": {"bodily_health": {"a9": 1}}}})"),
            "evaluation.weights.bodily_health.a9");
  EXPECT_EQ(error_path(R"({"policy": {"engagement_health_cost": 0.3}})"), "policy.engagement_health_cost");
  EXPECT_EQ(error_path(R"([1, 2])"), "<root>");
}

TEST(ConfigTest, MalformedJsonReportsPosition) {
  try {
    parse_config("{\n  \"world\": {\n    \"width\": 6,,\n  }\n}");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_GT(e.column(), 0);
  }
}

TEST(ConfigTest, NullFacilityMeansDefault) {
  const auto c = parse_config(R"({"world": {"facilities": {"phc": null, "icu": [5, 2]}}})");
  EXPECT_FALSE(c.world.phc.has_value());
  EXPECT_EQ(c.world.icu, (Cell{5, 2}));
}

ScenarioConfig random_config(std::mt19937& rng) {
  ScenarioConfig c;
  auto coin = [&] { return rng() % 2 == 1; };
  c.world.width = 4 + static_cast<int>(rng() % 6);
  c.world.height = 4 + static_cast<int>(rng() % 6);
  if (coin()) c.world.phc = Cell{0, 1};
  if (coin()) c.world.social_workers = std::vector<Cell>{{2, 2}};
  if (coin()) c.world.phc_capacity = 1 + static_cast<int>(rng() % 3);
  c.policy.phc_requires_registration = coin();
  c.policy.engagement_threshold = 1 + static_cast<int>(rng() % 4);
  c.policy.cost_phc = Money::cents(100 + static_cast<int>(rng() % 5000));
  c.policy.initial_budget = Money::cents(static_cast<int>(rng() % 10000000));
  c.population.groups = {AgentGroup{.count = 1 + static_cast<int>(rng() % 3), .health = 0.5, .registered = coin()},
                         AgentGroup{.count = 1, .health = 1.0, .registered = coin()}};
  c.learning.gamma = std::uniform_real_distribution<double>(0.0, 0.999)(rng);
  c.learning.learning_rate = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
  c.learning.episodes = static_cast<int>(rng() % 1000);
  c.learning.seed = rng();
  c.learning.mask_infeasible = coin();
  c.reward.restoration_credit = coin() ? RestorationCredit::Always : RestorationCredit::OnProgress;
  c.evaluation.metrics.state_dependent_weights = coin();
  c.evaluation.metrics.histogram_bins = 1 + static_cast<int>(rng() % 10);
  if (coin()) c.output.formats = {"json"};
  c.output.directory = coin() ? "" : "out/x";
  return c;
}

TEST(ConfigTest, RoundTrip) {
  std::mt19937 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto c = random_config(rng);
    const auto text = serialize_config(c);
    const auto back = parse_config(text);
    EXPECT_EQ(back, c) << text;
    EXPECT_EQ(serialize_config(back), text);
  }
}

TEST(ConfigTest, HashIsStableAndSensitive) {
  ScenarioConfig a;
  EXPECT_EQ(config_hash(a), config_hash(parse_config("{}")));
  EXPECT_EQ(config_hash(a).size(), 64u);
  ScenarioConfig b = a;
  b.learning.seed = 1;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(ConfigTest, BuildEnvironmentAppliesWeights) {
  const auto c = parse_config(R"({"evaluation": {"weights": {"bodily_health": {"a1": 0.5, "a2": -0.5}}}})");
  const auto cat = build_catalog(c);
  EXPECT_EQ(cat.evaluated_capabilities(), std::vector<CapabilityId>{"bodily_health"});
  EXPECT_EQ(cat.evaluation_links("bodily_health").size(), 2u);
}

}  // namespace
}  // namespace capasim
