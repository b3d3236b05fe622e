#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "capasim/errors.hpp"
#include "capasim/run.hpp"
#include "test_support.hpp"

namespace capasim {
namespace {

using testing::actions_str;

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(RunTest, DefaultScenario) {
  ScenarioConfig c;
  c.learning.seed = 7;
  const auto run = run_scenario(c);
  EXPECT_TRUE(run.converged);
  ASSERT_EQ(run.agents.size(), 2u);
  EXPECT_EQ(actions_str(run.agents[0].strategy.actions), "a1,a1");
  EXPECT_EQ(actions_str(run.agents[1].strategy.actions), "a3,a3,a1,a1");
  EXPECT_EQ(run.costs.total, Money::euros(120));
  EXPECT_EQ(run.agents[0].oracle_match, true);
  EXPECT_EQ(run.agents[1].oracle_match, true);
}

TEST(RunTest, ZeroEpisodesIsNotConverged) {
  ScenarioConfig c;
  c.learning.episodes = 0;
  const auto run = run_scenario(c);
  EXPECT_FALSE(run.converged);
  EXPECT_FALSE(summary_json(run)["converged"].get<bool>());
}

TEST(RunTest, OracleSkippedWhenUnavailable) {
  ScenarioConfig c;
  c.policy.budget_gates_phc = true;
  c.learning.episodes = 20;
  const auto run = run_scenario(c);
  EXPECT_TRUE(run.oracle_note.has_value());
  for (const auto& a : run.agents) EXPECT_FALSE(a.oracle_match.has_value());
  EXPECT_TRUE(summary_json(run)["agents"][0]["oracle_match"].is_null());
  EXPECT_THROW(oracle_report(c), OracleUnavailable);
}

TEST(RunTest, OutputsAreByteIdenticalAcrossRuns) {
  ScenarioConfig c;
  c.learning.seed = 3;
  const auto a = run_scenario(c);
  const auto b = run_scenario(c);
  EXPECT_EQ(learning_curves_csv(a), learning_curves_csv(b));
  EXPECT_EQ(rollout_csv(a), rollout_csv(b));
  EXPECT_EQ(ledger_csv(a), ledger_csv(b));
  EXPECT_EQ(summary_json(a).dump(), summary_json(b).dump());
}

TEST(RunTest, CsvHeaders) {
  ScenarioConfig c;
  c.learning.episodes = 5;
  const auto run = run_scenario(c);
  EXPECT_EQ(first_line(learning_curves_csv(run)), "episode,agent_id,return,epsilon");
  EXPECT_EQ(first_line(rollout_csv(run)),
            "step,agent_id,action,feasible,reward,health,registered,bodily_health,affiliation");
  EXPECT_EQ(first_line(ledger_csv(run)), "timestep,agent,service,amount_cents,remaining_cents");
  // one row per episode and agent
  const auto curves = learning_curves_csv(run);
  EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 1 + 5 * 2);
}

TEST(RunTest, CompareOnAndOff) {
  const auto cmp = compare_policies(ScenarioConfig{});
  EXPECT_EQ(cmp.costs.policy_off.total, Money::euros(120));
  EXPECT_GE(cmp.costs.policy_on.total, cmp.costs.policy_off.total);
  ASSERT_EQ(cmp.diffs.size(), 2u);
  EXPECT_EQ(cmp.diffs[0].strategy_length_on, cmp.diffs[0].strategy_length_off);
  EXPECT_GT(cmp.diffs[1].strategy_length_on, cmp.diffs[1].strategy_length_off);
  EXPECT_EQ(cmp.diffs[1].capabilities.front(), "bodily_health");
  EXPECT_GT(cmp.diffs[1].time_to_max_on.front(), cmp.diffs[1].time_to_max_off.front());
  EXPECT_FALSE(cmp.policy_off.config.policy.phc_requires_registration);
}

TEST(RunTest, OracleReportDefault) {
  const auto rep = oracle_report(ScenarioConfig{});
  ASSERT_EQ(rep.agents.size(), 2u);
  for (const auto& a : rep.agents) {
    EXPECT_TRUE(a.match);
    EXPECT_FALSE(a.rows.empty());
  }
  const auto j = oracle_json(rep);
  EXPECT_EQ(j["agents"].size(), 2u);
}

TEST(RunTest, WritesOutputFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "capasim_run_test";
  std::filesystem::remove_all(dir);
  ScenarioConfig c;
  c.learning.episodes = 10;
  const auto run = run_scenario(c);
  write_run_outputs(run, dir);
  for (const char* f : {"learning_curves.csv", "rollout.csv", "ledger.csv", "summary.json"})
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(summary["config_hash"], config_hash(c));
  EXPECT_EQ(parse_config(summary["config"].dump()), c);

  c.output.formats = {"json"};
  const auto json_only = dir / "json_only";
  write_run_outputs(run_scenario(c), json_only);
  EXPECT_FALSE(std::filesystem::exists(json_only / "rollout.csv"));
  EXPECT_TRUE(std::filesystem::exists(json_only / "summary.json"));
  std::filesystem::remove_all(dir);
}

TEST(FormatTest, Numbers) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(-100.0), "-100");
  EXPECT_EQ(format_number(19.9), "19.9");
}

}  // namespace
}  // namespace capasim
