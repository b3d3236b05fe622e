// capasim: train, compare and verify capability-approach policy scenarios.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "capasim/errors.hpp"
#include "capasim/run.hpp"

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string policy;
  std::optional<int> episodes;
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--config", opt.config_path, "Scenario config (JSON); defaults apply when omitted");
  cmd->add_option("--seed", opt.seed, "RNG seed (overrides learning.seed)");
  cmd->add_option("--out", opt.out, "Output directory (default: $CAPASIM_OUT, then output.directory)");
  cmd->add_option("--policy", opt.policy, "Registration gate override")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--episodes", opt.episodes, "Training episodes override")->check(CLI::NonNegativeNumber);
}

capasim::ScenarioConfig load(const Options& opt) {
  std::string text = "{}";
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path, std::ios::binary);
    if (!in) throw capasim::ConfigError("--config", "cannot read " + opt.config_path);
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  auto config = capasim::parse_config(text);
  if (opt.seed) config.learning.seed = *opt.seed;
  if (opt.episodes) config.learning.episodes = *opt.episodes;
  if (!opt.policy.empty()) config.policy.phc_requires_registration = opt.policy == "on";
  config.learning.validate();
  return config;
}

std::filesystem::path output_dir(const Options& opt, const capasim::ScenarioConfig& config) {
  if (!opt.out.empty()) return opt.out;
  if (const char* env = std::getenv("CAPASIM_OUT"); env && *env) return env;
  if (!config.output.directory.empty()) return config.output.directory;
  return "capasim_out";
}

int fail(const std::string& kind, const std::string& path, const std::string& message, int code) {
  nlohmann::json err = {{"error", {{"kind", kind}, {"path", path}, {"message", message}}}};
  std::cerr << err.dump() << '\n';
  return code;
}

void print_run(const capasim::RunResult& run) {
  std::cout << run.label << ": total cost " << run.costs.total.to_string() << " EUR, remaining "
            << run.costs.remaining.to_string() << " EUR" << (run.converged ? "" : " (not converged)") << '\n';
  for (const auto& a : run.agents) {
    std::cout << "  agent " << a.agent_id << (a.registered_initially ? " (registered)" : " (non-registered)")
              << ": ";
    for (auto act : a.strategy.actions) std::cout << capasim::to_string(act) << ' ';
    std::cout << "-> " << capasim::to_string(a.strategy.terminal) << ", " << a.cost.to_string() << " EUR\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capability-approach policy simulator"};
  app.require_subcommand(1);
  Options opt;
  auto* run_cmd = app.add_subcommand("run", "Train, roll out greedily and evaluate one scenario");
  auto* cmp_cmd = app.add_subcommand("compare", "Run the scenario with the registration gate on and off");
  auto* orc_cmd = app.add_subcommand("oracle", "Compare trained policies with value iteration");
  add_common(run_cmd, opt);
  add_common(cmp_cmd, opt);
  add_common(orc_cmd, opt);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto config = load(opt);
    const auto dir = output_dir(opt, config);
    if (run_cmd->parsed()) {
      const auto run = capasim::run_scenario(config, config.policy.phc_requires_registration ? "policy_on" : "policy_off");
      capasim::write_run_outputs(run, dir);
      print_run(run);
    } else if (cmp_cmd->parsed()) {
      const auto cmp = capasim::compare_policies(config);
      capasim::write_compare_outputs(cmp, dir);
      print_run(cmp.policy_on);
      print_run(cmp.policy_off);
      std::cout << "cost difference (on - off): " << cmp.costs.difference.to_string() << " EUR\n";
    } else {
      const auto report = capasim::oracle_report(config);
      capasim::write_oracle_outputs(report, dir);
      for (const auto& a : report.agents) {
        std::cout << "agent " << a.agent_id << ": " << (a.match ? "match" : "MISMATCH") << "  optimal:";
        for (auto act : a.oracle_rollout.actions) std::cout << ' ' << capasim::to_string(act);
        std::cout << "  trained:";
        for (auto act : a.trained_rollout.actions) std::cout << ' ' << capasim::to_string(act);
        std::cout << '\n';
      }
    }
  } catch (const capasim::ConfigError& e) {
    return fail("config", e.path(), e.what(), 2);
  } catch (const capasim::ParseError& e) {
    return fail("parse", "", e.what(), 2);
  } catch (const capasim::OracleUnavailable& e) {
    return fail("oracle_unavailable", "", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("internal", "", e.what(), 1);
  }
  return 0;
}
