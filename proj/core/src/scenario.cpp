#include "capasim/scenario.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <set>

#include "capasim/errors.hpp"

namespace capasim {

using nlohmann::json;

bool OutputConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

namespace {

/// Reads fields from one JSON object, rejecting keys that were never asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    known_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = find(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ConfigError(sub(key), "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ConfigError(sub(key), "expected an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v->is_number()) throw ConfigError(sub(key), "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v->is_string()) throw ConfigError(sub(key), "expected a string");
      }
      out = v->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(sub(key), e.what());
    }
  }

  void money(const std::string& key, Money& out) {
    std::int64_t cents = out.cents();
    get(key, cents);
    out = Money::cents(cents);
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!known_.count(k)) throw ConfigError(sub(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

Cell read_cell(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
    throw ConfigError(path, "expected [row, col]");
  return {v[0].get<int>(), v[1].get<int>()};
}

json cell_json(Cell c) { return json::array({c.row, c.col}); }

void read_optional_cell(Reader& r, const std::string& key, std::optional<Cell>& out) {
  if (const json* v = r.find(key)) out = v->is_null() ? std::nullopt : std::optional<Cell>(read_cell(*v, r.sub(key)));
}

void read_optional_int(Reader& r, const std::string& key, std::optional<int>& out) {
  if (const json* v = r.find(key)) {
    if (v->is_null()) {
      out.reset();
    } else if (v->is_number_integer()) {
      out = v->get<int>();
    } else {
      throw ConfigError(r.sub(key), "expected an integer or null");
    }
  }
}

WorldConfig read_world(const json& j) {
  WorldConfig w;
  Reader r(j, "world");
  r.get("width", w.width);
  r.get("height", w.height);
  if (const json* f = r.find("facilities")) {
    Reader fr(*f, "world.facilities");
    read_optional_cell(fr, "phc", w.phc);
    read_optional_cell(fr, "social_services", w.social_services);
    read_optional_cell(fr, "icu", w.icu);
    fr.finish();
  }
  if (const json* v = r.find("social_workers")) {
    if (v->is_string() && v->get<std::string>() == "auto") {
      w.social_workers.reset();
    } else if (v->is_array()) {
      std::vector<Cell> cells;
      for (std::size_t i = 0; i < v->size(); ++i)
        cells.push_back(read_cell((*v)[i], "world.social_workers[" + std::to_string(i) + "]"));
      w.social_workers = std::move(cells);
    } else {
      throw ConfigError("world.social_workers", "expected \"auto\" or a list of cells");
    }
  }
  read_optional_int(r, "phc_capacity", w.phc_capacity);
  read_optional_int(r, "street_team_capacity", w.street_team_capacity);
  r.finish();
  return w;
}

PolicyRules read_policy(const json& j) {
  PolicyRules p;
  Reader r(j, "policy");
  r.get("phc_requires_registration", p.phc_requires_registration);
  r.get("engagement_threshold", p.engagement_threshold);
  r.money("cost_phc_cents", p.cost_phc);
  r.money("cost_icu_cents", p.cost_icu);
  r.money("initial_budget_cents", p.initial_budget);
  r.get("engagement_health_cost", p.engagement_health_cost);
  r.get("budget_gates_phc", p.budget_gates_phc);
  r.finish();
  return p;
}

PopulationSpec read_population(const json& j) {
  PopulationSpec p = PopulationSpec::two_agent_default();
  Reader r(j, "population");
  r.get("health_levels", p.scale.levels);
  r.get("health_delta", p.scale.delta);
  if (const json* groups = r.find("groups")) {
    if (!groups->is_array()) throw ConfigError("population.groups", "expected a list");
    p.groups.clear();
    for (std::size_t i = 0; i < groups->size(); ++i) {
      const auto path = "population.groups[" + std::to_string(i) + "]";
      Reader gr((*groups)[i], path);
      AgentGroup g;
      gr.get("count", g.count);
      gr.get("health", g.health);
      gr.get("registered", g.registered);
      if (const json* s = gr.find("start")) {
        if (s->is_string() && s->get<std::string>() == "auto") {
          g.start.reset();
        } else {
          g.start = read_cell(*s, path + ".start");
        }
      }
      gr.finish();
      p.groups.push_back(g);
    }
  }
  r.finish();
  return p;
}

Hyperparameters read_learning(const json& j) {
  Hyperparameters h;
  Reader r(j, "learning");
  r.get("gamma", h.gamma);
  r.get("learning_rate", h.learning_rate);
  r.get("epsilon", h.epsilon);
  r.get("epsilon_decay", h.epsilon_decay);
  r.get("epsilon_floor", h.epsilon_floor);
  r.get("episodes", h.episodes);
  r.get("max_steps", h.max_steps);
  r.get("seed", h.seed);
  r.get("mask_infeasible", h.mask_infeasible);
  r.get("full_coordinate_keys", h.full_coordinate_keys);
  r.finish();
  return h;
}

RewardConfig read_reward(const json& j) {
  RewardConfig c;
  Reader r(j, "reward");
  r.get("terminal_penalty", c.terminal_penalty);
  std::string credit = c.restoration_credit == RestorationCredit::OnProgress ? "on_progress" : "always";
  r.get("restoration_credit", credit);
  if (credit == "on_progress") {
    c.restoration_credit = RestorationCredit::OnProgress;
  } else if (credit == "always") {
    c.restoration_credit = RestorationCredit::Always;
  } else {
    throw ConfigError("reward.restoration_credit", "expected \"on_progress\" or \"always\"");
  }
  r.finish();
  return c;
}

EvaluationSection read_evaluation(const json& j) {
  EvaluationSection e;
  Reader r(j, "evaluation");
  if (const json* w = r.find("weights")) {
    if (!w->is_object()) throw ConfigError("evaluation.weights", "expected an object");
    e.weights.clear();
    for (const auto& [cap, actions] : w->items()) {
      const auto path = "evaluation.weights." + cap;
      if (!actions.is_object()) throw ConfigError(path, "expected an object of action weights");
      for (const auto& [action, weight] : actions.items()) {
        if (!parse_action(action)) throw ConfigError(path + "." + action, "unknown action");
        if (!weight.is_number()) throw ConfigError(path + "." + action, "expected a number");
        e.weights[cap][action] = weight.get<double>();
      }
    }
  }
  r.get("state_dependent_weights", e.metrics.state_dependent_weights);
  r.get("capability_threshold", e.metrics.capability_threshold);
  r.get("health_threshold", e.metrics.health_threshold);
  r.get("histogram_bins", e.metrics.histogram_bins);
  if (e.metrics.histogram_bins < 1) throw ConfigError("evaluation.histogram_bins", "must be positive");
  r.finish();
  return e;
}

OutputConfig read_output(const json& j) {
  OutputConfig o;
  Reader r(j, "output");
  r.get("directory", o.directory);
  if (const json* f = r.find("formats")) {
    if (!f->is_array()) throw ConfigError("output.formats", "expected a list");
    o.formats.clear();
    for (const auto& v : *f) {
      if (!v.is_string() || (v != "csv" && v != "json"))
        throw ConfigError("output.formats", "formats must be \"csv\" or \"json\"");
      o.formats.push_back(v.get<std::string>());
    }
  }
  r.finish();
  return o;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

ScenarioConfig from_json(const json& j) {
  ScenarioConfig c;
  Reader r(j, "");
  if (const json* v = r.find("world")) c.world = read_world(*v);
  if (const json* v = r.find("policy")) c.policy = read_policy(*v);
  if (const json* v = r.find("population")) c.population = read_population(*v);
  if (const json* v = r.find("learning")) c.learning = read_learning(*v);
  if (const json* v = r.find("reward")) c.reward = read_reward(*v);
  if (const json* v = r.find("evaluation")) c.evaluation = read_evaluation(*v);
  if (const json* v = r.find("output")) c.output = read_output(*v);
  r.finish();

  c.policy.validate();
  c.learning.validate();
  build_environment(c);  // validates world, population and catalog
  return c;
}

ScenarioConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte);
    throw ParseError(line, col, e.what());
  }
  return from_json(j);
}

json to_json(const ScenarioConfig& c) {
  auto opt_cell = [](const std::optional<Cell>& cell) { return cell ? cell_json(*cell) : json(nullptr); };
  auto opt_int = [](const std::optional<int>& v) { return v ? json(*v) : json(nullptr); };

  json workers = "auto";
  if (c.world.social_workers) {
    workers = json::array();
    for (const Cell w : *c.world.social_workers) workers.push_back(cell_json(w));
  }
  json groups = json::array();
  for (const auto& g : c.population.groups) {
    groups.push_back({{"count", g.count},
                      {"health", g.health},
                      {"registered", g.registered},
                      {"start", g.start ? cell_json(*g.start) : json("auto")}});
  }
  json weights = json::object();
  for (const auto& [cap, actions] : c.evaluation.weights)
    for (const auto& [a, w] : actions) weights[cap][a] = w;

  return {
      {"world",
       {{"width", c.world.width},
        {"height", c.world.height},
        {"facilities",
         {{"phc", opt_cell(c.world.phc)},
          {"social_services", opt_cell(c.world.social_services)},
          {"icu", opt_cell(c.world.icu)}}},
        {"social_workers", workers},
        {"phc_capacity", opt_int(c.world.phc_capacity)},
        {"street_team_capacity", opt_int(c.world.street_team_capacity)}}},
      {"policy",
       {{"phc_requires_registration", c.policy.phc_requires_registration},
        {"engagement_threshold", c.policy.engagement_threshold},
        {"cost_phc_cents", c.policy.cost_phc.cents()},
        {"cost_icu_cents", c.policy.cost_icu.cents()},
        {"initial_budget_cents", c.policy.initial_budget.cents()},
        {"engagement_health_cost", c.policy.engagement_health_cost},
        {"budget_gates_phc", c.policy.budget_gates_phc}}},
      {"population",
       {{"health_levels", c.population.scale.levels},
        {"health_delta", c.population.scale.delta},
        {"groups", groups}}},
      {"learning",
       {{"gamma", c.learning.gamma},
        {"learning_rate", c.learning.learning_rate},
        {"epsilon", c.learning.epsilon},
        {"epsilon_decay", c.learning.epsilon_decay},
        {"epsilon_floor", c.learning.epsilon_floor},
        {"episodes", c.learning.episodes},
        {"max_steps", c.learning.max_steps},
        {"seed", c.learning.seed},
        {"mask_infeasible", c.learning.mask_infeasible},
        {"full_coordinate_keys", c.learning.full_coordinate_keys}}},
      {"reward",
       {{"terminal_penalty", c.reward.terminal_penalty},
        {"restoration_credit",
         c.reward.restoration_credit == RestorationCredit::OnProgress ? "on_progress" : "always"}}},
      {"evaluation",
       {{"weights", weights},
        {"state_dependent_weights", c.evaluation.metrics.state_dependent_weights},
        {"capability_threshold", c.evaluation.metrics.capability_threshold},
        {"health_threshold", c.evaluation.metrics.health_threshold},
        {"histogram_bins", c.evaluation.metrics.histogram_bins}}},
      {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}}},
  };
}

std::string serialize_config(const ScenarioConfig& config) { return to_json(config).dump(); }

std::string config_hash(const ScenarioConfig& config) {
  const std::string text = serialize_config(config);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

CapabilityCatalog build_catalog(const ScenarioConfig& config) {
  const auto base = CapabilityCatalog::paper_default();
  std::vector<CapabilityLink> links = base.links();
  for (auto& l : links) l.evaluation_weight.reset();
  for (const auto& [cap, actions] : config.evaluation.weights) {
    if (!base.has_capability(cap)) throw ConfigError("evaluation.weights." + cap, "unknown capability");
    for (const auto& [name, weight] : actions) {
      const ActionId a = *parse_action(name);
      auto it = std::find_if(links.begin(), links.end(),
                             [&](const CapabilityLink& l) { return l.action == a && l.capability == cap; });
      if (it == links.end()) {
        links.push_back({a, cap, 0.0, 0.0, weight, Polarity::Restores, false});
      } else {
        it->evaluation_weight = weight;
      }
    }
  }
  return CapabilityCatalog(base.capabilities(), std::move(links), config.reward.terminal_penalty,
                           config.reward.restoration_credit);
}

Environment build_environment(const ScenarioConfig& config) {
  config.policy.validate();
  WorldModel world = build_world(config.world, config.population);
  auto agents = init_population(config.population, world);
  if (config.policy.engagement_health_cost != 0.0) {
    try {
      config.population.scale.steps_of(config.policy.engagement_health_cost);
    } catch (const ArgumentError& e) {
      throw ConfigError("policy.engagement_health_cost", e.what());
    }
  }
  return Environment{std::move(world), config.policy, config.population.scale, build_catalog(config),
                     std::move(agents)};
}

}  // namespace capasim
