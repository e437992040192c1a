#include "psl/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "psl/errors.hpp"

namespace psl {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownFields = {
    "name",          "preset",           "hypotheses",      "theta0",
    "theta_tx",      "likelihoods",      "topology",        "lambda",
    "strategies",    "horizon",          "runs",            "seed",
    "record_stride", "initial_beliefs",  "convergence",     "rate_window"};

LikelihoodModel gaussian_model(std::vector<double> means) {
  return LikelihoodModel(GaussianMeans{std::move(means)});
}

LikelihoodModel discrete_model(std::vector<std::vector<double>> rows) {
  return LikelihoodModel(DiscretePmf{std::move(rows)});
}

ScenarioConfig base_config(std::string name, std::string topology, double lambda) {
  ScenarioConfig cfg;
  cfg.name = std::move(name);
  cfg.hypotheses = HypothesisSet{3, 0, 1};
  cfg.topology.preset = std::move(topology);
  cfg.lambda = lambda;
  return cfg;
}

// Agents 1-3 confuse theta 1 and 2, agents 4-6 confuse 2 and 3, agents 7-10
// confuse 1 and 3; theta 1 is the truth.
template <typename Row>
std::vector<std::vector<Row>> grouped_assignment(const Row& f1, const Row& f2, const Row& f3) {
  std::vector<std::vector<Row>> out;
  for (int k = 0; k < 3; ++k) out.push_back({f1, f1, f3});
  for (int k = 0; k < 3; ++k) out.push_back({f1, f2, f2});
  for (int k = 0; k < 4; ++k) out.push_back({f1, f2, f1});
  return out;
}

ScenarioConfig gaussian_preset() {
  auto cfg = base_config("gaussian-siv-a", "paper-fig4-like", 0.5);
  for (const auto& means : grouped_assignment(0.0, 0.5, 5.0)) cfg.models.push_back(gaussian_model(means));
  return cfg;
}

ScenarioConfig discrete_preset() {
  auto cfg = base_config("discrete-siv-b", "paper-fig4-like", 0.7);
  const auto& f = discrete_preset_pmfs();
  for (const auto& rows : grouped_assignment(f.f1, f.f2, f.f3)) cfg.models.push_back(discrete_model(rows));
  return cfg;
}

ScenarioConfig tiny_preset() {
  auto cfg = base_config("tiny-k2h3", "complete-2", 0.5);
  cfg.horizon = 100;
  cfg.models.push_back(discrete_model({{0.7, 0.3}, {0.4, 0.6}, {0.7, 0.3}}));
  cfg.models.push_back(discrete_model({{0.7, 0.3}, {0.7, 0.3}, {0.2, 0.8}}));
  return cfg;
}

class Parser {
 public:
  std::vector<std::string> errors;

  template <typename T>
  std::optional<T> get(const json& doc, const std::string& key, const std::string& path) {
    if (!doc.contains(key)) return std::nullopt;
    return as<T>(doc.at(key), path);
  }

  template <typename T>
  std::optional<T> as(const json& value, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!value.is_number()) throw std::runtime_error("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!value.is_number_integer()) throw std::runtime_error("");
        if constexpr (std::is_unsigned_v<T>)
          if (!value.is_number_unsigned() && value.get<long long>() < 0) {
            errors.push_back(path + ": must be a non-negative integer");
            return std::nullopt;
          }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!value.is_string()) throw std::runtime_error("");
      }
      return value.get<T>();
    } catch (const std::exception&) {
      errors.push_back(path + ": expected " + type_name<T>() + ", got " + value.type_name());
      return std::nullopt;
    }
  }

  // 1-based index field converted to 0-based.
  std::optional<Index> index(const json& doc, const std::string& key, const std::string& path) {
    auto v = get<long long>(doc, key, path);
    if (!v) return std::nullopt;
    if (*v < 1) {
      errors.push_back(path + ": indices are 1-based, got " + std::to_string(*v));
      return std::nullopt;
    }
    return static_cast<Index>(*v - 1);
  }

  std::optional<std::vector<double>> numbers(const json& value, const std::string& path) {
    if (!value.is_array()) {
      errors.push_back(path + ": expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < value.size(); ++i) {
      auto v = as<double>(value[i], path + "[" + std::to_string(i) + "]");
      if (v) out.push_back(*v); else ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

 private:
  template <typename T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, double>) return "a number";
    else if constexpr (std::is_integral_v<T>) return "an integer";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else return "a value";
  }
};

std::optional<LikelihoodModel> parse_model(Parser& p, const json& spec, const std::string& path) {
  if (!spec.is_object()) {
    p.errors.push_back(path + ": expected an object with a \"type\" field");
    return std::nullopt;
  }
  auto type = p.get<std::string>(spec, "type", path + ".type");
  if (!type) {
    if (!spec.contains("type")) p.errors.push_back(path + ".type: required (\"gaussian\" or \"discrete\")");
    return std::nullopt;
  }
  try {
    if (*type == "gaussian") {
      if (!spec.contains("means")) {
        p.errors.push_back(path + ".means: required for gaussian models");
        return std::nullopt;
      }
      auto means = p.numbers(spec.at("means"), path + ".means");
      if (!means) return std::nullopt;
      return gaussian_model(std::move(*means));
    }
    if (*type == "discrete") {
      if (!spec.contains("pmf") || !spec.at("pmf").is_array()) {
        p.errors.push_back(path + ".pmf: required array of rows for discrete models");
        return std::nullopt;
      }
      std::vector<std::vector<double>> rows;
      bool ok = true;
      const auto& pmf = spec.at("pmf");
      for (std::size_t r = 0; r < pmf.size(); ++r) {
        auto row = p.numbers(pmf[r], path + ".pmf[" + std::to_string(r) + "]");
        if (row) rows.push_back(std::move(*row)); else ok = false;
      }
      if (!ok) return std::nullopt;
      return discrete_model(std::move(rows));
    }
    p.errors.push_back(path + ".type: unknown model type '" + *type +
                       "' (expected \"gaussian\" or \"discrete\")");
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) p.errors.push_back(path + "." + v);
  }
  return std::nullopt;
}

void parse_topology(Parser& p, const json& spec, TopologySpec& out) {
  if (!spec.is_object()) {
    p.errors.push_back("topology: expected an object with \"preset\" or \"agents\" and \"edges\"");
    return;
  }
  for (const auto& [key, value] : spec.items())
    if (key != "preset" && key != "agents" && key != "edges")
      p.errors.push_back("topology." + key + ": unknown field");
  if (spec.contains("preset")) {
    auto name = p.get<std::string>(spec, "preset", "topology.preset");
    if (!name) return;
    if (!is_topology_preset(*name)) {
      p.errors.push_back("topology.preset: unknown preset '" + *name +
                         "' (expected paper-fig4-like, complete-<K> or ring-<K>)");
      return;
    }
    if (spec.contains("edges"))
      p.errors.push_back("topology: give either \"preset\" or \"edges\", not both");
    out = TopologySpec{*name, 0, {}};
    return;
  }
  auto agents = p.get<std::size_t>(spec, "agents", "topology.agents");
  if (!agents) {
    if (!spec.contains("agents")) p.errors.push_back("topology.agents: required with an edge list");
    return;
  }
  TopologySpec t{"", *agents, {}};
  if (spec.contains("edges")) {
    const auto& edges = spec.at("edges");
    if (!edges.is_array()) {
      p.errors.push_back("topology.edges: expected an array of [from, to] pairs");
      return;
    }
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const std::string path = "topology.edges[" + std::to_string(e) + "]";
      const auto& pair = edges[e];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() ||
          !pair[1].is_number_integer()) {
        p.errors.push_back(path + ": expected [from, to] with 1-based agent indices");
        continue;
      }
      const auto from = pair[0].get<long long>();
      const auto to = pair[1].get<long long>();
      if (from < 1 || to < 1 || from > static_cast<long long>(*agents) ||
          to > static_cast<long long>(*agents)) {
        p.errors.push_back(path + ": agent indices must be in [1, " + std::to_string(*agents) + "]");
        continue;
      }
      t.edges.emplace_back(static_cast<std::size_t>(from - 1), static_cast<std::size_t>(to - 1));
    }
  }
  out = std::move(t);
}

}  // namespace

const DiscretePresetPmfs& discrete_preset_pmfs() {
  static const DiscretePresetPmfs pmfs{
      {0.60, 0.30, 0.10},
      {0.45, 0.35, 0.20},
      {0.05, 0.15, 0.80},
  };
  return pmfs;
}

std::vector<std::string> preset_names() { return {"gaussian-siv-a", "discrete-siv-b", "tiny-k2h3"}; }

bool is_preset(const std::string& name) {
  for (const auto& n : preset_names())
    if (n == name) return true;
  return false;
}

ScenarioConfig preset_config(const std::string& name) {
  if (name == "gaussian-siv-a") return gaussian_preset();
  if (name == "discrete-siv-b") return discrete_preset();
  if (name == "tiny-k2h3") return tiny_preset();
  throw ValidationError("preset: unknown preset '" + name +
                        "' (expected gaussian-siv-a, discrete-siv-b or tiny-k2h3)");
}

ScenarioConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");
  Parser p;
  for (const auto& [key, value] : doc.items())
    if (!kKnownFields.contains(key)) p.errors.push_back(key + ": unknown field");

  ScenarioConfig cfg;
  bool from_preset = false;
  if (auto name = p.get<std::string>(doc, "preset", "preset")) {
    if (is_preset(*name)) {
      cfg = preset_config(*name);
      from_preset = true;
    } else {
      p.errors.push_back("preset: unknown preset '" + *name +
                         "' (expected gaussian-siv-a, discrete-siv-b or tiny-k2h3)");
    }
  }

  if (auto v = p.get<std::string>(doc, "name", "name")) cfg.name = *v;

  if (doc.contains("likelihoods")) {
    const auto& list = doc.at("likelihoods");
    if (!list.is_array()) {
      p.errors.push_back("likelihoods: expected an array with one model per agent");
    } else {
      cfg.models.clear();
      for (std::size_t k = 0; k < list.size(); ++k)
        if (auto m = parse_model(p, list[k], "likelihoods[" + std::to_string(k) + "]"))
          cfg.models.push_back(std::move(*m));
    }
  } else if (!from_preset) {
    p.errors.push_back("likelihoods: required (one model per agent)");
  }

  if (auto v = p.get<std::size_t>(doc, "hypotheses", "hypotheses")) {
    cfg.hypotheses.count = *v;
  } else if (!from_preset && !doc.contains("hypotheses") && !cfg.models.empty()) {
    cfg.hypotheses.count = cfg.models.front().hypotheses();
  }
  if (auto v = p.index(doc, "theta0", "theta0")) cfg.hypotheses.truth = *v;
  if (auto v = p.index(doc, "theta_tx", "theta_tx")) {
    cfg.hypotheses.transmitted = *v;
  } else if (!from_preset && !doc.contains("theta_tx")) {
    p.errors.push_back("theta_tx: required (1-based transmitted hypothesis)");
  }

  if (doc.contains("topology")) {
    parse_topology(p, doc.at("topology"), cfg.topology);
  } else if (!from_preset) {
    p.errors.push_back("topology: required");
  }

  if (auto v = p.get<double>(doc, "lambda", "lambda")) cfg.lambda = *v;
  if (doc.contains("strategies")) {
    const auto& list = doc.at("strategies");
    if (!list.is_array()) {
      p.errors.push_back("strategies: expected an array of strategy names");
    } else {
      cfg.strategies.clear();
      for (std::size_t s = 0; s < list.size(); ++s) {
        const std::string path = "strategies[" + std::to_string(s) + "]";
        if (auto name = p.as<std::string>(list[s], path)) {
          try {
            cfg.strategies.push_back(parse_strategy(*name));
          } catch (const ValidationError&) {
            p.errors.push_back(path + ": unknown strategy '" + *name +
                               "' (expected traditional, partial-no-sa or partial-sa)");
          }
        }
      }
    }
  }
  if (auto v = p.get<std::size_t>(doc, "horizon", "horizon")) cfg.horizon = *v;
  if (auto v = p.get<std::size_t>(doc, "runs", "runs")) cfg.runs = *v;
  if (auto v = p.get<std::uint64_t>(doc, "seed", "seed")) cfg.seed = *v;
  if (auto v = p.get<std::size_t>(doc, "record_stride", "record_stride")) cfg.record_stride = *v;

  if (doc.contains("initial_beliefs")) {
    const auto& list = doc.at("initial_beliefs");
    if (!list.is_array()) {
      p.errors.push_back("initial_beliefs: expected one probability vector per agent");
    } else {
      std::vector<BeliefVector> beliefs;
      bool ok = true;
      for (std::size_t k = 0; k < list.size(); ++k) {
        const std::string path = "initial_beliefs[" + std::to_string(k) + "]";
        auto probs = p.numbers(list[k], path);
        if (!probs) {
          ok = false;
          continue;
        }
        double sum = 0.0;
        bool positive = !probs->empty();
        for (double x : *probs) {
          sum += x;
          positive = positive && x > 0.0 && std::isfinite(x);
        }
        if (!positive) {
          p.errors.push_back(path + ": entries must be strictly positive");
          ok = false;
        } else if (std::abs(sum - 1.0) > 1e-9) {
          p.errors.push_back(path + ": entries must sum to 1 (got " + std::to_string(sum) + ")");
          ok = false;
        } else {
          beliefs.push_back(BeliefVector::from_probabilities(*probs));
        }
      }
      if (ok) cfg.initial_beliefs = std::move(beliefs);
    }
  }

  if (doc.contains("convergence")) {
    const auto& c = doc.at("convergence");
    if (!c.is_object()) {
      p.errors.push_back("convergence: expected an object");
    } else {
      for (const auto& [key, value] : c.items())
        if (key != "epsilon" && key != "confirmation_window")
          p.errors.push_back("convergence." + key + ": unknown field");
      if (auto v = p.get<double>(c, "epsilon", "convergence.epsilon")) cfg.convergence.epsilon = *v;
      if (auto v = p.get<std::size_t>(c, "confirmation_window", "convergence.confirmation_window"))
        cfg.convergence.confirmation_window = *v;
    }
  }

  if (doc.contains("rate_window")) {
    const auto& w = doc.at("rate_window");
    if (!w.is_array() || w.size() != 2 || !w[0].is_number_unsigned() || !w[1].is_number_unsigned()) {
      p.errors.push_back("rate_window: expected [first, last] iteration numbers");
    } else {
      cfg.rate_window = std::pair{w[0].get<std::size_t>(), w[1].get<std::size_t>()};
    }
  }

  // Report semantic violations alongside the parse errors in one pass.
  try {
    cfg.validate();
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations())
      if (std::find(p.errors.begin(), p.errors.end(), v) == p.errors.end()) p.errors.push_back(v);
  }
  if (!p.errors.empty()) throw ValidationError(std::move(p.errors));
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ValidationError("config: " + path.string() + " is not valid JSON (" + e.what() + ")");
  }
  return parse_config(doc);
}

json serialize_config(const ScenarioConfig& cfg) {
  json doc;
  doc["name"] = cfg.name;
  doc["hypotheses"] = cfg.hypotheses.count;
  doc["theta0"] = cfg.hypotheses.truth + 1;
  doc["theta_tx"] = cfg.hypotheses.transmitted + 1;
  json models = json::array();
  for (const auto& m : cfg.models) {
    if (m.is_gaussian()) {
      models.push_back({{"type", "gaussian"}, {"means", m.gaussian().means}});
    } else {
      models.push_back({{"type", "discrete"}, {"pmf", m.pmf().rows}});
    }
  }
  doc["likelihoods"] = std::move(models);
  if (!cfg.topology.preset.empty()) {
    doc["topology"] = {{"preset", cfg.topology.preset}};
  } else {
    json edges = json::array();
    for (const auto& [from, to] : cfg.topology.edges) edges.push_back({from + 1, to + 1});
    doc["topology"] = {{"agents", cfg.topology.agents}, {"edges", std::move(edges)}};
  }
  doc["lambda"] = cfg.lambda;
  json strategies = json::array();
  for (StrategyKind kind : cfg.strategies) strategies.push_back(std::string(to_string(kind)));
  doc["strategies"] = std::move(strategies);
  doc["horizon"] = cfg.horizon;
  doc["runs"] = cfg.runs;
  doc["seed"] = cfg.seed;
  doc["record_stride"] = cfg.record_stride;
  if (cfg.initial_beliefs) {
    json beliefs = json::array();
    for (const auto& b : *cfg.initial_beliefs) beliefs.push_back(b.probabilities());
    doc["initial_beliefs"] = std::move(beliefs);
  }
  doc["convergence"] = {{"epsilon", cfg.convergence.epsilon},
                        {"confirmation_window", cfg.convergence.confirmation_window}};
  if (cfg.rate_window) doc["rate_window"] = {cfg.rate_window->first, cfg.rate_window->second};
  return doc;
}

}  // namespace psl
