#include "simdec/cli/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace simdec::cli {

nlohmann::json SimulatorSettings::to_json() const {
  return {{"embed_dim", embed_dim},       {"hidden_dim", hidden_dim}, {"reconsume_z", reconsume_z},
          {"baselines", baselines},       {"markov_alpha", markov_alpha}, {"train", train.to_json()}};
}

SimulatorSettings SimulatorSettings::from_json(const nlohmann::json& j) {
  SimulatorSettings s;
  s.embed_dim = j.value("embed_dim", s.embed_dim);
  s.hidden_dim = j.value("hidden_dim", s.hidden_dim);
  s.reconsume_z = j.value("reconsume_z", s.reconsume_z);
  if (j.contains("baselines")) s.baselines = j.at("baselines").get<std::vector<std::string>>();
  s.markov_alpha = j.value("markov_alpha", s.markov_alpha);
  if (j.contains("train")) s.train = sim::TrainConfig::from_json(j.at("train"), s.train);
  return s;
}

void ExperimentConfig::validate() const {
  if (version != kConfigVersion) {
    throw std::invalid_argument("config: unsupported version " + std::to_string(version) + " (expected " +
                                std::to_string(kConfigVersion) + ")");
  }
  const bool has_csv = !dataset.empty() || !schema.empty();
  if (synthetic && has_csv) throw std::invalid_argument("config: give either 'synthetic' or 'dataset'/'schema', not both");
  if (!synthetic && (dataset.empty() || schema.empty())) {
    throw std::invalid_argument("config: a dataset needs both 'dataset' and 'schema' (or use 'synthetic')");
  }
  if (synthetic) synthetic->validate();
  if (seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
  for (const std::string& b : simulator.baselines) {
    if (b != "markov" && b != "prediction" && b != "generation") {
      throw std::invalid_argument("config: unknown simulator baseline '" + b + "'");
    }
  }
  if (simulator.markov_alpha < 0.0) throw std::invalid_argument("config: markov_alpha must be >= 0");
  if (lambdas.empty()) throw std::invalid_argument("config: lambda sweep is empty");
  for (double l : lambdas) {
    if (l < 0.0) throw std::invalid_argument("config: lambda values must be >= 0");
  }
  if (!(shift_quantile > 0.0 && shift_quantile < 1.0)) throw std::invalid_argument("config: shift quantile must be in (0, 1)");
  if (eval_batch_size == 0) throw std::invalid_argument("config: eval_batch_size must be > 0");
  if (policy.batch_size < 2) throw std::invalid_argument("config: policy batch_size must be >= 2");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j{{"version", version},
                   {"seeds", seeds},
                   {"simulator", simulator.to_json()},
                   {"policy", policy.to_json()},
                   {"run_bandit", run_bandit},
                   {"bandit", bandit.to_json()},
                   {"lambdas", lambdas},
                   {"shift_quantile", shift_quantile},
                   {"eval_batch_size", eval_batch_size},
                   {"out", out.string()}};
  if (synthetic) {
    j["synthetic"] = synthetic->to_json();
  } else {
    j["dataset"] = dataset.string();
    j["schema"] = schema.string();
  }
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (!j.contains("version")) throw std::invalid_argument("config: missing 'version' field");
  c.version = j.at("version").get<int>();
  if (j.contains("synthetic")) c.synthetic = data::SyntheticConfig::from_json(j.at("synthetic"));
  c.dataset = j.value("dataset", std::string());
  c.schema = j.value("schema", std::string());
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("simulator")) c.simulator = SimulatorSettings::from_json(j.at("simulator"));
  if (j.contains("policy")) c.policy = decision::PolicyConfig::from_json(j.at("policy"), c.policy);
  c.run_bandit = j.value("run_bandit", c.run_bandit);
  if (j.contains("bandit")) c.bandit = decision::BanditConfig::from_json(j.at("bandit"), c.bandit);
  if (j.contains("lambdas")) c.lambdas = j.at("lambdas").get<std::vector<double>>();
  c.shift_quantile = j.value("shift_quantile", c.shift_quantile);
  c.eval_batch_size = j.value("eval_batch_size", c.eval_batch_size);
  c.out = j.value("out", std::string());
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  ExperimentConfig c = from_json(j);
  // Relative data paths are resolved against the config file's directory.
  const std::filesystem::path base = path.parent_path();
  if (!c.dataset.empty() && c.dataset.is_relative()) c.dataset = base / c.dataset;
  if (!c.schema.empty() && c.schema.is_relative()) c.schema = base / c.schema;
  return c;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw std::invalid_argument("bad seed '" + item + "' in seed list");
    seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (seeds.empty()) throw std::invalid_argument("seed list is empty");
  return seeds;
}

}  // namespace simdec::cli
