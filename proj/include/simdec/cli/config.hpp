#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdec/data/synthetic.hpp"
#include "simdec/decision/train.hpp"
#include "simdec/sim/train.hpp"

namespace simdec::cli {

inline constexpr int kConfigVersion = 1;
inline constexpr int kManifestVersion = 1;

struct SimulatorSettings {
  std::size_t embed_dim = 32;
  std::size_t hidden_dim = 64;
  bool reconsume_z = false;
  /// Baselines trained next to sim2dec: any of "markov", "prediction", "generation".
  std::vector<std::string> baselines{"markov", "prediction", "generation"};
  double markov_alpha = 1.0;
  sim::TrainConfig train;

  nlohmann::json to_json() const;
  static SimulatorSettings from_json(const nlohmann::json& j);
};

/// Everything an experiment tree needs. Exactly one data source is set: a
/// synthetic generator config, or a CSV dataset with its schema file.
struct ExperimentConfig {
  int version = kConfigVersion;
  std::optional<data::SyntheticConfig> synthetic;
  std::filesystem::path dataset;
  std::filesystem::path schema;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  SimulatorSettings simulator;
  decision::PolicyConfig policy;
  bool run_bandit = true;
  decision::BanditConfig bandit;
  std::vector<double> lambdas{0.0, 0.25, 0.5, 1.0, 2.0};
  double shift_quantile = 0.5;
  /// Pooling batch for inference and reward simulation.
  std::size_t eval_batch_size = 256;
  std::filesystem::path out;

  /// Throws std::invalid_argument describing the first problem found.
  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Parses "1,2,3" into seeds.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace simdec::cli
