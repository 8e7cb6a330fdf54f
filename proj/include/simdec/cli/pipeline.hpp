#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "simdec/cli/config.hpp"
#include "simdec/data/counterfactual.hpp"
#include "simdec/data/split.hpp"
#include "simdec/decision/policy.hpp"
#include "simdec/decision/train.hpp"
#include "simdec/eval/metrics.hpp"
#include "simdec/sim/markov.hpp"
#include "simdec/sim/model.hpp"

namespace simdec::cli {

/// Raw orders plus, for synthetic data, the rule that generated them.
struct SourceData {
  std::vector<data::OrderRecord> records;
  data::DatasetSchema schema;
  std::optional<data::PlantedRule> rule;
};

/// Generates the synthetic dataset or loads the CSV named by the config.
SourceData load_source(const ExperimentConfig& config);

/// One split of a dataset with everything fitted on its training rows.
struct PreparedData {
  data::DatasetSplit split;
  data::EncodedDataset encoded;  // all rows
  data::ProfitNormalizer norm;
  data::HistoricalStats stats;
  data::CounterfactualTable counterfactuals;  // all rows
  data::EncodedDataset train, val, test;

  bool has_truth() const { return counterfactuals.has_truth(); }
};

PreparedData prepare_data(const SourceData& source, const data::DatasetSplit& split);
/// The split every command uses for `seed`.
data::DatasetSplit standard_split(const SourceData& source, std::uint64_t seed);

sim::ModelShape model_shape(const PreparedData& prepared, const SimulatorSettings& settings);

struct ModelRun {
  std::string method;  // "sim2dec", "markov", "prediction", "generation"
  eval::AttributeAccuracy test_accuracy;
  std::optional<sim::TrainResult> training;  // absent for the count-based model
  double seconds = 0.0;
};

struct SimulatorSuite {
  std::unique_ptr<sim::StateModel> sim2dec;
  std::vector<std::unique_ptr<sim::StateModel>> learned_baselines;
  std::optional<sim::MarkovModel> markov;
  std::vector<ModelRun> runs;  // sim2dec first, then baselines in config order
};

/// Trains sim2dec and the configured baselines for one seed and scores them on
/// the test rows.
SimulatorSuite train_simulators(const PreparedData& prepared, const SimulatorSettings& settings, std::uint64_t seed,
                                std::size_t eval_batch_size);

eval::AttributeAccuracy test_accuracy(const sim::StateModel& model, const data::EncodedDataset& test,
                                      std::size_t batch_size);
eval::AttributeAccuracy test_accuracy(const sim::MarkovModel& model, const data::EncodedDataset& test);

/// Reward tables for policy learning: simulated on train and validation rows,
/// and the table the test rows are scored with (planted truth when known,
/// otherwise simulated status with counterfactual profit).
struct DecisionSetup {
  decision::RewardTable train_rewards;
  decision::RewardTable val_rewards;
  decision::RewardTable test_outcomes;
  bool test_is_truth = false;
};

DecisionSetup decision_setup(const PreparedData& prepared, const sim::StateModel& simulator,
                             std::size_t eval_batch_size);

struct DecisionRow {
  std::string method;
  eval::DecisionMetrics metrics;
  std::optional<double> oracle_match;  // fraction of test orders given the oracle mode
  std::vector<int> mode_counts;

  nlohmann::json to_json() const;
};

DecisionRow score_modes_row(const std::string& method, const PreparedData& prepared, const DecisionSetup& setup,
                            std::span<const int> modes);

struct PolicyRun {
  std::unique_ptr<decision::DecisionPolicy> policy;
  decision::PolicyTrainResult training;
  DecisionRow row;
  double seconds = 0.0;
};

PolicyRun run_policy(const PreparedData& prepared, const DecisionSetup& setup, const decision::PolicyConfig& config,
                     const std::string& label);

struct BanditRun {
  std::unique_ptr<decision::DecisionPolicy> q;
  std::vector<decision::BanditEpoch> training;
  DecisionRow row;
  double seconds = 0.0;
};

BanditRun run_bandit(const PreparedData& prepared, const DecisionSetup& setup, const decision::BanditConfig& config);

/// The rows of the decision table for one seed: Real (historical modes and
/// realized states), LP (test-leaking enumeration), bandit-Q, Sim-to-Dec and,
/// when the planted rule is known, Oracle.
struct DecisionSuite {
  std::vector<DecisionRow> rows;
  PolicyRun policy;
  std::optional<BanditRun> bandit;
  int lp_mode = 0;
};

DecisionSuite run_decisions(const PreparedData& prepared, const DecisionSetup& setup, const ExperimentConfig& config,
                            std::uint64_t seed);

struct AblationResult {
  std::vector<double> lambdas;
  std::vector<DecisionRow> sweep;
  DecisionRow historical_only;
  DecisionRow future_only;
  DecisionRow combined;
  double combined_lambda = 0.0;
  /// First lambda reaching the highest Overall (compared at 4 decimals).
  double best_lambda = 0.0;
  bool best_interior = false;

  nlohmann::json to_json() const;
};

AblationResult run_ablation(const PreparedData& prepared, const DecisionSetup& setup, const ExperimentConfig& config,
                            std::uint64_t seed);

struct MethodHistogram {
  std::string method;
  std::vector<double> expected;  // mean predicted class distribution
  std::vector<double> hard;      // histogram of decoded (or sampled) classes
  double tv_expected = 0.0;
  double tv_hard = 0.0;
};

struct ShiftResult {
  int threshold = 0;
  std::vector<double> train_histogram;
  std::vector<double> test_histogram;
  std::vector<MethodHistogram> methods;  // sim2dec first
  std::vector<ModelRun> runs;

  nlohmann::json to_json() const;
  const MethodHistogram& method(const std::string& name) const;
};

/// Trains on the low-time orders of a shift split and compares each method's
/// generated time-class distribution on the shifted test orders to the truth.
ShiftResult run_shift(const SourceData& source, const ExperimentConfig& config, std::uint64_t seed);

/// Flattened numeric metrics keyed by "group.method.metric"; used for
/// multi-seed aggregation.
using FlatMetrics = std::map<std::string, double>;

/// Mean and population standard deviation across seeds of every key present in
/// all records.
nlohmann::json aggregate(const std::vector<FlatMetrics>& per_seed);

}  // namespace simdec::cli
