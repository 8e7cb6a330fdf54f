#include "simdec/cli/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "simdec/data/csv.hpp"
#include "simdec/sim/train.hpp"

namespace simdec::cli {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<int> count_modes(std::span<const int> modes, int n_modes) {
  std::vector<int> counts(static_cast<std::size_t>(n_modes), 0);
  for (int m : modes) ++counts[static_cast<std::size_t>(m)];
  return counts;
}

// Whole-batch inference would pool over the entire evaluation set; chunking
// keeps pooling batches the same size as in training.
sim::SimulatedStates simulate_rows(const sim::StateModel& model, const data::EncodedDataset& ds,
                                   std::size_t batch_size) {
  return sim::simulate_batched(model, ds.features, ds.modes, batch_size);
}

}  // namespace

SourceData load_source(const ExperimentConfig& config) {
  SourceData src;
  if (config.synthetic) {
    data::SyntheticDataset ds = data::generate_synthetic(*config.synthetic);
    src.records = std::move(ds.records);
    src.schema = std::move(ds.schema);
    src.rule = std::move(ds.rule);
  } else {
    src.schema = data::load_schema(config.schema);
    src.records = data::load_csv(config.dataset, src.schema);
  }
  return src;
}

data::DatasetSplit standard_split(const SourceData& source, std::uint64_t seed) {
  return data::split(source.records.size(), seed);
}

PreparedData prepare_data(const SourceData& source, const data::DatasetSplit& split) {
  PreparedData p;
  p.split = split;
  p.encoded = data::encode(source.records, source.schema, split.train);
  p.norm = data::ProfitNormalizer::fit(p.encoded.profit, split.train);
  p.stats = data::compute_historical_stats(p.encoded, split.train, p.norm);
  if (source.rule) {
    p.counterfactuals = data::planted_counterfactuals(source.records, *source.rule, p.norm);
  } else {
    const std::vector<std::string> labels =
        source.schema.profit_condition_col.empty()
            ? std::vector<std::string>{}
            : data::column_labels(source.records, source.schema, source.schema.profit_condition_col);
    p.counterfactuals = data::historical_counterfactuals(p.encoded, split.train, p.norm, labels);
  }
  p.train = p.encoded.select(split.train);
  p.val = p.encoded.select(split.val);
  p.test = p.encoded.select(split.test);
  return p;
}

sim::ModelShape model_shape(const PreparedData& prepared, const SimulatorSettings& settings) {
  sim::ModelShape shape = sim::ModelShape::for_dataset(prepared.encoded, settings.embed_dim, settings.hidden_dim);
  shape.reconsume_z = settings.reconsume_z;
  return shape;
}

eval::AttributeAccuracy test_accuracy(const sim::StateModel& model, const data::EncodedDataset& test,
                                      std::size_t batch_size) {
  return eval::simulator_accuracy(simulate_rows(model, test, batch_size), test.risk, test.time_class, test.status);
}

eval::AttributeAccuracy test_accuracy(const sim::MarkovModel& model, const data::EncodedDataset& test) {
  return eval::simulator_accuracy(model.predict(test.modes), test.risk, test.time_class, test.status);
}

SimulatorSuite train_simulators(const PreparedData& prepared, const SimulatorSettings& settings, std::uint64_t seed,
                                std::size_t eval_batch_size) {
  SimulatorSuite suite;
  const sim::ModelShape shape = model_shape(prepared, settings);
  sim::TrainConfig train = settings.train;
  train.seed = seed;

  auto train_learned = [&](const std::string& kind) {
    const auto start = std::chrono::steady_clock::now();
    std::unique_ptr<sim::StateModel> model = sim::make_state_model(kind, shape, seed);
    ModelRun run;
    run.method = kind;
    run.training = sim::train_state_model(*model, prepared.train, prepared.val, train);
    run.test_accuracy = test_accuracy(*model, prepared.test, eval_batch_size);
    run.seconds = seconds_since(start);
    suite.runs.push_back(std::move(run));
    return model;
  };

  suite.sim2dec = train_learned("sim2dec");
  for (const std::string& b : settings.baselines) {
    if (b == "markov") {
      const auto start = std::chrono::steady_clock::now();
      std::vector<std::size_t> rows(prepared.train.size());
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      suite.markov = sim::MarkovModel::fit(prepared.train, rows, settings.markov_alpha);
      ModelRun run;
      run.method = "markov";
      run.test_accuracy = test_accuracy(*suite.markov, prepared.test);
      run.seconds = seconds_since(start);
      suite.runs.push_back(std::move(run));
    } else {
      suite.learned_baselines.push_back(train_learned(b));
    }
  }
  return suite;
}

DecisionSetup decision_setup(const PreparedData& prepared, const sim::StateModel& simulator,
                             std::size_t eval_batch_size) {
  const data::CounterfactualTable cf_train = prepared.counterfactuals.select(prepared.split.train);
  const data::CounterfactualTable cf_val = prepared.counterfactuals.select(prepared.split.val);
  const data::CounterfactualTable cf_test = prepared.counterfactuals.select(prepared.split.test);
  DecisionSetup setup;
  setup.train_rewards = decision::simulated_rewards(simulator, prepared.train.features, cf_train.profit, eval_batch_size);
  setup.val_rewards = decision::simulated_rewards(simulator, prepared.val.features, cf_val.profit, eval_batch_size);
  if (cf_test.has_truth()) {
    setup.test_outcomes = {cf_test.status, cf_test.profit};
    setup.test_is_truth = true;
  } else {
    setup.test_outcomes =
        decision::simulated_rewards(simulator, prepared.test.features, cf_test.profit, eval_batch_size);
  }
  return setup;
}

nlohmann::json DecisionRow::to_json() const {
  nlohmann::json j = metrics.to_json();
  j["method"] = method;
  j["mode_counts"] = mode_counts;
  if (oracle_match) j["oracle_match"] = *oracle_match;
  return j;
}

DecisionRow score_modes_row(const std::string& method, const PreparedData& prepared, const DecisionSetup& setup,
                            std::span<const int> modes) {
  DecisionRow row;
  row.method = method;
  row.metrics = decision::outcome_metrics(setup.test_outcomes, modes);
  row.mode_counts = count_modes(modes, prepared.encoded.n_modes);
  if (!prepared.counterfactuals.oracle_mode.empty()) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      hits += modes[i] == prepared.counterfactuals.oracle_mode[prepared.split.test[i]] ? 1 : 0;
    }
    row.oracle_match = static_cast<double>(hits) / static_cast<double>(modes.size());
  }
  return row;
}

PolicyRun run_policy(const PreparedData& prepared, const DecisionSetup& setup, const decision::PolicyConfig& config,
                     const std::string& label) {
  const auto start = std::chrono::steady_clock::now();
  PolicyRun run;
  run.policy = std::make_unique<decision::DecisionPolicy>(prepared.train.features.concatenated().cols(),
                                                          prepared.encoded.n_modes, config.hidden, config.seed);
  run.training = decision::train_policy(*run.policy, prepared.train.features, setup.train_rewards,
                                        prepared.val.features, setup.val_rewards, prepared.stats, config);
  const std::vector<int> modes = decision::decide(*run.policy, prepared.test.features);
  run.row = score_modes_row(label, prepared, setup, modes);
  run.seconds = seconds_since(start);
  return run;
}

BanditRun run_bandit(const PreparedData& prepared, const DecisionSetup& setup, const decision::BanditConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  BanditRun run;
  run.q = std::make_unique<decision::DecisionPolicy>(prepared.train.features.concatenated().cols(),
                                                     prepared.encoded.n_modes, config.hidden, config.seed);
  run.training = decision::train_bandit_q(*run.q, prepared.train.features, setup.train_rewards, config);
  const std::vector<int> modes = decision::decide(*run.q, prepared.test.features);
  run.row = score_modes_row("bandit_q", prepared, setup, modes);
  run.seconds = seconds_since(start);
  return run;
}

DecisionSuite run_decisions(const PreparedData& prepared, const DecisionSetup& setup, const ExperimentConfig& config,
                            std::uint64_t seed) {
  DecisionSuite suite;
  const data::EncodedDataset& test = prepared.test;

  // Historical modes with the states they actually produced; no model involved.
  DecisionRow real;
  real.method = "real";
  real.metrics = eval::decision_metrics(test.status, test.profit, prepared.norm);
  real.mode_counts = count_modes(test.modes, prepared.encoded.n_modes);
  suite.rows.push_back(real);

  const decision::LpResult lp = decision::lp_baseline(setup.test_outcomes);
  suite.lp_mode = lp.mode;
  suite.rows.push_back(score_modes_row("lp", prepared, setup, std::vector<int>(test.size(), lp.mode)));

  if (config.run_bandit) {
    decision::BanditConfig bc = config.bandit;
    bc.seed = seed;
    suite.bandit = run_bandit(prepared, setup, bc);
    suite.rows.push_back(suite.bandit->row);
  }

  decision::PolicyConfig pc = config.policy;
  pc.seed = seed;
  suite.policy = run_policy(prepared, setup, pc, "sim2dec");
  suite.rows.push_back(suite.policy.row);

  if (!prepared.counterfactuals.oracle_mode.empty()) {
    std::vector<int> oracle;
    for (std::size_t r : prepared.split.test) oracle.push_back(prepared.counterfactuals.oracle_mode[r]);
    suite.rows.push_back(score_modes_row("oracle", prepared, setup, oracle));
  }
  return suite;
}

nlohmann::json AblationResult::to_json() const {
  nlohmann::json sweep_json = nlohmann::json::array();
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    nlohmann::json r = sweep[i].to_json();
    r["lambda"] = lambdas[i];
    sweep_json.push_back(r);
  }
  return {{"sweep", sweep_json},
          {"historical_only", historical_only.to_json()},
          {"future_only", future_only.to_json()},
          {"combined", combined.to_json()},
          {"combined_lambda", combined_lambda},
          {"best_lambda", best_lambda},
          {"best_interior", best_interior}};
}

AblationResult run_ablation(const PreparedData& prepared, const DecisionSetup& setup, const ExperimentConfig& config,
                            std::uint64_t seed) {
  AblationResult out;
  out.lambdas = config.lambdas;
  out.combined_lambda = config.policy.lambda;
  decision::PolicyConfig base = config.policy;
  base.seed = seed;
  base.use_future = true;
  base.use_historical = true;

  std::optional<DecisionRow> at_zero, at_combined;
  for (double lambda : config.lambdas) {
    decision::PolicyConfig pc = base;
    pc.lambda = lambda;
    DecisionRow row = run_policy(prepared, setup, pc, "lambda").row;
    // lambda = 0 trains on the future term alone, so it doubles as that toggle.
    if (lambda == 0.0) at_zero = row;
    if (lambda == base.lambda) at_combined = row;
    out.sweep.push_back(std::move(row));
  }

  if (at_zero) {
    out.future_only = *at_zero;
  } else {
    decision::PolicyConfig pc = base;
    pc.use_historical = false;
    out.future_only = run_policy(prepared, setup, pc, "future_only").row;
  }
  out.future_only.method = "future_only";

  decision::PolicyConfig hist = base;
  hist.use_future = false;
  out.historical_only = run_policy(prepared, setup, hist, "historical_only").row;

  out.combined = at_combined ? *at_combined : run_policy(prepared, setup, base, "combined").row;
  out.combined.method = "combined";

  std::size_t best = 0;
  for (std::size_t i = 1; i < out.sweep.size(); ++i) {
    if (eval::round4(out.sweep[i].metrics.overall) > eval::round4(out.sweep[best].metrics.overall)) best = i;
  }
  out.best_lambda = out.lambdas[best];
  out.best_interior = best > 0 && best + 1 < out.sweep.size();
  for (std::size_t i = 0; i < out.sweep.size(); ++i) out.sweep[i].method = "lambda";
  return out;
}

nlohmann::json ShiftResult::to_json() const {
  nlohmann::json m = nlohmann::json::array();
  for (const MethodHistogram& h : methods) {
    m.push_back({{"method", h.method},
                 {"expected_histogram", h.expected},
                 {"hard_histogram", h.hard},
                 {"tv_expected", h.tv_expected},
                 {"tv_hard", h.tv_hard}});
  }
  nlohmann::json acc = nlohmann::json::array();
  for (const ModelRun& r : runs) {
    nlohmann::json a = r.test_accuracy.to_json();
    a["method"] = r.method;
    acc.push_back(a);
  }
  return {{"time_threshold", threshold},
          {"train_histogram", train_histogram},
          {"test_histogram", test_histogram},
          {"methods", m},
          {"shifted_test_accuracy", acc},
          {"divergence", "total variation"}};
}

const MethodHistogram& ShiftResult::method(const std::string& name) const {
  for (const MethodHistogram& h : methods) {
    if (h.method == name) return h;
  }
  throw std::out_of_range("shift result has no method '" + name + "'");
}

ShiftResult run_shift(const SourceData& source, const ExperimentConfig& config, std::uint64_t seed) {
  // Time classes do not depend on the encoding, so any fit rows will do here.
  std::vector<std::size_t> all(source.records.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const data::EncodedDataset full = data::encode(source.records, source.schema, all);
  const data::DatasetSplit split = data::shift_split(full, config.shift_quantile, seed);
  const PreparedData prepared = prepare_data(source, split);
  const int k = prepared.encoded.n_time_classes;

  ShiftResult out;
  out.threshold = split.time_threshold;
  out.train_histogram = eval::class_histogram(prepared.train.time_class, k);
  out.test_histogram = eval::class_histogram(prepared.test.time_class, k);

  SimulatorSuite suite = train_simulators(prepared, config.simulator, seed, config.eval_batch_size);
  out.runs = suite.runs;

  auto add_learned = [&](const sim::StateModel& model) {
    const sim::SimulatedStates s = simulate_rows(model, prepared.test, config.eval_batch_size);
    MethodHistogram h;
    h.method = model.kind();
    h.expected = eval::mean_distribution(s.time_probs);
    h.hard = eval::class_histogram(s.time_class, k);
    h.tv_expected = eval::tv_distance(h.expected, out.test_histogram);
    h.tv_hard = eval::tv_distance(h.hard, out.test_histogram);
    out.methods.push_back(std::move(h));
  };
  add_learned(*suite.sim2dec);
  for (const auto& m : suite.learned_baselines) add_learned(*m);
  if (suite.markov) {
    const sim::MarkovModel& mk = *suite.markov;
    MethodHistogram h;
    h.method = "markov";
    h.expected.assign(static_cast<std::size_t>(k), 0.0);
    for (int mode : prepared.test.modes) {
      const std::vector<double> p = mk.time_marginal(mode);
      for (int c = 0; c < k; ++c) h.expected[static_cast<std::size_t>(c)] += p[static_cast<std::size_t>(c)];
    }
    for (double& v : h.expected) v /= static_cast<double>(prepared.test.size());
    nn::Rng rng = nn::Rng::derive(seed, 0x5a3f);
    h.hard = eval::class_histogram(mk.sample(prepared.test.modes, rng).time_class, k);
    h.tv_expected = eval::tv_distance(h.expected, out.test_histogram);
    h.tv_hard = eval::tv_distance(h.hard, out.test_histogram);
    out.methods.push_back(std::move(h));
  }
  return out;
}

nlohmann::json aggregate(const std::vector<FlatMetrics>& per_seed) {
  nlohmann::json mean = nlohmann::json::object();
  nlohmann::json stddev = nlohmann::json::object();
  if (per_seed.empty()) return {{"mean", mean}, {"std", stddev}};
  for (const auto& [key, first] : per_seed.front()) {
    bool everywhere = true;
    double sum = 0.0;
    for (const FlatMetrics& m : per_seed) {
      auto it = m.find(key);
      if (it == m.end()) {
        everywhere = false;
        break;
      }
      sum += it->second;
    }
    if (!everywhere) continue;
    const double n = static_cast<double>(per_seed.size());
    const double mu = sum / n;
    double var = 0.0;
    for (const FlatMetrics& m : per_seed) var += (m.at(key) - mu) * (m.at(key) - mu);
    mean[key] = mu;
    stddev[key] = std::sqrt(var / n);
  }
  return {{"mean", mean}, {"std", stddev}};
}

}  // namespace simdec::cli
