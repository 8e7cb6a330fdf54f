#include "simdec/cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "simdec/cli/pipeline.hpp"
#include "simdec/cli/report.hpp"
#include "simdec/data/csv.hpp"
#include "simdec/errors.hpp"

namespace simdec::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

class RunExistsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string seed_dir(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

fs::path prepare_dir(const fs::path& out) { return out / "prepare"; }

void require(const fs::path& path, const std::string& command) {
  if (!fs::exists(path)) {
    throw DependencyError(command, "missing " + path.string() + "; run '" + command + "' first");
  }
}

/// Loads the config for a command. Commands after `prepare` fall back to the
/// config that `prepare` stored in the run tree.
ExperimentConfig resolve_config(const CommonOptions& opts, bool data_from_flags) {
  ExperimentConfig config;
  if (!opts.config.empty()) {
    config = ExperimentConfig::load(opts.config);
  } else if (!opts.out.empty() && fs::exists(prepare_dir(opts.out) / "config.json")) {
    config = ExperimentConfig::from_json(read_json(prepare_dir(opts.out) / "config.json"));
  } else if (data_from_flags && !opts.dataset.empty()) {
    config.dataset = opts.dataset;
    config.schema = opts.schema;
  } else {
    throw std::invalid_argument("no config: pass --config, or --out pointing at a prepared run tree");
  }
  if (opts.seeds) config.seeds = *opts.seeds;
  if (!opts.out.empty()) config.out = opts.out;
  if (data_from_flags && (!opts.dataset.empty() || !opts.schema.empty())) {
    config.synthetic.reset();
    if (!opts.dataset.empty()) config.dataset = opts.dataset;
    if (!opts.schema.empty()) config.schema = opts.schema;
  }
  if (config.out.empty()) throw std::invalid_argument("no output directory: pass --out or set 'out' in the config");
  config.validate();
  return config;
}

/// Creates <out>/<name>; refuses to touch an existing run directory.
fs::path create_run_dir(const fs::path& out, const std::string& name) {
  const fs::path dir = out / name;
  if (fs::exists(dir)) {
    throw RunExistsError("run directory " + dir.string() + " already exists; runs are immutable, choose a new --out");
  }
  fs::create_directories(dir);
  return dir;
}

nlohmann::json base_manifest(const std::string& command, const ExperimentConfig& config) {
  return {{"format_version", kManifestVersion}, {"command", command}, {"config", config.to_json()},
          {"seeds", config.seeds}};
}

/// The dataset frozen by `prepare`.
SourceData load_prepared_source(const fs::path& out) {
  const fs::path dir = prepare_dir(out);
  require(dir / "manifest.json", "prepare");
  SourceData src;
  src.schema = data::load_schema(dir / "schema.json");
  src.records = data::load_csv(dir / "data.csv", src.schema);
  if (fs::exists(dir / "sidecar.json")) src.rule = data::PlantedRule::from_json(read_json(dir / "sidecar.json").at("rule"));
  return src;
}

PreparedData load_prepared(const SourceData& src, const fs::path& out, std::uint64_t seed) {
  const fs::path split_path = prepare_dir(out) / seed_dir(seed) / "split.json";
  require(split_path, "prepare");
  return prepare_data(src, data::DatasetSplit::from_json(read_json(split_path)));
}

nlohmann::json accuracy_row(const ModelRun& run) {
  nlohmann::json j = run.test_accuracy.to_json();
  j["method"] = run.method;
  return j;
}

/// Table-4 style timing for a trained model.
nlohmann::json timing_row(const ModelRun& run) {
  nlohmann::json j{{"method", run.method}, {"total_seconds", run.seconds}};
  if (run.training) {
    double sum = 0.0;
    for (double s : run.training->epoch_seconds) sum += s;
    const auto n = run.training->epoch_seconds.size();
    j["epochs_run"] = run.training->epochs_run;
    j["seconds_per_epoch"] = n == 0 ? 0.0 : sum / static_cast<double>(n);
  }
  return j;
}

void flatten_rows(FlatMetrics& flat, const std::string& group, const nlohmann::json& rows,
                  const std::vector<std::string>& keys) {
  for (const auto& r : rows) {
    for (const std::string& k : keys) {
      if (r.contains(k)) flat[group + "." + r.at("method").get<std::string>() + "." + k] = r.at(k).get<double>();
    }
  }
}

const std::vector<std::string> kAccuracyKeys{"risk", "time", "status", "overall"};
const std::vector<std::string> kDecisionKeys{"t_time", "t_profit", "diff", "overall", "oracle_match"};

/// Mean rows for the aggregate table, in the order of the first seed's rows.
nlohmann::json mean_rows(const nlohmann::json& per_seed_rows, const std::vector<std::string>& keys) {
  nlohmann::json out = nlohmann::json::array();
  if (per_seed_rows.empty()) return out;
  for (const auto& first : per_seed_rows.front()) {
    const std::string method = first.at("method").get<std::string>();
    nlohmann::json row{{"method", method}};
    for (const std::string& k : keys) {
      if (!first.contains(k)) continue;
      double sum = 0.0;
      for (const auto& seed_rows : per_seed_rows) {
        for (const auto& r : seed_rows) {
          if (r.at("method") == method) sum += r.at(k).get<double>();
        }
      }
      row[k] = sum / static_cast<double>(per_seed_rows.size());
    }
    out.push_back(row);
  }
  return out;
}

std::string seed_tables(const nlohmann::json& per_seed, const std::string& rows_key, bool accuracy,
                        const std::string& title) {
  std::string text;
  nlohmann::json all_rows = nlohmann::json::array();
  for (const auto& s : per_seed) {
    const std::string t = title + " (seed " + std::to_string(s.at("seed").get<std::uint64_t>()) + ")";
    text += (accuracy ? render_accuracy_table(s.at(rows_key), t) : render_decision_table(s.at(rows_key), t)) + "\n";
    all_rows.push_back(s.at(rows_key));
  }
  const nlohmann::json mean = mean_rows(all_rows, accuracy ? kAccuracyKeys : kDecisionKeys);
  const std::string t = title + " (mean over " + std::to_string(per_seed.size()) + " seeds)";
  text += accuracy ? render_accuracy_table(mean, t) : render_decision_table(mean, t);
  return text;
}

std::unique_ptr<sim::StateModel> load_simulator(const fs::path& out, std::uint64_t seed) {
  const fs::path path = out / "train-sim" / seed_dir(seed) / "sim2dec.ckpt";
  require(path, "train-sim");
  return sim::load_state_model(path);
}

nlohmann::json decision_rows_json(const std::vector<DecisionRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const DecisionRow& r : rows) j.push_back(r.to_json());
  return j;
}

void write_states_csv(const fs::path& path, const std::vector<std::string>& ids, std::span<const int> modes,
                      const sim::SimulatedStates& s) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  const std::size_t k = s.time_scores.cols();
  os << "order_id,mode,risk,time,status,risk_prob,status_prob";
  for (std::size_t c = 0; c < k; ++c) os << ",time_score_" << (c + 1);
  os << "\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    os << data::csv_escape(ids[i]) << ',' << modes[i] << ',' << s.risk[i] << ',' << s.time_class[i] << ','
       << s.status[i] << ',' << data::format_double(s.risk_prob[i]) << ',' << data::format_double(s.status_prob[i]);
    for (std::size_t c = 0; c < k; ++c) os << ',' << data::format_double(s.time_scores(i, c));
    os << "\n";
  }
}

data::EncodedDataset inference_rows(const InferenceOptions& inference, const SourceData& src, const fs::path& out,
                                    std::uint64_t seed) {
  if (!inference.input.empty()) {
    return data::load_encoded_csv(inference.input, src.schema.n_modes, src.schema.n_time_classes);
  }
  return load_prepared(src, out, seed).test;
}

}  // namespace

fs::path cmd_synth(const CommonOptions& opts) {
  ExperimentConfig config = resolve_config(opts, false);
  if (!config.synthetic) throw std::invalid_argument("synth: the config has no 'synthetic' section");
  const auto start = Clock::now();
  const fs::path dir = create_run_dir(config.out, "synth");
  const data::SyntheticDataset ds = data::generate_synthetic(*config.synthetic);
  data::write_csv(dir / "data.csv", ds.schema, ds.records);
  write_json(dir / "schema.json", ds.schema.to_json());
  write_json(dir / "sidecar.json", data::synthetic_sidecar(ds, *config.synthetic));
  nlohmann::json manifest = base_manifest("synth", config);
  manifest["artifacts"] = {"data.csv", "schema.json", "sidecar.json"};
  manifest["rows"] = ds.records.size();
  manifest["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(dir / "manifest.json", manifest);
  return dir;
}

fs::path cmd_prepare(const CommonOptions& opts) {
  ExperimentConfig config = resolve_config(opts, true);
  const auto start = Clock::now();
  const SourceData src = load_source(config);
  const fs::path dir = create_run_dir(config.out, "prepare");
  data::write_csv(dir / "data.csv", src.schema, src.records);
  write_json(dir / "schema.json", src.schema.to_json());
  if (config.synthetic) {
    data::SyntheticDataset ds{src.records, *src.rule, src.schema};
    write_json(dir / "sidecar.json", data::synthetic_sidecar(ds, *config.synthetic));
  }
  write_json(dir / "config.json", config.to_json());

  nlohmann::json per_seed = nlohmann::json::array();
  for (std::uint64_t seed : config.seeds) {
    const data::DatasetSplit split = standard_split(src, seed);
    const PreparedData p = prepare_data(src, split);
    const fs::path sd = dir / seed_dir(seed);
    fs::create_directories(sd);
    write_json(sd / "split.json", split.to_json());
    write_json(sd / "encoding.json", p.encoded.stats.to_json());
    write_json(sd / "stats.json", p.stats.to_json());
    write_json(sd / "profit_norm.json", p.norm.to_json());
    data::save_encoded_csv(sd / "encoded.csv", p.encoded);
    per_seed.push_back({{"seed", seed},
                        {"train", split.train.size()},
                        {"val", split.val.size()},
                        {"test", split.test.size()},
                        {"historical_stats", p.stats.to_json()},
                        {"warnings", p.encoded.stats.warnings}});
  }
  const nlohmann::json metrics{{"command", "prepare"}, {"rows", src.records.size()}, {"per_seed", per_seed}};
  write_json(dir / "metrics.json", metrics);
  nlohmann::json manifest = base_manifest("prepare", config);
  manifest["per_seed"] = per_seed;
  manifest["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(dir / "manifest.json", manifest);
  return dir;
}

fs::path cmd_train_sim(const CommonOptions& opts) {
  ExperimentConfig config = resolve_config(opts, false);
  const auto start = Clock::now();
  const SourceData src = load_prepared_source(config.out);
  for (std::uint64_t seed : config.seeds) require(prepare_dir(config.out) / seed_dir(seed) / "split.json", "prepare");
  const fs::path dir = create_run_dir(config.out, "train-sim");

  nlohmann::json per_seed = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  nlohmann::json curves = nlohmann::json::object();
  std::vector<FlatMetrics> flat;
  for (std::uint64_t seed : config.seeds) {
    const PreparedData p = load_prepared(src, config.out, seed);
    SimulatorSuite suite = train_simulators(p, config.simulator, seed, config.eval_batch_size);
    const fs::path sd = dir / seed_dir(seed);
    fs::create_directories(sd);
    suite.sim2dec->save(sd / "sim2dec.ckpt");
    for (auto& m : suite.learned_baselines) m->save(sd / (m->kind() + ".ckpt"));
    if (suite.markov) write_json(sd / "markov.json", suite.markov->to_json());

    nlohmann::json rows = nlohmann::json::array();
    nlohmann::json seed_timing{{"seed", seed}, {"methods", nlohmann::json::array()}};
    nlohmann::json seed_curves = nlohmann::json::object();
    for (const ModelRun& run : suite.runs) {
      rows.push_back(accuracy_row(run));
      seed_timing["methods"].push_back(timing_row(run));
      if (run.training) seed_curves[run.method] = run.training->to_json();
    }
    curves[seed_dir(seed)] = seed_curves;
    timing.push_back(seed_timing);
    FlatMetrics f;
    flatten_rows(f, "simulator", rows, kAccuracyKeys);
    flat.push_back(f);
    per_seed.push_back({{"seed", seed}, {"simulators", rows}});
  }
  const nlohmann::json metrics{{"command", "train-sim"},
                               {"split", "test"},
                               {"per_seed", per_seed},
                               {"aggregate", aggregate(flat)}};
  write_json(dir / "metrics.json", metrics);
  write_text(dir / "accuracy_table.txt", seed_tables(per_seed, "simulators", true, "Simulator test accuracy"));
  nlohmann::json manifest = base_manifest("train-sim", config);
  manifest["per_seed"] = per_seed;
  manifest["aggregate"] = aggregate(flat);
  manifest["curves"] = curves;
  manifest["timing"] = {{"per_seed", timing}, {"total_seconds", seconds_since(start)}};
  manifest["checkpoints"] = "seed_<s>/{sim2dec,prediction,generation}.ckpt, seed_<s>/markov.json";
  write_json(dir / "manifest.json", manifest);
  return dir;
}

fs::path cmd_train_policy(const CommonOptions& opts) {
  ExperimentConfig config = resolve_config(opts, false);
  const auto start = Clock::now();
  const SourceData src = load_prepared_source(config.out);
  for (std::uint64_t seed : config.seeds) {
    require(config.out / "train-sim" / seed_dir(seed) / "sim2dec.ckpt", "train-sim");
  }
  const fs::path dir = create_run_dir(config.out, "train-policy");

  nlohmann::json per_seed = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  nlohmann::json curves = nlohmann::json::object();
  std::vector<FlatMetrics> flat;
  for (std::uint64_t seed : config.seeds) {
    const PreparedData p = load_prepared(src, config.out, seed);
    const auto simulator = load_simulator(config.out, seed);
    const DecisionSetup setup = decision_setup(p, *simulator, config.eval_batch_size);
    DecisionSuite suite = run_decisions(p, setup, config, seed);
    const fs::path sd = dir / seed_dir(seed);
    fs::create_directories(sd);
    suite.policy.policy->save(sd / "policy.ckpt", {{"seed", seed}, {"config", config.policy.to_json()}});
    nlohmann::json seed_curves{{"policy", suite.policy.training.to_json()}};
    nlohmann::json seed_timing{{"seed", seed},
                               {"policy_seconds", suite.policy.seconds},
                               {"policy_epochs", suite.policy.training.epochs_run}};
    if (suite.bandit) {
      suite.bandit->q->save(sd / "bandit.ckpt", {{"seed", seed}, {"config", config.bandit.to_json()}});
      nlohmann::json bc = nlohmann::json::array();
      for (const auto& e : suite.bandit->training) {
        bc.push_back({{"epoch", e.epoch}, {"epsilon", e.epsilon}, {"loss", e.loss}, {"mean_reward", e.mean_reward}});
      }
      seed_curves["bandit_q"] = bc;
      seed_timing["bandit_seconds"] = suite.bandit->seconds;
    }
    curves[seed_dir(seed)] = seed_curves;
    timing.push_back(seed_timing);
    const nlohmann::json rows = decision_rows_json(suite.rows);
    FlatMetrics f;
    flatten_rows(f, "decision", rows, kDecisionKeys);
    flat.push_back(f);
    per_seed.push_back({{"seed", seed},
                        {"decisions", rows},
                        {"lp_mode", suite.lp_mode},
                        {"policy_best_epoch", suite.policy.training.best_epoch},
                        {"test_outcomes", setup.test_is_truth ? "planted" : "simulated"}});
  }
  const nlohmann::json metrics{{"command", "train-policy"},
                               {"lp_note", "lp enumerates modes on the test set itself"},
                               {"per_seed", per_seed},
                               {"aggregate", aggregate(flat)}};
  write_json(dir / "metrics.json", metrics);
  write_text(dir / "decision_table.txt", seed_tables(per_seed, "decisions", false, "Decision quality on test orders"));
  nlohmann::json manifest = base_manifest("train-policy", config);
  manifest["per_seed"] = per_seed;
  manifest["aggregate"] = aggregate(flat);
  manifest["curves"] = curves;
  manifest["timing"] = {{"per_seed", timing}, {"total_seconds", seconds_since(start)}};
  manifest["checkpoints"] = "seed_<s>/policy.ckpt, seed_<s>/bandit.ckpt";
  write_json(dir / "manifest.json", manifest);
  return dir;
}

fs::path cmd_evaluate(const CommonOptions& opts) {
  ExperimentConfig config = resolve_config(opts, false);
  const auto start = Clock::now();
  const SourceData src = load_prepared_source(config.out);
  for (std::uint64_t seed : config.seeds) {
    require(config.out / "train-sim" / seed_dir(seed) / "sim2dec.ckpt", "train-sim");
    require(config.out / "train-policy" / seed_dir(seed) / "policy.ckpt", "train-policy");
  }
  const fs::path dir = create_run_dir(config.out, "evaluate");

  nlohmann::json per_seed = nlohmann::json::array();
  std::vector<FlatMetrics> flat;
  for (std::uint64_t seed : config.seeds) {
    const PreparedData p = load_prepared(src, config.out, seed);
    const fs::path sim_dir = config.out / "train-sim" / seed_dir(seed);
    const fs::path pol_dir = config.out / "train-policy" / seed_dir(seed);
    const auto simulator = load_simulator(config.out, seed);

    nlohmann::json acc = nlohmann::json::array();
    auto add_acc = [&](const std::string& method, const eval::AttributeAccuracy& a) {
      nlohmann::json j = a.to_json();
      j["method"] = method;
      acc.push_back(j);
    };
    add_acc("sim2dec", test_accuracy(*simulator, p.test, config.eval_batch_size));
    for (const std::string& b : config.simulator.baselines) {
      if (b == "markov") {
        require(sim_dir / "markov.json", "train-sim");
        add_acc(b, test_accuracy(sim::MarkovModel::from_json(read_json(sim_dir / "markov.json")), p.test));
      } else {
        require(sim_dir / (b + ".ckpt"), "train-sim");
        add_acc(b, test_accuracy(*sim::load_state_model(sim_dir / (b + ".ckpt")), p.test, config.eval_batch_size));
      }
    }

    const DecisionSetup setup = decision_setup(p, *simulator, config.eval_batch_size);
    std::vector<DecisionRow> rows;
    DecisionRow real;
    real.method = "real";
    real.metrics = eval::decision_metrics(p.test.status, p.test.profit, p.norm);
    rows.push_back(real);
    const decision::LpResult lp = decision::lp_baseline(setup.test_outcomes);
    rows.push_back(score_modes_row("lp", p, setup, std::vector<int>(p.test.size(), lp.mode)));
    if (fs::exists(pol_dir / "bandit.ckpt")) {
      const decision::DecisionPolicy q = decision::DecisionPolicy::load(pol_dir / "bandit.ckpt");
      rows.push_back(score_modes_row("bandit_q", p, setup, decision::decide(q, p.test.features)));
    }
    const decision::DecisionPolicy policy = decision::DecisionPolicy::load(pol_dir / "policy.ckpt");
    rows.push_back(score_modes_row("sim2dec", p, setup, decision::decide(policy, p.test.features)));
    if (!p.counterfactuals.oracle_mode.empty()) {
      std::vector<int> oracle;
      for (std::size_t r : p.split.test) oracle.push_back(p.counterfactuals.oracle_mode[r]);
      rows.push_back(score_modes_row("oracle", p, setup, oracle));
    }
    const nlohmann::json drows = decision_rows_json(rows);
    FlatMetrics f;
    flatten_rows(f, "simulator", acc, kAccuracyKeys);
    flatten_rows(f, "decision", drows, kDecisionKeys);
    flat.push_back(f);
    per_seed.push_back({{"seed", seed}, {"simulators", acc}, {"decisions", drows}});
  }
  const nlohmann::json metrics{{"command", "evaluate"}, {"per_seed", per_seed}, {"aggregate", aggregate(flat)}};
  write_json(dir / "metrics.json", metrics);
  write_text(dir / "accuracy_table.txt", seed_tables(per_seed, "simulators", true, "Simulator test accuracy"));
  write_text(dir / "decision_table.txt", seed_tables(per_seed, "decisions", false, "Decision quality on test orders"));
  nlohmann::json manifest = base_manifest("evaluate", config);
  manifest["aggregate"] = aggregate(flat);
  manifest["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(dir / "manifest.json", manifest);
  return dir;
}

fs::path cmd_ablate(const CommonOptions& opts) {
  ExperimentConfig config = resolve_config(opts, false);
  const auto start = Clock::now();
  const SourceData src = load_prepared_source(config.out);
  for (std::uint64_t seed : config.seeds) {
    require(config.out / "train-sim" / seed_dir(seed) / "sim2dec.ckpt", "train-sim");
  }
  const fs::path dir = create_run_dir(config.out, "ablate");

  nlohmann::json per_seed = nlohmann::json::array();
  std::vector<FlatMetrics> flat;
  std::string text;
  std::ofstream csv(dir / "lambda_sweep.csv");
  csv << "seed,lambda,t_time,t_profit,diff,overall\n";
  for (std::uint64_t seed : config.seeds) {
    const PreparedData p = load_prepared(src, config.out, seed);
    const auto simulator = load_simulator(config.out, seed);
    const DecisionSetup setup = decision_setup(p, *simulator, config.eval_batch_size);
    const AblationResult a = run_ablation(p, setup, config, seed);
    nlohmann::json j = a.to_json();
    j["seed"] = seed;
    per_seed.push_back(j);

    FlatMetrics f;
    TextTable t({"variant", "T_time", "T_profit", "diff", "overall"});
    for (std::size_t i = 0; i < a.lambdas.size(); ++i) {
      const auto& m = a.sweep[i].metrics;
      const std::string name = "lambda=" + data::format_double(a.lambdas[i]);
      t.add_row({name, fmt4(m.t_time), fmt4(m.t_profit), fmt4(m.diff), fmt4(m.overall)});
      f["ablation." + name + ".overall"] = m.overall;
      csv << seed << ',' << data::format_double(a.lambdas[i]) << ',' << data::format_double(m.t_time) << ','
          << data::format_double(m.t_profit) << ',' << data::format_double(m.diff) << ','
          << data::format_double(m.overall) << "\n";
    }
    for (const DecisionRow* r : {&a.historical_only, &a.future_only, &a.combined}) {
      const auto& m = r->metrics;
      t.add_row({r->method, fmt4(m.t_time), fmt4(m.t_profit), fmt4(m.diff), fmt4(m.overall)});
      f["ablation." + r->method + ".overall"] = m.overall;
    }
    flat.push_back(f);
    text += "Loss ablation (seed " + std::to_string(seed) + ", best lambda " + data::format_double(a.best_lambda) +
            ")\n" + t.render() + "\n";
  }
  const nlohmann::json metrics{{"command", "ablate"}, {"per_seed", per_seed}, {"aggregate", aggregate(flat)}};
  write_json(dir / "metrics.json", metrics);
  write_text(dir / "ablation.txt", text);
  nlohmann::json manifest = base_manifest("ablate", config);
  manifest["aggregate"] = aggregate(flat);
  manifest["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(dir / "manifest.json", manifest);
  return dir;
}

fs::path cmd_shift(const CommonOptions& opts) {
  ExperimentConfig config = resolve_config(opts, false);
  const auto start = Clock::now();
  const SourceData src = load_prepared_source(config.out);
  const fs::path dir = create_run_dir(config.out, "shift");

  nlohmann::json per_seed = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  std::vector<FlatMetrics> flat;
  std::string text;
  for (std::uint64_t seed : config.seeds) {
    const ShiftResult r = run_shift(src, config, seed);
    nlohmann::json j = r.to_json();
    j["seed"] = seed;
    per_seed.push_back(j);
    nlohmann::json seed_timing{{"seed", seed}, {"methods", nlohmann::json::array()}};
    for (const ModelRun& run : r.runs) seed_timing["methods"].push_back(timing_row(run));
    timing.push_back(seed_timing);

    std::ofstream csv(dir / ("histograms_" + seed_dir(seed) + ".csv"));
    csv << "time_class,train,test";
    for (const MethodHistogram& h : r.methods) csv << ',' << h.method << "_expected," << h.method << "_hard";
    csv << "\n";
    const std::size_t k = r.test_histogram.size();
    for (std::size_t c = 0; c < k; ++c) {
      csv << (c + 1) << ',' << data::format_double(r.train_histogram[c]) << ','
          << data::format_double(r.test_histogram[c]);
      for (const MethodHistogram& h : r.methods) {
        csv << ',' << data::format_double(h.expected[c]) << ',' << data::format_double(h.hard[c]);
      }
      csv << "\n";
    }

    FlatMetrics f;
    TextTable t({"method", "tv_expected", "tv_hard"});
    for (const MethodHistogram& h : r.methods) {
      t.add_row({h.method, fmt4(h.tv_expected), fmt4(h.tv_hard)});
      f["shift." + h.method + ".tv_expected"] = h.tv_expected;
      f["shift." + h.method + ".tv_hard"] = h.tv_hard;
    }
    flat.push_back(f);
    text += "Time-class distribution vs shifted test set, total variation (seed " + std::to_string(seed) +
            ", train classes <= " + std::to_string(r.threshold) + ")\n" + t.render() + "\n";
  }
  const nlohmann::json metrics{{"command", "shift"}, {"per_seed", per_seed}, {"aggregate", aggregate(flat)}};
  write_json(dir / "metrics.json", metrics);
  write_text(dir / "shift.txt", text);
  nlohmann::json manifest = base_manifest("shift", config);
  manifest["aggregate"] = aggregate(flat);
  manifest["timing"] = {{"per_seed", timing}, {"total_seconds", seconds_since(start)}};
  write_json(dir / "manifest.json", manifest);
  return dir;
}

fs::path cmd_simulate(const CommonOptions& opts, const InferenceOptions& inference) {
  ExperimentConfig config = resolve_config(opts, false);
  const auto start = Clock::now();
  const std::uint64_t seed = config.seeds.front();
  const SourceData src = load_prepared_source(config.out);
  const auto simulator = load_simulator(config.out, seed);
  data::EncodedDataset rows = inference_rows(inference, src, config.out, seed);
  if (inference.mode) {
    if (*inference.mode < 0 || *inference.mode >= rows.n_modes) throw std::out_of_range("simulate: --mode out of range");
    std::fill(rows.modes.begin(), rows.modes.end(), *inference.mode);
  }
  const fs::path dir = create_run_dir(config.out, "simulate");
  const sim::SimulatedStates s = sim::simulate_batched(*simulator, rows.features, rows.modes, config.eval_batch_size);
  write_states_csv(dir / "states.csv", rows.order_ids, rows.modes, s);
  nlohmann::json manifest = base_manifest("simulate", config);
  manifest["seed"] = seed;
  manifest["rows"] = rows.size();
  manifest["input"] = inference.input.empty() ? "prepared test rows" : inference.input.string();
  manifest["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(dir / "manifest.json", manifest);
  return dir;
}

fs::path cmd_decide(const CommonOptions& opts, const InferenceOptions& inference) {
  ExperimentConfig config = resolve_config(opts, false);
  const auto start = Clock::now();
  const std::uint64_t seed = config.seeds.front();
  const SourceData src = load_prepared_source(config.out);
  const fs::path ckpt = config.out / "train-policy" / seed_dir(seed) / "policy.ckpt";
  require(ckpt, "train-policy");
  const decision::DecisionPolicy policy = decision::DecisionPolicy::load(ckpt);
  const data::EncodedDataset rows = inference_rows(inference, src, config.out, seed);
  const fs::path dir = create_run_dir(config.out, "decide");
  const decision::ModeScores scores = policy.score(rows.features);
  const std::vector<int> modes = decision::decide(scores);
  std::ofstream os(dir / "decisions.csv");
  os << "order_id,chosen_mode";
  for (int d = 0; d < policy.n_modes(); ++d) os << ",score_" << d;
  os << "\n";
  for (std::size_t i = 0; i < modes.size(); ++i) {
    os << data::csv_escape(rows.order_ids[i]) << ',' << modes[i];
    for (int d = 0; d < policy.n_modes(); ++d) os << ',' << data::format_double(scores.raw(i, static_cast<std::size_t>(d)));
    os << "\n";
  }
  nlohmann::json manifest = base_manifest("decide", config);
  manifest["seed"] = seed;
  manifest["rows"] = rows.size();
  manifest["timing"] = {{"total_seconds", seconds_since(start)}};
  write_json(dir / "manifest.json", manifest);
  return dir;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Generative transportation-state simulator and shipping-mode decision policy"};
  app.require_subcommand(1);
  CommonOptions opts;
  InferenceOptions inference;
  std::string seed_text;
  int forced_mode = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Experiment config (JSON with a version field)");
    sub->add_option("--seed", seed_text, "Comma-separated seeds, overriding the config");
    sub->add_option("--out", opts.out, "Run tree root");
    sub->add_option("--dataset", opts.dataset, "Dataset CSV (prepare) or encoded CSV (simulate, decide)");
    sub->add_option("--schema", opts.schema, "Schema JSON for --dataset");
  };
  struct Entry {
    const char* name;
    const char* help;
  };
  const Entry entries[] = {
      {"synth", "Write a synthetic dataset with its planted-rule sidecar"},
      {"prepare", "Encode the dataset, draw per-seed splits and historical statistics"},
      {"train-sim", "Train the simulator and its baselines; write the accuracy table"},
      {"train-policy", "Train the decision policy and baselines; write the decision table"},
      {"evaluate", "Re-score saved checkpoints on the test rows"},
      {"shift", "Distribution-shift run with time-class histograms"},
      {"ablate", "Lambda sweep and loss-term toggles"},
      {"simulate", "Write simulated states for encoded orders"},
      {"decide", "Write the policy's chosen mode and scores for encoded orders"},
  };
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub);
    if (std::string(e.name) == "simulate") sub->add_option("--mode", forced_mode, "Ship every order with this mode");
  }

  std::string command = "simdec";
  try {
    app.parse(argc, argv);
    CLI::App* sub = app.get_subcommands().front();
    command = sub->get_name();
    if (!seed_text.empty()) opts.seeds = parse_seed_list(seed_text);
    if (forced_mode >= 0) inference.mode = forced_mode;
    // For inference commands --dataset names encoded rows, not a raw CSV.
    if (command == "simulate" || command == "decide") {
      inference.input = opts.dataset;
      opts.dataset.clear();
    }
    fs::path dir;
    if (command == "synth") dir = cmd_synth(opts);
    else if (command == "prepare") dir = cmd_prepare(opts);
    else if (command == "train-sim") dir = cmd_train_sim(opts);
    else if (command == "train-policy") dir = cmd_train_policy(opts);
    else if (command == "evaluate") dir = cmd_evaluate(opts);
    else if (command == "shift") dir = cmd_shift(opts);
    else if (command == "ablate") dir = cmd_ablate(opts);
    else if (command == "simulate") dir = cmd_simulate(opts, inference);
    else dir = cmd_decide(opts, inference);
    std::cout << command << ": wrote " << dir.string() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const DependencyError& e) {
    const nlohmann::json rec{{"error", {{"kind", "dependency"},
                                        {"command", command},
                                        {"required_command", e.required_command()},
                                        {"message", e.what()}}}};
    std::cerr << rec.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::string kind = "error";
    if (dynamic_cast<const RunExistsError*>(&e)) kind = "run_exists";
    else if (dynamic_cast<const ParseError*>(&e)) kind = "parse";
    else if (dynamic_cast<const SchemaError*>(&e)) kind = "schema";
    else if (dynamic_cast<const DivergenceError*>(&e)) kind = "divergence";
    else if (dynamic_cast<const std::invalid_argument*>(&e)) kind = "invalid_argument";
    const nlohmann::json rec{{"error", {{"kind", kind}, {"command", command}, {"message", e.what()}}}};
    std::cerr << rec.dump() << "\n";
    return 1;
  }
}

}  // namespace simdec::cli
