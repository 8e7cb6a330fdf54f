// Acceptance suite: one PASS/FAIL line per criterion, then a summary. Pass
// criterion names as arguments to run a subset. Exit code is 0 only when every
// gating criterion that ran passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "simdec/cli/commands.hpp"
#include "simdec/cli/pipeline.hpp"
#include "simdec/eval/metrics.hpp"
#include "simdec/nn/functional.hpp"
#include "simdec/nn/grad_check.hpp"
#include "simdec/nn/layers.hpp"
#include "simdec/sim/model.hpp"

using namespace simdec;
namespace fs = std::filesystem;

namespace {

enum class Verdict { pass, fail, skip };

struct Outcome {
  Verdict verdict = Verdict::fail;
  std::string detail;
};

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Verdict::pass : Verdict::fail, detail}; }

std::string f4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

nn::Tensor random_matrix(std::size_t r, std::size_t c, nn::Rng& rng) {
  nn::Tensor t = nn::Tensor::matrix(r, c);
  for (double& v : t.values()) v = rng.normal();
  return t;
}

double project(const nn::Tensor& y, const nn::Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

// ---------------------------------------------------------------------------
// Shared experiment state. The simulator and policy criteria reuse trained
// models, so each is built once on first use.

constexpr std::size_t kEmbed = 32;
constexpr std::size_t kHidden = 64;
constexpr std::size_t kOrders = 5000;
constexpr std::size_t kEvalBatch = 256;

cli::ExperimentConfig synthetic_config(const std::string& preset, std::vector<std::string> baselines) {
  cli::ExperimentConfig c;
  data::SyntheticConfig s;
  s.n_orders = kOrders;
  s.noise = 0.0;
  s.preset = preset;
  c.synthetic = s;
  c.simulator.embed_dim = kEmbed;
  c.simulator.hidden_dim = kHidden;
  c.simulator.baselines = std::move(baselines);
  c.policy.lambda = 0.5;
  c.policy.epochs = 50;
  c.eval_batch_size = kEvalBatch;
  c.validate();
  return c;
}

struct SimulatorBench {
  cli::PreparedData prepared;
  cli::SimulatorSuite suite;
  double seconds = 0.0;
};

const SimulatorBench& simulator_bench() {
  static const SimulatorBench bench = [] {
    const cli::ExperimentConfig config = synthetic_config("standard", {"markov", "prediction"});
    const cli::SourceData source = cli::load_source(config);
    SimulatorBench b;
    b.prepared = cli::prepare_data(source, cli::standard_split(source, 1));
    const auto t0 = std::chrono::steady_clock::now();
    b.suite = cli::train_simulators(b.prepared, config.simulator, 1, kEvalBatch);
    b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return b;
  }();
  return bench;
}

const eval::AttributeAccuracy& accuracy_of(const cli::SimulatorSuite& suite, const std::string& method) {
  for (const cli::ModelRun& r : suite.runs) {
    if (r.method == method) return r.test_accuracy;
  }
  throw std::runtime_error("no run for " + method);
}

struct PolicyBench {
  cli::ExperimentConfig config;
  cli::PreparedData prepared;
  std::unique_ptr<sim::StateModel> simulator;
  cli::DecisionSetup setup;
};

const PolicyBench& policy_bench() {
  static const PolicyBench bench = [] {
    PolicyBench b;
    b.config = synthetic_config("dominant_mode", {});
    const cli::SourceData source = cli::load_source(b.config);
    b.prepared = cli::prepare_data(source, cli::standard_split(source, 1));
    cli::SimulatorSuite suite = cli::train_simulators(b.prepared, b.config.simulator, 1, kEvalBatch);
    b.simulator = std::move(suite.sim2dec);
    b.setup = cli::decision_setup(b.prepared, *b.simulator, kEvalBatch);
    return b;
  }();
  return bench;
}

// ---------------------------------------------------------------------------
// Criteria

Outcome metric_arithmetic() {
  struct AccCase {
    double risk, time, status, overall;
  };
  struct DecCase {
    double t_time, t_profit, diff, overall;
  };
  const AccCase acc[] = {{0.9508, 0.8851, 0.9695, 0.9351}, {0.4961, 0.1355, 0.4934, 0.3750}};
  const DecCase dec[] = {{0.5244, 0.0364, 0.4880, 0.5608}, {0.5397, 0.5637, 0.0240, 1.1034}};
  bool ok = true;
  std::ostringstream detail;
  for (const AccCase& c : acc) {
    const double got = eval::round4(eval::AttributeAccuracy::from_parts(c.risk, c.time, c.status).overall);
    ok = ok && got == eval::round4(c.overall);
    detail << "overall " << f4(got) << " ";
  }
  for (const DecCase& c : dec) {
    const eval::DecisionMetrics m = eval::DecisionMetrics::from_parts(c.t_time, c.t_profit);
    ok = ok && eval::round4(m.diff) == eval::round4(c.diff) && eval::round4(m.overall) == eval::round4(c.overall);
    detail << "diff/overall " << f4(m.diff) << "/" << f4(m.overall) << " ";
  }
  return verdict(ok, detail.str());
}

Outcome gradient_suite() {
  double worst_layer = 0.0;
  std::string worst_where;
  bool ok = true;
  auto record = [&](const std::string& what, const nn::GradCheckReport& r) {
    if (!r.passed) ok = false;
    if (r.max_relative_error > worst_layer) {
      worst_layer = r.max_relative_error;
      worst_where = what + ":" + r.worst_location;
    }
  };
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    nn::Rng rng(1000 + seed);
    {
      nn::Linear l("lin", 1 + rng.index(5), 1 + rng.index(4), rng);
      nn::Parameter x("x", random_matrix(3, l.in_features(), rng));
      const nn::Tensor w = random_matrix(3, l.out_features(), rng);
      record("linear", nn::grad_check(
                           {&l.weight, &l.bias, &x}, [&] { return project(l.forward(x.value), w); },
                           [&] { x.grad += l.backward(x.value, w); }));
    }
    {
      nn::Embedding e("emb", 2 + rng.index(4), 1 + rng.index(4), rng);
      std::vector<int> idx(4);
      for (int& i : idx) i = static_cast<int>(rng.index(e.rows()));
      const nn::Tensor w = random_matrix(idx.size(), e.dim(), rng);
      record("embedding", nn::grad_check(
                              {&e.table}, [&] { return project(e.forward(idx), w); }, [&] { e.backward(idx, w); }));
    }
    {
      const std::size_t in = 1 + rng.index(4), hid = 1 + rng.index(4), batch = 2;
      nn::LstmCell cell("cell", in, hid, rng);
      std::vector<nn::Parameter> xs;
      for (int t = 0; t < 3; ++t) xs.emplace_back("x" + std::to_string(t), random_matrix(batch, in, rng));
      const nn::Tensor wh = random_matrix(batch, hid, rng), wc = random_matrix(batch, hid, rng);
      nn::ParameterList params{&cell.w_input, &cell.w_hidden, &cell.bias};
      for (nn::Parameter& x : xs) params.push_back(&x);
      auto loss = [&] {
        nn::LstmState s = cell.zero_state(batch);
        for (const nn::Parameter& x : xs) s = cell.forward(x.value, s);
        return project(s.h, wh) + project(s.c, wc);
      };
      auto backward = [&] {
        std::vector<nn::LstmCache> caches(xs.size());
        nn::LstmState s = cell.zero_state(batch);
        for (std::size_t t = 0; t < xs.size(); ++t) s = cell.forward(xs[t].value, s, &caches[t]);
        nn::Tensor dh = wh, dc = wc;
        for (std::size_t t = xs.size(); t-- > 0;) {
          nn::LstmGrads g = cell.backward(caches[t], dh, dc);
          xs[t].grad += g.dx;
          dh = g.dh_prev;
          dc = g.dc_prev;
        }
      };
      record("lstm", nn::grad_check(params, loss, backward));
    }
    {
      const std::size_t hidden[] = {1 + rng.index(5), 1 + rng.index(5)};
      nn::Mlp mlp("mlp", 3, hidden, 2, rng);
      nn::Parameter x("x", random_matrix(2, 3, rng));
      const nn::Tensor w = random_matrix(2, 2, rng);
      nn::ParameterList params;
      mlp.collect(params);
      params.push_back(&x);
      record("mlp", nn::grad_check(
                        params, [&] { return project(mlp.forward(x.value), w); },
                        [&] {
                          nn::Mlp::Trace trace;
                          mlp.forward(x.value, &trace);
                          x.grad += mlp.backward(trace, w);
                        }));
    }
    {
      nn::Parameter x("x", random_matrix(2, 1 + rng.index(5), rng));
      const nn::Tensor w = random_matrix(x.value.rows(), x.value.cols(), rng);
      const nn::Tensor target = random_matrix(x.value.rows(), x.value.cols(), rng);
      record("sigmoid", nn::grad_check(
                            {&x}, [&] { return project(nn::sigmoid(x.value), w); },
                            [&] { x.grad += nn::sigmoid_backward(nn::sigmoid(x.value), w); }));
      record("tanh", nn::grad_check(
                         {&x}, [&] { return project(nn::tanh(x.value), w); },
                         [&] { x.grad += nn::tanh_backward(nn::tanh(x.value), w); }));
      record("softmax", nn::grad_check(
                            {&x}, [&] { return project(nn::softmax_rows(x.value), w); },
                            [&] { x.grad += nn::softmax_rows_backward(nn::softmax_rows(x.value), w); }));
      record("mse", nn::grad_check(
                        {&x}, [&] { return nn::mse_loss(x.value, target).value; },
                        [&] { x.grad += nn::mse_loss(x.value, target).grad; }));
    }
  }
  const bool layers_ok = ok && worst_layer < 1e-4;

  // End to end: every learned state model at E = H = 8 on 4 orders.
  data::SyntheticConfig sc;
  sc.n_orders = 20;
  const data::SyntheticDataset ds = data::generate_synthetic(sc);
  std::vector<std::size_t> rows(ds.records.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const data::EncodedDataset enc = data::encode(ds.records, ds.schema, rows);
  const std::size_t four[] = {0, 1, 2, 3};
  const data::EncodedDataset batch = enc.select(four);
  double worst_e2e = 0.0;
  bool e2e_ok = true;
  for (const std::string kind : {"sim2dec", "generation", "prediction"}) {
    const auto model = sim::make_state_model(kind, sim::ModelShape::for_dataset(enc, 8, 8), 7);
    nn::GradCheckOptions opts;
    opts.tolerance = 1e-3;
    const nn::GradCheckReport r = nn::grad_check(
        model->parameters(), [&] { return model->loss(batch); }, [&] { model->loss_and_backward(batch); }, opts);
    e2e_ok = e2e_ok && r.passed;
    worst_e2e = std::max(worst_e2e, r.max_relative_error);
  }
  std::ostringstream detail;
  detail << "layers max rel err " << worst_layer << " (" << worst_where << "), end-to-end max rel err " << worst_e2e;
  return verdict(layers_ok && e2e_ok && worst_e2e < 1e-3, detail.str());
}

Outcome gumbel_softmax() {
  nn::Rng rng(2024);
  double worst_sum = 0.0;
  for (int t = 0; t < 1000; ++t) {
    nn::Tensor scores = random_matrix(1, 2 + rng.index(7), rng);
    scores *= 5.0 * rng.uniform();
    const nn::GumbelSample s = nn::gumbel_softmax(scores, 0.05 + 2.0 * rng.uniform(), rng, false);
    const double sum = std::accumulate(s.output.values().begin(), s.output.values().end(), 0.0);
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  const nn::Tensor scores = nn::Tensor::matrix({{0.3, -0.8, 1.1, 0.0, 0.6}});
  const nn::Tensor expected = nn::softmax_rows(scores);
  std::vector<double> freq(scores.cols(), 0.0);
  const int draws = 100000;
  for (int t = 0; t < draws; ++t) ++freq[static_cast<std::size_t>(nn::gumbel_softmax(scores, 1.0, rng, true).index[0])];
  double worst_freq = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) worst_freq = std::max(worst_freq, std::abs(freq[i] / draws - expected[i]));
  std::ostringstream detail;
  detail << "max |sum - 1| " << worst_sum << ", max |freq - softmax| " << f4(worst_freq);
  return verdict(worst_sum < 1e-6 && worst_freq < 1e-2, detail.str());
}

Outcome simulator_oracle() {
  const SimulatorBench& b = simulator_bench();
  const eval::AttributeAccuracy& s = accuracy_of(b.suite, "sim2dec");
  const eval::AttributeAccuracy& m = accuracy_of(b.suite, "markov");
  const bool ok = s.risk >= 0.95 && s.time >= 0.95 && s.status >= 0.95 && s.risk >= m.risk && s.time >= m.time &&
                  s.status >= m.status && s.overall >= m.overall;
  std::ostringstream detail;
  detail << "sim2dec risk/time/status " << f4(s.risk) << "/" << f4(s.time) << "/" << f4(s.status) << " vs markov "
         << f4(m.risk) << "/" << f4(m.time) << "/" << f4(m.status) << " (" << kOrders << " orders, E=" << kEmbed
         << " H=" << kHidden << ", " << static_cast<int>(b.seconds) << " s for all models)";
  return verdict(ok, detail.str());
}

Outcome inter_attribute() {
  const SimulatorBench& b = simulator_bench();
  const double s = accuracy_of(b.suite, "sim2dec").status;
  const double p = accuracy_of(b.suite, "prediction").status;
  std::ostringstream detail;
  detail << "status accuracy sim2dec " << f4(s) << " - prediction " << f4(p) << " = " << f4(s - p) << " (need >= 0.03)";
  return verdict(s - p >= 0.03, detail.str());
}

Outcome policy_oracle() {
  const PolicyBench& b = policy_bench();
  const cli::DecisionSuite suite = cli::run_decisions(b.prepared, b.setup, b.config, 1);
  auto row = [&](const std::string& method) -> const cli::DecisionRow& {
    for (const cli::DecisionRow& r : suite.rows) {
      if (r.method == method) return r;
    }
    throw std::runtime_error("no decision row " + method);
  };
  const cli::DecisionRow& policy = row("sim2dec");
  const double match = policy.oracle_match.value_or(0.0);
  const double overall = policy.metrics.overall;
  const double lp = row("lp").metrics.overall;
  const double bandit = row("bandit_q").metrics.overall;
  const bool ok = match >= 0.90 && eval::round4(overall) >= eval::round4(lp) && eval::round4(overall) >= eval::round4(bandit);
  std::ostringstream detail;
  detail << "oracle match " << f4(match) << " (need >= 0.90); overall policy " << f4(overall) << ", lp " << f4(lp)
         << ", bandit_q " << f4(bandit) << ", oracle " << f4(row("oracle").metrics.overall);
  return verdict(ok, detail.str());
}

Outcome ablation() {
  const PolicyBench& b = policy_bench();
  cli::ExperimentConfig config = b.config;
  int interior = 0;
  double combined = 0.0, hist = 0.0, future = 0.0;
  std::ostringstream detail;
  const std::uint64_t seeds[] = {1, 2, 3, 4, 5};
  for (std::uint64_t seed : seeds) {
    const cli::AblationResult r = cli::run_ablation(b.prepared, b.setup, config, seed);
    interior += r.best_interior ? 1 : 0;
    combined += r.combined.metrics.overall;
    hist += r.historical_only.metrics.overall;
    future += r.future_only.metrics.overall;
    detail << "seed " << seed << " best lambda " << r.best_lambda << (r.best_interior ? " (interior)" : " (edge)")
           << "; ";
  }
  const double n = static_cast<double>(std::size(seeds));
  combined /= n;
  hist /= n;
  future /= n;
  const bool direction = combined >= std::max(hist, future) - 0.01;
  detail << "mean overall combined " << f4(combined) << ", L_h only " << f4(hist) << ", L_f only " << f4(future)
         << "; interior on " << interior << "/5 seeds";
  return verdict(direction && interior >= 4, detail.str());
}

Outcome distribution_shift() {
  const cli::ExperimentConfig config = synthetic_config("standard", {"markov"});
  const cli::SourceData source = cli::load_source(config);
  const cli::ShiftResult r = cli::run_shift(source, config, 1);
  const cli::MethodHistogram& s = r.method("sim2dec");
  const cli::MethodHistogram& m = r.method("markov");
  std::ostringstream detail;
  detail << "threshold " << r.threshold << "; TV to test time-class distribution sim2dec " << f4(s.tv_expected)
         << " vs markov " << f4(m.tv_expected) << " (hard histograms " << f4(s.tv_hard) << " vs " << f4(m.tv_hard)
         << ")";
  return verdict(s.tv_expected < m.tv_expected, detail.str());
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "simdec");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "simdec_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path config = dir / "tiny.json";
  std::ofstream(config) << R"({
    "version": 1,
    "synthetic": {"n_orders": 300, "seed": 3},
    "seeds": [1, 2],
    "simulator": {"embed_dim": 8, "hidden_dim": 8, "train": {"max_epochs": 3, "batch_size": 64}},
    "policy": {"epochs": 3, "hidden": [16, 8], "batch_size": 64},
    "bandit": {"epochs": 3, "hidden": [16, 8], "batch_size": 64},
    "lambdas": [0, 0.5, 1],
    "eval_batch_size": 64
  })";
  const std::vector<std::string> commands{"prepare", "train-sim", "train-policy", "evaluate", "ablate", "shift"};
  for (const std::string run : {"a", "b"}) {
    const std::string out = (dir / run).string();
    for (const std::string& cmd : commands) {
      std::vector<std::string> args{cmd, "--out", out};
      if (cmd == "prepare" || cmd == "shift") args.insert(args.end(), {"--config", config.string()});
      if (run_cli(args) != 0) return {Verdict::fail, "command " + cmd + " failed in run " + run};
    }
  }
  std::vector<std::string> differing;
  for (const std::string& cmd : commands) {
    const std::string a = slurp(dir / "a" / cmd / "metrics.json");
    const std::string b = slurp(dir / "b" / cmd / "metrics.json");
    if (a.empty() || a != b) differing.push_back(cmd);
  }
  std::string detail = "metrics.json byte-identical across two runs of " + std::to_string(commands.size()) + " commands";
  if (!differing.empty()) {
    detail = "differs:";
    for (const auto& d : differing) detail += " " + d;
  }
  return verdict(differing.empty(), detail);
}

Outcome dataco_accuracy() {
  const char* path = std::getenv("SIMDEC_DATACO_CONFIG");
  if (path == nullptr) return {Verdict::skip, "informative only; set SIMDEC_DATACO_CONFIG to an experiment config naming the CSV"};
  const cli::ExperimentConfig config = cli::ExperimentConfig::load(path);
  const cli::SourceData source = cli::load_source(config);
  const cli::PreparedData prepared = cli::prepare_data(source, cli::standard_split(source, config.seeds.front()));
  const cli::SimulatorSuite suite =
      cli::train_simulators(prepared, config.simulator, config.seeds.front(), config.eval_batch_size);
  const double overall = accuracy_of(suite, "sim2dec").overall;
  const bool within = std::abs(overall - 0.9351) <= 0.10;
  return {Verdict::skip, "informative: sim2dec overall " + f4(overall) + (within ? " within" : " outside") +
                             " 0.10 of the reference 0.9351"};
}

struct Criterion {
  std::string name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"metric_arithmetic", metric_arithmetic}, {"gradient_suite", gradient_suite},
      {"gumbel_softmax", gumbel_softmax},       {"simulator_oracle", simulator_oracle},
      {"inter_attribute", inter_attribute},     {"policy_oracle", policy_oracle},
      {"ablation", ablation},                   {"distribution_shift", distribution_shift},
      {"determinism", determinism},             {"dataco_accuracy", dataco_accuracy},
  };
  const std::set<std::string> wanted(argv + 1, argv + argc);
  int passed = 0, failed = 0, skipped = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Verdict::fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::fail ? "FAIL" : "SKIP";
    std::printf("%s %s: %s [%.1f s]\n", tag, c.name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    (o.verdict == Verdict::pass ? passed : o.verdict == Verdict::fail ? failed : skipped)++;
  }
  std::printf("acceptance: %d passed, %d failed, %d skipped\n", passed, failed, skipped);
  return failed == 0 ? 0 : 1;
}
