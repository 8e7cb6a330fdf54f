#include "simdec/decision/train.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "simdec/errors.hpp"
#include "simdec/nn/adam.hpp"
#include "simdec/sim/train.hpp"

namespace simdec::decision {

namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

RewardTable simulated_rewards(const sim::StateModel& simulator, const data::OrderFeatures& features,
                              const nn::Tensor& profit, std::size_t batch_size) {
  const std::size_t n = features.size();
  const auto d = static_cast<std::size_t>(simulator.shape().n_modes);
  if (profit.rows() != n || profit.cols() != d) throw ShapeError("simulated_rewards: profit table shape mismatch");
  RewardTable out{nn::Tensor::matrix(n, d), profit};
  const std::vector<std::size_t> rows = iota(n);
  for (auto chunk : sim::balanced_chunks(rows, batch_size)) {
    const data::OrderFeatures part = features.select(chunk);
    for (std::size_t j = 0; j < d; ++j) {
      const std::vector<int> modes(chunk.size(), static_cast<int>(j));
      const sim::SimulatedStates s = simulator.simulate(part, modes);
      for (std::size_t i = 0; i < chunk.size(); ++i) out.status(chunk[i], j) = s.status[i];
    }
  }
  return out;
}

eval::DecisionMetrics outcome_metrics(const RewardTable& outcomes, std::span<const int> modes) {
  if (modes.empty()) throw std::invalid_argument("outcome_metrics: empty evaluation set");
  if (modes.size() != outcomes.size()) throw ShapeError("outcome_metrics: one mode per order required");
  double timely = 0.0, profit = 0.0;
  for (std::size_t n = 0; n < modes.size(); ++n) {
    const auto j = static_cast<std::size_t>(modes[n]);
    timely += outcomes.status(n, j);
    profit += outcomes.profit(n, j);
  }
  const double dn = static_cast<double>(modes.size());
  return eval::DecisionMetrics::from_parts(timely / dn, profit / dn);
}

double PolicyConfig::temperature(int epoch) const {
  if (epochs <= 1) return tau_start;
  const double frac = static_cast<double>(epoch - 1) / static_cast<double>(epochs - 1);
  return tau_start * std::pow(tau_end / tau_start, frac);
}

nlohmann::json PolicyConfig::to_json() const {
  return {{"hidden", hidden},
          {"lambda", lambda},
          {"use_future", use_future},
          {"use_historical", use_historical},
          {"tau_start", tau_start},
          {"tau_end", tau_end},
          {"sample_logits", sample_logits},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"patience", patience},
          {"seed", seed}};
}

PolicyConfig PolicyConfig::from_json(const nlohmann::json& j, PolicyConfig base) {
  if (j.contains("hidden")) base.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  base.lambda = j.value("lambda", base.lambda);
  base.use_future = j.value("use_future", base.use_future);
  base.use_historical = j.value("use_historical", base.use_historical);
  base.tau_start = j.value("tau_start", base.tau_start);
  base.tau_end = j.value("tau_end", base.tau_end);
  base.sample_logits = j.value("sample_logits", base.sample_logits);
  base.lr = j.value("lr", base.lr);
  base.weight_decay = j.value("weight_decay", base.weight_decay);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.epochs = j.value("epochs", base.epochs);
  base.patience = j.value("patience", base.patience);
  base.seed = j.value("seed", base.seed);
  return base;
}

nlohmann::json PolicyTrainResult::to_json() const {
  nlohmann::json c = nlohmann::json::array();
  for (const PolicyEpoch& e : curve) {
    c.push_back({{"epoch", e.epoch},
                 {"temperature", e.temperature},
                 {"future_loss", e.future_loss},
                 {"historical_loss", e.historical_loss},
                 {"loss", e.loss},
                 {"val_overall", e.val_overall}});
  }
  return {{"curve", c}, {"best_epoch", best_epoch}, {"best_val_overall", best_val_overall}, {"epochs_run", epochs_run}};
}

PolicyTrainResult train_policy(DecisionPolicy& policy, const data::OrderFeatures& train_features,
                               const RewardTable& train_rewards, const data::OrderFeatures& val_features,
                               const RewardTable& val_outcomes, const data::HistoricalStats& stats,
                               const PolicyConfig& config) {
  if (train_features.size() != train_rewards.size()) throw ShapeError("train_policy: reward table/feature mismatch");
  if (!config.use_future && !config.use_historical) {
    throw std::invalid_argument("train_policy: at least one loss term must be enabled");
  }
  if (config.lambda < 0.0) throw std::invalid_argument("train_policy: lambda must be >= 0");
  nn::ParameterList params = policy.parameters();
  nn::zero_grads(params);
  nn::AdamConfig adam;
  adam.lr = config.lr;
  adam.weight_decay = config.weight_decay;
  nn::Rng order_rng = nn::Rng::derive(config.seed, 0xb0);
  nn::Rng gumbel_rng = nn::Rng::derive(config.seed, 0x6b);

  const nn::Tensor x_train = train_features.concatenated();
  const nn::Tensor x_val = val_features.concatenated();
  const std::vector<double> expected = stats.expected_rewards();
  if (config.use_historical && !stats.any_present()) {
    throw std::invalid_argument("train_policy: no mode has historical statistics");
  }

  const std::vector<std::size_t> rows = iota(train_features.size());
  const auto chunks = sim::balanced_chunks(rows, config.batch_size);
  std::vector<std::size_t> visit = iota(chunks.size());

  auto validate = [&]() { return outcome_metrics(val_outcomes, decide(policy.score(x_val))).overall; };

  PolicyTrainResult result;
  result.curve.push_back({0, config.tau_start, 0.0, 0.0, 0.0, validate()});
  result.best_val_overall = result.curve.back().val_overall;
  std::vector<nn::Tensor> best = nn::snapshot_values(params);
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double tau = config.temperature(epoch);
    order_rng.shuffle(std::span<std::size_t>(visit));
    PolicyEpoch rec;
    rec.epoch = epoch;
    rec.temperature = tau;
    for (std::size_t b : visit) {
      const auto chunk = chunks[b];
      const nn::Tensor x = nn::select_rows(x_train, chunk);
      nn::Mlp::Trace trace;
      const ModeScores scores = policy.score(x, &trace);
      nn::Tensor d_raw = nn::Tensor::matrix(x.rows(), static_cast<std::size_t>(policy.n_modes()));
      double batch_loss = 0.0;
      if (config.use_future) {
        const FutureLossResult f =
            future_loss(scores, train_rewards.select(chunk), tau, gumbel_rng, config.sample_logits);
        d_raw += f.d_raw;
        batch_loss += f.value;
        rec.future_loss += f.value;
      }
      if (config.use_historical) {
        LossResult h = historical_loss(scores, expected);
        rec.historical_loss += h.value;
        // With the future term disabled the experience loss is used on its own.
        const double weight = config.use_future ? config.lambda : 1.0;
        h.d_raw *= weight;
        d_raw += h.d_raw;
        batch_loss += weight * h.value;
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("policy training diverged at epoch " + std::to_string(epoch));
      }
      rec.loss += batch_loss;
      policy.backward(trace, d_raw);
      nn::adam_step(params, adam);
    }
    rec.future_loss /= static_cast<double>(chunks.size());
    rec.historical_loss /= static_cast<double>(train_features.size());
    rec.loss /= static_cast<double>(chunks.size());
    rec.val_overall = validate();
    result.curve.push_back(rec);
    result.epochs_run = epoch;
    if (rec.val_overall > result.best_val_overall) {
      result.best_val_overall = rec.val_overall;
      result.best_epoch = epoch;
      best = nn::snapshot_values(params);
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      break;
    }
  }
  nn::restore_values(params, best);
  return result;
}

LpResult lp_baseline(const RewardTable& outcomes) {
  LpResult out;
  const int d = outcomes.n_modes();
  for (int j = 0; j < d; ++j) {
    const std::vector<int> modes(outcomes.size(), j);
    out.mode_overall.push_back(outcome_metrics(outcomes, modes).overall);
  }
  out.mode = static_cast<int>(nn::argmax(out.mode_overall));
  return out;
}

double BanditConfig::epsilon(int epoch) const {
  if (epochs <= 1) return epsilon_end;
  const double frac = static_cast<double>(epoch - 1) / static_cast<double>(epochs - 1);
  return epsilon_start + (epsilon_end - epsilon_start) * frac;
}

nlohmann::json BanditConfig::to_json() const {
  return {{"hidden", hidden},       {"lr", lr},         {"weight_decay", weight_decay},
          {"batch_size", batch_size}, {"epochs", epochs}, {"epsilon_start", epsilon_start},
          {"epsilon_end", epsilon_end}, {"seed", seed}};
}

BanditConfig BanditConfig::from_json(const nlohmann::json& j, BanditConfig base) {
  if (j.contains("hidden")) base.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  base.lr = j.value("lr", base.lr);
  base.weight_decay = j.value("weight_decay", base.weight_decay);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.epochs = j.value("epochs", base.epochs);
  base.epsilon_start = j.value("epsilon_start", base.epsilon_start);
  base.epsilon_end = j.value("epsilon_end", base.epsilon_end);
  base.seed = j.value("seed", base.seed);
  return base;
}

int epsilon_greedy(std::span<const double> q, double epsilon, nn::Rng& rng) {
  if (q.empty()) throw std::invalid_argument("epsilon_greedy: no actions");
  if (rng.uniform() < epsilon) return static_cast<int>(rng.index(q.size()));
  return static_cast<int>(nn::argmax(q));
}

LossResult bandit_loss(const nn::Tensor& q, std::span<const int> actions, std::span<const double> rewards) {
  if (actions.size() != q.rows() || rewards.size() != q.rows()) throw ShapeError("bandit_loss: batch size mismatch");
  LossResult out;
  out.d_raw = nn::Tensor::matrix(q.rows(), q.cols());
  for (std::size_t n = 0; n < q.rows(); ++n) {
    const auto a = static_cast<std::size_t>(actions[n]);
    const double r = q(n, a) - rewards[n];
    out.value += r * r;
    out.d_raw(n, a) = 2.0 * r;
  }
  return out;
}

std::vector<BanditEpoch> train_bandit_q(DecisionPolicy& q, const data::OrderFeatures& train_features,
                                        const RewardTable& train_rewards, const BanditConfig& config) {
  if (train_features.size() != train_rewards.size()) throw ShapeError("train_bandit_q: reward table/feature mismatch");
  nn::ParameterList params = q.parameters();
  nn::zero_grads(params);
  nn::AdamConfig adam;
  adam.lr = config.lr;
  adam.weight_decay = config.weight_decay;
  nn::Rng order_rng = nn::Rng::derive(config.seed, 0xba);
  nn::Rng act_rng = nn::Rng::derive(config.seed, 0xac);
  const nn::Tensor x_train = train_features.concatenated();
  std::vector<std::size_t> order = iota(train_features.size());
  std::vector<BanditEpoch> curve;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    BanditEpoch rec;
    rec.epoch = epoch;
    rec.epsilon = config.epsilon(epoch);
    order_rng.shuffle(std::span<std::size_t>(order));
    for (auto chunk : sim::balanced_chunks(order, config.batch_size)) {
      nn::Mlp::Trace trace;
      const ModeScores s = q.score(nn::select_rows(x_train, chunk), &trace);
      std::vector<int> actions(chunk.size());
      std::vector<double> rewards(chunk.size());
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        actions[i] = epsilon_greedy(s.raw.row(i), rec.epsilon, act_rng);
        rewards[i] = train_rewards.reward(chunk[i], actions[i]);
        rec.mean_reward += rewards[i];
      }
      const LossResult l = bandit_loss(s.raw, actions, rewards);
      if (!std::isfinite(l.value)) throw DivergenceError("bandit training diverged at epoch " + std::to_string(epoch));
      rec.loss += l.value;
      q.backward(trace, l.d_raw);
      nn::adam_step(params, adam);
    }
    rec.loss /= static_cast<double>(order.size());
    rec.mean_reward /= static_cast<double>(order.size());
    curve.push_back(rec);
  }
  return curve;
}

}  // namespace simdec::decision
