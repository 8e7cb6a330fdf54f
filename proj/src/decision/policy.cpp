#include "simdec/decision/policy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "simdec/errors.hpp"
#include "simdec/nn/checkpoint.hpp"

namespace simdec::decision {

ModeScores ModeScores::from_raw(nn::Tensor raw) {
  ModeScores s;
  s.probs = nn::softmax_rows(raw);
  s.sigmoid = nn::sigmoid(raw);
  s.raw = std::move(raw);
  return s;
}

DecisionPolicy::DecisionPolicy(std::size_t input_dim, int n_modes, std::span<const std::size_t> hidden,
                               std::uint64_t seed)
    : n_modes_(n_modes), hidden_(hidden.begin(), hidden.end()) {
  if (n_modes < 1) throw std::invalid_argument("policy: need at least one mode");
  nn::Rng rng(seed);
  net_ = nn::Mlp("policy", input_dim, hidden, static_cast<std::size_t>(n_modes), rng);
}

ModeScores DecisionPolicy::score(const nn::Tensor& x, nn::Mlp::Trace* trace) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("policy: input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(input_dim()));
  }
  return ModeScores::from_raw(net_.forward(x, trace));
}

nn::ParameterList DecisionPolicy::parameters() {
  nn::ParameterList out;
  net_.collect(out);
  return out;
}

void DecisionPolicy::save(const std::filesystem::path& path, const nlohmann::json& extra) {
  nlohmann::json hyper = {{"kind", "policy"}, {"input_dim", input_dim()}, {"n_modes", n_modes_}, {"hidden", hidden_}};
  hyper["extra"] = extra;
  nn::save_checkpoint(path, parameters(), hyper);
}

DecisionPolicy DecisionPolicy::load(const std::filesystem::path& path) {
  const nlohmann::json hyper = nn::read_checkpoint_header(path).at("hyper");
  const auto hidden = hyper.at("hidden").get<std::vector<std::size_t>>();
  DecisionPolicy p(hyper.at("input_dim").get<std::size_t>(), hyper.at("n_modes").get<int>(), hidden, 0);
  nn::load_checkpoint(path, p.parameters());
  return p;
}

std::vector<int> decide(const ModeScores& scores) {
  std::vector<int> out(scores.raw.rows());
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = static_cast<int>(nn::argmax(scores.raw.row(n)));
  return out;
}

std::vector<int> decide(const DecisionPolicy& policy, const data::OrderFeatures& features) {
  return decide(policy.score(features));
}

LossResult historical_loss(const ModeScores& scores, std::span<const double> expected) {
  const std::size_t n = scores.probs.rows();
  const std::size_t d = scores.probs.cols();
  if (expected.size() != d) throw ShapeError("historical_loss: expected-reward vector has wrong length");
  LossResult out;
  out.d_raw = nn::Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += scores.probs(i, j) * expected[j];
    out.value -= mean;
    // d/draw of -sum_j p_j E_j under softmax is -p_k (E_k - sum_j p_j E_j).
    for (std::size_t j = 0; j < d; ++j) out.d_raw(i, j) = -scores.probs(i, j) * (expected[j] - mean);
  }
  return out;
}

LossResult historical_loss(const ModeScores& scores, const data::HistoricalStats& stats) {
  if (!stats.any_present()) throw std::invalid_argument("historical_loss: no mode has historical statistics");
  const std::vector<double> e = stats.expected_rewards();
  return historical_loss(scores, e);
}

double RewardTable::reward(std::size_t n, int d) const {
  const auto j = static_cast<std::size_t>(d);
  return status(n, j) + profit(n, j);
}

RewardTable RewardTable::select(std::span<const std::size_t> rows) const {
  return {nn::select_rows(status, rows), nn::select_rows(profit, rows)};
}

FutureLossResult future_loss(const ModeScores& scores, const RewardTable& rewards, const nn::Tensor& gumbel_noise,
                             double temperature, bool sample_logits) {
  const std::size_t n = scores.raw.rows();
  const std::size_t d = scores.raw.cols();
  if (n < 2) throw std::invalid_argument("future_loss: batch needs at least 2 orders");
  if (rewards.size() != n || static_cast<std::size_t>(rewards.n_modes()) != d) {
    throw ShapeError("future_loss: reward table does not match the score batch");
  }
  const nn::Tensor& sample_input = sample_logits ? scores.raw : scores.sigmoid;
  const nn::GumbelSample sample = nn::gumbel_softmax_with_noise(sample_input, gumbel_noise, temperature, true);

  FutureLossResult out;
  out.sampled = sample.index;
  out.batch_reward.assign(d, std::numeric_limits<double>::quiet_NaN());
  out.valid.assign(d, false);
  std::vector<double> count(d, 0.0);
  std::vector<double> sum(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      const double y = sample.output(i, j);
      count[j] += y;
      sum[j] += y * rewards.reward(i, static_cast<int>(j));
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (count[j] > 0.0) {
      out.valid[j] = true;
      out.batch_reward[j] = sum[j] / count[j];
    }
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  nn::Tensor d_sig = nn::Tensor::matrix(n, d);
  std::vector<double> d_reward(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!out.valid[j]) continue;
      const double r = scores.sigmoid(i, j) - out.batch_reward[j];
      out.value += inv_n * r * r;
      d_sig(i, j) = 2.0 * inv_n * r;
      d_reward[j] -= 2.0 * inv_n * r;
    }
  }
  // R_d = sum_n y_nd rew_nd / sum_n y_nd, so dR_d/dy_nd = (rew_nd - R_d) / C_d.
  nn::Tensor d_y = nn::Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      if (!out.valid[j]) continue;
      d_y(i, j) = d_reward[j] * (rewards.reward(i, static_cast<int>(j)) - out.batch_reward[j]) / count[j];
    }
  }
  const nn::Tensor d_sample_input = nn::gumbel_softmax_backward(sample, d_y);
  if (sample_logits) {
    out.d_raw = nn::sigmoid_backward(scores.sigmoid, d_sig);
    out.d_raw += d_sample_input;
  } else {
    d_sig += d_sample_input;
    out.d_raw = nn::sigmoid_backward(scores.sigmoid, d_sig);
  }
  return out;
}

FutureLossResult future_loss(const ModeScores& scores, const RewardTable& rewards, double temperature, nn::Rng& rng,
                             bool sample_logits) {
  nn::Tensor noise = nn::Tensor::matrix(scores.raw.rows(), scores.raw.cols());
  for (double& v : noise.values()) v = rng.gumbel();
  return future_loss(scores, rewards, noise, temperature, sample_logits);
}

}  // namespace simdec::decision
