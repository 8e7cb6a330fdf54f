#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "simdec/decision/policy.hpp"
#include "simdec/eval/metrics.hpp"
#include "simdec/sim/model.hpp"

namespace simdec::decision {

/// Outcome table from a frozen simulator: status[n][d] is the simulated hard
/// on-time status of order n under mode d, profit[n][d] is copied from
/// `profit`. Orders are simulated in balanced contiguous chunks of `batch_size`,
/// each chunk being one pooling batch; the simulator is never modified.
RewardTable simulated_rewards(const sim::StateModel& simulator, const data::OrderFeatures& features,
                              const nn::Tensor& profit, std::size_t batch_size);

/// T^Time and T^Profit of shipping order n with modes[n], read from `outcomes`.
eval::DecisionMetrics outcome_metrics(const RewardTable& outcomes, std::span<const int> modes);

struct PolicyConfig {
  std::vector<std::size_t> hidden{128, 64};
  double lambda = 0.5;
  bool use_future = true;
  bool use_historical = true;
  double tau_start = 1.0;
  double tau_end = 0.1;
  bool sample_logits = false;  // Gumbel over raw scores instead of sigma(raw)
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch_size = 256;
  int epochs = 50;
  int patience = 10;  // epochs without validation improvement; 0 disables
  std::uint64_t seed = 1;

  /// Exponential decay from tau_start at the first epoch to tau_end at the last.
  double temperature(int epoch) const;

  nlohmann::json to_json() const;
  static PolicyConfig from_json(const nlohmann::json& j, PolicyConfig base);
};

struct PolicyEpoch {
  int epoch = 0;
  double temperature = 0.0;
  double future_loss = 0.0;      // mean per batch
  double historical_loss = 0.0;  // mean per order
  double loss = 0.0;             // per-batch L_f + lambda * L_h, averaged
  double val_overall = 0.0;
};

struct PolicyTrainResult {
  std::vector<PolicyEpoch> curve;  // epoch 0 is the untrained policy
  int best_epoch = 0;
  double best_val_overall = 0.0;
  int epochs_run = 0;

  nlohmann::json to_json() const;
};

/// Minibatch training of L = L_f + lambda * L_h. Batches are the balanced
/// contiguous chunks of the training rows (their membership must match the
/// chunks `train_rewards` was simulated with); only their visiting order is
/// reshuffled each epoch. Validation Overall uses `val_outcomes`; the best
/// epoch's parameters are restored.
PolicyTrainResult train_policy(DecisionPolicy& policy, const data::OrderFeatures& train_features,
                               const RewardTable& train_rewards, const data::OrderFeatures& val_features,
                               const RewardTable& val_outcomes, const data::HistoricalStats& stats,
                               const PolicyConfig& config);

struct LpResult {
  int mode = 0;
  std::vector<double> mode_overall;  // enumerated per-mode Overall
};

/// Single mode with the best Overall when every order in `outcomes` uses it.
/// Enumerates on the evaluation set itself, so it sees test outcomes.
LpResult lp_baseline(const RewardTable& outcomes);

struct BanditConfig {
  std::vector<std::size_t> hidden{128, 64};
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch_size = 256;
  int epochs = 50;
  double epsilon_start = 1.0;  // linear decay per epoch
  double epsilon_end = 0.05;
  std::uint64_t seed = 1;

  double epsilon(int epoch) const;
  nlohmann::json to_json() const;
  static BanditConfig from_json(const nlohmann::json& j, BanditConfig base);
};

/// With probability epsilon a uniform mode, otherwise argmax of `q`.
int epsilon_greedy(std::span<const double> q, double epsilon, nn::Rng& rng);

/// Squared error between Q(x_n, a_n) and the per-order reward r_n; only the
/// chosen action's output receives gradient.
LossResult bandit_loss(const nn::Tensor& q, std::span<const int> actions, std::span<const double> rewards);

struct BanditEpoch {
  int epoch = 0;
  double epsilon = 0.0;
  double loss = 0.0;         // mean squared error per order
  double mean_reward = 0.0;  // of the actions taken
};

/// One-step episodes against the simulated reward table: observe an order, pick a
/// mode epsilon-greedily, receive status + normalized profit for that order.
std::vector<BanditEpoch> train_bandit_q(DecisionPolicy& q, const data::OrderFeatures& train_features,
                                        const RewardTable& train_rewards, const BanditConfig& config);

}  // namespace simdec::decision
