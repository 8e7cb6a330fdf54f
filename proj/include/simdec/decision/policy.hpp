#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "simdec/data/encode.hpp"
#include "simdec/data/stats.hpp"
#include "simdec/nn/functional.hpp"
#include "simdec/nn/layers.hpp"

namespace simdec::decision {

/// Policy output for a batch: raw scores and the two derived views.
struct ModeScores {
  nn::Tensor raw;      // N x D
  nn::Tensor probs;    // softmax(raw), rows sum to 1
  nn::Tensor sigmoid;  // sigma(raw), entries in (0, 1)

  static ModeScores from_raw(nn::Tensor raw);
};

/// Feedforward scorer over the concatenated order-information groups.
class DecisionPolicy {
 public:
  DecisionPolicy(std::size_t input_dim, int n_modes, std::span<const std::size_t> hidden, std::uint64_t seed);

  int n_modes() const { return n_modes_; }
  std::size_t input_dim() const { return net_.in_features(); }

  ModeScores score(const nn::Tensor& x, nn::Mlp::Trace* trace = nullptr) const;
  ModeScores score(const data::OrderFeatures& features) const { return score(features.concatenated()); }
  /// Accumulates parameter gradients from d(loss)/d(raw scores).
  void backward(const nn::Mlp::Trace& trace, const nn::Tensor& d_raw) { net_.backward(trace, d_raw); }

  nn::ParameterList parameters();
  nn::Mlp& network() { return net_; }

  void save(const std::filesystem::path& path, const nlohmann::json& extra = nlohmann::json::object());
  static DecisionPolicy load(const std::filesystem::path& path);

 private:
  nn::Mlp net_;
  int n_modes_ = 0;
  std::vector<std::size_t> hidden_;
};

/// Argmax of the raw scores of each row; lowest index on ties.
std::vector<int> decide(const ModeScores& scores);
std::vector<int> decide(const DecisionPolicy& policy, const data::OrderFeatures& features);

struct LossResult {
  double value = 0.0;
  nn::Tensor d_raw;  // gradient with respect to the raw scores
};

/// Experience loss -sum_n sum_d probs[n][d] * E[d] with E[d] the historical
/// reward of mode d (0 for absent modes). Throws if no mode is present.
LossResult historical_loss(const ModeScores& scores, const data::HistoricalStats& stats);
LossResult historical_loss(const ModeScores& scores, std::span<const double> expected_reward);

/// Per-order, per-mode outcomes: status and normalized profit if order n were
/// shipped with mode d.
struct RewardTable {
  nn::Tensor status;  // N x D
  nn::Tensor profit;  // N x D, normalized to [0, 1]

  std::size_t size() const { return status.rows(); }
  int n_modes() const { return static_cast<int>(status.cols()); }
  double reward(std::size_t n, int d) const;
  RewardTable select(std::span<const std::size_t> rows) const;
};

struct FutureLossResult {
  double value = 0.0;
  nn::Tensor d_raw;
  std::vector<int> sampled;        // mode drawn for every order
  std::vector<double> batch_reward;  // R_d per mode; NaN when no order drew d
  std::vector<bool> valid;
};

/// Future-estimation loss for one batch:
///  1. draw a mode per order by straight-through Gumbel-Softmax over sigma(raw)
///     (over raw when `sample_logits`),
///  2. look up each order's simulated outcome under its drawn mode,
///  3. R_d = timely rate + mean normalized profit of the orders that drew d,
///  4. L_f = (1/N) sum_n sum_{d valid} (sigma(raw[n][d]) - R_d)^2.
/// Gradients reach the scores directly and through R_d's dependence on the
/// one-hot draws; the reward table itself is a constant.
FutureLossResult future_loss(const ModeScores& scores, const RewardTable& rewards, const nn::Tensor& gumbel_noise,
                             double temperature, bool sample_logits = false);
FutureLossResult future_loss(const ModeScores& scores, const RewardTable& rewards, double temperature, nn::Rng& rng,
                             bool sample_logits = false);

}  // namespace simdec::decision
