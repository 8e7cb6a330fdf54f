#pragma once

#include <array>
#include <span>
#include <vector>

#include "simdec/nn/tensor.hpp"

namespace simdec::sim {

/// Predicted state attributes for a batch of orders.
struct SimulatedStates {
  std::vector<double> risk_prob;
  nn::Tensor time_scores;  // N x K raw scores (class probabilities for count-based models)
  nn::Tensor time_probs;   // N x K
  std::vector<double> status_prob;
  std::vector<int> risk;
  std::vector<int> time_class;  // 1-based
  std::vector<int> status;
  /// Decoder hidden state after each attribute step; empty for models without one.
  std::vector<nn::Tensor> decoder_hidden;

  std::size_t size() const { return risk.size(); }
  /// Fills the hard fields from the probabilities and scores.
  void decode_hard();
};

/// Threshold rule for binary attributes; 0.5 maps to 1.
int decode_binary(double probability);
/// 1-based argmax; the first of tied maxima wins.
int decode_time(std::span<const double> scores);

/// Mean of the four projected group tokens of every order (rows).
nn::Tensor order_summaries(const std::array<nn::Tensor, 4>& group_tokens);
/// Arithmetic mean over orders of their summaries; shape {E}.
nn::Tensor pool_global(const nn::Tensor& summaries);

/// Squared-error training loss: (risk_prob - risk)^2 + ||time_probs - onehot||^2 +
/// (status_prob - status)^2, summed over orders.
double state_loss(std::span<const double> risk_prob, const nn::Tensor& time_probs,
                  std::span<const double> status_prob, std::span<const int> risk, std::span<const int> time_class,
                  std::span<const int> status);

}  // namespace simdec::sim
