#pragma once

#include <span>
#include <vector>

#include "json.hpp"
#include "simdec/data/encode.hpp"
#include "simdec/nn/rng.hpp"
#include "simdec/sim/states.hpp"

namespace simdec::sim {

/// Chained conditional frequency tables P(risk | mode), P(days | mode, risk) and
/// P(status | mode, risk, days), Laplace-smoothed with `alpha`. A conditioning
/// combination never seen in training falls back to the mode-only marginal.
class MarkovModel {
 public:
  static MarkovModel fit(const data::EncodedDataset& ds, std::span<const std::size_t> rows, double alpha = 1.0);

  int n_modes() const { return n_modes_; }
  int n_time_classes() const { return n_time_classes_; }
  double alpha() const { return alpha_; }

  double p_risk(int mode) const;
  /// P(days = k | mode, risk) over k = 1..K.
  std::vector<double> p_time(int mode, int risk) const;
  double p_status(int mode, int risk, int time_class) const;
  /// Marginal P(days | mode) implied by the chain.
  std::vector<double> time_marginal(int mode) const;

  /// Most likely value at each link of the chain.
  SimulatedStates predict(std::span<const int> modes) const;
  /// Ancestral sampling through the chain.
  SimulatedStates sample(std::span<const int> modes, nn::Rng& rng) const;

  nlohmann::json to_json() const;
  static MarkovModel from_json(const nlohmann::json& j);

 private:
  std::size_t risk_key(int mode, int risk) const { return static_cast<std::size_t>(mode * 2 + risk); }
  std::size_t status_key(int mode, int risk, int t) const {
    return risk_key(mode, risk) * static_cast<std::size_t>(n_time_classes_) + static_cast<std::size_t>(t - 1);
  }
  void check_mode(int mode) const;

  int n_modes_ = 0;
  int n_time_classes_ = 0;
  double alpha_ = 1.0;
  std::vector<double> risk_count_, risk_pos_;                  // [mode]
  std::vector<std::vector<double>> time_count_;                // [mode, risk][k]
  std::vector<std::vector<double>> time_mode_count_;           // [mode][k]
  std::vector<double> status_count_, status_pos_;              // [mode, risk, k]
  std::vector<double> status_mode_count_, status_mode_pos_;    // [mode]
};

}  // namespace simdec::sim
