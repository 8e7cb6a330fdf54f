#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdec/data/encode.hpp"

namespace simdec::data {

/// Min-max profit scaling fitted on training orders; values outside the fitted
/// range are clamped to [0, 1].
struct ProfitNormalizer {
  double lo = 0.0;
  double hi = 1.0;

  static ProfitNormalizer fit(std::span<const double> profits, std::span<const std::size_t> rows);
  double operator()(double profit) const;

  nlohmann::json to_json() const { return {{"lo", lo}, {"hi", hi}}; }
  static ProfitNormalizer from_json(const nlohmann::json& j) {
    return {j.at("lo").get<double>(), j.at("hi").get<double>()};
  }
};

struct ModeStats {
  double mean_timely = 0.0;  // E[T^Time | mode]
  double mean_profit = 0.0;  // E[normalized profit | mode]
  std::size_t count = 0;
  bool present = false;
};

/// Per-mode historical expectations used by the experience loss.
struct HistoricalStats {
  std::vector<ModeStats> modes;
  std::vector<std::string> warnings;

  /// E^d = mean_timely + mean_profit; 0 for modes never seen in training.
  double expected_reward(std::size_t mode) const;
  std::vector<double> expected_rewards() const;
  bool any_present() const;

  nlohmann::json to_json() const;
  static HistoricalStats from_json(const nlohmann::json& j);
};

HistoricalStats compute_historical_stats(const EncodedDataset& encoded, std::span<const std::size_t> train_rows,
                                         const ProfitNormalizer& profit_norm);

}  // namespace simdec::data
