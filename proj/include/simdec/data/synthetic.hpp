#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdec/data/order.hpp"
#include "simdec/data/schema.hpp"
#include "simdec/data/stats.hpp"

namespace simdec::data {

/// Planted mapping (order features, shipping mode) -> (risk, days, status, profit).
///
/// Four latent scores are linear in the numeric features: distance u, schedule
/// slack v, order value q and risk propensity r. For mode d:
///   risk   = [r + risk_offset[d] + noise > 0]
///   score  = time_offset[d] + distance_gain * u + risk_delay * risk + noise
///   days   = 1 + #{time_thresholds < score}
///   sched  = 1 + #{schedule_thresholds < v}
///   status = [days <= sched]
///   profit = price_base + price_scale * q + category_margin[c] - cost[d] + noise
/// Status therefore depends on the realized delivery days.
struct PlantedRule {
  int n_modes = 4;
  int n_time_classes = 4;
  std::size_t n_features = 0;
  std::vector<double> w_distance, w_slack, w_value, w_risk;
  std::vector<double> time_offset, risk_offset, cost;
  std::vector<double> category_margin;
  std::vector<double> time_thresholds;      // K - 1, increasing
  std::vector<double> schedule_thresholds;  // K - 1, increasing
  double distance_gain = 1.0;
  double risk_delay = 0.5;
  double price_base = 100.0;
  double price_scale = 40.0;

  struct Outcome {
    int risk = 0;
    int time_days = 1;
    int status = 0;
    double profit = 0.0;
  };

  /// Per-draw perturbations; all zero reproduces the deterministic rule.
  struct Noise {
    double risk = 0.0;
    double time = 0.0;
    double profit = 0.0;
  };

  /// Default coefficients. Each latent reads one group: value from p, risk from
  /// c, distance from s and slack from o (all features if that group is empty).
  /// Weight directions are drawn from `seed`.
  static PlantedRule standard(const std::array<std::size_t, kGroupCount>& group_dims, std::size_t n_categories,
                              int n_modes, int n_time_classes, std::uint64_t seed);

  /// Four-mode variant of `standard` in which mode 2 is the cheapest and
  /// usually on time, so it is optimal for most orders. Mode 3 is faster but
  /// costly and wins only where it alone arrives on schedule; modes 0 and 1
  /// are slower and never cheaper than mode 2.
  static PlantedRule dominant_mode(const std::array<std::size_t, kGroupCount>& group_dims,
                                   std::size_t n_categories, int n_time_classes, std::uint64_t seed);

  Outcome outcome(std::span<const double> features, int category, int mode, const Noise& noise) const;
  Outcome outcome(std::span<const double> features, int category, int mode) const;
  Outcome outcome(const OrderRecord& record, int mode) const;

  /// status + normalized profit under `mode`, from the noise-free rule.
  double reward(const OrderRecord& record, int mode, const ProfitNormalizer& norm) const;
  /// Mode maximizing reward; lowest index on ties.
  int oracle_optimal_mode(const OrderRecord& record, const ProfitNormalizer& norm) const;

  nlohmann::json to_json() const;
  static PlantedRule from_json(const nlohmann::json& j);

  /// Numeric features in p, c, s, o order and the category index of a record.
  static std::pair<std::vector<double>, int> features_of(const OrderRecord& record);
};

struct SyntheticConfig {
  std::size_t n_orders = 5000;
  int n_modes = 4;
  int n_time_classes = 4;
  std::array<std::size_t, kGroupCount> group_dims{2, 2, 2, 2};  // numeric columns per group
  std::size_t n_categories = 3;  // categorical product column; 0 drops it
  double noise = 0.0;            // in [0, 1]
  /// 0 draws the base regime; nonzero moves feature means along the distance
  /// direction by 3 * shift, changing the delivery-days marginal.
  double shift = 0.0;
  std::uint64_t seed = 1;
  std::uint64_t coefficient_seed = 7;
  /// "standard" or "dominant_mode"; selects the coefficient family.
  std::string preset = "standard";
  std::optional<PlantedRule> rule;  // overrides the preset

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticConfig from_json(const nlohmann::json& j);
};

struct SyntheticDataset {
  std::vector<OrderRecord> records;
  PlantedRule rule;
  DatasetSchema schema;
};

/// Orders drawn i.i.d.: standard-normal numeric features (shifted when
/// config.shift != 0), uniform category, uniformly logged historical mode, and
/// states from the planted rule.
SyntheticDataset generate_synthetic(const SyntheticConfig& config);

/// Sidecar with planted coefficients, the profit bounds used and oracle modes.
nlohmann::json synthetic_sidecar(const SyntheticDataset& ds, const SyntheticConfig& config);

}  // namespace simdec::data
