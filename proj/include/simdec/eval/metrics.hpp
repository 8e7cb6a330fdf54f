#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdec/data/stats.hpp"
#include "simdec/nn/tensor.hpp"
#include "simdec/sim/states.hpp"

namespace simdec::eval {

/// Rounds half away from zero to four decimals, the precision of the reports.
double round4(double x);

struct AttributeAccuracy {
  double risk = 0.0;
  double time = 0.0;
  double status = 0.0;
  double overall = 0.0;  // unweighted mean of the three

  static AttributeAccuracy from_parts(double risk, double time, double status);
  nlohmann::json to_json() const;
};

/// Exact-match accuracy of the hard predictions, per attribute.
AttributeAccuracy simulator_accuracy(const sim::SimulatedStates& predicted, std::span<const int> risk,
                                     std::span<const int> time_class, std::span<const int> status);

struct DecisionMetrics {
  double t_time = 0.0;    // fraction delivered on time
  double t_profit = 0.0;  // mean normalized profit
  double diff = 0.0;      // |t_time - t_profit|
  double overall = 0.0;   // t_time + t_profit

  static DecisionMetrics from_parts(double t_time, double t_profit);
  nlohmann::json to_json() const;
};

/// Metrics of a set of orders given the status and raw profit each ended with.
DecisionMetrics decision_metrics(std::span<const int> status, std::span<const double> profit,
                                 const data::ProfitNormalizer& norm);

/// Normalized histogram of 1-based classes over K bins.
std::vector<double> class_histogram(std::span<const int> classes, int n_classes);
/// Column means of a rows x K probability matrix.
std::vector<double> mean_distribution(const nn::Tensor& probs);
/// Half the L1 distance between two distributions; each must sum to 1 within 1e-9.
double tv_distance(std::span<const double> p, std::span<const double> q);

}  // namespace simdec::eval
