#pragma once

#include <span>
#include <string>
#include <vector>

#include "simdec/data/encode.hpp"
#include "simdec/data/stats.hpp"
#include "simdec/data/synthetic.hpp"
#include "simdec/nn/tensor.hpp"

namespace simdec::data {

/// Per-order outcomes under every mode. Profit is normalized; status is filled
/// only when a ground-truth rule is known (synthetic data).
struct CounterfactualTable {
  nn::Tensor profit;               // N x D in [0, 1]
  nn::Tensor status;               // N x D, empty when unknown
  std::vector<int> oracle_mode;    // empty when unknown
  std::string profit_source;       // "planted" or "historical"

  bool has_truth() const { return !status.empty(); }
  CounterfactualTable select(std::span<const std::size_t> rows) const;
};

/// Outcomes of the planted rule for every (order, mode).
CounterfactualTable planted_counterfactuals(const std::vector<OrderRecord>& records, const PlantedRule& rule,
                                            const ProfitNormalizer& norm);

/// Label of `column` for every record, or empty strings if the column is not in
/// any group.
std::vector<std::string> column_labels(const std::vector<OrderRecord>& records, const DatasetSchema& schema,
                                       const std::string& column);

/// Counterfactual profit estimated from training history: mean normalized profit
/// of training orders shipped with mode d, within the same `condition` label when
/// that (label, mode) pair was seen, otherwise over all training orders with mode
/// d. Modes absent from training get the overall training mean.
CounterfactualTable historical_counterfactuals(const EncodedDataset& ds, std::span<const std::size_t> train_rows,
                                               const ProfitNormalizer& norm,
                                               std::span<const std::string> condition = {});

}  // namespace simdec::data
