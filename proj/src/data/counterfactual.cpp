#include "simdec/data/counterfactual.hpp"

#include <map>
#include <stdexcept>

#include "simdec/errors.hpp"

namespace simdec::data {

CounterfactualTable CounterfactualTable::select(std::span<const std::size_t> rows) const {
  CounterfactualTable out;
  out.profit = nn::select_rows(profit, rows);
  if (has_truth()) out.status = nn::select_rows(status, rows);
  for (std::size_t r : rows) {
    if (!oracle_mode.empty()) out.oracle_mode.push_back(oracle_mode.at(r));
  }
  out.profit_source = profit_source;
  return out;
}

CounterfactualTable planted_counterfactuals(const std::vector<OrderRecord>& records, const PlantedRule& rule,
                                            const ProfitNormalizer& norm) {
  const auto d = static_cast<std::size_t>(rule.n_modes);
  CounterfactualTable t;
  t.profit = nn::Tensor::matrix(records.size(), d);
  t.status = nn::Tensor::matrix(records.size(), d);
  t.oracle_mode.reserve(records.size());
  t.profit_source = "planted";
  for (std::size_t n = 0; n < records.size(); ++n) {
    const auto [x, category] = PlantedRule::features_of(records[n]);
    int best = 0;
    double best_reward = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const auto o = rule.outcome(x, category, static_cast<int>(j));
      t.profit(n, j) = norm(o.profit);
      t.status(n, j) = o.status;
      const double reward = o.status + t.profit(n, j);
      if (j == 0 || reward > best_reward) {
        best = static_cast<int>(j);
        best_reward = reward;
      }
    }
    t.oracle_mode.push_back(best);
  }
  return t;
}

std::vector<std::string> column_labels(const std::vector<OrderRecord>& records, const DatasetSchema& schema,
                                       const std::string& column) {
  std::vector<std::string> out(records.size());
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    for (std::size_t c = 0; c < schema.groups[g].size(); ++c) {
      if (schema.groups[g][c].name != column) continue;
      for (std::size_t n = 0; n < records.size(); ++n) {
        const FieldValue& v = records[n].groups[g].at(c);
        if (const auto* s = std::get_if<std::string>(&v)) {
          out[n] = *s;
        } else {
          out[n] = std::to_string(std::get<double>(v));
        }
      }
      return out;
    }
  }
  throw SchemaError("profit condition column '" + column + "' is not assigned to any group");
}

CounterfactualTable historical_counterfactuals(const EncodedDataset& ds, std::span<const std::size_t> train_rows,
                                               const ProfitNormalizer& norm, std::span<const std::string> condition) {
  if (!condition.empty() && condition.size() != ds.size()) {
    throw ShapeError("historical_counterfactuals: one condition label per order required");
  }
  const auto d = static_cast<std::size_t>(ds.n_modes);
  std::vector<double> sum(d, 0.0), count(d, 0.0);
  std::map<std::pair<std::string, std::size_t>, std::pair<double, double>> by_label;
  double all_sum = 0.0;
  for (std::size_t r : train_rows) {
    const auto m = static_cast<std::size_t>(ds.modes.at(r));
    const double p = norm(ds.profit[r]);
    sum[m] += p;
    count[m] += 1.0;
    all_sum += p;
    if (!condition.empty()) {
      auto& cell = by_label[{condition[r], m}];
      cell.first += p;
      cell.second += 1.0;
    }
  }
  const double overall = train_rows.empty() ? 0.0 : all_sum / static_cast<double>(train_rows.size());

  CounterfactualTable t;
  t.profit = nn::Tensor::matrix(ds.size(), d);
  t.profit_source = "historical";
  for (std::size_t n = 0; n < ds.size(); ++n) {
    for (std::size_t j = 0; j < d; ++j) {
      double v = count[j] > 0.0 ? sum[j] / count[j] : overall;
      if (!condition.empty()) {
        auto it = by_label.find({condition[n], j});
        if (it != by_label.end()) v = it->second.first / it->second.second;
      }
      t.profit(n, j) = v;
    }
  }
  return t;
}

}  // namespace simdec::data
