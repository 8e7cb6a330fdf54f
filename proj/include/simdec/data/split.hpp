#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "simdec/data/encode.hpp"

namespace simdec::data {

struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  /// Set by shift_split: rows with time class <= threshold went to train/val.
  int time_threshold = 0;

  nlohmann::json to_json() const;
  static DatasetSplit from_json(const nlohmann::json& j);
};

/// Seeded uniform permutation; first floor(0.8 n) rows train, next floor(0.1 n)
/// validation, the remainder test. Requires n_rows >= 10.
DatasetSplit split(std::size_t n_rows, std::uint64_t seed);

/// Time-class threshold at `quantile` (nearest rank over all rows).
int time_quantile_threshold(std::span<const int> time_class, double quantile);

/// Distribution-shift split: train/val hold orders whose time class is at most the
/// `quantile` threshold (10% of them carved out for validation by `seed`), test
/// holds the rest.
DatasetSplit shift_split(const EncodedDataset& encoded, double quantile, std::uint64_t seed);

}  // namespace simdec::data
