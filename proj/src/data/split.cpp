#include "simdec/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "simdec/nn/rng.hpp"

namespace simdec::data {

nlohmann::json DatasetSplit::to_json() const {
  nlohmann::json j{{"train", train}, {"val", val}, {"test", test}, {"seed", seed}};
  if (time_threshold > 0) j["time_threshold"] = time_threshold;
  return j;
}

DatasetSplit DatasetSplit::from_json(const nlohmann::json& j) {
  DatasetSplit s;
  s.train = j.at("train").get<std::vector<std::size_t>>();
  s.val = j.at("val").get<std::vector<std::size_t>>();
  s.test = j.at("test").get<std::vector<std::size_t>>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.time_threshold = j.value("time_threshold", 0);
  return s;
}

DatasetSplit split(std::size_t n_rows, std::uint64_t seed) {
  if (n_rows < 10) throw std::invalid_argument("split: need at least 10 rows, got " + std::to_string(n_rows));
  std::vector<std::size_t> perm(n_rows);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  nn::Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  const std::size_t n_train = n_rows * 8 / 10;
  const std::size_t n_val = n_rows / 10;
  DatasetSplit s;
  s.seed = seed;
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
               perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  return s;
}

int time_quantile_threshold(std::span<const int> time_class, double quantile) {
  if (!(quantile > 0.0 && quantile < 1.0)) throw std::invalid_argument("shift_split: quantile must be in (0, 1)");
  if (time_class.empty()) throw std::invalid_argument("shift_split: no time targets");
  std::vector<int> sorted(time_class.begin(), time_class.end());
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(sorted.size())));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

DatasetSplit shift_split(const EncodedDataset& encoded, double quantile, std::uint64_t seed) {
  const int threshold = time_quantile_threshold(encoded.time_class, quantile);
  std::vector<std::size_t> low;
  DatasetSplit s;
  s.seed = seed;
  s.time_threshold = threshold;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (encoded.time_class[i] <= threshold) {
      low.push_back(i);
    } else {
      s.test.push_back(i);
    }
  }
  if (low.empty() || s.test.empty()) {
    throw std::invalid_argument("shift_split: quantile " + std::to_string(quantile) +
                                " leaves an empty train or test set");
  }
  nn::Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(low));
  const std::size_t n_val = low.size() / 10;
  s.val.assign(low.begin(), low.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(low.begin() + static_cast<std::ptrdiff_t>(n_val), low.end());
  if (s.train.empty()) throw std::invalid_argument("shift_split: empty training set");
  return s;
}

}  // namespace simdec::data
