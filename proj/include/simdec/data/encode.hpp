#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdec/data/order.hpp"
#include "simdec/data/schema.hpp"
#include "simdec/nn/tensor.hpp"

namespace simdec::data {

/// How one raw column becomes dense inputs. Numeric columns are z-scored with
/// statistics from the fit rows; categorical columns are one-hot over the fit-row
/// vocabulary plus a reserved unknown slot at index 0.
struct ColumnEncoding {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  double mean = 0.0;
  double stddev = 1.0;
  bool constant = false;  // zero variance over fit rows; encoded as 0
  std::vector<std::string> vocabulary;

  std::size_t width() const { return kind == ColumnKind::numeric ? 1 : vocabulary.size() + 1; }
  /// Index of `label` in the one-hot block; 0 is the unknown bucket.
  std::size_t category_index(const std::string& label) const;
};

struct EncodingStats {
  std::array<std::vector<ColumnEncoding>, kGroupCount> groups;
  std::vector<std::string> warnings;

  std::size_t group_width(std::size_t g) const;
  nlohmann::json to_json() const;
  static EncodingStats from_json(const nlohmann::json& j);
};

/// Dense per-group order-information matrices (rows = orders).
struct OrderFeatures {
  std::array<nn::Tensor, kGroupCount> groups;

  std::size_t size() const { return groups[0].rows(); }
  std::array<std::size_t, kGroupCount> dims() const;
  OrderFeatures select(std::span<const std::size_t> rows) const;
  /// All groups side by side, p|c|s|o.
  nn::Tensor concatenated() const;
};

struct EncodedDataset {
  std::vector<std::string> order_ids;
  OrderFeatures features;
  std::vector<int> modes;
  std::vector<int> risk;
  std::vector<int> time_class;  // 1-based
  std::vector<int> status;
  nn::Tensor time_onehot;       // rows x K
  std::vector<double> profit;   // raw currency units
  int n_modes = 0;
  int n_time_classes = 0;
  EncodingStats stats;

  std::size_t size() const { return order_ids.size(); }
  EncodedDataset select(std::span<const std::size_t> rows) const;
  /// Throws if any per-row array disagrees on row count.
  void check_consistent() const;
};

nn::Tensor one_hot_time(std::span<const int> time_class, int n_time_classes);

/// Fits encoding statistics on `fit_rows` only.
EncodingStats fit_encoding(const std::vector<OrderRecord>& records, const DatasetSchema& schema,
                           std::span<const std::size_t> fit_rows);

EncodedDataset apply_encoding(const std::vector<OrderRecord>& records, const DatasetSchema& schema,
                              const EncodingStats& stats);

/// fit_encoding + apply_encoding. Zero-variance columns add a warning to `stats`.
EncodedDataset encode(const std::vector<OrderRecord>& records, const DatasetSchema& schema,
                      std::span<const std::size_t> fit_rows);

/// Encoded matrices as CSV: order_id, p_0.., c_0.., s_0.., o_0.., mode, risk, time, status, profit.
void save_encoded_csv(const std::filesystem::path& path, const EncodedDataset& ds);
EncodedDataset load_encoded_csv(const std::filesystem::path& path, int n_modes, int n_time_classes);

}  // namespace simdec::data
