#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "simdec/data/schema.hpp"

namespace simdec::data {

/// A raw attribute value: numeric or a categorical label.
using FieldValue = std::variant<double, std::string>;

/// One order: grouped raw attributes, the historical shipping mode and the
/// realized state attributes.
struct OrderRecord {
  std::string order_id;
  std::array<std::vector<FieldValue>, kGroupCount> groups;  // p, c, s, o
  int mode = 0;
  int risk = 0;       // 1 = delay risk
  int time_days = 1;  // class in [1, K]
  int status = 0;     // 1 = delivered on time
  double profit = 0.0;

  std::vector<FieldValue>& group(Group g) { return groups[static_cast<std::size_t>(g)]; }
  const std::vector<FieldValue>& group(Group g) const { return groups[static_cast<std::size_t>(g)]; }
};

/// Throws std::invalid_argument naming the violated invariant.
void validate_record(const OrderRecord& r, int n_modes, int n_time_classes);

/// Loads every row; a missing column raises SchemaError, a bad value raises
/// ParseError naming the row and column.
std::vector<OrderRecord> load_csv(const std::filesystem::path& path, const DatasetSchema& schema);

/// Writes records in the column layout `schema` describes.
void write_csv(const std::filesystem::path& path, const DatasetSchema& schema, const std::vector<OrderRecord>& records);

}  // namespace simdec::data
