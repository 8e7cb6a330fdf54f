#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace simdec::data {

/// The four order-information groups, in encoder token order.
enum class Group { product = 0, customer = 1, shipping = 2, order = 3 };
inline constexpr std::size_t kGroupCount = 4;
inline constexpr std::array<std::string_view, kGroupCount> kGroupKeys = {"p", "c", "s", "o"};

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
};

/// Declares which CSV column feeds which group, and where the decision, state and
/// profit columns live. Group membership is user-declared, never inferred.
struct DatasetSchema {
  std::array<std::vector<ColumnSpec>, kGroupCount> groups;
  std::string order_id_col = "order_id";
  std::string mode_col;
  /// Optional names for modes; when set, the mode column may hold these labels.
  std::vector<std::string> mode_labels;
  std::string risk_col;
  std::string time_col;
  std::string status_col;
  std::string profit_col;
  /// Optional categorical column used to condition counterfactual profit estimates.
  std::string profit_condition_col;
  int n_modes = 0;
  int n_time_classes = 0;

  /// Throws SchemaError if a column is assigned twice or counts are invalid.
  void validate() const;

  static DatasetSchema from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

DatasetSchema load_schema(const std::filesystem::path& path);

}  // namespace simdec::data
