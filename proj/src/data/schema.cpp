#include "simdec/data/schema.hpp"

#include <fstream>
#include <set>

#include "simdec/errors.hpp"

namespace simdec::data {

void DatasetSchema::validate() const {
  if (n_modes < 1) throw SchemaError("schema: n_modes must be >= 1");
  if (n_time_classes < 1) throw SchemaError("schema: n_time_classes must be >= 1");
  if (!mode_labels.empty() && static_cast<int>(mode_labels.size()) != n_modes) {
    throw SchemaError("schema: mode_labels has " + std::to_string(mode_labels.size()) + " entries, n_modes is " +
                      std::to_string(n_modes));
  }
  std::set<std::string> seen;
  auto claim = [&](const std::string& name, const char* role) {
    if (name.empty()) throw SchemaError(std::string("schema: ") + role + " column is not declared");
    if (!seen.insert(name).second) throw SchemaError("schema: column '" + name + "' is assigned more than once");
  };
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    for (const auto& c : groups[g]) claim(c.name, "group");
  }
  claim(mode_col, "mode");
  claim(risk_col, "risk");
  claim(time_col, "time");
  claim(status_col, "status");
  claim(profit_col, "profit");
  if (seen.count(order_id_col) != 0) throw SchemaError("schema: order id column is also a feature");
}

DatasetSchema DatasetSchema::from_json(const nlohmann::json& j) {
  DatasetSchema s;
  try {
    const auto& groups = j.at("groups");
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      const std::string key(kGroupKeys[g]);
      if (!groups.contains(key)) continue;
      for (const auto& col : groups.at(key)) {
        ColumnSpec spec;
        if (col.is_string()) {
          spec.name = col.get<std::string>();
        } else {
          spec.name = col.at("name").get<std::string>();
          const std::string kind = col.value("kind", "numeric");
          if (kind == "categorical") {
            spec.kind = ColumnKind::categorical;
          } else if (kind != "numeric") {
            throw SchemaError("schema: unknown column kind '" + kind + "' for '" + spec.name + "'");
          }
        }
        s.groups[g].push_back(std::move(spec));
      }
    }
    s.order_id_col = j.value("order_id_col", std::string("order_id"));
    s.mode_col = j.at("mode_col").get<std::string>();
    s.mode_labels = j.value("mode_labels", std::vector<std::string>{});
    const auto& states = j.at("state_cols");
    s.risk_col = states.at("risk").get<std::string>();
    s.time_col = states.at("time").get<std::string>();
    s.status_col = states.at("status").get<std::string>();
    s.profit_col = j.at("profit_col").get<std::string>();
    s.profit_condition_col = j.value("profit_condition_col", std::string{});
    s.n_modes = j.at("n_modes").get<int>();
    s.n_time_classes = j.at("n_time_classes").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("schema: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json DatasetSchema::to_json() const {
  nlohmann::json j;
  nlohmann::json groups_json = nlohmann::json::object();
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : groups[g]) {
      cols.push_back({{"name", c.name}, {"kind", c.kind == ColumnKind::numeric ? "numeric" : "categorical"}});
    }
    groups_json[std::string(kGroupKeys[g])] = cols;
  }
  j["groups"] = groups_json;
  j["order_id_col"] = order_id_col;
  j["mode_col"] = mode_col;
  if (!mode_labels.empty()) j["mode_labels"] = mode_labels;
  j["state_cols"] = {{"risk", risk_col}, {"time", time_col}, {"status", status_col}};
  j["profit_col"] = profit_col;
  if (!profit_condition_col.empty()) j["profit_condition_col"] = profit_condition_col;
  j["n_modes"] = n_modes;
  j["n_time_classes"] = n_time_classes;
  return j;
}

DatasetSchema load_schema(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw SchemaError("schema: cannot open " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("schema: " + path.string() + ": " + e.what());
  }
  return DatasetSchema::from_json(j);
}

}  // namespace simdec::data
