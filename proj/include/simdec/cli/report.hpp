#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace simdec::cli {

/// Plain-text table with right-aligned numeric columns.
class TextTable {
 public:
  explicit TextTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add_row(std::vector<std::string> cells);
  std::string render() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Four decimals, the precision the reports use.
std::string fmt4(double v);

/// Simulator accuracy table: one row per method with risk / time / status /
/// overall columns, from {"methods": [{"method", "risk", ...}]} entries.
std::string render_accuracy_table(const nlohmann::json& rows, const std::string& title);

/// Decision table: one row per method with T^Time, T^Profit, Diff, Overall and,
/// when present, the oracle match rate.
std::string render_decision_table(const nlohmann::json& rows, const std::string& title);

/// Deterministic JSON text (sorted keys, two-space indent, trailing newline).
std::string dump_json(const nlohmann::json& j);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace simdec::cli
