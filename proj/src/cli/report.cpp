#include "simdec/cli/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "simdec/eval/metrics.hpp"

namespace simdec::cli {

void TextTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw std::invalid_argument("table row width does not match header");
  rows_.push_back(std::move(cells));
}

std::string TextTable::render() const {
  std::vector<std::size_t> width(header_.size());
  for (std::size_t c = 0; c < header_.size(); ++c) {
    width[c] = header_[c].size();
    for (const auto& r : rows_) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string pad(width[c] - cells[c].size(), ' ');
      // First column is a label and reads better left-aligned.
      out << (c == 0 ? cells[c] + pad : pad + cells[c]);
      out << (c + 1 < cells.size() ? "  " : "\n");
    }
  };
  line(header_);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.size() - 1), '-') << "\n";
  for (const auto& r : rows_) line(r);
  return out.str();
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", eval::round4(v));
  return buf;
}

std::string render_accuracy_table(const nlohmann::json& rows, const std::string& title) {
  TextTable t({"method", "risk", "time", "status", "overall"});
  for (const auto& r : rows) {
    t.add_row({r.at("method").get<std::string>(), fmt4(r.at("risk").get<double>()), fmt4(r.at("time").get<double>()),
               fmt4(r.at("status").get<double>()), fmt4(r.at("overall").get<double>())});
  }
  return title + "\n" + t.render();
}

std::string render_decision_table(const nlohmann::json& rows, const std::string& title) {
  bool with_match = false;
  for (const auto& r : rows) with_match = with_match || r.contains("oracle_match");
  std::vector<std::string> header{"method", "T_time", "T_profit", "diff", "overall"};
  if (with_match) header.push_back("oracle_match");
  TextTable t(header);
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.at("method").get<std::string>(), fmt4(r.at("t_time").get<double>()),
                                   fmt4(r.at("t_profit").get<double>()), fmt4(r.at("diff").get<double>()),
                                   fmt4(r.at("overall").get<double>())};
    if (with_match) cells.push_back(r.contains("oracle_match") ? fmt4(r.at("oracle_match").get<double>()) : "-");
    t.add_row(cells);
  }
  return title + "\n" + t.render();
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, dump_json(j)); }

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace simdec::cli
