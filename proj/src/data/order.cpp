#include "simdec/data/order.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "simdec/data/csv.hpp"
#include "simdec/errors.hpp"

namespace simdec::data {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, std::size_t row, const std::string& column) {
  const std::string t = trim(text);
  double v = 0.0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ParseError(row, column, "expected a number, got '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& text, std::size_t row, const std::string& column) {
  const std::string t = trim(text);
  int v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    // Accept integral floats such as "2.0".
    const double d = parse_number(text, row, column);
    if (d != static_cast<double>(static_cast<int>(d))) {
      throw ParseError(row, column, "expected an integer, got '" + text + "'");
    }
    return static_cast<int>(d);
  }
  return v;
}

int parse_binary(const std::string& text, std::size_t row, const std::string& column) {
  const int v = parse_int(text, row, column);
  if (v != 0 && v != 1) throw ParseError(row, column, "expected 0 or 1, got '" + text + "'");
  return v;
}

}  // namespace

void validate_record(const OrderRecord& r, int n_modes, int n_time_classes) {
  if (r.mode < 0 || r.mode >= n_modes) throw std::invalid_argument("order " + r.order_id + ": mode out of range");
  if (r.time_days < 1 || r.time_days > n_time_classes) {
    throw std::invalid_argument("order " + r.order_id + ": time_days out of range");
  }
  if ((r.risk != 0 && r.risk != 1) || (r.status != 0 && r.status != 1)) {
    throw std::invalid_argument("order " + r.order_id + ": risk/status must be 0 or 1");
  }
}

std::vector<OrderRecord> load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
  CsvReader reader(path);
  auto require = [&](const std::string& name) {
    const int idx = reader.column(name);
    if (idx < 0) throw SchemaError("csv " + path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(idx);
  };
  std::array<std::vector<std::size_t>, kGroupCount> group_idx;
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    for (const auto& c : schema.groups[g]) group_idx[g].push_back(require(c.name));
  }
  const std::size_t mode_idx = require(schema.mode_col);
  const std::size_t risk_idx = require(schema.risk_col);
  const std::size_t time_idx = require(schema.time_col);
  const std::size_t status_idx = require(schema.status_col);
  const std::size_t profit_idx = require(schema.profit_col);
  const int id_idx = reader.column(schema.order_id_col);

  std::vector<OrderRecord> records;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    const std::size_t row = reader.row();
    if (fields.size() != reader.header().size()) {
      throw ParseError(row, "*", "expected " + std::to_string(reader.header().size()) + " fields, got " +
                                     std::to_string(fields.size()));
    }
    OrderRecord r;
    r.order_id = id_idx >= 0 ? fields[static_cast<std::size_t>(id_idx)] : std::to_string(row);
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      for (std::size_t k = 0; k < group_idx[g].size(); ++k) {
        const auto& spec = schema.groups[g][k];
        const std::string& text = fields[group_idx[g][k]];
        if (spec.kind == ColumnKind::numeric) {
          r.groups[g].emplace_back(parse_number(text, row, spec.name));
        } else {
          r.groups[g].emplace_back(trim(text));
        }
      }
    }
    const std::string& mode_text = fields[mode_idx];
    bool labelled = false;
    for (std::size_t m = 0; m < schema.mode_labels.size(); ++m) {
      if (trim(mode_text) == schema.mode_labels[m]) {
        r.mode = static_cast<int>(m);
        labelled = true;
        break;
      }
    }
    if (!labelled) r.mode = parse_int(mode_text, row, schema.mode_col);
    if (r.mode < 0 || r.mode >= schema.n_modes) {
      throw ParseError(row, schema.mode_col, "mode " + std::to_string(r.mode) + " outside [0, " +
                                                 std::to_string(schema.n_modes) + ")");
    }
    r.risk = parse_binary(fields[risk_idx], row, schema.risk_col);
    r.time_days = parse_int(fields[time_idx], row, schema.time_col);
    if (r.time_days < 1 || r.time_days > schema.n_time_classes) {
      throw ParseError(row, schema.time_col, "time class " + std::to_string(r.time_days) + " outside [1, " +
                                                 std::to_string(schema.n_time_classes) + "]");
    }
    r.status = parse_binary(fields[status_idx], row, schema.status_col);
    r.profit = parse_number(fields[profit_idx], row, schema.profit_col);
    records.push_back(std::move(r));
  }
  return records;
}

void write_csv(const std::filesystem::path& path, const DatasetSchema& schema, const std::vector<OrderRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("csv: cannot open " + path.string() + " for writing");
  os << csv_escape(schema.order_id_col);
  for (const auto& group : schema.groups) {
    for (const auto& c : group) os << ',' << csv_escape(c.name);
  }
  os << ',' << csv_escape(schema.mode_col) << ',' << csv_escape(schema.risk_col) << ','
     << csv_escape(schema.time_col) << ',' << csv_escape(schema.status_col) << ',' << csv_escape(schema.profit_col)
     << '\n';
  for (const auto& r : records) {
    os << csv_escape(r.order_id);
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      for (const auto& v : r.groups[g]) {
        os << ',';
        if (const double* d = std::get_if<double>(&v)) {
          os << format_double(*d);
        } else {
          os << csv_escape(std::get<std::string>(v));
        }
      }
    }
    os << ',' << r.mode << ',' << r.risk << ',' << r.time_days << ',' << r.status << ',' << format_double(r.profit)
       << '\n';
  }
  if (!os) throw std::runtime_error("csv: write failed for " + path.string());
}

}  // namespace simdec::data
