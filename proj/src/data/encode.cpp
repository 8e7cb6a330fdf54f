#include "simdec/data/encode.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include "simdec/data/csv.hpp"
#include "simdec/errors.hpp"

namespace simdec::data {

std::size_t ColumnEncoding::category_index(const std::string& label) const {
  auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), label);
  if (it == vocabulary.end() || *it != label) return 0;
  return static_cast<std::size_t>(it - vocabulary.begin()) + 1;
}

std::size_t EncodingStats::group_width(std::size_t g) const {
  std::size_t w = 0;
  for (const auto& c : groups[g]) w += c.width();
  return w;
}

nlohmann::json EncodingStats::to_json() const {
  nlohmann::json j;
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : groups[g]) {
      nlohmann::json col{{"name", c.name}};
      if (c.kind == ColumnKind::numeric) {
        col["kind"] = "numeric";
        col["mean"] = c.mean;
        col["stddev"] = c.stddev;
        col["constant"] = c.constant;
      } else {
        col["kind"] = "categorical";
        col["vocabulary"] = c.vocabulary;
      }
      cols.push_back(col);
    }
    j["groups"][std::string(kGroupKeys[g])] = cols;
  }
  j["warnings"] = warnings;
  return j;
}

EncodingStats EncodingStats::from_json(const nlohmann::json& j) {
  EncodingStats s;
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    for (const auto& col : j.at("groups").at(std::string(kGroupKeys[g]))) {
      ColumnEncoding c;
      c.name = col.at("name").get<std::string>();
      if (col.at("kind").get<std::string>() == "numeric") {
        c.kind = ColumnKind::numeric;
        c.mean = col.at("mean").get<double>();
        c.stddev = col.at("stddev").get<double>();
        c.constant = col.at("constant").get<bool>();
      } else {
        c.kind = ColumnKind::categorical;
        c.vocabulary = col.at("vocabulary").get<std::vector<std::string>>();
      }
      s.groups[g].push_back(std::move(c));
    }
  }
  s.warnings = j.value("warnings", std::vector<std::string>{});
  return s;
}

std::array<std::size_t, kGroupCount> OrderFeatures::dims() const {
  std::array<std::size_t, kGroupCount> d{};
  for (std::size_t g = 0; g < kGroupCount; ++g) d[g] = groups[g].cols();
  return d;
}

OrderFeatures OrderFeatures::select(std::span<const std::size_t> rows) const {
  OrderFeatures out;
  for (std::size_t g = 0; g < kGroupCount; ++g) out.groups[g] = nn::select_rows(groups[g], rows);
  return out;
}

nn::Tensor OrderFeatures::concatenated() const {
  const nn::Tensor* parts[kGroupCount] = {&groups[0], &groups[1], &groups[2], &groups[3]};
  return nn::concat_columns(parts);
}

EncodedDataset EncodedDataset::select(std::span<const std::size_t> rows) const {
  EncodedDataset out;
  out.n_modes = n_modes;
  out.n_time_classes = n_time_classes;
  out.stats = stats;
  out.features = features.select(rows);
  out.time_onehot = nn::select_rows(time_onehot, rows);
  for (std::size_t r : rows) {
    if (r >= size()) throw std::out_of_range("EncodedDataset::select: row out of range");
    out.order_ids.push_back(order_ids[r]);
    out.modes.push_back(modes[r]);
    out.risk.push_back(risk[r]);
    out.time_class.push_back(time_class[r]);
    out.status.push_back(status[r]);
    out.profit.push_back(profit[r]);
  }
  return out;
}

void EncodedDataset::check_consistent() const {
  const std::size_t n = order_ids.size();
  bool ok = modes.size() == n && risk.size() == n && time_class.size() == n && status.size() == n &&
            profit.size() == n && time_onehot.rows() == n;
  for (const auto& g : features.groups) ok = ok && g.rows() == n;
  if (!ok) throw ShapeError("encoded dataset: per-row arrays disagree on row count");
}

nn::Tensor one_hot_time(std::span<const int> time_class, int n_time_classes) {
  nn::Tensor t = nn::Tensor::matrix(time_class.size(), static_cast<std::size_t>(n_time_classes));
  for (std::size_t i = 0; i < time_class.size(); ++i) {
    if (time_class[i] < 1 || time_class[i] > n_time_classes) throw std::out_of_range("time class out of range");
    t(i, static_cast<std::size_t>(time_class[i] - 1)) = 1.0;
  }
  return t;
}

EncodingStats fit_encoding(const std::vector<OrderRecord>& records, const DatasetSchema& schema,
                           std::span<const std::size_t> fit_rows) {
  if (fit_rows.empty()) throw std::invalid_argument("encode: fit_rows must be non-empty");
  EncodingStats stats;
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    for (std::size_t k = 0; k < schema.groups[g].size(); ++k) {
      const auto& spec = schema.groups[g][k];
      ColumnEncoding c;
      c.name = spec.name;
      c.kind = spec.kind;
      if (spec.kind == ColumnKind::numeric) {
        double sum = 0.0;
        for (std::size_t r : fit_rows) sum += std::get<double>(records.at(r).groups[g][k]);
        c.mean = sum / static_cast<double>(fit_rows.size());
        double ss = 0.0;
        for (std::size_t r : fit_rows) {
          const double d = std::get<double>(records[r].groups[g][k]) - c.mean;
          ss += d * d;
        }
        c.stddev = std::sqrt(ss / static_cast<double>(fit_rows.size()));
        if (c.stddev == 0.0) {
          c.constant = true;
          c.stddev = 1.0;
          stats.warnings.push_back("column '" + c.name + "' has zero variance over fit rows; encoded as 0");
        }
      } else {
        std::set<std::string> vocab;
        for (std::size_t r : fit_rows) vocab.insert(std::get<std::string>(records.at(r).groups[g][k]));
        c.vocabulary.assign(vocab.begin(), vocab.end());
      }
      stats.groups[g].push_back(std::move(c));
    }
  }
  return stats;
}

EncodedDataset apply_encoding(const std::vector<OrderRecord>& records, const DatasetSchema& schema,
                              const EncodingStats& stats) {
  EncodedDataset ds;
  ds.n_modes = schema.n_modes;
  ds.n_time_classes = schema.n_time_classes;
  ds.stats = stats;
  const std::size_t n = records.size();
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    ds.features.groups[g] = nn::Tensor::matrix(n, stats.group_width(g));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const OrderRecord& r = records[i];
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      auto out = ds.features.groups[g].row(i);
      std::size_t offset = 0;
      for (std::size_t k = 0; k < stats.groups[g].size(); ++k) {
        const ColumnEncoding& c = stats.groups[g][k];
        if (c.kind == ColumnKind::numeric) {
          out[offset] = c.constant ? 0.0 : (std::get<double>(r.groups[g][k]) - c.mean) / c.stddev;
        } else {
          out[offset + c.category_index(std::get<std::string>(r.groups[g][k]))] = 1.0;
        }
        offset += c.width();
      }
    }
    ds.order_ids.push_back(r.order_id);
    ds.modes.push_back(r.mode);
    ds.risk.push_back(r.risk);
    ds.time_class.push_back(r.time_days);
    ds.status.push_back(r.status);
    ds.profit.push_back(r.profit);
  }
  ds.time_onehot = one_hot_time(ds.time_class, ds.n_time_classes);
  return ds;
}

EncodedDataset encode(const std::vector<OrderRecord>& records, const DatasetSchema& schema,
                      std::span<const std::size_t> fit_rows) {
  return apply_encoding(records, schema, fit_encoding(records, schema, fit_rows));
}

void save_encoded_csv(const std::filesystem::path& path, const EncodedDataset& ds) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << "order_id";
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    for (std::size_t j = 0; j < ds.features.groups[g].cols(); ++j) os << ',' << kGroupKeys[g] << '_' << j;
  }
  os << ",mode,risk,time,status,profit\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    os << csv_escape(ds.order_ids[i]);
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      for (double v : ds.features.groups[g].row(i)) os << ',' << format_double(v);
    }
    os << ',' << ds.modes[i] << ',' << ds.risk[i] << ',' << ds.time_class[i] << ',' << ds.status[i] << ','
       << format_double(ds.profit[i]) << '\n';
  }
}

EncodedDataset load_encoded_csv(const std::filesystem::path& path, int n_modes, int n_time_classes) {
  CsvReader reader(path);
  const auto& header = reader.header();
  std::array<std::vector<std::size_t>, kGroupCount> cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      const std::string prefix = std::string(kGroupKeys[g]) + "_";
      if (header[i].rfind(prefix, 0) == 0) cols[g].push_back(i);
    }
  }
  auto require = [&](const char* name) {
    const int idx = reader.column(name);
    if (idx < 0) throw SchemaError("encoded csv " + path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(idx);
  };
  const std::size_t id_idx = require("order_id"), mode_idx = require("mode"), risk_idx = require("risk"),
                    time_idx = require("time"), status_idx = require("status"), profit_idx = require("profit");
  EncodedDataset ds;
  ds.n_modes = n_modes;
  ds.n_time_classes = n_time_classes;
  std::array<std::vector<double>, kGroupCount> values;
  std::vector<std::string> f;
  auto num = [&](std::size_t idx) {
    double v = 0.0;
    const std::string& t = f[idx];
    auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc()) throw ParseError(reader.row(), header[idx], "bad number '" + t + "'");
    return v;
  };
  while (reader.next(f)) {
    if (f.size() != header.size()) throw ParseError(reader.row(), "*", "wrong field count");
    ds.order_ids.push_back(f[id_idx]);
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      for (std::size_t c : cols[g]) values[g].push_back(num(c));
    }
    ds.modes.push_back(static_cast<int>(num(mode_idx)));
    ds.risk.push_back(static_cast<int>(num(risk_idx)));
    ds.time_class.push_back(static_cast<int>(num(time_idx)));
    ds.status.push_back(static_cast<int>(num(status_idx)));
    ds.profit.push_back(num(profit_idx));
  }
  const std::size_t n = ds.order_ids.size();
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    ds.features.groups[g] = nn::Tensor({n, cols[g].size()}, std::move(values[g]));
  }
  ds.time_onehot = one_hot_time(ds.time_class, n_time_classes);
  return ds;
}

}  // namespace simdec::data
