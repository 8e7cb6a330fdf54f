#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "simdec/data/counterfactual.hpp"
#include "simdec/data/split.hpp"
#include "simdec/data/stats.hpp"
#include "simdec/data/synthetic.hpp"
#include "simdec/errors.hpp"
#include "simdec/eval/metrics.hpp"
#include "simdec/nn/rng.hpp"

using namespace simdec;
using namespace simdec::data;

namespace {

DatasetSchema small_schema() {
  return DatasetSchema::from_json(nlohmann::json::parse(R"({
    "groups": {"p": ["weight"], "c": [{"name": "segment", "kind": "categorical"}], "s": ["distance"], "o": []},
    "mode_col": "mode",
    "state_cols": {"risk": "risk", "time": "days", "status": "on_time"},
    "profit_col": "profit",
    "n_modes": 3,
    "n_time_classes": 4
  })"));
}

OrderRecord make_record(double weight, const std::string& segment, double distance, int mode, int status,
                        double profit, int days = 1) {
  OrderRecord r;
  r.order_id = "o" + std::to_string(static_cast<int>(weight * 1000));
  r.groups[0] = {weight};
  r.groups[1] = {segment};
  r.groups[2] = {distance};
  r.mode = mode;
  r.status = status;
  r.profit = profit;
  r.time_days = days;
  return r;
}

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("simdec_data_" + name);
  std::ofstream(path) << text;
  return path;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

TEST_CASE("load_csv reads well-formed rows and rejects bad ones") {
  const DatasetSchema schema = small_schema();
  const std::string header = "order_id,weight,segment,distance,mode,risk,days,on_time,profit\n";
  SUBCASE("three rows") {
    const auto path = temp_file("ok.csv", header +
                                              "a,1.5,retail,10,0,0,1,1,12.5\n"
                                              "b,2.5,corporate,20,1,1,3,0,-4\n"
                                              "c,0.5,retail,5,2,0,2,1,7\n");
    const auto records = load_csv(path, schema);
    REQUIRE(records.size() == 3);
    CHECK(records[1].order_id == "b");
    CHECK(records[1].mode == 1);
    CHECK(records[1].time_days == 3);
    CHECK(std::get<std::string>(records[1].groups[1][0]) == "corporate");
    CHECK(std::get<double>(records[2].groups[2][0]) == 5.0);
  }
  SUBCASE("missing mode column") {
    const auto path = temp_file("nomode.csv", "order_id,weight,segment,distance,risk,days,on_time,profit\n"
                                              "a,1,retail,1,0,1,1,1\n");
    CHECK_THROWS_AS(load_csv(path, schema), SchemaError);
  }
  SUBCASE("time class beyond K") {
    const auto path = temp_file("badtime.csv", header +
                                                   "a,1,retail,1,0,0,1,1,1\n"
                                                   "b,1,retail,1,0,0,5,1,1\n");
    try {
      load_csv(path, schema);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
      CHECK(e.column() == "days");
    }
  }
}

TEST_CASE("encode z-scores numerics on fit rows and one-hots categoricals") {
  const DatasetSchema schema = small_schema();
  std::vector<OrderRecord> records{make_record(1, "retail", 7, 0, 1, 1), make_record(2, "corporate", 7, 1, 0, 2),
                                   make_record(3, "retail", 7, 2, 1, 3, 2)};
  const auto rows = all_rows(3);
  const EncodedDataset enc = encode(records, schema, rows);
  const nn::Tensor& p = enc.features.groups[0];
  CHECK(p(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(p(1, 0) == doctest::Approx(0.0));
  CHECK(p(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
  // Constant distance: encoded as 0 with a warning.
  for (std::size_t i = 0; i < 3; ++i) CHECK(enc.features.groups[2](i, 0) == 0.0);
  CHECK_FALSE(enc.stats.warnings.empty());
  // time_days = 2 with K = 4.
  CHECK(enc.time_onehot(2, 0) == 0.0);
  CHECK(enc.time_onehot(2, 1) == 1.0);
  CHECK(enc.time_onehot(2, 2) == 0.0);

  SUBCASE("categories unseen in the fit rows go to the unknown slot") {
    const std::size_t fit[] = {0, 2};  // only "retail"
    const EncodedDataset e2 = encode(records, schema, fit);
    CHECK(e2.features.groups[1](1, 0) == 1.0);  // slot 0 is unknown
    CHECK(e2.features.groups[1](0, 0) == 0.0);
  }
  SUBCASE("changing a row outside the fit set leaves the statistics unchanged") {
    const std::size_t fit[] = {0, 1};
    const EncodingStats before = fit_encoding(records, schema, fit);
    records[2].groups[0][0] = 1000.0;
    records[2].groups[1][0] = std::string("government");
    const EncodingStats after = fit_encoding(records, schema, fit);
    CHECK(before.to_json() == after.to_json());
  }
}

TEST_CASE("split proportions, determinism and coverage") {
  auto sizes = [](std::size_t n) {
    const DatasetSplit s = split(n, 3);
    return std::array<std::size_t, 3>{s.train.size(), s.val.size(), s.test.size()};
  };
  CHECK(sizes(1000) == std::array<std::size_t, 3>{800, 100, 100});
  CHECK(sizes(10) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK_THROWS(split(9, 1));
  CHECK(split(500, 7).train == split(500, 7).train);
  CHECK(split(500, 7).train != split(500, 8).train);
  for (std::size_t n : {10u, 11u, 37u, 101u, 999u}) {
    const DatasetSplit s = split(n, n);
    std::set<std::size_t> seen;
    for (const auto* part : {&s.train, &s.val, &s.test}) seen.insert(part->begin(), part->end());
    CHECK(seen.size() == n);
    CHECK(s.train.size() + s.val.size() + s.test.size() == n);
    CHECK(std::abs(static_cast<double>(s.train.size()) - 0.8 * static_cast<double>(n)) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.val.size()) - 0.1 * static_cast<double>(n)) <= 1.0);
  }
}

TEST_CASE("shift split thresholds the time class") {
  EncodedDataset enc;
  SUBCASE("uniform classes, median quantile") {
    for (int i = 0; i < 400; ++i) {
      enc.time_class.push_back(1 + i % 4);
      enc.order_ids.push_back(std::to_string(i));
    }
    const DatasetSplit s = shift_split(enc, 0.5, 1);
    CHECK(s.time_threshold == 2);
    for (std::size_t r : s.train) CHECK(enc.time_class[r] <= 2);
    for (std::size_t r : s.val) CHECK(enc.time_class[r] <= 2);
    for (std::size_t r : s.test) CHECK(enc.time_class[r] > 2);
    std::vector<int> tr, te;
    for (std::size_t r : s.train) tr.push_back(enc.time_class[r]);
    for (std::size_t r : s.test) te.push_back(enc.time_class[r]);
    CHECK(eval::tv_distance(eval::class_histogram(tr, 4), eval::class_histogram(te, 4)) > 0.0);
  }
  SUBCASE("99 percent in class 1") {
    for (int i = 0; i < 1000; ++i) {
      enc.time_class.push_back(i < 990 ? 1 : 2);
      enc.order_ids.push_back(std::to_string(i));
    }
    const DatasetSplit s = shift_split(enc, 0.99, 1);
    CHECK(s.test.size() == 10);
    for (std::size_t r : s.test) CHECK(enc.time_class[r] == 2);
  }
  SUBCASE("a quantile leaving no test rows is rejected") {
    for (int i = 0; i < 100; ++i) {
      enc.time_class.push_back(1);
      enc.order_ids.push_back(std::to_string(i));
    }
    CHECK_THROWS(shift_split(enc, 0.5, 1));
  }
}

TEST_CASE("historical statistics") {
  SUBCASE("hand example") {
    EncodedDataset enc;
    enc.n_modes = 3;
    enc.modes = {2, 2, 2, 0};
    enc.status = {1, 0, 1, 1};
    enc.profit = {0.2, 0.4, 0.6, 1.0};
    const ProfitNormalizer identity{0.0, 1.0};
    const auto rows = all_rows(4);
    const HistoricalStats s = compute_historical_stats(enc, rows, identity);
    CHECK(s.modes[2].mean_timely == doctest::Approx(0.6667).epsilon(1e-4));
    CHECK(s.modes[2].mean_profit == doctest::Approx(0.4));
    CHECK(s.modes[0].mean_timely == 1.0);
    CHECK_FALSE(s.modes[1].present);
    CHECK(s.expected_reward(1) == 0.0);
    CHECK_FALSE(s.warnings.empty());
  }
  SUBCASE("matches a brute-force group-by on random tables") {
    nn::Rng rng(11);
    EncodedDataset enc;
    enc.n_modes = 4;
    for (int i = 0; i < 200; ++i) {
      enc.modes.push_back(static_cast<int>(rng.index(4)));
      enc.status.push_back(rng.bernoulli(0.6) ? 1 : 0);
      enc.profit.push_back(rng.uniform(-50, 150));
    }
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < 200; ++i) {
      if (i % 3 != 0) rows.push_back(i);
    }
    const ProfitNormalizer norm = ProfitNormalizer::fit(enc.profit, rows);
    const HistoricalStats s = compute_historical_stats(enc, rows, norm);
    std::size_t total = 0;
    for (int d = 0; d < 4; ++d) {
      double t = 0, p = 0;
      std::size_t c = 0;
      for (std::size_t r : rows) {
        if (enc.modes[r] != d) continue;
        t += enc.status[r];
        p += (enc.profit[r] - norm.lo) / (norm.hi - norm.lo);
        ++c;
      }
      CHECK(s.modes[static_cast<std::size_t>(d)].count == c);
      CHECK(std::abs(s.modes[static_cast<std::size_t>(d)].mean_timely - t / static_cast<double>(c)) < 1e-12);
      CHECK(std::abs(s.modes[static_cast<std::size_t>(d)].mean_profit - p / static_cast<double>(c)) < 1e-12);
      total += c;
    }
    CHECK(total == rows.size());
  }
}

TEST_CASE("profit normalizer clamps outside the fitted range") {
  const double profits[] = {10, 20, 30, 100, -5};
  const std::size_t rows[] = {0, 1, 2};
  const ProfitNormalizer n = ProfitNormalizer::fit(profits, rows);
  CHECK(n(20) == doctest::Approx(0.5));
  CHECK(n(100) == 1.0);
  CHECK(n(-5) == 0.0);
}

TEST_CASE("synthetic generator") {
  SyntheticConfig c;
  c.n_orders = 300;
  SUBCASE("same seed gives identical records") {
    const SyntheticDataset a = generate_synthetic(c), b = generate_synthetic(c);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].groups == b.records[i].groups);
      CHECK(a.records[i].time_days == b.records[i].time_days);
      CHECK(a.records[i].profit == b.records[i].profit);
    }
  }
  SUBCASE("noise 0 records reproduce the planted rule exactly") {
    const SyntheticDataset ds = generate_synthetic(c);
    for (const OrderRecord& r : ds.records) {
      const PlantedRule::Outcome o = ds.rule.outcome(r, r.mode);
      CHECK(o.risk == r.risk);
      CHECK(o.time_days == r.time_days);
      CHECK(o.status == r.status);
      CHECK(o.profit == r.profit);
    }
  }
  SUBCASE("oracle mode agrees with exhaustive enumeration") {
    const SyntheticDataset ds = generate_synthetic(c);
    std::vector<double> profits;
    for (const auto& r : ds.records) profits.push_back(r.profit);
    const auto rows = all_rows(profits.size());
    const ProfitNormalizer norm = ProfitNormalizer::fit(profits, rows);
    for (const OrderRecord& r : ds.records) {
      int best = 0;
      double best_reward = -1e300;
      for (int d = 0; d < c.n_modes; ++d) {
        const auto o = ds.rule.outcome(r, d);
        const double reward = o.status + norm(o.profit);
        if (reward > best_reward) {
          best_reward = reward;
          best = d;
        }
      }
      CHECK(ds.rule.oracle_optimal_mode(r, norm) == best);
    }
  }
  SUBCASE("a shift of 0.5 moves the time marginal by more than 0.2 in total variation") {
    c.n_orders = 10000;
    auto marginal = [&](double shift) {
      SyntheticConfig s = c;
      s.shift = shift;
      std::vector<int> days;
      for (const auto& r : generate_synthetic(s).records) days.push_back(r.time_days);
      return eval::class_histogram(days, c.n_time_classes);
    };
    CHECK(eval::tv_distance(marginal(0.0), marginal(0.5)) > 0.2);
  }
  SUBCASE("the dominant_mode preset makes mode 2 optimal for most orders") {
    c.preset = "dominant_mode";
    c.n_orders = 2000;
    const SyntheticDataset ds = generate_synthetic(c);
    std::vector<double> profits;
    for (const auto& r : ds.records) profits.push_back(r.profit);
    const auto rows = all_rows(profits.size());
    const CounterfactualTable cf = planted_counterfactuals(ds.records, ds.rule, ProfitNormalizer::fit(profits, rows));
    const auto twos = std::count(cf.oracle_mode.begin(), cf.oracle_mode.end(), 2);
    CHECK(static_cast<double>(twos) / 2000.0 > 0.9);
    CHECK(static_cast<double>(twos) / 2000.0 < 1.0);
  }
  SUBCASE("invalid configs are rejected") {
    c.noise = 1.5;
    CHECK_THROWS_AS(generate_synthetic(c), std::invalid_argument);
    c.noise = 0.0;
    c.preset = "nope";
    CHECK_THROWS_AS(generate_synthetic(c), std::invalid_argument);
  }
  SUBCASE("config and rule survive a JSON round trip") {
    c.shift = 0.25;
    const SyntheticConfig back = SyntheticConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    const SyntheticDataset ds = generate_synthetic(c);
    CHECK(PlantedRule::from_json(ds.rule.to_json()).to_json() == ds.rule.to_json());
  }
}

TEST_CASE("historical counterfactuals fall back from condition to mode means") {
  EncodedDataset enc;
  enc.n_modes = 2;
  enc.modes = {0, 0, 1, 1};
  enc.profit = {0.0, 1.0, 0.5, 0.5};
  enc.order_ids = {"a", "b", "c", "d"};
  const ProfitNormalizer identity{0.0, 1.0};
  const std::size_t train[] = {0, 1, 2};
  const std::vector<std::string> labels{"x", "y", "x", "y"};
  const CounterfactualTable cf = historical_counterfactuals(enc, train, identity, labels);
  CHECK_FALSE(cf.has_truth());
  CHECK(cf.profit(0, 0) == 0.0);                       // (x, mode 0) seen once
  CHECK(cf.profit(1, 0) == 1.0);                       // (y, mode 0)
  CHECK(cf.profit(3, 1) == doctest::Approx(0.5));      // (y, mode 1) unseen: mode mean
  const CounterfactualTable plain = historical_counterfactuals(enc, train, identity);
  CHECK(plain.profit(0, 0) == doctest::Approx(0.5));
}
