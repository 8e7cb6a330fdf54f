#include "simdec/data/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "simdec/nn/rng.hpp"

namespace simdec::data {

namespace {

/// Unit-norm weights supported on the columns of one group.
std::vector<double> group_direction(const std::array<std::size_t, kGroupCount>& dims, std::size_t group,
                                    nn::Rng& rng) {
  std::size_t total = 0, begin = 0;
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    if (g < group) begin += dims[g];
    total += dims[g];
  }
  std::size_t end = begin + dims[group];
  if (dims[group] == 0) {
    begin = 0;
    end = total;
  }
  std::vector<double> w(total, 0.0);
  double norm = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    w[i] = rng.normal();
    norm += w[i] * w[i];
  }
  norm = std::sqrt(norm);
  for (double& v : w) v /= norm;
  return w;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

int bucket(double score, const std::vector<double>& thresholds) {
  int k = 1;
  for (double t : thresholds) k += score > t ? 1 : 0;
  return k;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return out;
}

}  // namespace

PlantedRule PlantedRule::standard(const std::array<std::size_t, kGroupCount>& group_dims, std::size_t n_categories,
                                  int n_modes, int n_time_classes, std::uint64_t seed) {
  std::size_t n_features = 0;
  for (std::size_t d : group_dims) n_features += d;
  if (n_features == 0) throw std::invalid_argument("planted rule: need at least one numeric feature");
  PlantedRule r;
  r.n_modes = n_modes;
  r.n_time_classes = n_time_classes;
  r.n_features = n_features;
  nn::Rng rng(seed);
  r.w_value = group_direction(group_dims, 0, rng);
  r.w_risk = group_direction(group_dims, 1, rng);
  r.w_distance = group_direction(group_dims, 2, rng);
  r.w_slack = group_direction(group_dims, 3, rng);
  // Mode 0 is the slowest and cheapest, the last mode the fastest and dearest.
  r.time_offset = linspace(1.2, -1.2, n_modes);
  r.risk_offset = linspace(0.6, -0.6, n_modes);
  r.cost = linspace(0.0, 45.0, n_modes);
  r.category_margin = linspace(-6.0, 6.0, static_cast<int>(std::max<std::size_t>(n_categories, 1)));
  r.time_thresholds = linspace(-1.0, 1.0, n_time_classes - 1);
  r.schedule_thresholds = linspace(-0.6, 1.4, n_time_classes - 1);
  return r;
}

PlantedRule PlantedRule::dominant_mode(const std::array<std::size_t, kGroupCount>& group_dims,
                                       std::size_t n_categories, int n_time_classes, std::uint64_t seed) {
  PlantedRule r = standard(group_dims, n_categories, 4, n_time_classes, seed);
  r.time_offset = {1.0, 0.3, -1.0, -1.2};
  r.cost = {25.0, 15.0, 0.0, 35.0};
  return r;
}

PlantedRule::Outcome PlantedRule::outcome(std::span<const double> x, int category, int mode,
                                          const Noise& noise) const {
  if (x.size() != n_features) throw std::invalid_argument("planted rule: feature count mismatch");
  if (mode < 0 || mode >= n_modes) throw std::out_of_range("planted rule: mode out of range");
  const auto d = static_cast<std::size_t>(mode);
  const double u = dot(w_distance, x);
  const double v = dot(w_slack, x);
  const double q = dot(w_value, x);
  const double rho = dot(w_risk, x);
  Outcome o;
  o.risk = rho + risk_offset[d] + noise.risk > 0.0 ? 1 : 0;
  const double score = time_offset[d] + distance_gain * u + risk_delay * o.risk + noise.time;
  o.time_days = bucket(score, time_thresholds);
  const int scheduled = bucket(v, schedule_thresholds);
  o.status = o.time_days <= scheduled ? 1 : 0;
  const double margin = category_margin.empty() ? 0.0
                                                 : category_margin[static_cast<std::size_t>(category) %
                                                                   category_margin.size()];
  o.profit = price_base + price_scale * q + margin - cost[d] + noise.profit;
  return o;
}

std::pair<std::vector<double>, int> PlantedRule::features_of(const OrderRecord& record) {
  std::vector<double> x;
  int category = 0;
  for (const auto& group : record.groups) {
    for (const auto& v : group) {
      if (const double* d = std::get_if<double>(&v)) {
        x.push_back(*d);
      } else {
        const std::string& label = std::get<std::string>(v);
        if (label.rfind("cat", 0) == 0) category = std::stoi(label.substr(3));
      }
    }
  }
  return {std::move(x), category};
}

PlantedRule::Outcome PlantedRule::outcome(std::span<const double> x, int category, int mode) const {
  return outcome(x, category, mode, Noise{});
}

PlantedRule::Outcome PlantedRule::outcome(const OrderRecord& record, int mode) const {
  const auto [x, category] = features_of(record);
  return outcome(x, category, mode);
}

double PlantedRule::reward(const OrderRecord& record, int mode, const ProfitNormalizer& norm) const {
  const Outcome o = outcome(record, mode);
  return o.status + norm(o.profit);
}

int PlantedRule::oracle_optimal_mode(const OrderRecord& record, const ProfitNormalizer& norm) const {
  int best = 0;
  double best_reward = reward(record, 0, norm);
  for (int d = 1; d < n_modes; ++d) {
    const double r = reward(record, d, norm);
    if (r > best_reward) {
      best = d;
      best_reward = r;
    }
  }
  return best;
}

nlohmann::json PlantedRule::to_json() const {
  return {{"n_modes", n_modes},
          {"n_time_classes", n_time_classes},
          {"n_features", n_features},
          {"w_distance", w_distance},
          {"w_slack", w_slack},
          {"w_value", w_value},
          {"w_risk", w_risk},
          {"time_offset", time_offset},
          {"risk_offset", risk_offset},
          {"cost", cost},
          {"category_margin", category_margin},
          {"time_thresholds", time_thresholds},
          {"schedule_thresholds", schedule_thresholds},
          {"distance_gain", distance_gain},
          {"risk_delay", risk_delay},
          {"price_base", price_base},
          {"price_scale", price_scale}};
}

PlantedRule PlantedRule::from_json(const nlohmann::json& j) {
  PlantedRule r;
  r.n_modes = j.at("n_modes").get<int>();
  r.n_time_classes = j.at("n_time_classes").get<int>();
  r.n_features = j.at("n_features").get<std::size_t>();
  r.w_distance = j.at("w_distance").get<std::vector<double>>();
  r.w_slack = j.at("w_slack").get<std::vector<double>>();
  r.w_value = j.at("w_value").get<std::vector<double>>();
  r.w_risk = j.at("w_risk").get<std::vector<double>>();
  r.time_offset = j.at("time_offset").get<std::vector<double>>();
  r.risk_offset = j.at("risk_offset").get<std::vector<double>>();
  r.cost = j.at("cost").get<std::vector<double>>();
  r.category_margin = j.at("category_margin").get<std::vector<double>>();
  r.time_thresholds = j.at("time_thresholds").get<std::vector<double>>();
  r.schedule_thresholds = j.at("schedule_thresholds").get<std::vector<double>>();
  r.distance_gain = j.at("distance_gain").get<double>();
  r.risk_delay = j.at("risk_delay").get<double>();
  r.price_base = j.at("price_base").get<double>();
  r.price_scale = j.at("price_scale").get<double>();
  return r;
}

void SyntheticConfig::validate() const {
  if (n_orders == 0) throw std::invalid_argument("synthetic: n_orders must be > 0");
  if (n_modes < 2) throw std::invalid_argument("synthetic: need at least 2 modes");
  if (n_time_classes < 2) throw std::invalid_argument("synthetic: need at least 2 time classes");
  if (!(noise >= 0.0 && noise <= 1.0)) throw std::invalid_argument("synthetic: noise must be in [0, 1]");
  std::size_t total = 0;
  for (std::size_t d : group_dims) total += d;
  if (total == 0) throw std::invalid_argument("synthetic: need at least one numeric feature");
  if (preset != "standard" && preset != "dominant_mode") {
    throw std::invalid_argument("synthetic: unknown preset '" + preset + "'");
  }
  if (preset == "dominant_mode" && n_modes != 4) {
    throw std::invalid_argument("synthetic: the dominant_mode preset needs n_modes = 4");
  }
  if (rule && (rule->n_modes != n_modes || rule->n_time_classes != n_time_classes || rule->n_features != total)) {
    throw std::invalid_argument("synthetic: planted rule shape disagrees with config");
  }
}

nlohmann::json SyntheticConfig::to_json() const {
  nlohmann::json j{{"n_orders", n_orders},   {"n_modes", n_modes}, {"n_time_classes", n_time_classes},
                   {"group_dims", group_dims}, {"n_categories", n_categories}, {"noise", noise},
                   {"shift", shift},           {"seed", seed},       {"coefficient_seed", coefficient_seed},
                   {"preset", preset}};
  if (rule) j["rule"] = rule->to_json();
  return j;
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  c.n_orders = j.value("n_orders", c.n_orders);
  c.n_modes = j.value("n_modes", c.n_modes);
  c.n_time_classes = j.value("n_time_classes", c.n_time_classes);
  if (j.contains("group_dims")) c.group_dims = j.at("group_dims").get<std::array<std::size_t, kGroupCount>>();
  c.n_categories = j.value("n_categories", c.n_categories);
  c.noise = j.value("noise", c.noise);
  c.shift = j.value("shift", c.shift);
  c.seed = j.value("seed", c.seed);
  c.coefficient_seed = j.value("coefficient_seed", c.coefficient_seed);
  c.preset = j.value("preset", c.preset);
  if (j.contains("rule")) c.rule = PlantedRule::from_json(j.at("rule"));
  return c;
}

SyntheticDataset generate_synthetic(const SyntheticConfig& config) {
  config.validate();
  std::size_t n_features = 0;
  for (std::size_t d : config.group_dims) n_features += d;

  SyntheticDataset ds;
  if (config.rule) {
    ds.rule = *config.rule;
  } else if (config.preset == "dominant_mode") {
    ds.rule = PlantedRule::dominant_mode(config.group_dims, config.n_categories, config.n_time_classes,
                                         config.coefficient_seed);
  } else {
    ds.rule = PlantedRule::standard(config.group_dims, config.n_categories, config.n_modes, config.n_time_classes,
                                    config.coefficient_seed);
  }

  DatasetSchema& schema = ds.schema;
  for (std::size_t g = 0; g < kGroupCount; ++g) {
    for (std::size_t k = 0; k < config.group_dims[g]; ++k) {
      schema.groups[g].push_back({std::string(kGroupKeys[g]) + std::to_string(k), ColumnKind::numeric});
    }
  }
  if (config.n_categories > 0) schema.groups[0].push_back({"p_category", ColumnKind::categorical});
  schema.order_id_col = "order_id";
  schema.mode_col = "mode";
  schema.risk_col = "risk";
  schema.time_col = "time_days";
  schema.status_col = "status";
  schema.profit_col = "profit";
  schema.n_modes = config.n_modes;
  schema.n_time_classes = config.n_time_classes;

  std::vector<double> mean_shift(n_features, 0.0);
  for (std::size_t i = 0; i < n_features; ++i) mean_shift[i] = 3.0 * config.shift * ds.rule.w_distance[i];

  nn::Rng rng(config.seed);
  ds.records.reserve(config.n_orders);
  for (std::size_t n = 0; n < config.n_orders; ++n) {
    std::vector<double> x(n_features);
    for (std::size_t i = 0; i < n_features; ++i) x[i] = rng.normal() + mean_shift[i];
    const int category = config.n_categories > 0 ? static_cast<int>(rng.index(config.n_categories)) : 0;
    const int mode = static_cast<int>(rng.index(static_cast<std::size_t>(config.n_modes)));
    PlantedRule::Noise noise;
    if (config.noise > 0.0) {
      noise.risk = config.noise * rng.normal();
      noise.time = config.noise * rng.normal();
      noise.profit = config.noise * 0.25 * ds.rule.price_scale * rng.normal();
    }
    const auto o = ds.rule.outcome(x, category, mode, noise);

    OrderRecord r;
    char id[32];
    std::snprintf(id, sizeof(id), "O%07zu", n + 1);
    r.order_id = id;
    std::size_t offset = 0;
    for (std::size_t g = 0; g < kGroupCount; ++g) {
      for (std::size_t k = 0; k < config.group_dims[g]; ++k) r.groups[g].emplace_back(x[offset++]);
    }
    if (config.n_categories > 0) r.groups[0].emplace_back("cat" + std::to_string(category));
    r.mode = mode;
    r.risk = o.risk;
    r.time_days = o.time_days;
    r.status = o.status;
    r.profit = o.profit;
    ds.records.push_back(std::move(r));
  }
  return ds;
}

nlohmann::json synthetic_sidecar(const SyntheticDataset& ds, const SyntheticConfig& config) {
  std::vector<double> profits;
  for (const auto& r : ds.records) profits.push_back(r.profit);
  std::vector<std::size_t> all(profits.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const ProfitNormalizer norm = ProfitNormalizer::fit(profits, all);
  std::vector<int> oracle;
  oracle.reserve(ds.records.size());
  for (const auto& r : ds.records) oracle.push_back(ds.rule.oracle_optimal_mode(r, norm));
  return {{"config", config.to_json()},
          {"rule", ds.rule.to_json()},
          {"oracle_profit_bounds", norm.to_json()},
          {"oracle_modes", oracle}};
}

}  // namespace simdec::data
