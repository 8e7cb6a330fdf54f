#include "simdec/data/stats.hpp"

#include <algorithm>
#include <stdexcept>

namespace simdec::data {

ProfitNormalizer ProfitNormalizer::fit(std::span<const double> profits, std::span<const std::size_t> rows) {
  if (rows.empty()) throw std::invalid_argument("profit normalizer: no rows to fit");
  ProfitNormalizer n{profits[rows[0]], profits[rows[0]]};
  for (std::size_t r : rows) {
    n.lo = std::min(n.lo, profits[r]);
    n.hi = std::max(n.hi, profits[r]);
  }
  return n;
}

double ProfitNormalizer::operator()(double profit) const {
  if (hi <= lo) return 0.0;
  return std::clamp((profit - lo) / (hi - lo), 0.0, 1.0);
}

double HistoricalStats::expected_reward(std::size_t mode) const {
  const ModeStats& m = modes.at(mode);
  return m.present ? m.mean_timely + m.mean_profit : 0.0;
}

std::vector<double> HistoricalStats::expected_rewards() const {
  std::vector<double> out(modes.size());
  for (std::size_t d = 0; d < modes.size(); ++d) out[d] = expected_reward(d);
  return out;
}

bool HistoricalStats::any_present() const {
  return std::any_of(modes.begin(), modes.end(), [](const ModeStats& m) { return m.present; });
}

nlohmann::json HistoricalStats::to_json() const {
  nlohmann::json j;
  j["modes"] = nlohmann::json::array();
  for (const auto& m : modes) {
    j["modes"].push_back(
        {{"mean_timely", m.mean_timely}, {"mean_profit", m.mean_profit}, {"count", m.count}, {"present", m.present}});
  }
  j["warnings"] = warnings;
  return j;
}

HistoricalStats HistoricalStats::from_json(const nlohmann::json& j) {
  HistoricalStats s;
  for (const auto& m : j.at("modes")) {
    s.modes.push_back({m.at("mean_timely").get<double>(), m.at("mean_profit").get<double>(),
                       m.at("count").get<std::size_t>(), m.at("present").get<bool>()});
  }
  s.warnings = j.value("warnings", std::vector<std::string>{});
  return s;
}

HistoricalStats compute_historical_stats(const EncodedDataset& encoded, std::span<const std::size_t> train_rows,
                                         const ProfitNormalizer& profit_norm) {
  HistoricalStats s;
  s.modes.resize(static_cast<std::size_t>(encoded.n_modes));
  std::vector<double> timely(s.modes.size(), 0.0), profit(s.modes.size(), 0.0);
  for (std::size_t r : train_rows) {
    const auto d = static_cast<std::size_t>(encoded.modes.at(r));
    timely[d] += encoded.status[r];
    profit[d] += profit_norm(encoded.profit[r]);
    ++s.modes[d].count;
  }
  for (std::size_t d = 0; d < s.modes.size(); ++d) {
    ModeStats& m = s.modes[d];
    if (m.count == 0) {
      s.warnings.push_back("mode " + std::to_string(d) + " has no training orders; its expected reward is 0");
      continue;
    }
    m.present = true;
    m.mean_timely = timely[d] / static_cast<double>(m.count);
    m.mean_profit = profit[d] / static_cast<double>(m.count);
  }
  return s;
}

}  // namespace simdec::data
