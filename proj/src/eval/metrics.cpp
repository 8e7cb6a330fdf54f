#include "simdec/eval/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "simdec/errors.hpp"

namespace simdec::eval {

double round4(double x) { return std::round(x * 1e4) / 1e4; }

AttributeAccuracy AttributeAccuracy::from_parts(double risk, double time, double status) {
  return {risk, time, status, (risk + time + status) / 3.0};
}

nlohmann::json AttributeAccuracy::to_json() const {
  return {{"risk", risk}, {"time", time}, {"status", status}, {"overall", overall}};
}

AttributeAccuracy simulator_accuracy(const sim::SimulatedStates& predicted, std::span<const int> risk,
                                     std::span<const int> time_class, std::span<const int> status) {
  const std::size_t n = risk.size();
  if (predicted.size() != n || time_class.size() != n || status.size() != n) {
    throw ShapeError("simulator_accuracy: predicted and true rows differ in length");
  }
  if (n == 0) throw std::invalid_argument("simulator_accuracy: empty evaluation set");
  std::size_t hit_r = 0, hit_t = 0, hit_s = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hit_r += predicted.risk[i] == risk[i] ? 1 : 0;
    hit_t += predicted.time_class[i] == time_class[i] ? 1 : 0;
    hit_s += predicted.status[i] == status[i] ? 1 : 0;
  }
  const double dn = static_cast<double>(n);
  return AttributeAccuracy::from_parts(hit_r / dn, hit_t / dn, hit_s / dn);
}

DecisionMetrics DecisionMetrics::from_parts(double t_time, double t_profit) {
  return {t_time, t_profit, std::abs(t_time - t_profit), t_time + t_profit};
}

nlohmann::json DecisionMetrics::to_json() const {
  return {{"t_time", t_time}, {"t_profit", t_profit}, {"diff", diff}, {"overall", overall}};
}

DecisionMetrics decision_metrics(std::span<const int> status, std::span<const double> profit,
                                 const data::ProfitNormalizer& norm) {
  if (status.empty()) throw std::invalid_argument("decision_metrics: empty evaluation set");
  if (status.size() != profit.size()) throw ShapeError("decision_metrics: status and profit lengths differ");
  double timely = 0.0;
  double prof = 0.0;
  for (std::size_t i = 0; i < status.size(); ++i) {
    timely += status[i];
    prof += norm(profit[i]);
  }
  const double n = static_cast<double>(status.size());
  return DecisionMetrics::from_parts(timely / n, prof / n);
}

std::vector<double> class_histogram(std::span<const int> classes, int n_classes) {
  if (classes.empty()) throw std::invalid_argument("class_histogram: no values");
  std::vector<double> h(static_cast<std::size_t>(n_classes), 0.0);
  for (int c : classes) {
    if (c < 1 || c > n_classes) throw std::out_of_range("class_histogram: class " + std::to_string(c));
    h[static_cast<std::size_t>(c - 1)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(classes.size());
  return h;
}

std::vector<double> mean_distribution(const nn::Tensor& probs) {
  if (probs.rows() == 0) throw std::invalid_argument("mean_distribution: no rows");
  std::vector<double> out(probs.cols(), 0.0);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    for (std::size_t k = 0; k < probs.cols(); ++k) out[k] += probs(i, k);
  }
  for (double& v : out) v /= static_cast<double>(probs.rows());
  return out;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ShapeError("tv_distance: distributions over different supports");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
    throw std::invalid_argument("tv_distance: inputs must each sum to 1");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("tv_distance: negative probability");
    s += std::abs(p[i] - q[i]);
  }
  return 0.5 * s;
}

}  // namespace simdec::eval
