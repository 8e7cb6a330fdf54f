#include "simdec/sim/markov.hpp"

#include <numeric>
#include <stdexcept>

namespace simdec::sim {

MarkovModel MarkovModel::fit(const data::EncodedDataset& ds, std::span<const std::size_t> rows, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("markov: alpha must be >= 0");
  MarkovModel m;
  m.n_modes_ = ds.n_modes;
  m.n_time_classes_ = ds.n_time_classes;
  m.alpha_ = alpha;
  const auto d = static_cast<std::size_t>(ds.n_modes);
  const auto k = static_cast<std::size_t>(ds.n_time_classes);
  m.risk_count_.assign(d, 0.0);
  m.risk_pos_.assign(d, 0.0);
  m.time_count_.assign(2 * d, std::vector<double>(k, 0.0));
  m.time_mode_count_.assign(d, std::vector<double>(k, 0.0));
  m.status_count_.assign(2 * d * k, 0.0);
  m.status_pos_.assign(2 * d * k, 0.0);
  m.status_mode_count_.assign(d, 0.0);
  m.status_mode_pos_.assign(d, 0.0);
  for (std::size_t r : rows) {
    const int mode = ds.modes.at(r);
    const int risk = ds.risk[r];
    const int t = ds.time_class[r];
    const auto md = static_cast<std::size_t>(mode);
    m.risk_count_[md] += 1.0;
    m.risk_pos_[md] += risk;
    m.time_count_[m.risk_key(mode, risk)][static_cast<std::size_t>(t - 1)] += 1.0;
    m.time_mode_count_[md][static_cast<std::size_t>(t - 1)] += 1.0;
    m.status_count_[m.status_key(mode, risk, t)] += 1.0;
    m.status_pos_[m.status_key(mode, risk, t)] += ds.status[r];
    m.status_mode_count_[md] += 1.0;
    m.status_mode_pos_[md] += ds.status[r];
  }
  return m;
}

void MarkovModel::check_mode(int mode) const {
  if (mode < 0 || mode >= n_modes_) throw std::out_of_range("markov: mode " + std::to_string(mode));
}

double MarkovModel::p_risk(int mode) const {
  check_mode(mode);
  const auto md = static_cast<std::size_t>(mode);
  const double n = risk_count_[md];
  if (n + 2.0 * alpha_ == 0.0) return 0.5;
  return (risk_pos_[md] + alpha_) / (n + 2.0 * alpha_);
}

std::vector<double> MarkovModel::p_time(int mode, int risk) const {
  check_mode(mode);
  const std::vector<double>* counts = &time_count_[risk_key(mode, risk)];
  double n = std::accumulate(counts->begin(), counts->end(), 0.0);
  if (n == 0.0) {
    counts = &time_mode_count_[static_cast<std::size_t>(mode)];
    n = std::accumulate(counts->begin(), counts->end(), 0.0);
  }
  const double denom = n + alpha_ * n_time_classes_;
  std::vector<double> p(counts->size(), 1.0 / n_time_classes_);
  if (denom == 0.0) return p;
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = ((*counts)[i] + alpha_) / denom;
  return p;
}

double MarkovModel::p_status(int mode, int risk, int time_class) const {
  check_mode(mode);
  if (time_class < 1 || time_class > n_time_classes_) throw std::out_of_range("markov: time class out of range");
  const std::size_t key = status_key(mode, risk, time_class);
  double n = status_count_[key];
  double pos = status_pos_[key];
  if (n == 0.0) {
    n = status_mode_count_[static_cast<std::size_t>(mode)];
    pos = status_mode_pos_[static_cast<std::size_t>(mode)];
  }
  if (n + 2.0 * alpha_ == 0.0) return 0.5;
  return (pos + alpha_) / (n + 2.0 * alpha_);
}

std::vector<double> MarkovModel::time_marginal(int mode) const {
  const double pr = p_risk(mode);
  const std::vector<double> p0 = p_time(mode, 0);
  const std::vector<double> p1 = p_time(mode, 1);
  std::vector<double> out(p0.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - pr) * p0[i] + pr * p1[i];
  return out;
}

SimulatedStates MarkovModel::predict(std::span<const int> modes) const {
  const std::size_t n = modes.size();
  const auto k = static_cast<std::size_t>(n_time_classes_);
  SimulatedStates s;
  s.risk_prob.resize(n);
  s.status_prob.resize(n);
  s.time_scores = nn::Tensor::matrix(n, k);
  s.risk.resize(n);
  s.time_class.resize(n);
  s.status.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.risk_prob[i] = p_risk(modes[i]);
    s.risk[i] = decode_binary(s.risk_prob[i]);
    const std::vector<double> pt = p_time(modes[i], s.risk[i]);
    std::copy(pt.begin(), pt.end(), s.time_scores.row(i).begin());
    s.time_class[i] = decode_time(pt);
    s.status_prob[i] = p_status(modes[i], s.risk[i], s.time_class[i]);
    s.status[i] = decode_binary(s.status_prob[i]);
  }
  s.time_probs = s.time_scores;
  return s;
}

SimulatedStates MarkovModel::sample(std::span<const int> modes, nn::Rng& rng) const {
  SimulatedStates s = predict(modes);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    s.risk[i] = rng.bernoulli(s.risk_prob[i]) ? 1 : 0;
    const std::vector<double> pt = p_time(modes[i], s.risk[i]);
    std::copy(pt.begin(), pt.end(), s.time_scores.row(i).begin());
    const double u = rng.uniform();
    double acc = 0.0;
    int t = n_time_classes_;
    for (std::size_t c = 0; c < pt.size(); ++c) {
      acc += pt[c];
      if (u < acc) {
        t = static_cast<int>(c) + 1;
        break;
      }
    }
    s.time_class[i] = t;
    s.status_prob[i] = p_status(modes[i], s.risk[i], t);
    s.status[i] = rng.bernoulli(s.status_prob[i]) ? 1 : 0;
  }
  s.time_probs = s.time_scores;
  return s;
}

nlohmann::json MarkovModel::to_json() const {
  return {{"n_modes", n_modes_},
          {"n_time_classes", n_time_classes_},
          {"alpha", alpha_},
          {"risk_count", risk_count_},
          {"risk_pos", risk_pos_},
          {"time_count", time_count_},
          {"time_mode_count", time_mode_count_},
          {"status_count", status_count_},
          {"status_pos", status_pos_},
          {"status_mode_count", status_mode_count_},
          {"status_mode_pos", status_mode_pos_}};
}

MarkovModel MarkovModel::from_json(const nlohmann::json& j) {
  MarkovModel m;
  m.n_modes_ = j.at("n_modes").get<int>();
  m.n_time_classes_ = j.at("n_time_classes").get<int>();
  m.alpha_ = j.at("alpha").get<double>();
  m.risk_count_ = j.at("risk_count").get<std::vector<double>>();
  m.risk_pos_ = j.at("risk_pos").get<std::vector<double>>();
  m.time_count_ = j.at("time_count").get<std::vector<std::vector<double>>>();
  m.time_mode_count_ = j.at("time_mode_count").get<std::vector<std::vector<double>>>();
  m.status_count_ = j.at("status_count").get<std::vector<double>>();
  m.status_pos_ = j.at("status_pos").get<std::vector<double>>();
  m.status_mode_count_ = j.at("status_mode_count").get<std::vector<double>>();
  m.status_mode_pos_ = j.at("status_mode_pos").get<std::vector<double>>();
  return m;
}

}  // namespace simdec::sim
