#include "simdec/sim/train.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "simdec/errors.hpp"
#include "simdec/nn/adam.hpp"

namespace simdec::sim {

namespace {

void append_rows(nn::Tensor& dst, const nn::Tensor& src) {
  if (dst.empty()) {
    dst = src;
    return;
  }
  std::vector<double> values(dst.values().begin(), dst.values().end());
  values.insert(values.end(), src.values().begin(), src.values().end());
  dst = nn::Tensor({dst.rows() + src.rows(), dst.cols()}, std::move(values));
}

void append_states(SimulatedStates& dst, const SimulatedStates& src) {
  dst.risk_prob.insert(dst.risk_prob.end(), src.risk_prob.begin(), src.risk_prob.end());
  dst.status_prob.insert(dst.status_prob.end(), src.status_prob.begin(), src.status_prob.end());
  dst.risk.insert(dst.risk.end(), src.risk.begin(), src.risk.end());
  dst.time_class.insert(dst.time_class.end(), src.time_class.begin(), src.time_class.end());
  dst.status.insert(dst.status.end(), src.status.begin(), src.status.end());
  append_rows(dst.time_scores, src.time_scores);
  append_rows(dst.time_probs, src.time_probs);
  if (dst.decoder_hidden.empty()) {
    dst.decoder_hidden = src.decoder_hidden;
  } else {
    for (std::size_t s = 0; s < dst.decoder_hidden.size() && s < src.decoder_hidden.size(); ++s) {
      append_rows(dst.decoder_hidden[s], src.decoder_hidden[s]);
    }
  }
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

nlohmann::json TrainConfig::to_json() const {
  return {{"lr", lr},           {"batch_size", batch_size},     {"max_epochs", max_epochs},
          {"patience", patience}, {"weight_decay", weight_decay}, {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j, TrainConfig base) {
  base.lr = j.value("lr", base.lr);
  base.batch_size = j.value("batch_size", base.batch_size);
  base.max_epochs = j.value("max_epochs", base.max_epochs);
  base.patience = j.value("patience", base.patience);
  base.weight_decay = j.value("weight_decay", base.weight_decay);
  base.seed = j.value("seed", base.seed);
  return base;
}

nlohmann::json TrainResult::to_json() const {
  nlohmann::json c = nlohmann::json::array();
  for (const EpochRecord& e : curve) c.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  return {{"curve", c},
          {"best_epoch", best_epoch},
          {"best_val_loss", best_val_loss},
          {"epochs_run", epochs_run},
          {"stopped_early", stopped_early}};
}

std::vector<std::span<const std::size_t>> balanced_chunks(std::span<const std::size_t> order, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be > 0");
  std::vector<std::span<const std::size_t>> out;
  const std::size_t n = order.size();
  if (n == 0) return out;
  const std::size_t count = (n + batch_size - 1) / batch_size;
  std::size_t start = 0;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t len = n / count + (c < n % count ? 1 : 0);
    out.push_back(order.subspan(start, len));
    start += len;
  }
  return out;
}

double dataset_loss(const StateModel& model, const data::EncodedDataset& ds, std::size_t batch_size) {
  const std::vector<std::size_t> rows = iota(ds.size());
  double total = 0.0;
  for (auto chunk : balanced_chunks(rows, batch_size)) total += model.loss(ds.select(chunk));
  return total;
}

SimulatedStates simulate_batched(const StateModel& model, const data::OrderFeatures& features,
                                 std::span<const int> modes, std::size_t batch_size) {
  const std::vector<std::size_t> rows = iota(features.size());
  SimulatedStates out;
  for (auto chunk : balanced_chunks(rows, batch_size)) {
    std::vector<int> m;
    m.reserve(chunk.size());
    for (std::size_t r : chunk) m.push_back(modes[r]);
    append_states(out, model.simulate(features.select(chunk), m));
  }
  return out;
}

TrainResult train_state_model(StateModel& model, const data::EncodedDataset& train, const data::EncodedDataset& val,
                              const TrainConfig& config, const std::function<void(const EpochRecord&)>& on_epoch) {
  if (train.size() == 0 || val.size() == 0) throw std::invalid_argument("train_state_model: empty train or val set");
  if (config.max_epochs < 0 || config.patience < 1) throw std::invalid_argument("train_state_model: bad epoch limits");
  nn::ParameterList params = model.parameters();
  nn::zero_grads(params);
  nn::AdamConfig adam;
  adam.lr = config.lr;
  adam.weight_decay = config.weight_decay;
  nn::Rng rng = nn::Rng::derive(config.seed, 0x5e11);

  const double n_train = static_cast<double>(train.size());
  const double n_val = static_cast<double>(val.size());
  TrainResult result;
  EpochRecord initial{0, dataset_loss(model, train, config.batch_size) / n_train,
                      dataset_loss(model, val, config.batch_size) / n_val};
  result.curve.push_back(initial);
  result.epoch_seconds.push_back(0.0);
  if (on_epoch) on_epoch(initial);
  result.best_val_loss = initial.val_loss;
  std::vector<nn::Tensor> best = nn::snapshot_values(params);
  int since_best = 0;

  std::vector<std::size_t> order = iota(train.size());
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (auto chunk : balanced_chunks(order, config.batch_size)) {
      const double l = model.loss_and_backward(train.select(chunk));
      if (!std::isfinite(l)) {
        throw DivergenceError("simulator training diverged at epoch " + std::to_string(epoch) +
                              " (non-finite batch loss)");
      }
      total += l;
      nn::adam_step(params, adam);
    }
    const double val_loss = dataset_loss(model, val, config.batch_size) / n_val;
    if (!std::isfinite(val_loss)) {
      throw DivergenceError("simulator training diverged at epoch " + std::to_string(epoch) +
                            " (non-finite validation loss)");
    }
    EpochRecord rec{epoch, total / n_train, val_loss};
    result.curve.push_back(rec);
    result.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    result.epochs_run = epoch;
    if (on_epoch) on_epoch(rec);
    if (val_loss < result.best_val_loss) {
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      best = nn::snapshot_values(params);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  nn::restore_values(params, best);
  return result;
}

}  // namespace simdec::sim
