#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"
#include "simdec/sim/model.hpp"

namespace simdec::sim {

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch_size = 256;
  int max_epochs = 350;
  int patience = 10;
  double weight_decay = 1e-5;
  std::uint64_t seed = 1;

  nlohmann::json to_json() const;
  /// Fields absent from `j` keep the values of `base`.
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
};

/// Losses are per-order means of the summed squared error. Epoch 0 is the
/// untrained model.
struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> curve;
  std::vector<double> epoch_seconds;  // wall clock, kept out of to_json
  int best_epoch = 0;
  double best_val_loss = 0.0;
  int epochs_run = 0;
  bool stopped_early = false;

  nlohmann::json to_json() const;
};

/// Splits [0, n) into ceil(n / batch_size) contiguous chunks of near-equal size,
/// so no chunk is left with a handful of orders for global pooling.
std::vector<std::span<const std::size_t>> balanced_chunks(std::span<const std::size_t> order, std::size_t batch_size);

/// Adam on the teacher-forced loss with a fresh shuffle each epoch, early stopping
/// on validation loss and restoration of the best-validation parameters.
TrainResult train_state_model(StateModel& model, const data::EncodedDataset& train, const data::EncodedDataset& val,
                              const TrainConfig& config,
                              const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Summed loss over `ds`, evaluated in balanced chunks of `batch_size`.
double dataset_loss(const StateModel& model, const data::EncodedDataset& ds, std::size_t batch_size);

/// Inference over `features` in balanced contiguous chunks; each chunk is one
/// pooling batch.
SimulatedStates simulate_batched(const StateModel& model, const data::OrderFeatures& features,
                                 std::span<const int> modes, std::size_t batch_size);

}  // namespace simdec::sim
