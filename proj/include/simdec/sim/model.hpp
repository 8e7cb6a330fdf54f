#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "simdec/data/encode.hpp"
#include "simdec/nn/layers.hpp"
#include "simdec/sim/states.hpp"

namespace simdec::sim {

struct ModelShape {
  std::array<std::size_t, 4> group_dims{};
  int n_modes = 0;
  int n_time_classes = 0;
  std::size_t embed_dim = 32;   // E
  std::size_t hidden_dim = 64;  // H
  /// Decoder steps after the first also add z_n to their input.
  bool reconsume_z = false;

  nlohmann::json to_json() const;
  static ModelShape from_json(const nlohmann::json& j);
  static ModelShape for_dataset(const data::EncodedDataset& ds, std::size_t embed_dim, std::size_t hidden_dim);
};

/// Common contract of the learned state models. Batches are EncodedDataset
/// slices; the historical `modes` column is the decision fed to the model.
class StateModel {
 public:
  virtual ~StateModel() = default;

  virtual std::string kind() const = 0;
  virtual const ModelShape& shape() const = 0;
  /// Free-running inference; deterministic in parameters and inputs.
  virtual SimulatedStates simulate(const data::OrderFeatures& features, std::span<const int> modes) const = 0;
  /// Training loss on `batch` with teacher forcing where applicable.
  virtual double loss(const data::EncodedDataset& batch) const = 0;
  /// Same loss; accumulates parameter gradients.
  virtual double loss_and_backward(const data::EncodedDataset& batch) = 0;
  virtual nn::ParameterList parameters() = 0;

  nlohmann::json hyper() const;
  void save(const std::filesystem::path& path);
};

struct EncoderTrace {
  std::array<nn::Tensor, 6> tokens;  // p, c, s, o, global, mode; each N x E
  nn::Tensor pooled;                 // {E}, mean of order summaries
  nn::Tensor z;                      // N x H, final encoder hidden state
  nn::LstmState final_state;
};

struct EncoderCache {
  std::array<nn::Tensor, 4> inputs;
  std::vector<int> modes;
  bool pooled_given = false;
  std::array<nn::LstmCache, 6> steps;
  nn::Tensor pooled_row;  // 1 x E
};

/// Group projections, global token, mode embedding and the six-token LSTM.
class OrderEncoder {
 public:
  OrderEncoder() = default;
  OrderEncoder(const std::string& name, const ModelShape& shape, nn::Rng& rng);

  /// `pooled`, when given, replaces the batch mean as the global pooling input.
  EncoderTrace forward(const data::OrderFeatures& features, std::span<const int> modes,
                       const nn::Tensor* pooled = nullptr, EncoderCache* cache = nullptr) const;
  /// dh, dc: gradient with respect to the final encoder state.
  void backward(const EncoderCache& cache, const nn::Tensor& dh, const nn::Tensor& dc);
  void collect(nn::ParameterList& out);

  std::array<nn::Linear, 4> group_proj;
  nn::Linear global_proj;
  nn::Embedding mode_embed;
  nn::LstmCell lstm;
};

/// Encoder plus a three-step autoregressive decoder (risk, then days, then status).
class SimulatorModel : public StateModel {
 public:
  SimulatorModel(const ModelShape& shape, std::uint64_t seed);

  std::string kind() const override { return "sim2dec"; }
  const ModelShape& shape() const override { return shape_; }
  SimulatedStates simulate(const data::OrderFeatures& features, std::span<const int> modes) const override;
  double loss(const data::EncodedDataset& batch) const override;
  double loss_and_backward(const data::EncodedDataset& batch) override;
  nn::ParameterList parameters() override;

  EncoderTrace encode(const data::OrderFeatures& features, std::span<const int> modes,
                      const nn::Tensor* pooled = nullptr) const {
    return encoder.forward(features, modes, pooled);
  }
  /// Free-running decode of an encoder trace.
  SimulatedStates decode(const EncoderTrace& trace) const;

  OrderEncoder encoder;
  nn::LstmCell decoder;
  nn::Linear risk_embed;  // 1 -> H
  nn::Linear time_embed;  // K -> H
  nn::Linear risk_head;   // H -> 1
  nn::Linear time_head;   // H -> K
  nn::Linear status_head; // H -> 1

 private:
  struct Pass;
  double run(const data::EncodedDataset& batch, bool backward);

  ModelShape shape_;
};

/// Same encoder, one decoder step emitting all three attributes at once.
class GenerationModel : public StateModel {
 public:
  GenerationModel(const ModelShape& shape, std::uint64_t seed);

  std::string kind() const override { return "generation"; }
  const ModelShape& shape() const override { return shape_; }
  SimulatedStates simulate(const data::OrderFeatures& features, std::span<const int> modes) const override;
  double loss(const data::EncodedDataset& batch) const override;
  double loss_and_backward(const data::EncodedDataset& batch) override;
  nn::ParameterList parameters() override;

  OrderEncoder encoder;
  nn::LstmCell decoder;
  nn::Linear risk_head, time_head, status_head;

 private:
  double run(const data::EncodedDataset& batch, bool backward);

  ModelShape shape_;
};

/// Feedforward trunk over (features, one-hot mode) with three independent heads.
class PredictionModel : public StateModel {
 public:
  PredictionModel(const ModelShape& shape, std::uint64_t seed);

  std::string kind() const override { return "prediction"; }
  const ModelShape& shape() const override { return shape_; }
  SimulatedStates simulate(const data::OrderFeatures& features, std::span<const int> modes) const override;
  double loss(const data::EncodedDataset& batch) const override;
  double loss_and_backward(const data::EncodedDataset& batch) override;
  nn::ParameterList parameters() override;

  nn::Mlp trunk;  // two tanh layers of width H
  nn::Linear risk_head, time_head, status_head;

 private:
  double run(const data::EncodedDataset& batch, bool backward);
  nn::Tensor inputs(const data::OrderFeatures& features, std::span<const int> modes) const;

  ModelShape shape_;
};

std::unique_ptr<StateModel> make_state_model(const std::string& kind, const ModelShape& shape, std::uint64_t seed);
/// Rebuilds a model from a checkpoint written by StateModel::save.
std::unique_ptr<StateModel> load_state_model(const std::filesystem::path& path);

}  // namespace simdec::sim
