#pragma once

#include <span>
#include <string>

#include "simdec/nn/parameter.hpp"
#include "simdec/nn/rng.hpp"
#include "simdec/nn/tensor.hpp"

namespace simdec::nn {

/// y = x W^T + b over a batch of row vectors.
class Linear {
 public:
  Linear() = default;
  /// Weights and bias ~ U(-1/sqrt(in), 1/sqrt(in)).
  Linear(const std::string& name, std::size_t in_features, std::size_t out_features, Rng& rng);
  Linear(const std::string& name, Tensor weight, Tensor bias);

  std::size_t in_features() const { return weight.value.cols(); }
  std::size_t out_features() const { return weight.value.rows(); }

  /// x: batch x in -> batch x out.
  Tensor forward(const Tensor& x) const;
  /// Accumulates dW, db from upstream `dy`; returns dx.
  Tensor backward(const Tensor& x, const Tensor& dy);

  void collect(ParameterList& out) { out.push_back(&weight); out.push_back(&bias); }

  Parameter weight;
  Parameter bias;
};

class Embedding {
 public:
  Embedding() = default;
  /// Table entries ~ 0.1 * N(0, 1).
  Embedding(const std::string& name, std::size_t rows, std::size_t dim, Rng& rng);

  std::size_t rows() const { return table.value.rows(); }
  std::size_t dim() const { return table.value.cols(); }

  Tensor lookup(int index) const;
  /// One output row per index.
  Tensor forward(std::span<const int> indices) const;
  /// Scatters `dy` rows into the gradient rows of their indices.
  void backward(std::span<const int> indices, const Tensor& dy);

  void collect(ParameterList& out) { out.push_back(&table); }

  Parameter table;
};

struct LstmState {
  Tensor h;
  Tensor c;
};

/// Everything one LSTM step needs for its backward pass.
struct LstmCache {
  Tensor x, h_prev, c_prev;
  Tensor gate_i, gate_f, gate_g, gate_o;
  Tensor tanh_c;
};

struct LstmGrads {
  Tensor dx;
  Tensor dh_prev;
  Tensor dc_prev;
};

/// Single LSTM cell. Gate rows of the stacked weights are ordered (input, forget, cell, output).
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t input_size, std::size_t hidden_size, Rng& rng);

  std::size_t input_size() const { return w_input.value.cols(); }
  std::size_t hidden_size() const { return w_hidden.value.cols(); }

  LstmState zero_state(std::size_t batch) const;
  LstmState forward(const Tensor& x, const LstmState& prev, LstmCache* cache = nullptr) const;
  LstmGrads backward(const LstmCache& cache, const Tensor& dh, const Tensor& dc);

  void collect(ParameterList& out) {
    out.push_back(&w_input);
    out.push_back(&w_hidden);
    out.push_back(&bias);
  }

  Parameter w_input;   // 4H x in
  Parameter w_hidden;  // 4H x H
  Parameter bias;      // 4H
};

/// Two-hidden-layer tanh MLP used by the policy, Q-scorer and prediction baseline.
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, std::size_t in, std::span<const std::size_t> hidden, std::size_t out, Rng& rng);

  struct Trace {
    std::vector<Tensor> inputs;       // input to each layer
    std::vector<Tensor> activations;  // tanh outputs of hidden layers
  };

  Tensor forward(const Tensor& x, Trace* trace = nullptr) const;
  /// Returns gradient with respect to the network input.
  Tensor backward(const Trace& trace, const Tensor& dy);

  std::size_t in_features() const { return layers_.front().in_features(); }
  std::size_t out_features() const { return layers_.back().out_features(); }
  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

  void collect(ParameterList& out) {
    for (Linear& l : layers_) l.collect(out);
  }

 private:
  std::vector<Linear> layers_;
};

}  // namespace simdec::nn
