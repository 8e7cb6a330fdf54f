#pragma once

#include <span>
#include <vector>

#include "simdec/nn/rng.hpp"
#include "simdec/nn/tensor.hpp"

namespace simdec::nn {

double sigmoid(double x);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
/// Row-wise softmax of a batch x D matrix.
Tensor softmax_rows(const Tensor& x);

/// d(loss)/dx given y = sigmoid(x) and d(loss)/dy.
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);
Tensor tanh_backward(const Tensor& y, const Tensor& dy);
Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy);

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);

struct MseResult {
  double value = 0.0;
  Tensor grad;  // d(value)/d(pred)
};

/// Sum (not mean) of squared element differences.
MseResult mse_loss(const Tensor& pred, const Tensor& target);

/// One batch of Gumbel-Softmax draws over rows of `scores`.
struct GumbelSample {
  Tensor noise;    // Gumbel(0,1) draws actually used
  Tensor soft;     // softmax((scores + noise) / tau)
  Tensor output;   // hard one-hot when `hard`, otherwise equal to `soft`
  std::vector<int> index;  // argmax of each soft row
  double temperature = 1.0;
  bool hard = false;
};

GumbelSample gumbel_softmax(const Tensor& scores, double temperature, Rng& rng, bool hard);
/// Same as above with caller-supplied noise (all zeros freezes the sampler).
GumbelSample gumbel_softmax_with_noise(const Tensor& scores, const Tensor& noise, double temperature, bool hard);
/// Gradient with respect to `scores`. The hard variant is straight-through: the
/// forward value is one-hot but the gradient is taken through the soft sample.
Tensor gumbel_softmax_backward(const GumbelSample& sample, const Tensor& d_output);

}  // namespace simdec::nn
