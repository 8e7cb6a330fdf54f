#include "simdec/nn/functional.hpp"

#include <algorithm>
#include <cmath>

#include "simdec/errors.hpp"

namespace simdec::nn {

namespace {

// Rank-1 inputs are a single row for the row-wise ops below.
Tensor as_rows(const Tensor& t) {
  if (t.rank() != 1) return t;
  return Tensor({1, t.size()}, std::vector<double>(t.values().begin(), t.values().end()));
}

Tensor reshape_like(const Tensor& t, const Tensor& like) {
  return Tensor(like.shape(), std::vector<double>(t.values().begin(), t.values().end()));
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = sigmoid(v);
  return y;
}

Tensor tanh(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = std::tanh(v);
  return y;
}

Tensor softmax_rows(const Tensor& x) {
  if (x.rank() == 1) return reshape_like(softmax_rows(as_rows(x)), x);
  Tensor y = x;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - m);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  require_same_shape(y, dy, "sigmoid backward");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= y[i] * (1.0 - y[i]);
  return dx;
}

Tensor tanh_backward(const Tensor& y, const Tensor& dy) {
  require_same_shape(y, dy, "tanh backward");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - y[i] * y[i];
  return dx;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& dy) {
  require_same_shape(y, dy, "softmax backward");
  if (y.rank() == 1) return reshape_like(softmax_rows_backward(as_rows(y), as_rows(dy)), y);
  Tensor dx = dy;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto yr = y.row(r);
    auto gr = dy.row(r);
    double dot = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) dot += yr[j] * gr[j];
    auto out = dx.row(r);
    for (std::size_t j = 0; j < yr.size(); ++j) out[j] = yr[j] * (gr[j] - dot);
  }
  return dx;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

MseResult mse_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse_loss");
  MseResult out{0.0, Tensor(pred.shape())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    out.value += d * d;
    out.grad[i] = 2.0 * d;
  }
  return out;
}

GumbelSample gumbel_softmax(const Tensor& scores, double temperature, Rng& rng, bool hard) {
  Tensor noise(scores.shape());
  for (double& g : noise.values()) g = rng.gumbel();
  return gumbel_softmax_with_noise(scores, noise, temperature, hard);
}

GumbelSample gumbel_softmax_with_noise(const Tensor& scores, const Tensor& noise, double temperature, bool hard) {
  if (!(temperature > 0.0)) throw std::invalid_argument("gumbel_softmax: temperature must be > 0");
  require_same_shape(scores, noise, "gumbel_softmax noise");
  if (scores.rank() == 1) {
    GumbelSample s = gumbel_softmax_with_noise(as_rows(scores), as_rows(noise), temperature, hard);
    s.noise = reshape_like(s.noise, scores);
    s.soft = reshape_like(s.soft, scores);
    s.output = reshape_like(s.output, scores);
    return s;
  }
  GumbelSample s;
  s.noise = noise;
  s.temperature = temperature;
  s.hard = hard;
  Tensor logits = scores;
  for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = (scores[i] + noise[i]) / temperature;
  s.soft = softmax_rows(logits);
  s.index.resize(s.soft.rows());
  for (std::size_t r = 0; r < s.soft.rows(); ++r) s.index[r] = static_cast<int>(argmax(logits.row(r)));
  if (hard) {
    s.output = Tensor(s.soft.shape());
    for (std::size_t r = 0; r < s.soft.rows(); ++r) s.output(r, static_cast<std::size_t>(s.index[r])) = 1.0;
  } else {
    s.output = s.soft;
  }
  return s;
}

Tensor gumbel_softmax_backward(const GumbelSample& sample, const Tensor& d_output) {
  Tensor d = softmax_rows_backward(sample.soft, d_output);
  d *= 1.0 / sample.temperature;
  return d;
}

}  // namespace simdec::nn
