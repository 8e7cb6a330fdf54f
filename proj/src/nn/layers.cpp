#include "simdec/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "simdec/errors.hpp"
#include "simdec/nn/functional.hpp"

namespace simdec::nn {

namespace {

Tensor uniform_tensor(std::vector<std::size_t> shape, double bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

void add_bias(Tensor& y, const Tensor& bias) {
  const std::size_t m = y.cols();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    double* row = y.data() + r * m;
    for (std::size_t j = 0; j < m; ++j) row[j] += bias[j];
  }
}

void accumulate_bias_grad(Tensor& grad, const Tensor& dy) {
  const std::size_t m = dy.cols();
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    const double* row = dy.data() + r * m;
    for (std::size_t j = 0; j < m; ++j) grad[j] += row[j];
  }
}

}  // namespace

Linear::Linear(const std::string& name, std::size_t in_features, std::size_t out_features, Rng& rng) {
  // A group may have no columns; its bias still needs a finite init range.
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(in_features, 1)));
  weight = Parameter(name + ".weight", uniform_tensor({out_features, in_features}, bound, rng));
  bias = Parameter(name + ".bias", uniform_tensor({out_features}, bound, rng));
}

Linear::Linear(const std::string& name, Tensor w, Tensor b) {
  if (w.rank() != 2 || b.size() != w.rows()) throw ShapeError("linear: weight/bias shape mismatch");
  weight = Parameter(name + ".weight", std::move(w));
  bias = Parameter(name + ".bias", std::move(b));
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.cols() != in_features()) {
    throw ShapeError("linear '" + weight.name + "': input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(in_features()));
  }
  Tensor y = matmul_transposed(x, weight.value);
  add_bias(y, bias.value);
  return y;
}

Tensor Linear::backward(const Tensor& x, const Tensor& dy) {
  if (dy.rows() != x.rows() || dy.cols() != out_features()) throw ShapeError("linear backward: bad upstream shape");
  matmul_transposed_lhs_accumulate(dy, x, weight.grad);
  accumulate_bias_grad(bias.grad, dy);
  Tensor dx = Tensor::matrix(x.rows(), in_features());
  matmul_accumulate(dy, weight.value, dx);
  return dx;
}

Embedding::Embedding(const std::string& name, std::size_t rows, std::size_t dim, Rng& rng) {
  Tensor t = Tensor::matrix(rows, dim);
  for (double& v : t.values()) v = 0.1 * rng.normal();
  table = Parameter(name + ".table", std::move(t));
}

Tensor Embedding::lookup(int index) const {
  const int one[] = {index};
  Tensor row = forward(one);
  return Tensor({dim()}, std::vector<double>(row.values().begin(), row.values().end()));
}

Tensor Embedding::forward(std::span<const int> indices) const {
  Tensor out = Tensor::matrix(indices.size(), dim());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= rows()) {
      throw std::out_of_range("embedding '" + table.name + "': index " + std::to_string(indices[i]) +
                              " out of range [0, " + std::to_string(rows()) + ")");
    }
    auto src = table.value.row(static_cast<std::size_t>(indices[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void Embedding::backward(std::span<const int> indices, const Tensor& dy) {
  if (dy.size() != indices.size() * dim()) throw ShapeError("embedding backward: bad upstream shape");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto g = table.grad.row(static_cast<std::size_t>(indices[i]));
    const double* src = dy.data() + i * dim();
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += src[j];
  }
}

LstmCell::LstmCell(const std::string& name, std::size_t input_size, std::size_t hidden_size, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  w_input = Parameter(name + ".w_input", uniform_tensor({4 * hidden_size, input_size}, bound, rng));
  w_hidden = Parameter(name + ".w_hidden", uniform_tensor({4 * hidden_size, hidden_size}, bound, rng));
  bias = Parameter(name + ".bias", uniform_tensor({4 * hidden_size}, bound, rng));
}

LstmState LstmCell::zero_state(std::size_t batch) const {
  return {Tensor::matrix(batch, hidden_size()), Tensor::matrix(batch, hidden_size())};
}

LstmState LstmCell::forward(const Tensor& x, const LstmState& prev, LstmCache* cache) const {
  const std::size_t n = x.rows();
  const std::size_t h = hidden_size();
  if (x.cols() != input_size()) {
    throw ShapeError("lstm '" + w_input.name + "': input has " + std::to_string(x.cols()) + " columns, expected " +
                     std::to_string(input_size()));
  }
  if (prev.h.rows() != n || prev.h.cols() != h || prev.c.rows() != n || prev.c.cols() != h) {
    throw ShapeError("lstm '" + w_input.name + "': state shape mismatch");
  }
  Tensor a = matmul_transposed(x, w_input.value);
  Tensor ah = matmul_transposed(prev.h, w_hidden.value);
  a += ah;
  add_bias(a, bias.value);

  Tensor gi = Tensor::matrix(n, h), gf = Tensor::matrix(n, h), gg = Tensor::matrix(n, h), go = Tensor::matrix(n, h);
  LstmState next{Tensor::matrix(n, h), Tensor::matrix(n, h)};
  Tensor tanh_c = Tensor::matrix(n, h);
  for (std::size_t r = 0; r < n; ++r) {
    const double* ar = a.data() + r * 4 * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double i_ = sigmoid(ar[j]);
      const double f_ = sigmoid(ar[h + j]);
      const double g_ = std::tanh(ar[2 * h + j]);
      const double o_ = sigmoid(ar[3 * h + j]);
      const double c = f_ * prev.c(r, j) + i_ * g_;
      const double tc = std::tanh(c);
      gi(r, j) = i_;
      gf(r, j) = f_;
      gg(r, j) = g_;
      go(r, j) = o_;
      next.c(r, j) = c;
      tanh_c(r, j) = tc;
      next.h(r, j) = o_ * tc;
    }
  }
  if (cache != nullptr) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->gate_i = std::move(gi);
    cache->gate_f = std::move(gf);
    cache->gate_g = std::move(gg);
    cache->gate_o = std::move(go);
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

LstmGrads LstmCell::backward(const LstmCache& cache, const Tensor& dh, const Tensor& dc) {
  const std::size_t n = cache.x.rows();
  const std::size_t h = hidden_size();
  Tensor da = Tensor::matrix(n, 4 * h);
  LstmGrads out{Tensor::matrix(n, input_size()), Tensor::matrix(n, h), Tensor::matrix(n, h)};
  for (std::size_t r = 0; r < n; ++r) {
    double* dar = da.data() + r * 4 * h;
    for (std::size_t j = 0; j < h; ++j) {
      const double i_ = cache.gate_i(r, j);
      const double f_ = cache.gate_f(r, j);
      const double g_ = cache.gate_g(r, j);
      const double o_ = cache.gate_o(r, j);
      const double tc = cache.tanh_c(r, j);
      const double dhv = dh(r, j);
      const double dct = dc(r, j) + dhv * o_ * (1.0 - tc * tc);
      dar[j] = dct * g_ * i_ * (1.0 - i_);
      dar[h + j] = dct * cache.c_prev(r, j) * f_ * (1.0 - f_);
      dar[2 * h + j] = dct * i_ * (1.0 - g_ * g_);
      dar[3 * h + j] = dhv * tc * o_ * (1.0 - o_);
      out.dc_prev(r, j) = dct * f_;
    }
  }
  matmul_transposed_lhs_accumulate(da, cache.x, w_input.grad);
  matmul_transposed_lhs_accumulate(da, cache.h_prev, w_hidden.grad);
  accumulate_bias_grad(bias.grad, da);
  matmul_accumulate(da, w_input.value, out.dx);
  matmul_accumulate(da, w_hidden.value, out.dh_prev);
  return out;
}

Mlp::Mlp(const std::string& name, std::size_t in, std::span<const std::size_t> hidden, std::size_t out, Rng& rng) {
  std::size_t prev = in;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(name + ".l" + std::to_string(i), prev, hidden[i], rng);
    prev = hidden[i];
  }
  layers_.emplace_back(name + ".l" + std::to_string(hidden.size()), prev, out, rng);
}

Tensor Mlp::forward(const Tensor& x, Trace* trace) const {
  if (trace != nullptr) {
    trace->inputs.clear();
    trace->activations.clear();
  }
  Tensor cur = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (trace != nullptr) trace->inputs.push_back(cur);
    Tensor y = layers_[i].forward(cur);
    if (i + 1 < layers_.size()) {
      y = tanh(y);
      if (trace != nullptr) trace->activations.push_back(y);
    }
    cur = std::move(y);
  }
  return cur;
}

Tensor Mlp::backward(const Trace& trace, const Tensor& dy) {
  Tensor grad = dy;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    if (k + 1 < layers_.size()) grad = tanh_backward(trace.activations[k], grad);
    grad = layers_[k].backward(trace.inputs[k], grad);
  }
  return grad;
}

}  // namespace simdec::nn
