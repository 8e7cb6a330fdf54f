#include "simdec/nn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "simdec/errors.hpp"

namespace simdec::nn {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, double fill)
    : shape_(std::move(shape)), values_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != product(shape_)) {
    throw ShapeError("tensor value count " + std::to_string(values_.size()) +
                     " does not match shape " + shape_string());
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t n = rows.size();
  const std::size_t m = n == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(n * m);
  for (const auto& r : rows) {
    if (r.size() != m) throw ShapeError("ragged matrix literal");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor({n, m}, std::move(values));
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

std::string Tensor::shape_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
  os << ']';
  return os.str();
}

Tensor& Tensor::operator+=(const Tensor& other) {
  require_same_shape(*this, other, "tensor +=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && std::equal(a.values().begin(), a.values().end(), b.values().begin());
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

Tensor matmul_transposed(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul: inner dimension mismatch " + a.shape_string() + " vs " + b.shape_string() + "^T");
  }
  const std::size_t n = a.rows();
  const std::size_t m = b.rows();
  const std::size_t k = a.cols();
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.data() + i * k;
    double* o = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* br = b.data() + j * k;
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += ar[t] * br[t];
      o[j] = s;
    }
  }
  return out;
}

void matmul_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  if (b.rows() != k || out.rows() != n || out.cols() != m) {
    throw ShapeError("matmul: shape mismatch " + a.shape_string() + " * " + b.shape_string() + " -> " +
                     out.shape_string());
  }
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data() + i * m;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a.data()[i * k + t];
      if (av == 0.0) continue;
      const double* br = b.data() + t * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

void matmul_transposed_lhs_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t n = a.rows();
  const std::size_t k = a.cols();
  const std::size_t m = b.cols();
  if (b.rows() != n || out.rows() != k || out.cols() != m) {
    throw ShapeError("matmul: shape mismatch " + a.shape_string() + "^T * " + b.shape_string() + " -> " +
                     out.shape_string());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.data() + i * k;
    const double* br = b.data() + i * m;
    for (std::size_t t = 0; t < k; ++t) {
      const double av = ar[t];
      if (av == 0.0) continue;
      double* o = out.data() + t * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows) {
  const std::size_t c = t.cols();
  Tensor out = t.rank() == 1 ? Tensor::vector(rows.size()) : Tensor::matrix(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= t.rows()) throw ShapeError("select_rows: row index out of range");
    std::copy_n(t.data() + rows[i] * c, c, out.data() + i * c);
  }
  return out;
}

Tensor concat_columns(std::span<const Tensor* const> parts) {
  if (parts.empty()) return {};
  const std::size_t n = parts.front()->rows();
  std::size_t total = 0;
  for (const Tensor* p : parts) {
    if (p->rows() != n) throw ShapeError("concat_columns: row count mismatch");
    total += p->cols();
  }
  Tensor out = Tensor::matrix(n, total);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t offset = 0;
    for (const Tensor* p : parts) {
      std::copy_n(p->data() + i * p->cols(), p->cols(), out.data() + i * total + offset);
      offset += p->cols();
    }
  }
  return out;
}

}  // namespace simdec::nn
