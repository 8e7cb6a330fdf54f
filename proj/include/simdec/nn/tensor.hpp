#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace simdec::nn {

/// Dense row-major array of doubles. Rank 1 or 2 in practice; a rank-1 tensor of
/// length n is treated as an n x 1 column where a matrix view is needed.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor({n}, fill); }
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols(), cols()}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  void fill(double v);
  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  std::string shape_string() const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s);

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> values_;
};

bool operator==(const Tensor& a, const Tensor& b);

/// Throws ShapeError with `what` when the shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

/// out = a * b^T, a: n x k, b: m x k.
Tensor matmul_transposed(const Tensor& a, const Tensor& b);
/// out += a * b, a: n x k, b: k x m. Shapes of `out` must be n x m.
void matmul_accumulate(const Tensor& a, const Tensor& b, Tensor& out);
/// out += a^T * b, a: n x k, b: n x m, out: k x m.
void matmul_transposed_lhs_accumulate(const Tensor& a, const Tensor& b, Tensor& out);

Tensor select_rows(const Tensor& t, std::span<const std::size_t> rows);
/// Column-wise concatenation of matrices with equal row counts.
Tensor concat_columns(std::span<const Tensor* const> parts);

}  // namespace simdec::nn
