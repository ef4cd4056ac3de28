// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace tagm {

/// Dense real vector (binary64).
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t len, double fill = 0.0) : data_(len, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& raw() const { return data_; }

  void fill(double v);

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

/// Dense row-major real matrix (binary64).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  /// Row-major initialisation; every row must have the same length.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---- kernels ---------------------------------------------------------------

/// W·x + b. Throws ShapeError on mismatch.
Vector affine(const Matrix& W, std::span<const double> x, const Vector& b);

/// W·x (no bias).
Vector matvec(const Matrix& W, std::span<const double> x);

/// out += Wᵀ·y
void add_transposed_matvec(const Matrix& W, std::span<const double> y, std::span<double> out);

/// G += y·xᵀ
void add_outer(Matrix& G, std::span<const double> y, std::span<const double> x);

/// out += alpha·x
void axpy(double alpha, std::span<const double> x, std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);

Vector relu(const Vector& x);
/// ReLU derivative mask; the value at exactly 0 is 0.
inline double relu_grad(double pre_activation) { return pre_activation > 0.0 ? 1.0 : 0.0; }

/// Logistic function, evaluated without overflow for any finite input.
double sigmoid(double x);

/// Shifted softmax; z must be non-empty.
Vector softmax_stable(const Vector& z);

/// Elementwise clamp to [lo, hi]; throws Error if lo > hi.
void clip_elementwise(std::span<double> g, double lo, double hi);
Vector clip_elementwise(const Vector& g, double lo, double hi);
Matrix clip_elementwise(const Matrix& g, double lo, double hi);

bool all_finite(std::span<const double> values);

std::string shape_string(const Matrix& m);

}  // namespace tagm
