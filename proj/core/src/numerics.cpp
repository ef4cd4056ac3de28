// SPDX-License-Identifier: Apache-2.0
#include "tagm/numerics.hpp"

#include <algorithm>
#include <cmath>

#include "tagm/error.hpp"

namespace tagm {

void Vector::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

Vector matvec(const Matrix& W, std::span<const double> x) {
  if (W.cols() != x.size()) {
    throw ShapeError("matvec: matrix is " + shape_string(W) + " but vector has length " +
                     std::to_string(x.size()));
  }
  Vector out(W.rows());
  for (std::size_t r = 0; r < W.rows(); ++r) out[r] = dot(W.row(r), x);
  return out;
}

Vector affine(const Matrix& W, std::span<const double> x, const Vector& b) {
  if (W.rows() != b.size()) {
    throw ShapeError("affine: matrix is " + shape_string(W) + " but bias has length " +
                     std::to_string(b.size()));
  }
  Vector out = matvec(W, x);
  for (std::size_t r = 0; r < out.size(); ++r) out[r] += b[r];
  return out;
}

void add_transposed_matvec(const Matrix& W, std::span<const double> y, std::span<double> out) {
  if (W.rows() != y.size() || W.cols() != out.size()) {
    throw ShapeError("add_transposed_matvec: shape mismatch against " + shape_string(W));
  }
  for (std::size_t r = 0; r < W.rows(); ++r) {
    if (y[r] == 0.0) continue;
    axpy(y[r], W.row(r), out);
  }
}

void add_outer(Matrix& G, std::span<const double> y, std::span<const double> x) {
  if (G.rows() != y.size() || G.cols() != x.size()) {
    throw ShapeError("add_outer: shape mismatch against " + shape_string(G));
  }
  for (std::size_t r = 0; r < G.rows(); ++r) {
    if (y[r] == 0.0) continue;
    axpy(y[r], x, G.row(r));
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vector relu(const Vector& x) {
  Vector out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector softmax_stable(const Vector& z) {
  if (z.empty()) throw ShapeError("softmax_stable: empty input");
  const double peak = *std::max_element(z.raw().begin(), z.raw().end());
  Vector out(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - peak);
    total += out[i];
  }
  for (std::size_t i = 0; i < z.size(); ++i) out[i] /= total;
  return out;
}

void clip_elementwise(std::span<double> g, double lo, double hi) {
  if (lo > hi) throw Error("clip_elementwise: lo > hi");
  for (double& v : g) v = std::min(hi, std::max(lo, v));
}

Vector clip_elementwise(const Vector& g, double lo, double hi) {
  Vector out = g;
  clip_elementwise(out.values(), lo, hi);
  return out;
}

Matrix clip_elementwise(const Matrix& g, double lo, double hi) {
  Matrix out = g;
  clip_elementwise(out.values(), lo, hi);
  return out;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace tagm
