#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sbbv {

// Dense row-major matrix of doubles. Training runs entirely in double
// precision so the finite-difference gradient checks have headroom.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) {
    assert(r < rows && c < cols);
    return a[r * cols + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    assert(r < rows && c < cols);
    return a[r * cols + c];
  }

  std::size_t size() const { return a.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  static Matrix row_vector(const std::vector<double>& v) {
    Matrix m(1, v.size());
    m.a = v;
    return m;
  }
};

inline Matrix matmul(const Matrix& x, const Matrix& y) {
  assert(x.cols == y.rows);
  Matrix out(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = &x.a[i * x.cols];
    double* oi = &out.a[i * y.cols];
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double v = xi[k];
      if (v == 0.0) continue;
      const double* yk = &y.a[k * y.cols];
      for (std::size_t j = 0; j < y.cols; ++j) oi[j] += v * yk[j];
    }
  }
  return out;
}

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double l2_norm(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

inline double cosine_similarity(const std::vector<double>& x, const std::vector<double>& y) {
  const double nx = l2_norm(x);
  const double ny = l2_norm(y);
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return dot(x, y) / (nx * ny);
}

inline double euclidean_distance(const std::vector<double>& x, const std::vector<double>& y) {
  assert(x.size() == y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline std::vector<double> l2_normalized(const std::vector<double>& x) {
  const double n = l2_norm(x);
  std::vector<double> out(x);
  if (n > 0.0) {
    for (double& v : out) v /= n;
  }
  return out;
}

}  // namespace sbbv
