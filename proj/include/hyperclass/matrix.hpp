#pragma once

#include <cassert>
#include <random>
#include <span>
#include <vector>

namespace hyperclass {

// Dense row-major matrix. Linear layers store weights as (out x in).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// y = M x + b
inline std::vector<double> affine(const Matrix& m, std::span<const double> x,
                                  std::span<const double> b) {
  assert(x.size() == m.cols && b.size() == m.rows);
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.data.data() + r * m.cols;
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) s += w[c] * x[c];
    y[r] += s;
  }
  return y;
}

// y = M^T g
inline std::vector<double> transpose_times(const Matrix& m, std::span<const double> g) {
  assert(g.size() == m.rows);
  std::vector<double> y(m.cols, 0.0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* w = m.data.data() + r * m.cols;
    const double gr = g[r];
    if (gr == 0.0) continue;
    for (std::size_t c = 0; c < m.cols; ++c) y[c] += w[c] * gr;
  }
  return y;
}

// M += g x^T
inline void add_outer(Matrix& m, std::span<const double> g, std::span<const double> x) {
  assert(g.size() == m.rows && x.size() == m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* w = m.data.data() + r * m.cols;
    for (std::size_t c = 0; c < m.cols; ++c) w[c] += gr * x[c];
  }
}

inline void fill_uniform(std::span<double> v, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& x : v) x = u(rng);
}

}  // namespace hyperclass
