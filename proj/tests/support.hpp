#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hyperclass/ball_geometry.hpp"

namespace hyperclass::testing {

inline Vec random_direction(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(dim);
  double n = 0.0;
  do {
    for (double& c : v) c = g(rng);
    n = norm(v);
  } while (n == 0.0);
  for (double& c : v) c /= n;
  return v;
}

// Norm drawn uniformly from [0, max_norm].
inline Vec random_vector(std::mt19937_64& rng, std::size_t dim, double max_norm) {
  Vec v = random_direction(rng, dim);
  const double r = std::uniform_real_distribution<double>(0.0, max_norm)(rng);
  for (double& c : v) c *= r;
  return v;
}

inline BallPoint random_point(std::mt19937_64& rng, std::size_t dim, double max_norm) {
  return BallPoint(random_vector(rng, dim, max_norm));
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Reference formulas in extended precision, written out independently of the
// library.
inline std::vector<long double> oracle_mobius(std::span<const double> x, std::span<const double> y) {
  long double xy = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xy += static_cast<long double>(x[i]) * y[i];
    xx += static_cast<long double>(x[i]) * x[i];
    yy += static_cast<long double>(y[i]) * y[i];
  }
  const long double den = 1 + 2 * xy + xx * yy;
  std::vector<long double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = ((1 + 2 * xy + yy) * x[i] + (1 - xx) * y[i]) / den;
  return out;
}

inline long double oracle_distance(std::span<const double> x, std::span<const double> y) {
  long double diff = 0, xx = 0, yy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double d = static_cast<long double>(x[i]) - y[i];
    diff += d * d;
    xx += static_cast<long double>(x[i]) * x[i];
    yy += static_cast<long double>(y[i]) * y[i];
  }
  return std::acosh(1 + 2 * diff / ((1 - xx) * (1 - yy)));
}

// Central differences of f around `params`, one coordinate at a time.
inline Vec numeric_gradient(const std::function<double()>& f, std::span<double> params, double h = 1e-6) {
  Vec g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double fp = f();
    params[i] = saved - h;
    const double fm = f();
    params[i] = saved;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

// Largest componentwise error, relative to the larger of the two gradient
// scales; `floor` keeps all-but-zero gradients from dividing by noise.
inline double gradient_rel_error(std::span<const double> analytic, std::span<const double> numeric,
                                 double floor = 1e-8) {
  double scale = floor;
  for (double v : analytic) scale = std::max(scale, std::abs(v));
  for (double v : numeric) scale = std::max(scale, std::abs(v));
  return max_abs_diff(analytic, numeric) / scale;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("hyperclass-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace hyperclass::testing
