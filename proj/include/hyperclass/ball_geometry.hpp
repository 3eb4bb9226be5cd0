#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hyperclass {

using Vec = std::vector<double>;

// Numerical floors for the unit Poincare ball (curvature -1).
struct GeometryConstants {
  static constexpr double kEpsBall = 1e-5;  // points are kept at norm <= 1 - kEpsBall
  static constexpr double kEpsDiv = 1e-12;  // zero-vector / coincident-point threshold
};

static_assert(0.0 < GeometryConstants::kEpsDiv &&
              GeometryConstants::kEpsDiv < GeometryConstants::kEpsBall &&
              GeometryConstants::kEpsBall < 1.0);

class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> a);
double norm(std::span<const double> a);

// A point strictly inside the unit ball. Construction rejects non-finite
// coordinates and radially clamps anything outside radius 1 - kEpsBall.
class BallPoint {
 public:
  BallPoint() = default;
  explicit BallPoint(Vec coords);

  static BallPoint origin(std::size_t dim) { return BallPoint(Vec(dim, 0.0)); }

  [[nodiscard]] const Vec& coords() const noexcept { return coords_; }
  [[nodiscard]] std::size_t dim() const noexcept { return coords_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return coords_[i]; }
  [[nodiscard]] double squared_norm() const { return hyperclass::squared_norm(coords_); }
  [[nodiscard]] double norm() const { return hyperclass::norm(coords_); }

  [[nodiscard]] BallPoint operator-() const;

  friend bool operator==(const BallPoint&, const BallPoint&) = default;

 private:
  Vec coords_;
};

// Euclidean vector in the tangent space at `basepoint`.
struct TangentVector {
  Vec coords;
  BallPoint basepoint;
};

/// Radial retraction onto the closed ball of radius 1 - kEpsBall.
/// Throws GeometryError on non-finite input.
BallPoint project_to_ball(std::span<const double> p);

/// lambda_x = 2 / (1 - |x|^2).
double conformal_factor(const BallPoint& x);

/// Mobius addition x (+) y.
BallPoint mobius_add(const BallPoint& x, const BallPoint& y);

/// exp_x(v) = x (+) tanh(lambda_x |v| / 2) v / |v|. Returns x when |v| < kEpsDiv.
BallPoint exp_map(const BallPoint& x, std::span<const double> v);
BallPoint exp_map(const TangentVector& v);

/// log_x(y) = (2 / lambda_x) artanh(|-x (+) y|) (-x (+) y) / |-x (+) y|.
/// Returns the zero vector at x when y coincides with x.
TangentVector log_map(const BallPoint& x, const BallPoint& y);

/// Geodesic distance arcosh(1 + 2|x-y|^2 / ((1-|x|^2)(1-|y|^2))).
double distance(const BallPoint& x, const BallPoint& y);

/// Euclidean partial derivatives (dd/dx, dd/dy) of `distance`. Both are zero
/// when the points coincide within kEpsDiv.
std::pair<Vec, Vec> distance_grad(const BallPoint& x, const BallPoint& y);

}  // namespace hyperclass
