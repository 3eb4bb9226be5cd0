#include "hyperclass/ball_geometry.hpp"

#include <algorithm>
#include <cmath>

namespace hyperclass {

namespace {

constexpr double kMaxRadius = 1.0 - GeometryConstants::kEpsBall;

double clamped_artanh(double r) { return std::atanh(std::min(r, kMaxRadius)); }

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw GeometryError("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }

double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

BallPoint::BallPoint(Vec coords) : coords_(std::move(coords)) {
  for (double c : coords_) {
    if (!std::isfinite(c)) throw GeometryError("ball point has non-finite coordinate");
  }
  const double n = hyperclass::norm(coords_);
  if (n > kMaxRadius) {
    double s = kMaxRadius / n;
    for (double& c : coords_) c *= s;
    // Rounding can leave the rescaled norm a hair above the limit; nudge it
    // inside so that rebuilding a point from its coordinates is a no-op.
    while (hyperclass::norm(coords_) > kMaxRadius) {
      for (double& c : coords_) c *= 1.0 - 0x1p-52;
    }
  }
}

BallPoint BallPoint::operator-() const {
  Vec neg(coords_.size());
  std::transform(coords_.begin(), coords_.end(), neg.begin(), [](double c) { return -c; });
  BallPoint out;
  out.coords_ = std::move(neg);
  return out;
}

BallPoint project_to_ball(std::span<const double> p) { return BallPoint(Vec(p.begin(), p.end())); }

double conformal_factor(const BallPoint& x) { return 2.0 / (1.0 - x.squared_norm()); }

BallPoint mobius_add(const BallPoint& x, const BallPoint& y) {
  if (x.dim() != y.dim()) throw GeometryError("dimension mismatch");
  const double xy = dot(x.coords(), y.coords());
  const double xx = x.squared_norm();
  const double yy = y.squared_norm();
  const double a = 1.0 + 2.0 * xy + yy;
  const double b = 1.0 - xx;
  const double denom = 1.0 + 2.0 * xy + xx * yy;
  Vec out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a * x[i] + b * y[i]) / denom;
  return BallPoint(std::move(out));
}

BallPoint exp_map(const BallPoint& x, std::span<const double> v) {
  if (v.size() != x.dim()) throw GeometryError("dimension mismatch");
  const double vn = norm(v);
  if (vn < GeometryConstants::kEpsDiv) return x;
  const double scale = std::tanh(conformal_factor(x) * vn / 2.0) / vn;
  Vec step(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) step[i] = scale * v[i];
  return mobius_add(x, BallPoint(std::move(step)));
}

BallPoint exp_map(const TangentVector& v) { return exp_map(v.basepoint, v.coords); }

TangentVector log_map(const BallPoint& x, const BallPoint& y) {
  const BallPoint diff = mobius_add(-x, y);
  const double dn = diff.norm();
  if (dn < GeometryConstants::kEpsDiv) return {Vec(x.dim(), 0.0), x};
  const double scale = (2.0 / conformal_factor(x)) * clamped_artanh(dn) / dn;
  Vec out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * diff[i];
  return {std::move(out), x};
}

namespace {

struct DistanceTerms {
  double alpha;     // 1 - |x|^2
  double beta;      // 1 - |y|^2
  double diff_sq;   // |x - y|^2
  double gamma_m1;  // gamma - 1, computed without cancellation
};

DistanceTerms distance_terms(const BallPoint& x, const BallPoint& y) {
  if (x.dim() != y.dim()) throw GeometryError("dimension mismatch");
  double diff_sq = 0.0;
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double d = x[i] - y[i];
    diff_sq += d * d;
  }
  const double alpha = 1.0 - x.squared_norm();
  const double beta = 1.0 - y.squared_norm();
  return {alpha, beta, diff_sq, 2.0 * diff_sq / (alpha * beta)};
}

}  // namespace

double distance(const BallPoint& x, const BallPoint& y) {
  const DistanceTerms t = distance_terms(x, y);
  // acosh(1 + g) written as log1p(g + sqrt(g (g + 2))) keeps precision for small g.
  const double g = std::max(t.gamma_m1, 0.0);
  return std::log1p(g + std::sqrt(g * (g + 2.0)));
}

std::pair<Vec, Vec> distance_grad(const BallPoint& x, const BallPoint& y) {
  const DistanceTerms t = distance_terms(x, y);
  Vec gx(x.dim(), 0.0);
  Vec gy(y.dim(), 0.0);
  if (std::sqrt(t.diff_sq) < GeometryConstants::kEpsDiv || t.gamma_m1 <= 0.0) return {gx, gy};
  // dd/dgamma = 1 / sqrt(gamma^2 - 1)
  const double c = 4.0 / std::sqrt(t.gamma_m1 * (t.gamma_m1 + 2.0));
  const double cx = c / (t.beta * t.alpha * t.alpha);
  const double cy = c / (t.alpha * t.beta * t.beta);
  for (std::size_t i = 0; i < x.dim(); ++i) {
    const double d = x[i] - y[i];
    gx[i] = cx * (t.alpha * d + t.diff_sq * x[i]);
    gy[i] = cy * (-t.beta * d + t.diff_sq * y[i]);
  }
  return {gx, gy};
}

}  // namespace hyperclass
