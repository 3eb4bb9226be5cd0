#pragma once

#include <cstdint>
#include <span>

#include "hyperclass/ball_geometry.hpp"

namespace hyperclass {

struct RiemannianAdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam moments for a single ball-valued parameter. Moments are kept as flat
// coordinate vectors; they are not parallel-transported between steps.
struct RiemannianOptimState {
  explicit RiemannianOptimState(std::size_t dim, RiemannianAdamConfig config = {})
      : config(config), first_moment(dim, 0.0), second_moment(dim, 0.0) {}

  RiemannianAdamConfig config;
  Vec first_moment;
  Vec second_moment;
  std::uint64_t step_count = 0;
};

/// Inverse-metric rescaling: grad * (1 - |theta|^2)^2 / 4.
Vec riemannian_grad(const BallPoint& theta, std::span<const double> euclid_grad);

/// One Riemannian SGD step through the exponential map.
BallPoint rsgd_step(const BallPoint& theta, std::span<const double> euclid_grad, double lr);

/// One Riemannian Adam step. Uses state.config.learning_rate.
BallPoint radam_step(RiemannianOptimState& state, const BallPoint& theta,
                     std::span<const double> euclid_grad);

/// Same as above with an explicit learning rate (used for burn-in).
BallPoint radam_step(RiemannianOptimState& state, const BallPoint& theta,
                     std::span<const double> euclid_grad, double lr);

}  // namespace hyperclass
