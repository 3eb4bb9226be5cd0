#include "hyperclass/manifold_optim.hpp"

#include <cmath>

namespace hyperclass {

Vec riemannian_grad(const BallPoint& theta, std::span<const double> euclid_grad) {
  if (euclid_grad.size() != theta.dim()) throw GeometryError("dimension mismatch");
  const double a = 1.0 - theta.squared_norm();
  const double scale = a * a / 4.0;
  Vec out(euclid_grad.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * euclid_grad[i];
  return out;
}

BallPoint rsgd_step(const BallPoint& theta, std::span<const double> euclid_grad, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  Vec dir = riemannian_grad(theta, euclid_grad);
  for (double& d : dir) d *= -lr;
  return exp_map(theta, dir);
}

BallPoint radam_step(RiemannianOptimState& state, const BallPoint& theta,
                     std::span<const double> euclid_grad) {
  return radam_step(state, theta, euclid_grad, state.config.learning_rate);
}

BallPoint radam_step(RiemannianOptimState& state, const BallPoint& theta,
                     std::span<const double> euclid_grad, double lr) {
  if (state.first_moment.size() != theta.dim()) throw GeometryError("optimizer state shape mismatch");
  const RiemannianAdamConfig& c = state.config;
  const Vec rg = riemannian_grad(theta, euclid_grad);
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  Vec dir(rg.size());
  for (std::size_t i = 0; i < rg.size(); ++i) {
    state.first_moment[i] = c.beta1 * state.first_moment[i] + (1.0 - c.beta1) * rg[i];
    state.second_moment[i] = c.beta2 * state.second_moment[i] + (1.0 - c.beta2) * rg[i] * rg[i];
    const double m_hat = state.first_moment[i] / bc1;
    const double v_hat = state.second_moment[i] / bc2;
    dir[i] = -lr * m_hat / (std::sqrt(v_hat) + c.eps);
  }
  return exp_map(theta, dir);
}

}  // namespace hyperclass
