#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "hyperclass/ball_geometry.hpp"

namespace hyperclass {

// Independent generator streams derived from one run seed, so that e.g. the
// random-hierarchy shuffle does not perturb the embedding initialisation.
enum class RngStream : std::uint32_t {
  HierarchyShuffle = 1,
  LabelTraining = 2,
  EncoderInit = 3,
  BatchOrder = 4,
  Synthetic = 5,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, RngStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// Uniform sample from the Euclidean ball of the given radius.
inline BallPoint uniform_in_ball(std::mt19937_64& rng, std::size_t dim, double radius) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec v(dim);
  double n = 0.0;
  do {
    for (double& c : v) c = gauss(rng);
    n = norm(v);
  } while (n == 0.0);
  const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  for (double& c : v) c *= r / n;
  return BallPoint(std::move(v));
}

}  // namespace hyperclass
