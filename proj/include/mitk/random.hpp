#pragma once

// Seeded random instances for property checks.

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mitk/discrete.hpp"
#include "mitk/gaussian.hpp"

namespace mitk::sampling {

/// Uniform point of the probability simplex, bounded away from zero.
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n,
                                          double floor = 1e-3) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (double& x : p) total += (x = expo(rng) + floor);
  for (double& x : p) x /= total;
  return p;
}

inline SignalDist<> random_signal(std::mt19937_64& rng, std::size_t n) {
  return SignalDist<>(random_simplex(rng, n));
}

inline DiscreteChannel<> random_channel(std::mt19937_64& rng, std::size_t inputs,
                                        std::size_t outputs) {
  std::vector<std::vector<double>> rows;
  for (std::size_t s = 0; s < inputs; ++s) rows.push_back(random_simplex(rng, outputs));
  return DiscreteChannel<>(std::move(rows));
}

inline std::size_t random_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline GaussianChannelSpec random_spec(std::mt19937_64& rng, std::size_t symbols, std::size_t d,
                                       double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::MatrixXd f(static_cast<Eigen::Index>(symbols), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < f.rows(); ++i)
    for (Eigen::Index j = 0; j < f.cols(); ++j) f(i, j) = normal(rng);
  return GaussianChannelSpec(std::move(f));
}

}  // namespace mitk::sampling
