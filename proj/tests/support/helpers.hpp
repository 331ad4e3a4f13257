#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "stablelad/rng.hpp"
#include "stablelad/sde_sim.hpp"
#include "stablelad/stable_noise.hpp"

namespace testsupport {

inline double empirical_cos_mean(std::span<const double> sample, double xi) {
  double s = 0.0;
  for (double x : sample) s += std::cos(xi * x);
  return s / static_cast<double>(sample.size());
}

/// Path of cumulative sums of sigma0 h^(1/alpha)-scaled standard stable draws.
inline stablelad::ObservationPath pure_stable_path(double alpha, std::size_t n, double h,
                                                   std::uint64_t seed, double sigma0 = 1.0,
                                                   double x0 = 0.0) {
  stablelad::ObservationPath path;
  path.design.n = n;
  path.design.h_n = h;
  path.design.horizon = stablelad::HorizonErgodic{};
  path.x0 = x0;
  path.values.resize(n + 1);
  path.values[0] = x0;
  const double scale = sigma0 * std::pow(h, 1.0 / alpha);
  const auto draws = stablelad::sample_standard_stable(alpha, n, seed);
  for (std::size_t k = 1; k <= n; ++k) {
    path.values[k] = path.values[k - 1] + scale * draws[k - 1];
  }
  path.provenance.source = "synthetic";
  return path;
}

inline stablelad::ObservationPath path_from_values(std::vector<double> values, double h) {
  stablelad::ObservationPath path;
  path.design.n = values.size() - 1;
  path.design.h_n = h;
  path.design.horizon = stablelad::HorizonErgodic{};
  path.x0 = values.front();
  path.values = std::move(values);
  path.provenance.source = "synthetic";
  return path;
}

/// Snaps every value to the grid 2^-26 Z so that adding dyadic trends stays
/// exact in double precision.
inline void quantize_values(std::vector<double>& values) {
  for (double& v : values) v = std::round(v * 67108864.0) / 67108864.0;
}

}  // namespace testsupport
