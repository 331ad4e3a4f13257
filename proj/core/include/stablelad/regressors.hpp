#pragma once

#include <span>
#include <vector>

#include "stablelad/sde_sim.hpp"

namespace stablelad {

enum class RegressorKind { Euler, ImprovedEuler, ExactLinear, ExactBernoulli };

const char* regressor_name(RegressorKind kind);

/// Pairing rules: ExactLinear only with the linear drift, ExactBernoulli only
/// with the Bernoulli drift, ImprovedEuler only when d/dx a is available.
void validate_regressor_pair(RegressorKind kind, const DriftFamily& drift);

struct RegressorEval {
  double value = 0.0;
  std::vector<double> grad_theta;
};

/// F_h(theta; x) for one step of width h.
double regressor_value(RegressorKind kind, const DriftFamily& drift,
                       std::span<const double> theta, double x, double h);

/// F_h(theta; x) together with its closed-form theta-gradient.
RegressorEval regressor(RegressorKind kind, const DriftFamily& drift,
                        std::span<const double> theta, double x, double h);

/// Weight exponent p of the envelope W(x) = C (1 + |x|^p) declared by each
/// regressor family (bookkeeping for weight validation).
double regressor_weight_exponent(RegressorKind kind);

/// High-accuracy solution f_t(theta; x) of df = a(theta; f) dt via an adaptive
/// embedded Runge-Kutta pair (Cash-Karp 4(5)); test oracle only.
double ode_flow_oracle(const DriftFamily& drift, std::span<const double> theta, double x,
                       double t, double tol);

struct OrderFitReport {
  double slope = 0.0;       // fitted log-log order of |F_h - f_h| in h
  double intercept = 0.0;
  double max_abs_error = 0.0;
  std::vector<double> h_grid;
  std::vector<double> errors;
};

/// Fits |F_h - f_h(oracle)| ~ C h^slope over a geometric h grid. Grid points
/// whose error is below 10x the oracle tolerance are excluded from the fit
/// (exact regressors would otherwise regress on noise).
OrderFitReport verify_regressor_order(RegressorKind kind, const DriftFamily& drift,
                                      std::span<const double> theta, double x,
                                      std::span<const double> h_grid, double oracle_tol = 1e-12);

}  // namespace stablelad
