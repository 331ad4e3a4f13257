#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>

namespace stablelad {

/// psi(y) = (e^y - 1)/y with the removable singularity at 0; Taylor series
/// below |y| = 1e-4 to avoid cancellation.
double expm1_over_x(double y);

/// Derivative of expm1_over_x.
double expm1_over_x_prime(double y);

/// x^<kappa> = |x|^kappa * sgn(x).
double signed_power(double x, double kappa);

/// Adaptive Gauss-Kronrod (G7,K15) quadrature on [a,b].
/// Bisection until the K15-G7 error estimate is below
/// max(abs_tol, rel_tol * |integral|) on each panel.
double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double abs_tol = 1e-12, double rel_tol = 1e-10, int max_depth = 30);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Quantile of the chi-square distribution with dof degrees of freedom.
double chi_square_quantile(double p, int dof);

/// Standard normal CDF.
double normal_cdf(double x);

/// Ordinary least squares fit y ~ intercept + slope * x; returns {slope, intercept}.
std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y);

/// FNV-1a 64-bit hash (content fingerprints for provenance fields).
std::uint64_t fnv1a64(std::span<const char> bytes);

}  // namespace stablelad
