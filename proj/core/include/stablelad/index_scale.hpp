#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "stablelad/lad.hpp"
#include "stablelad/sde_sim.hpp"

namespace stablelad {

struct PowerVariationConfig {
  double rho = 0.25;
  double alpha_lo = 0.55;  // clamp bounds for alpha_hat; the theory needs alpha > 1/2
  double alpha_hi = 1.95;
  std::size_t window = 0;     // rolling-window length l_n; 0 selects ceil(h^(-c_exponent))
  double c_exponent = 0.5;    // window rate c in l_n >~ h^(-c)
  std::optional<double> sigma_floor;  // c_sigma; the floor applied is c_sigma / 2

  void validate() const;
  /// Checks rho against the caps implied by the declared noise configuration:
  /// rho < min(1, beta cap, alpha, q/2 when ergodic).
  void validate_against(const LevyConfig& levy, bool ergodic) const;
  /// l_n: the configured value, or ceil(h^(-c_exponent)); must satisfy
  /// l_n h < 0.2 and l_n <= n - 3.
  std::size_t effective_window(double h, std::size_t n) const;
};

struct IndexEstimate {
  double alpha_hat = 0.0;
  double H1 = 0.0;     // normalized second-difference power variation at alpha_hat
  double H2 = 0.0;     // third-difference counterpart
  double ratio = 0.0;  // H2 / H1
  bool clamped = false;
};

/// Second-order differences X_k + X_{k-2} - 2 X_{k-1}, k = 2..n (length n-1).
std::vector<double> second_differences(const ObservationPath& path);

/// Third-order differences with one lag, D2_k - D2_{k-2}, k = 4..n (length n-3).
std::vector<double> third_differences(const ObservationPath& path);

/// H_{1,n}(rho) = (n-1)^{-1} sum |(2h)^{-1/alpha} D2_k X|^rho.
double power_variation_H1(const ObservationPath& path, double rho, double alpha_scaling);

/// H_{2,n}(rho) = (n-3)^{-1} sum |(4h)^{-1/alpha} (D2_k - D2_{k-2}) X|^rho.
double power_variation_H2(const ObservationPath& path, double rho, double alpha_scaling);

/// alpha_hat = rho log 2 / log( (n-1) sum |D3|^rho / ((n-3) sum |D2|^rho) ),
/// clamped into [alpha_lo, alpha_hi]. Scale-free: differences are normalized
/// by their maximum magnitude before powering, so rescaling the path by a
/// power of two reproduces alpha_hat bit-for-bit.
IndexEstimate estimate_alpha(const ObservationPath& path, const PowerVariationConfig& cfg);

/// Constant-scale estimate (H1_n(rho) / m_{alpha_hat}(rho))^(1/rho).
double estimate_constant_scale(const ObservationPath& path, double rho, double alpha_hat);

/// Rolling-window spot scales sigma_hat_{k-1}(rho), k-1 = 0..n-1. The window
/// for index k-1 is the forward block j = k+1..k+l_n; indices outside
/// [1, n - l_n - 1] reuse the nearest computed window. All values are floored
/// at c_sigma/2 (c_sigma defaults to 0.05 x the constant-scale estimate).
std::vector<double> estimate_spot_scales(const ObservationPath& path,
                                         const PowerVariationConfig& cfg, double alpha_hat);

enum class ScaleMode { ConstantScale, SpotScale };

struct CovarianceEstimate {
  Eigen::MatrixXd gamma_hat;      // n^{-1} sum V^2 f_hat
  Eigen::MatrixXd sigma_mat_hat;  // n^{-1} sum (V / sigma_hat) f_hat
  Eigen::MatrixXd avar_hat;       // (2 phi_{alpha_hat}(0))^{-2} Sigma^{-1} Gamma Sigma^{-1}
  double phi0_hat = 0.0;
  double sigma_cond = 0.0;        // condition number of sigma_mat_hat
  double floor_value = 0.0;       // c_sigma / 2 actually applied
  std::vector<double> spot_scales;
};

/// Assembles the plug-in covariance from caller-provided per-index scales
/// (the test seam for oracle scales and for forcing sigma == 1). Under a
/// fixed horizon the weight V is taken == 1 regardless of the model weight.
CovarianceEstimate assemble_covariance(const ObservationPath& path,
                                       std::span<const double> theta_hat, const ModelLite& model,
                                       double alpha_hat, std::vector<double> spot_scales,
                                       double floor_value = 0.0);

/// Full plug-in: spot scales (SpotScale) or the constant-scale estimate
/// broadcast to every index (ConstantScale), then assemble_covariance.
CovarianceEstimate estimate_covariance(const ObservationPath& path,
                                       std::span<const double> theta_hat, const ModelLite& model,
                                       const PowerVariationConfig& cfg, double alpha_hat,
                                       ScaleMode mode);

/// Oracle Sigma*_n built from the true scale function (diagnostics / tests).
Eigen::MatrixXd sigma_matrix_oracle(const ObservationPath& path, std::span<const double> theta_hat,
                                    const ModelLite& model, const ScaleSpec& true_sigma);

}  // namespace stablelad
