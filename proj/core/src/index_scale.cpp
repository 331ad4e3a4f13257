#include "stablelad/index_scale.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stablelad/errors.hpp"
#include "stablelad/stable_noise.hpp"

namespace stablelad {

void PowerVariationConfig::validate() const {
  if (!(rho > 0.0) || !(rho < 1.0)) {
    throw ValidationError("power-variation exponent rho must lie in (0,1)");
  }
  if (!(alpha_lo > 0.5) || !(alpha_hi < 2.0) || !(alpha_lo < alpha_hi)) {
    throw ValidationError("alpha clamp bounds must satisfy 0.5 < lo < hi < 2");
  }
  if (!(c_exponent > 0.0) || !(c_exponent < 1.0)) {
    throw ValidationError("window rate exponent must lie in (0,1)");
  }
  if (sigma_floor && !(*sigma_floor > 0.0)) {
    throw ValidationError("sigma floor must be positive when given");
  }
}

void PowerVariationConfig::validate_against(const LevyConfig& levy, bool ergodic) const {
  validate();
  double cap = std::min(1.0, levy.alpha);
  const double beta = levy.bg_index();
  if (beta > 0.0) cap = std::min(cap, beta);
  if (ergodic) {
    if (!levy.tail_index_q) {
      throw ValidationError("ergodic horizon requires a declared tail index q");
    }
    cap = std::min(cap, *levy.tail_index_q / 2.0);
  }
  if (!(rho < cap)) {
    throw ValidationError("rho = " + std::to_string(rho) +
                          " violates the cap min(1, beta, alpha, q/2) = " + std::to_string(cap));
  }
}

std::size_t PowerVariationConfig::effective_window(double h, std::size_t n) const {
  std::size_t l = window;
  if (l == 0) l = static_cast<std::size_t>(std::ceil(std::pow(h, -c_exponent)));
  if (l < 1) l = 1;
  if (n < 4 || l >= n - 2) {
    throw ValidationError("rolling window l_n = " + std::to_string(l) +
                          " too long for n = " + std::to_string(n));
  }
  if (static_cast<double>(l) * h >= 0.2) {
    throw ValidationError("rolling window violates l_n * h < 0.2");
  }
  return l;
}

std::vector<double> second_differences(const ObservationPath& path) {
  const auto& x = path.values;
  if (path.n() < 2) throw ValidationError("second differences need n >= 2");
  std::vector<double> d(path.n() - 1);
  for (std::size_t k = 2; k <= path.n(); ++k) {
    d[k - 2] = x[k] + x[k - 2] - 2.0 * x[k - 1];
  }
  return d;
}

std::vector<double> third_differences(const ObservationPath& path) {
  const auto& x = path.values;
  if (path.n() < 4) throw ValidationError("third differences need n >= 4");
  std::vector<double> d(path.n() - 3);
  for (std::size_t k = 4; k <= path.n(); ++k) {
    const double d2k = x[k] + x[k - 2] - 2.0 * x[k - 1];
    const double d2km2 = x[k - 2] + x[k - 4] - 2.0 * x[k - 3];
    d[k - 4] = d2k - d2km2;
  }
  return d;
}

namespace {

double power_sum(std::span<const double> diffs, double rho, double norm) {
  long double sum = 0.0L;
  for (double d : diffs) sum += std::pow(std::abs(d) * norm, rho);
  return static_cast<double>(sum);
}

}  // namespace

double power_variation_H1(const ObservationPath& path, double rho, double alpha_scaling) {
  const auto d2 = second_differences(path);
  const double norm = std::pow(2.0 * path.h(), -1.0 / alpha_scaling);
  return power_sum(d2, rho, norm) / static_cast<double>(d2.size());
}

double power_variation_H2(const ObservationPath& path, double rho, double alpha_scaling) {
  const auto d3 = third_differences(path);
  const double norm = std::pow(4.0 * path.h(), -1.0 / alpha_scaling);
  return power_sum(d3, rho, norm) / static_cast<double>(d3.size());
}

IndexEstimate estimate_alpha(const ObservationPath& path, const PowerVariationConfig& cfg) {
  cfg.validate();
  if (path.n() < 8) throw ValidationError("index estimation needs n >= 8");
  const auto d2 = second_differences(path);
  const auto d3 = third_differences(path);

  // normalizing by the largest |D2| makes the ratio statistic invariant to the
  // bit under power-of-two rescalings of the path and guards pow() overflow
  double norm = 0.0;
  for (double d : d2) norm = std::max(norm, std::abs(d));
  if (norm == 0.0) {
    throw EstimationError("index estimation degenerate: all second differences vanish");
  }
  const double s2 = power_sum(d2, cfg.rho, 1.0 / norm);
  const double s3 = power_sum(d3, cfg.rho, 1.0 / norm);
  if (s2 == 0.0 || s3 == 0.0) {
    throw EstimationError("index estimation degenerate: zero power-variation sum");
  }

  const double raw_ratio = (static_cast<double>(d2.size()) * s3) /
                           (static_cast<double>(d3.size()) * s2);
  const double log_ratio = std::log(raw_ratio);

  IndexEstimate est;
  if (log_ratio <= 0.0) {
    est.alpha_hat = cfg.alpha_hi;
    est.clamped = true;
  } else {
    const double a = cfg.rho * std::log(2.0) / log_ratio;
    est.alpha_hat = std::clamp(a, cfg.alpha_lo, cfg.alpha_hi);
    est.clamped = est.alpha_hat != a;
  }
  est.H1 = power_variation_H1(path, cfg.rho, est.alpha_hat);
  est.H2 = power_variation_H2(path, cfg.rho, est.alpha_hat);
  est.ratio = est.H2 / est.H1;
  return est;
}

double estimate_constant_scale(const ObservationPath& path, double rho, double alpha_hat) {
  if (!(rho < alpha_hat)) {
    throw ValidationError("constant-scale estimation requires rho < alpha_hat");
  }
  const double h1 = power_variation_H1(path, rho, alpha_hat);
  if (h1 == 0.0) throw EstimationError("constant-scale estimation degenerate: H1 = 0");
  return std::pow(h1 / stable_fractional_moment(alpha_hat, rho), 1.0 / rho);
}

std::vector<double> estimate_spot_scales(const ObservationPath& path,
                                         const PowerVariationConfig& cfg, double alpha_hat) {
  const std::size_t n = path.n();
  const double h = path.h();
  const std::size_t l = cfg.effective_window(h, n);
  if (!(cfg.rho < alpha_hat)) {
    throw ValidationError("spot-scale estimation requires rho < alpha_hat");
  }
  const double c_sigma =
      cfg.sigma_floor.value_or(0.05 * estimate_constant_scale(path, cfg.rho, alpha_hat));
  const double floor = 0.5 * c_sigma;
  const double moment = stable_fractional_moment(alpha_hat, cfg.rho);

  // |(2h)^{-1/alpha_hat} D2_j X|^rho indexed by j = 2..n at slot j-2
  const auto d2 = second_differences(path);
  const double norm = std::pow(2.0 * h, -1.0 / alpha_hat);
  std::vector<double> pw(d2.size());
  for (std::size_t i = 0; i < d2.size(); ++i) pw[i] = std::pow(std::abs(d2[i]) * norm, cfg.rho);
  std::vector<long double> prefix(pw.size() + 1, 0.0L);
  for (std::size_t i = 0; i < pw.size(); ++i) prefix[i + 1] = prefix[i] + pw[i];

  // sigma_tilde at index k-1 from the forward window j = k+1..k+l, k = 2..n-l
  std::vector<double> spot(n, floor);
  const std::size_t k_first = 2;
  const std::size_t k_last = n - l;
  double last = floor;
  for (std::size_t k = k_first; k <= k_last; ++k) {
    // window slots: j-2 for j = k+1..k+l
    const long double s = prefix[k + l - 1] - prefix[k - 1];
    const double s_hat = static_cast<double>(s) / static_cast<double>(l);
    const double tilde = std::pow(s_hat / moment, 1.0 / cfg.rho);
    last = std::max(tilde, floor);
    spot[k - 1] = last;
  }
  spot[0] = spot[1];                              // head: reuse the first window
  for (std::size_t i = k_last; i < n; ++i) spot[i] = last;  // tail: last full window
  return spot;
}

namespace {

Eigen::MatrixXd outer_grad(const DriftFamily& drift, std::span<const double> theta, double x) {
  const auto g = drift_grad_theta(drift, theta, x);
  const Eigen::Map<const Eigen::VectorXd> v(g.data(), static_cast<Eigen::Index>(g.size()));
  return v * v.transpose();
}

}  // namespace

CovarianceEstimate assemble_covariance(const ObservationPath& path,
                                       std::span<const double> theta_hat, const ModelLite& model,
                                       double alpha_hat, std::vector<double> spot_scales,
                                       double floor_value) {
  const std::size_t n = path.n();
  if (spot_scales.size() != n) {
    throw ValidationError("assemble_covariance: need one scale per increment");
  }
  const int m = drift_dim(model.drift);
  const bool fixed_horizon = !is_ergodic(path.design.horizon);

  Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t k = 1; k <= n; ++k) {
    const double x = path.values[k - 1];
    const double v = fixed_horizon ? 1.0 : weight_value(model.weight_V, x);
    const Eigen::MatrixXd f = outer_grad(model.drift, theta_hat, x);
    gamma.noalias() += (v * v) * f;
    sigma.noalias() += (v / spot_scales[k - 1]) * f;
  }
  gamma /= static_cast<double>(n);
  sigma /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  const double ev_min = es.eigenvalues().minCoeff();
  const double ev_max = es.eigenvalues().maxCoeff();
  const double cond = (ev_min > 0.0) ? ev_max / ev_min : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) {
    throw EstimationError("local identifiability failure: Sigma_hat singular (cond >= 1e12)");
  }

  CovarianceEstimate out;
  out.gamma_hat = gamma;
  out.sigma_mat_hat = sigma;
  out.phi0_hat = stable_density_at_zero(alpha_hat);
  out.sigma_cond = cond;
  out.floor_value = floor_value;
  out.spot_scales = std::move(spot_scales);

  const Eigen::MatrixXd sigma_inv = sigma.inverse();
  Eigen::MatrixXd avar =
      std::pow(2.0 * out.phi0_hat, -2.0) * sigma_inv * gamma * sigma_inv;
  out.avar_hat = 0.5 * (avar + avar.transpose());  // symmetrize roundoff
  return out;
}

CovarianceEstimate estimate_covariance(const ObservationPath& path,
                                       std::span<const double> theta_hat, const ModelLite& model,
                                       const PowerVariationConfig& cfg, double alpha_hat,
                                       ScaleMode mode) {
  cfg.validate();
  std::vector<double> scales;
  double floor = 0.0;
  if (mode == ScaleMode::SpotScale) {
    scales = estimate_spot_scales(path, cfg, alpha_hat);
    floor = 0.5 * cfg.sigma_floor.value_or(
                      0.05 * estimate_constant_scale(path, cfg.rho, alpha_hat));
  } else {
    const double s = estimate_constant_scale(path, cfg.rho, alpha_hat);
    scales.assign(path.n(), s);
  }
  return assemble_covariance(path, theta_hat, model, alpha_hat, std::move(scales), floor);
}

Eigen::MatrixXd sigma_matrix_oracle(const ObservationPath& path, std::span<const double> theta_hat,
                                    const ModelLite& model, const ScaleSpec& true_sigma) {
  const std::size_t n = path.n();
  std::vector<double> scales(n);
  for (std::size_t k = 1; k <= n; ++k) scales[k - 1] = scale_value(true_sigma, path.values[k - 1]);
  // reuse the assembly path; alpha only affects avar_hat which is discarded here
  CovarianceEstimate est =
      assemble_covariance(path, theta_hat, model, 1.5, std::move(scales), 0.0);
  return est.sigma_mat_hat;
}

}  // namespace stablelad
