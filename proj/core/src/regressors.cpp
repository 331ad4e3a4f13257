#include "stablelad/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stablelad/errors.hpp"
#include "stablelad/numerics.hpp"

namespace stablelad {

const char* regressor_name(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::Euler:
      return "euler";
    case RegressorKind::ImprovedEuler:
      return "improved_euler";
    case RegressorKind::ExactLinear:
      return "exact_linear";
    case RegressorKind::ExactBernoulli:
      return "exact_bernoulli";
  }
  return "?";
}

void validate_regressor_pair(RegressorKind kind, const DriftFamily& drift) {
  switch (kind) {
    case RegressorKind::Euler:
      return;
    case RegressorKind::ImprovedEuler:
      if (!drift_has_dx(drift)) {
        throw ValidationError("improved Euler regressor requires d/dx a(theta;x)");
      }
      return;
    case RegressorKind::ExactLinear:
      if (!std::holds_alternative<LinearDrift>(drift)) {
        throw ValidationError("exact-linear regressor pairs only with the linear drift");
      }
      return;
    case RegressorKind::ExactBernoulli:
      if (!std::holds_alternative<BernoulliDrift>(drift)) {
        throw ValidationError("exact-Bernoulli regressor pairs only with the Bernoulli drift");
      }
      if (!(std::get<BernoulliDrift>(drift).kappa < 1.0)) {
        throw ValidationError("exact-Bernoulli regressor requires kappa < 1");
      }
      return;
  }
}

namespace {

double exact_linear_value(std::span<const double> theta, double x, double h) {
  const double y = theta[1] * h;
  return std::exp(y) * x + theta[0] * h * expm1_over_x(y);
}

// F = (e^{c th2 h} |x|^c + c th1 h psi(c th2 h))_+^{1/c} sgn(x), c = 1 - kappa.
// The displayed closed-form branch is followed literally, so sgn(0) = 0.
double exact_bernoulli_value(double kappa, std::span<const double> theta, double x, double h) {
  if (x == 0.0) return 0.0;
  const double c = 1.0 - kappa;
  const double y = c * theta[1] * h;
  const double g = std::exp(y) * std::pow(std::abs(x), c) + c * theta[0] * h * expm1_over_x(y);
  if (g <= 0.0) return 0.0;
  return std::copysign(std::pow(g, 1.0 / c), x);
}

}  // namespace

double regressor_value(RegressorKind kind, const DriftFamily& drift,
                       std::span<const double> theta, double x, double h) {
  switch (kind) {
    case RegressorKind::Euler:
      return x + h * drift_value(drift, theta, x);
    case RegressorKind::ImprovedEuler: {
      const double a = drift_value(drift, theta, x);
      return x + h * a + 0.5 * h * h * a * drift_dx(drift, theta, x);
    }
    case RegressorKind::ExactLinear:
      return exact_linear_value(theta, x, h);
    case RegressorKind::ExactBernoulli:
      return exact_bernoulli_value(std::get<BernoulliDrift>(drift).kappa, theta, x, h);
  }
  return 0.0;
}

RegressorEval regressor(RegressorKind kind, const DriftFamily& drift,
                        std::span<const double> theta, double x, double h) {
  if (!(h > 0.0)) throw ValidationError("regressor requires h > 0");
  validate_regressor_pair(kind, drift);

  RegressorEval ev;
  ev.value = regressor_value(kind, drift, theta, x, h);

  switch (kind) {
    case RegressorKind::Euler: {
      ev.grad_theta = drift_grad_theta(drift, theta, x);
      for (double& g : ev.grad_theta) g *= h;
      break;
    }
    case RegressorKind::ImprovedEuler: {
      const double a = drift_value(drift, theta, x);
      const double ax = drift_dx(drift, theta, x);
      std::vector<double> ga = drift_grad_theta(drift, theta, x);
      std::vector<double> gax;
      if (std::holds_alternative<LinearDrift>(drift)) {
        gax = {0.0, 1.0};
      } else if (const auto* b = std::get_if<BernoulliDrift>(&drift)) {
        gax = {x == 0.0 ? 0.0 : b->kappa * std::pow(std::abs(x), b->kappa - 1.0), 1.0};
      } else {
        // central differences of d/dx a in theta for custom drifts
        gax.resize(theta.size());
        std::vector<double> tp(theta.begin(), theta.end());
        for (std::size_t i = 0; i < theta.size(); ++i) {
          const double step = 1e-6 * (1.0 + std::abs(theta[i]));
          tp[i] = theta[i] + step;
          const double up = drift_dx(drift, tp, x);
          tp[i] = theta[i] - step;
          const double dn = drift_dx(drift, tp, x);
          tp[i] = theta[i];
          gax[i] = (up - dn) / (2.0 * step);
        }
      }
      ev.grad_theta.resize(theta.size());
      for (std::size_t i = 0; i < theta.size(); ++i) {
        ev.grad_theta[i] = h * ga[i] + 0.5 * h * h * (ga[i] * ax + a * gax[i]);
      }
      break;
    }
    case RegressorKind::ExactLinear: {
      const double y = theta[1] * h;
      ev.grad_theta = {h * expm1_over_x(y),
                       h * std::exp(y) * x + theta[0] * h * h * expm1_over_x_prime(y)};
      break;
    }
    case RegressorKind::ExactBernoulli: {
      const double kappa = std::get<BernoulliDrift>(drift).kappa;
      const double c = 1.0 - kappa;
      const double y = c * theta[1] * h;
      const double g = std::exp(y) * std::pow(std::abs(x), c) + c * theta[0] * h * expm1_over_x(y);
      if (x == 0.0 || g <= 0.0) {
        ev.grad_theta = {0.0, 0.0};  // clamped branch
      } else {
        const double outer = std::pow(g, 1.0 / c - 1.0);
        const double sg = x > 0.0 ? 1.0 : -1.0;
        const double dg1 = h * expm1_over_x(y);  // dG/dtheta1 net of the 1/c outer factor
        const double dg2 = h * std::exp(y) * std::pow(std::abs(x), c) +
                           c * theta[0] * h * h * expm1_over_x_prime(y);
        ev.grad_theta = {sg * outer * dg1, sg * outer * dg2};
      }
      break;
    }
  }
  return ev;
}

double regressor_weight_exponent(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::Euler:
    case RegressorKind::ImprovedEuler:
      return 2.0;
    case RegressorKind::ExactLinear:
    case RegressorKind::ExactBernoulli:
      return 1.0;
  }
  return 2.0;
}

// ---------------------------------------------------------------------------
// ODE flow oracle: adaptive Cash-Karp RK4(5)

double ode_flow_oracle(const DriftFamily& drift, std::span<const double> theta, double x,
                       double t, double tol) {
  if (!(tol > 0.0)) throw ValidationError("ode_flow_oracle requires tol > 0");
  if (t < 0.0 || t > 1.0) throw ValidationError("ode_flow_oracle requires t in [0,1]");
  if (t == 0.0) return x;

  // Cash-Karp tableau
  static constexpr double b21 = 1.0 / 5;
  static constexpr double b31 = 3.0 / 40, b32 = 9.0 / 40;
  static constexpr double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
  static constexpr double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27, b54 = 35.0 / 27;
  static constexpr double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                          b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
  static constexpr double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594, c6 = 512.0 / 1771;
  static constexpr double d1 = c1 - 2825.0 / 27648, d3 = c3 - 18575.0 / 48384,
                          d4 = c4 - 13525.0 / 55296, d5 = -277.0 / 14336, d6 = c6 - 0.25;

  auto f = [&](double y) { return drift_value(drift, theta, y); };

  double y = x;
  double s = 0.0;
  double hstep = t;
  const double h_min = 1e-14;
  int evals = 0;
  while (s < t) {
    hstep = std::min(hstep, t - s);
    const double k1 = f(y);
    const double k2 = f(y + hstep * b21 * k1);
    const double k3 = f(y + hstep * (b31 * k1 + b32 * k2));
    const double k4 = f(y + hstep * (b41 * k1 + b42 * k2 + b43 * k3));
    const double k5 = f(y + hstep * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4));
    const double k6 = f(y + hstep * (b61 * k1 + b62 * k2 + b63 * k3 + b64 * k4 + b65 * k5));
    const double dy = hstep * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
    const double err = std::abs(hstep * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6));
    const double scale = tol * (1.0 + std::abs(y));
    if (err <= scale || hstep <= h_min) {
      if (hstep <= h_min && err > scale) {
        throw SimulationError("ode_flow_oracle: step-size underflow (non-Lipschitz drift?)");
      }
      s += hstep;
      y += dy;
    }
    const double grow = err > 0.0 ? 0.9 * std::pow(scale / err, 0.2) : 5.0;
    hstep *= std::clamp(grow, 0.1, 5.0);
    hstep = std::max(hstep, h_min);
    if (++evals > 2'000'000) {
      throw SimulationError("ode_flow_oracle: too many steps");
    }
  }
  return y;
}

OrderFitReport verify_regressor_order(RegressorKind kind, const DriftFamily& drift,
                                      std::span<const double> theta, double x,
                                      std::span<const double> h_grid, double oracle_tol) {
  validate_regressor_pair(kind, drift);
  OrderFitReport report;
  std::vector<double> log_h, log_err;
  for (double h : h_grid) {
    const double fh = regressor_value(kind, drift, theta, x, h);
    const double flow = ode_flow_oracle(drift, theta, x, h, oracle_tol);
    const double err = std::abs(fh - flow);
    report.h_grid.push_back(h);
    report.errors.push_back(err);
    report.max_abs_error = std::max(report.max_abs_error, err);
    if (err > 10.0 * oracle_tol) {
      log_h.push_back(std::log(h));
      log_err.push_back(std::log(err));
    }
  }
  if (log_h.size() >= 2) {
    const auto [slope, intercept] = fit_line(log_h, log_err);
    report.slope = slope;
    report.intercept = intercept;
  }
  return report;
}

}  // namespace stablelad
