#include "stablelad/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "stablelad/errors.hpp"

namespace stablelad {

double expm1_over_x(double y) {
  if (std::abs(y) < 1e-4) {
    // 1 + y/2 + y^2/6 + y^3/24 + y^4/120 + y^5/720
    return 1.0 + y * (1.0 / 2 + y * (1.0 / 6 + y * (1.0 / 24 + y * (1.0 / 120 + y / 720))));
  }
  return std::expm1(y) / y;
}

double expm1_over_x_prime(double y) {
  if (std::abs(y) < 1e-4) {
    // d/dy sum y^k/(k+1)! = 1/2 + y/3 + y^2/8 + y^3/30 + y^4/144
    return 1.0 / 2 + y * (1.0 / 3 + y * (1.0 / 8 + y * (1.0 / 30 + y / 144)));
  }
  return (std::exp(y) * (y - 1.0) + 1.0) / (y * y);
}

double signed_power(double x, double kappa) {
  if (x == 0.0) return 0.0;
  return std::copysign(std::pow(std::abs(x), kappa), x);
}

namespace {

// Kronrod 15-point nodes/weights on [-1,1] and the embedded Gauss-7 weights.
constexpr double kK15Nodes[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kK15Weights[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kG7Weights[7] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870};

struct PanelResult {
  double value;
  double error;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double k15 = 0.0;
  double g7 = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(c + half * kK15Nodes[i]);
    k15 += kK15Weights[i] * v;
    if (i % 2 == 1) g7 += kG7Weights[i / 2] * v;
  }
  k15 *= half;
  g7 *= half;
  return {k15, std::abs(k15 - g7)};
}

double integrate_rec(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol, int depth) {
  const PanelResult r = gk15(f, a, b);
  if (r.error <= std::max(abs_tol, rel_tol * std::abs(r.value)) || depth <= 0) {
    return r.value;
  }
  const double c = 0.5 * (a + b);
  return integrate_rec(f, a, c, 0.5 * abs_tol, rel_tol, depth - 1) +
         integrate_rec(f, c, b, 0.5 * abs_tol, rel_tol, depth - 1);
}

}  // namespace

double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double abs_tol, double rel_tol, int max_depth) {
  return integrate_rec(f, a, b, abs_tol, rel_tol, max_depth);
}

namespace {

// Series expansion of P(a,x), valid for x < a+1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a,x) = 1 - P(a,x), valid for x >= a+1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ValidationError("gamma_p: requires a > 0, x >= 0");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double chi_square_quantile(double p, int dof) {
  if (p <= 0.0 || p >= 1.0 || dof < 1) {
    throw ValidationError("chi_square_quantile: requires p in (0,1), dof >= 1");
  }
  const double a = 0.5 * dof;
  // Bracket then bisect on P(a, x/2) = p.
  double lo = 0.0;
  double hi = std::max(8.0, dof + 10.0 * std::sqrt(2.0 * dof));
  while (gamma_p(a, 0.5 * hi) < p) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (gamma_p(a, 0.5 * mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1e-12 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }

std::pair<double, double> fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("fit_line: need two equally sized samples of length >= 2");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  return {slope, intercept};
}

std::uint64_t fnv1a64(std::span<const char> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char b : bytes) {
    h ^= static_cast<unsigned char>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace stablelad
