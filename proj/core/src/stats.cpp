#include "stablelad/stats.hpp"

#include <algorithm>
#include <cmath>

#include "stablelad/errors.hpp"
#include "stablelad/numerics.hpp"

namespace stablelad {

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double n_effective) {
  const double sq = std::sqrt(n_effective);
  return kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d);
}

}  // namespace

KsResult ks_test_standard_normal(std::span<const double> sample) {
  if (sample.size() < 2) throw ValidationError("ks_test_standard_normal: need >= 2 points");
  std::vector<double> s(sample.begin(), sample.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double cdf = normal_cdf(s[i]);
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - i / n));
  }
  return {d, ks_p_value(d, n)};
}

KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ValidationError("ks_test_two_sample: need >= 2 points");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

double mean(std::span<const double> v) {
  if (v.empty()) throw ValidationError("mean: empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  if (v.size() < 2) throw ValidationError("variance: need >= 2 points");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double median(std::vector<double> v) {
  if (v.empty()) throw ValidationError("median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace stablelad
