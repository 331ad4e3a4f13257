#pragma once

#include <span>
#include <vector>

namespace stablelad {

struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_sf(double lambda);

/// One-sample Kolmogorov-Smirnov test against the standard normal law.
KsResult ks_test_standard_normal(std::span<const double> sample);

/// Two-sample Kolmogorov-Smirnov test.
KsResult ks_test_two_sample(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> v);
double variance(std::span<const double> v);
double median(std::vector<double> v);  // by value: needs a sort

}  // namespace stablelad
