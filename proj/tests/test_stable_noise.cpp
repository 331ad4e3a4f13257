#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "stablelad/errors.hpp"
#include "stablelad/numerics.hpp"
#include "stablelad/stable_noise.hpp"
#include "stablelad/stats.hpp"

using namespace stablelad;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("standard stable sampler rejects alpha outside (0,2)") {
  CHECK_THROWS_AS(sample_standard_stable(2.0, 10, 1), ValidationError);
  CHECK_THROWS_AS(sample_standard_stable(0.0, 10, 1), ValidationError);
  CHECK_THROWS_AS(sample_standard_stable(-0.3, 10, 1), ValidationError);
  CHECK_THROWS_AS(sample_standard_stable(1.5, 0, 1), ValidationError);
}

TEST_CASE("Cauchy draws are centered: median within 3 IQR / sqrt(n)") {
  const std::size_t n = 100'000;
  auto s = sample_standard_stable(1.0, n, 42);
  std::sort(s.begin(), s.end());
  const double med = 0.5 * (s[n / 2 - 1] + s[n / 2]);
  const double iqr = s[3 * n / 4] - s[n / 4];
  CHECK(std::abs(med) < 3.0 * iqr / std::sqrt(static_cast<double>(n)));
  // Cauchy IQR is 2 (quartiles at +-1)
  CHECK(iqr == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("empirical characteristic function matches exp(-|xi|^alpha)") {
  const std::size_t n = 100'000;
  const double tol = 4.0 / std::sqrt(static_cast<double>(n));
  for (double alpha : {0.8, 1.2, 1.7}) {
    const auto s = sample_standard_stable(alpha, n, 7);
    for (double xi : {0.5, 1.0, 2.0}) {
      const double expected = std::exp(-std::pow(xi, alpha));
      CHECK(std::abs(testsupport::empirical_cos_mean(s, xi) - expected) < tol);
    }
  }
  // Cauchy spot value: mean cos(Z) ~ 1/e
  const auto cauchy = sample_standard_stable(1.0, n, 11);
  CHECK(std::abs(testsupport::empirical_cos_mean(cauchy, 1.0) - std::exp(-1.0)) <
        3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("sampler is deterministic and chunk-invariant") {
  const auto a = sample_standard_stable(1.3, 64, 99);
  const auto b = sample_standard_stable(1.3, 64, 99);
  CHECK(a == b);
  // streaming generator reproduces the batch increments one by one
  LevyConfig cfg;
  cfg.alpha = 1.3;
  const auto batch = sample_noise_increments(cfg, 0.01, 32, 5);
  NoiseGenerator gen(cfg, 0.01, 5);
  for (std::size_t k = 0; k < 32; ++k) {
    CHECK(gen.at(k).total() == batch.values[k]);
  }
}

TEST_CASE("degenerate nuisance: increments equal scaled stable draws in law") {
  LevyConfig cfg;
  cfg.alpha = 1.4;
  const double h = 0.01;
  const std::size_t n = 10'000;
  const auto batch = sample_noise_increments(cfg, h, n, 21, /*keep_parts=*/true);
  REQUIRE(batch.parts.has_value());
  for (double v : batch.parts->nuisance) CHECK(v == 0.0);

  const auto ref = sample_standard_stable(1.4, n, 4202);
  std::vector<double> scaled(ref.size());
  const double s = std::pow(h, 1.0 / 1.4);
  for (std::size_t i = 0; i < ref.size(); ++i) scaled[i] = s * ref[i];
  const KsResult ks = ks_test_two_sample(batch.values, scaled);
  CHECK(ks.p_value > 0.01);
}

TEST_CASE("keep_parts decomposition sums to the undecomposed increments") {
  LevyConfig cfg;
  cfg.alpha = 1.6;
  NuisanceCompoundPoisson cp;
  cp.positive_jumps = {JumpDist::Kind::Exponential, 0.4};
  cp.rate_pos = 2.0;
  cp.negative_jumps = {JumpDist::Kind::Uniform, 0.1, 0.9};
  cp.rate_neg = 1.0;
  cfg.nuisance = cp;
  const auto with_parts = sample_noise_increments(cfg, 0.05, 5000, 77, true);
  const auto without = sample_noise_increments(cfg, 0.05, 5000, 77, false);
  REQUIRE(with_parts.parts.has_value());
  for (std::size_t k = 0; k < 5000; ++k) {
    const double sum = with_parts.parts->stable[k] + with_parts.parts->nuisance[k];
    CHECK(std::abs(sum - with_parts.values[k]) <= 1e-12 * std::abs(with_parts.values[k]));
    CHECK(with_parts.values[k] == without.values[k]);
  }
}

TEST_CASE("symmetric compound Poisson carries zero principal-value drift") {
  LevyConfig cfg;
  cfg.alpha = 1.5;
  NuisanceCompoundPoisson cp;
  cp.positive_jumps = {JumpDist::Kind::Exponential, 0.3};
  cp.rate_pos = 4.0;
  cp.negative_jumps = cp.positive_jumps;  // mirror of nu+
  cp.rate_neg = 4.0;
  cfg.nuisance = cp;
  CHECK(cfg.pv_drift() == doctest::Approx(0.0));

  const double h = 0.02;
  const std::size_t n = 100'000;
  const auto batch = sample_noise_increments(cfg, h, n, 3, true);
  double mean_nuis = 0.0;
  for (double v : batch.parts->nuisance) mean_nuis += v;
  mean_nuis /= static_cast<double>(n);
  // Var(one step) = 2 lambda h E[J^2] for the two independent streams
  const double var = 2.0 * cp.rate_pos * h * cp.positive_jumps.moment(2.0);
  CHECK(std::abs(mean_nuis) < 4.0 * std::sqrt(var / static_cast<double>(n)));
}

TEST_CASE("asymmetric compound Poisson drift matches the closed form") {
  JumpDist expo{JumpDist::Kind::Exponential, 0.5};
  // int_0^1 u e^{-u/m}/m du against quadrature
  const double quad = integrate_gk(
      [&](double u) { return u * std::exp(-u / 0.5) / 0.5; }, 0.0, 1.0, 1e-13, 1e-12);
  CHECK(expo.mean_below_one() == doctest::Approx(quad).epsilon(1e-10));

  LevyConfig cfg;
  cfg.alpha = 1.5;
  NuisanceCompoundPoisson cp;
  cp.positive_jumps = expo;
  cp.rate_pos = 2.0;
  cp.negative_jumps = {JumpDist::Kind::PointMass, 0.25};
  cp.rate_neg = 1.0;
  cfg.nuisance = cp;
  CHECK(cfg.pv_drift() ==
        doctest::Approx(2.0 * expo.mean_below_one() - 1.0 * 0.25).epsilon(1e-12));
}

TEST_CASE("tempered-tail jump frequency matches the truncated measure rate") {
  // Poisson thinning count against the closed-form rate, which itself is
  // cross-checked by quadrature of the density
  LevyConfig cfg;
  cfg.alpha = 1.5;
  NuisanceTemperedTail tt;
  tt.beta = 0.2;
  tt.beta_second = 1.5;
  tt.density_scale = 0.05;
  cfg.nuisance = tt;
  const double h = 1e-3;
  const std::size_t n = 100'000;

  NoiseGenerator gen(cfg, h, 123);
  const double eps = gen.truncation_epsilon();
  CHECK(eps == doctest::Approx(std::pow(h, 2.0 / 1.5)));

  auto density = [&](double u) {
    return tt.density_scale *
           (u <= 1.0 ? std::pow(u, -tt.beta - 1.0) : std::pow(u, -tt.beta_second - 1.0));
  };
  const double inner = integrate_gk(density, eps, 1.0, 1e-10, 1e-10);
  const double outer = integrate_gk(density, 1.0, 1e6, 1e-10, 1e-10) +
                       tt.density_scale * std::pow(1e6, -tt.beta_second) / tt.beta_second;
  const double lambda = 2.0 * (inner + outer);
  CHECK(gen.nuisance_rate() == doctest::Approx(lambda).epsilon(1e-6));

  const auto batch = sample_noise_increments(cfg, h, n, 9, true);
  std::size_t with_jump = 0;
  for (double v : batch.parts->nuisance) with_jump += (v != 0.0);
  const double p = 1.0 - std::exp(-lambda * h);
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  CHECK(std::abs(static_cast<double>(with_jump) - p * static_cast<double>(n)) < 4.0 * sd);

  // streaming access in arbitrary order reproduces the batch bit-for-bit
  NoiseGenerator replay(cfg, h, 9);
  for (std::size_t k : {std::size_t{17}, std::size_t{3}, std::size_t{99'999}, std::size_t{0}}) {
    CHECK(replay.at(k).total() == batch.values[k]);
  }
}

TEST_CASE("noise increment batch rejects bad arguments") {
  LevyConfig cfg;
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(sample_noise_increments(cfg, 0.0, 10, 1), ValidationError);
  CHECK_THROWS_AS(sample_noise_increments(cfg, -1.0, 10, 1), ValidationError);
  CHECK_THROWS_AS(sample_noise_increments(cfg, 0.1, 0, 1), ValidationError);
}

TEST_CASE("config validation enforces beta < alpha/2 and moment caps") {
  LevyConfig cfg;
  cfg.alpha = 1.5;
  NuisanceTemperedTail tt;
  tt.beta = 0.8;  // >= alpha/2
  cfg.nuisance = tt;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  tt.beta = 0.2;
  cfg.nuisance = tt;
  CHECK_NOTHROW(cfg.validate());

  cfg.tail_index_q = 1.6;  // >= alpha
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.tail_index_q = 1.4;
  CHECK_NOTHROW(cfg.validate());
  cfg.tail_index_q = 1.55;  // < alpha but >= beta''
  tt.beta_second = 1.5;
  cfg.nuisance = tt;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("stable density at zero") {
  CHECK(stable_density_at_zero(1.0) == doctest::Approx(1.0 / kPi).epsilon(1e-12));
  CHECK(stable_density_at_zero(0.5) == doctest::Approx(2.0 / kPi).epsilon(1e-12));
  CHECK_THROWS_AS(stable_density_at_zero(2.0), ValidationError);

  for (double alpha : {0.6, 1.5, 1.9}) {
    const double r_cut = std::pow(36.8, 1.0 / alpha);
    const double quad =
        integrate_gk([alpha](double t) { return std::exp(-std::pow(t, alpha)); }, 0.0, r_cut,
                     1e-12, 1e-12) /
        kPi;
    CHECK(stable_density_at_zero(alpha) == doctest::Approx(quad).epsilon(1e-8));
    // lgamma route consistency
    CHECK(stable_density_at_zero(alpha) * kPi ==
          doctest::Approx(std::exp(std::lgamma(1.0 + 1.0 / alpha))).epsilon(1e-12));
  }
}

TEST_CASE("fractional moments: Cauchy closed form, Monte Carlo, domain") {
  CHECK(stable_fractional_moment(1.0, 0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK_THROWS_AS(stable_fractional_moment(1.5, 1.5), ValidationError);
  CHECK_THROWS_AS(stable_fractional_moment(1.5, 1.7), ValidationError);
  CHECK_THROWS_AS(stable_fractional_moment(1.5, 0.0), ValidationError);
  CHECK_THROWS_AS(stable_fractional_moment(1.5, -0.2), ValidationError);

  const std::size_t n = 1'000'000;
  const auto s = sample_standard_stable(1.5, n, 2024);
  double mean = 0.0, mean2 = 0.0;
  for (double x : s) {
    const double p = std::pow(std::abs(x), 0.4);
    mean += p;
    mean2 += p * p;
  }
  mean /= static_cast<double>(n);
  mean2 /= static_cast<double>(n);
  const double se = std::sqrt((mean2 - mean * mean) / static_cast<double>(n));
  CHECK(std::abs(mean - stable_fractional_moment(1.5, 0.4)) < 3.0 * se);
}

TEST_CASE("nuisance difference process: small-time moment decay rate") {
  // E |h^(-1/alpha) Z_h^nuis|^rho should vanish like h^delta with
  // delta = min(1 - rho/alpha, rho/gamma - rho/alpha), gamma -> beta, for
  // rho < beta; fit the decay exponent over a dyadic h grid
  LevyConfig cfg;
  cfg.alpha = 1.5;
  NuisanceTemperedTail tt;
  tt.beta = 0.2;
  tt.beta_second = 1.5;
  tt.density_scale = 0.1;
  cfg.nuisance = tt;
  const double rho = 0.15;
  const double delta_theory =
      std::min(1.0 - rho / cfg.alpha, rho / tt.beta - rho / cfg.alpha);

  std::vector<double> log_h, log_moment;
  for (int k = 4; k <= 10; ++k) {
    const double h = std::pow(2.0, -k);
    const std::size_t n = 40'000;
    const auto batch = sample_noise_increments(cfg, h, n, 1000 + k, true);
    double moment = 0.0;
    const double norm = std::pow(h, -1.0 / cfg.alpha);
    for (double v : batch.parts->nuisance) moment += std::pow(std::abs(v) * norm, rho);
    moment /= static_cast<double>(n);
    log_h.push_back(std::log(h));
    log_moment.push_back(std::log(moment));
  }
  const auto [slope, intercept] = fit_line(log_h, log_moment);
  CHECK(slope > delta_theory - 0.15);
}

TEST_CASE("fractional moment is continuous in alpha") {
  for (double alpha = 0.55; alpha < 1.95; alpha += 0.05) {
    const double d =
        std::abs(stable_fractional_moment(alpha + 1e-6, 0.25) - stable_fractional_moment(alpha, 0.25));
    CHECK(d < 1e-4);
  }
}
