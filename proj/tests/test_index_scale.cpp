#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "stablelad/errors.hpp"
#include "stablelad/index_scale.hpp"
#include "stablelad/rng.hpp"
#include "stablelad/sde_sim.hpp"
#include "stablelad/stable_noise.hpp"
#include "stablelad/stats.hpp"

using namespace stablelad;
using testsupport::path_from_values;
using testsupport::pure_stable_path;

TEST_CASE("difference operators: hand values and drift annihilation") {
  // linear-in-time path: second differences vanish
  std::vector<double> lin(12);
  for (std::size_t k = 0; k < lin.size(); ++k) lin[k] = 3.0 * static_cast<double>(k);
  auto pl = path_from_values(lin, 0.1);
  for (double v : second_differences(pl)) CHECK(v == 0.0);
  for (double v : third_differences(pl)) CHECK(v == 0.0);

  // quadratic path: constant second differences, vanishing third differences
  std::vector<double> quad(12);
  for (std::size_t k = 0; k < quad.size(); ++k) quad[k] = static_cast<double>(k * k);
  auto pq = path_from_values(quad, 0.1);
  for (double v : second_differences(pq)) CHECK(v == 2.0);
  for (double v : third_differences(pq)) CHECK(v == 0.0);

  auto p3 = path_from_values({0.0, 1.0, 0.0}, 1.0);
  const auto d2 = second_differences(p3);
  REQUIRE(d2.size() == 1);
  CHECK(d2[0] == -2.0);

  // lag-2 third difference of a period-2 path vanishes
  auto p5 = path_from_values({0.0, 1.0, 0.0, 1.0, 0.0}, 1.0);
  const auto d3 = third_differences(p5);
  REQUIRE(d3.size() == 1);
  CHECK(d3[0] == 0.0);

  CHECK_THROWS_AS(second_differences(path_from_values({0.0, 1.0}, 1.0)), ValidationError);
  CHECK_THROWS_AS(third_differences(path_from_values({0.0, 1.0, 2.0, 3.0}, 1.0)),
                  ValidationError);
}

TEST_CASE("power variation H1: degenerate, homogeneity, Monte Carlo value") {
  std::vector<double> zeros(64, 1.5);  // constant path, zero differences
  CHECK(power_variation_H1(path_from_values(zeros, 0.1), 0.3, 1.5) == 0.0);

  const auto path = pure_stable_path(1.5, 2000, 0.01, 3);
  const double h1 = power_variation_H1(path, 0.3, 1.5);
  std::vector<double> scaled = path.values;
  for (double& v : scaled) v *= 5.0;
  const double h1s = power_variation_H1(path_from_values(scaled, 0.01), 0.3, 1.5);
  CHECK(h1s == doctest::Approx(std::pow(5.0, 0.3) * h1).epsilon(1e-10));

  // E |(2h)^{-1/alpha} D2 X|^rho = m_alpha(rho) for pure stable increments
  const std::size_t n = 100'000;
  const double rho = 0.25, alpha = 1.5;
  const auto big = pure_stable_path(alpha, n, 1e-3, 8);
  const double expected = stable_fractional_moment(alpha, rho);
  // standard error of the mean of |.|^rho terms
  const double var = stable_fractional_moment(alpha, 2 * rho) - expected * expected;
  const double se = std::sqrt(var / static_cast<double>(n - 1));
  CHECK(std::abs(power_variation_H1(big, rho, alpha) - expected) < 4.0 * se);
}

TEST_CASE("normalization cancellation between two alpha scalings") {
  const auto path = pure_stable_path(1.4, 500, 0.01, 9);
  const double rho = 0.3;
  const double a1 = 1.2, a2 = 1.8;
  const double h1 = power_variation_H1(path, rho, a1);
  const double h2 = power_variation_H1(path, rho, a2);
  const double factor = std::pow(2.0 * path.h(), rho / a2 - rho / a1);
  CHECK(h1 / h2 == doctest::Approx(factor).epsilon(1e-12));
}

TEST_CASE("alpha estimator: accuracy on pure stable increments") {
  PowerVariationConfig cfg;
  cfg.rho = 0.3;
  std::size_t hits = 0;
  const std::size_t trials = 20;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    const auto path = pure_stable_path(1.5, 100'000, 1e-3, 1000 + seed);
    const auto est = estimate_alpha(path, cfg);
    if (std::abs(est.alpha_hat - 1.5) < 0.1) ++hits;
    CHECK_FALSE(est.clamped);
    CHECK(est.ratio == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(hits == trials);
}

TEST_CASE("alpha estimator: exact scale invariance for dyadic factors") {
  PowerVariationConfig cfg;
  cfg.rho = 0.3;
  const auto path = pure_stable_path(1.3, 5000, 1e-3, 42);
  const auto base = estimate_alpha(path, cfg);
  for (double c : {0.0009765625, 4.0, 1024.0}) {
    std::vector<double> scaled = path.values;
    for (double& v : scaled) v *= c;
    const auto est = estimate_alpha(path_from_values(scaled, path.h()), cfg);
    CHECK(est.alpha_hat == base.alpha_hat);  // bit-identical
  }
  // non-dyadic factors agree to roundoff
  std::vector<double> scaled = path.values;
  for (double& v : scaled) v *= 3.0;
  const auto est3 = estimate_alpha(path_from_values(scaled, path.h()), cfg);
  CHECK(est3.alpha_hat == doctest::Approx(base.alpha_hat).epsilon(1e-12));
}

TEST_CASE("alpha estimator: linear trends cancel exactly on a dyadic grid") {
  PowerVariationConfig cfg;
  cfg.rho = 0.3;
  auto path = pure_stable_path(1.6, 4096, 0.0009765625, 77);  // h = 2^-10
  testsupport::quantize_values(path.values);
  const auto base = estimate_alpha(path, cfg);

  std::vector<double> trended = path.values;
  for (std::size_t k = 0; k < trended.size(); ++k) {
    trended[k] += 0.75 * (static_cast<double>(k) * path.h());  // dyadic trend step
  }
  const auto est = estimate_alpha(path_from_values(trended, path.h()), cfg);
  CHECK(est.alpha_hat == base.alpha_hat);  // drift-robust to the bit
}

TEST_CASE("alpha estimator: Gaussian increments clamp at the upper bound") {
  PowerVariationConfig cfg;
  cfg.rho = 0.3;
  SplitMix64 rng(5);
  std::vector<double> values(20001, 0.0);
  for (std::size_t k = 1; k < values.size(); ++k) {
    values[k] = values[k - 1] + 0.01 * rng.normal();
  }
  const auto est = estimate_alpha(path_from_values(values, 1e-3), cfg);
  CHECK(est.clamped);
  CHECK(est.alpha_hat == cfg.alpha_hi);
}

TEST_CASE("alpha estimator rejects degenerate inputs") {
  PowerVariationConfig cfg;
  std::vector<double> flat(64, 2.0);
  CHECK_THROWS_AS(estimate_alpha(path_from_values(flat, 0.1), cfg), EstimationError);
  std::vector<double> tiny{0, 1, 0, 1, 0, 1, 0};
  CHECK_THROWS_AS(estimate_alpha(path_from_values(tiny, 0.1), cfg), ValidationError);
}

TEST_CASE("constant scale estimator") {
  const double alpha = 1.5, rho = 0.25, sigma0 = 2.0;
  const auto path = pure_stable_path(alpha, 100'000, 1e-3, 12, sigma0);
  const double s = estimate_constant_scale(path, rho, alpha);
  CHECK(s > 0.9 * sigma0);
  CHECK(s < 1.1 * sigma0);

  // homogeneity of degree one
  std::vector<double> scaled = path.values;
  for (double& v : scaled) v *= 3.0;
  const double s3 = estimate_constant_scale(path_from_values(scaled, path.h()), rho, alpha);
  CHECK(s3 == doctest::Approx(3.0 * s).epsilon(1e-9));

  CHECK_THROWS_AS(estimate_constant_scale(path, 1.6, 1.5), ValidationError);
}

TEST_CASE("spot scales: floor behaviour on a frozen window") {
  // first half frozen (zero increments), second half live stable noise
  const std::size_t n = 512;
  const double h = 1e-3;
  auto live = pure_stable_path(1.5, n, h, 9);
  std::vector<double> values(n + 1, 0.0);
  for (std::size_t k = n / 2; k <= n; ++k) {
    values[k] = live.values[k] - live.values[n / 2];
  }
  PowerVariationConfig cfg;
  cfg.rho = 0.25;
  cfg.window = 16;
  cfg.sigma_floor = 0.1;
  const auto spots = estimate_spot_scales(path_from_values(values, h), cfg, 1.5);
  REQUIRE(spots.size() == n);
  // windows fully inside the frozen half sit exactly at the floor c_sigma / 2
  for (std::size_t i = 4; i + cfg.window + 4 < n / 2; ++i) {
    CHECK(spots[i] == 0.05);
  }
  for (double s : spots) CHECK(s >= 0.05);
}

TEST_CASE("spot scales: track a state-dependent scale function") {
  ModelSpec m;
  m.drift = LinearDrift{};
  m.theta0 = {0.0, -1.0};
  m.sigma = ScaleSinusoidal{1.0, 0.5};
  m.weight_V = WeightPolyDecay{2.0};
  m.theta_domain = {{-5, -5}, {5, 5}};
  m.levy.alpha = 1.5;
  m.levy.tail_index_q = 1.2;

  const std::size_t n = 100'000;
  const double h = std::pow(static_cast<double>(n), -0.75);
  SamplingDesign d{n, h, HorizonErgodic{}, 0.55};
  const auto path = simulate_path(m, d, 8, 31);

  PowerVariationConfig cfg;
  cfg.rho = 0.25;
  const auto spots = estimate_spot_scales(path, cfg, 1.5);
  double mae = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    mae += std::abs(spots[k - 1] - scale_value(m.sigma, path.values[k - 1]));
  }
  mae /= static_cast<double>(n);
  CHECK(mae < 0.15);
}

TEST_CASE("spot scales: window validation") {
  const auto path = pure_stable_path(1.5, 64, 1e-3, 3);
  PowerVariationConfig cfg;
  cfg.window = 63;
  CHECK_THROWS_AS(estimate_spot_scales(path, cfg, 1.5), ValidationError);
  cfg.window = 16;
  cfg.rho = 0.25;
  CHECK_NOTHROW(estimate_spot_scales(path, cfg, 1.5));
}

TEST_CASE("rho caps validate against the declared noise") {
  PowerVariationConfig cfg;
  cfg.rho = 0.8;
  LevyConfig levy;
  levy.alpha = 1.8;
  NuisanceTemperedTail tt;
  tt.beta = 0.5;
  tt.beta_second = 2.5;
  levy.nuisance = tt;
  CHECK_THROWS_AS(cfg.validate_against(levy, false), ValidationError);  // rho >= beta
  cfg.rho = 0.4;
  CHECK_NOTHROW(cfg.validate_against(levy, false));
  levy.tail_index_q = 0.7;
  CHECK_THROWS_AS(cfg.validate_against(levy, true), ValidationError);  // rho >= q/2
  cfg.rho = 0.3;
  CHECK_NOTHROW(cfg.validate_against(levy, true));
}

TEST_CASE("covariance: hand formula for the linear drift") {
  // f(x) = [[1, x], [x, x^2]]; Gamma = mean of V^2 f over left endpoints
  std::vector<double> values{0.0, 1.0, -1.0, 2.0, 0.5, -0.25, 0.75, 1.5, -2.0, 0.1, 0.6};
  auto path = path_from_values(values, 0.1);
  path.design.horizon = HorizonErgodic{};
  ModelLite lite{LinearDrift{}, WeightPolyDecay{1.0}, ThetaBox{{-5, -5}, {5, 5}}};
  std::vector<double> theta{0.3, -0.4};
  std::vector<double> ones(path.n(), 1.0);
  const auto est = assemble_covariance(path, theta, lite, 1.5, ones);

  const std::size_t n = path.n();
  double g11 = 0, g12 = 0, g22 = 0, s11 = 0, s12 = 0, s22 = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double x = values[k];
    const double v = std::pow(1.0 + std::abs(x), -1.0);
    g11 += v * v;
    g12 += v * v * x;
    g22 += v * v * x * x;
    s11 += v;
    s12 += v * x;
    s22 += v * x * x;
  }
  CHECK(est.gamma_hat(0, 0) == doctest::Approx(g11 / n).epsilon(1e-12));
  CHECK(est.gamma_hat(0, 1) == doctest::Approx(g12 / n).epsilon(1e-12));
  CHECK(est.gamma_hat(1, 1) == doctest::Approx(g22 / n).epsilon(1e-12));
  CHECK(est.sigma_mat_hat(0, 0) == doctest::Approx(s11 / n).epsilon(1e-12));
  CHECK(est.sigma_mat_hat(0, 1) == doctest::Approx(s12 / n).epsilon(1e-12));
  CHECK(est.sigma_mat_hat(1, 1) == doctest::Approx(s22 / n).epsilon(1e-12));
}

TEST_CASE("covariance: sigma == 1 and V == 1 collapse avar to Gamma inverse") {
  auto path = pure_stable_path(1.5, 256, 0.01, 21);
  path.design.horizon = HorizonFixedT{2.56};
  ModelLite lite{LinearDrift{}, WeightPolyDecay{2.0}, ThetaBox{{-5, -5}, {5, 5}}};
  std::vector<double> theta{0.1, -0.2};
  std::vector<double> ones(path.n(), 1.0);
  const auto est = assemble_covariance(path, theta, lite, 1.5, ones);
  // fixed horizon forces V = 1, so Sigma == Gamma
  CHECK((est.sigma_mat_hat - est.gamma_hat).norm() == 0.0);
  const double c = std::pow(2.0 * stable_density_at_zero(1.5), -2.0);
  const Eigen::MatrixXd expected = c * est.gamma_hat.inverse();
  CHECK((est.avar_hat - expected).norm() < 1e-12 * expected.norm());
}

TEST_CASE("covariance: scalar drift cross-check") {
  CustomDrift scalar;
  scalar.dim = 1;
  scalar.value = [](std::span<const double> t, double x) { return t[0] * x; };
  scalar.grad_theta = [](std::span<const double>, double x) { return std::vector<double>{x}; };
  scalar.holder_eta = 1.0;

  auto path = pure_stable_path(1.5, 64, 0.01, 5, 1.0, 0.7);
  path.design.horizon = HorizonErgodic{};
  ModelLite lite{scalar, WeightPolyDecay{1.0}, ThetaBox{{-2}, {2}}};
  std::vector<double> theta{0.5};
  std::vector<double> spots(path.n(), 1.3);
  const auto est = assemble_covariance(path, theta, lite, 1.5, spots);

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < path.n(); ++k) {
    const double x = path.values[k];
    const double v = std::pow(1.0 + std::abs(x), -1.0);
    num += v * v * x * x;
    den += v * x * x / 1.3;
  }
  const double n = static_cast<double>(path.n());
  const double expected =
      std::pow(2.0 * stable_density_at_zero(1.5), -2.0) * (num / n) / ((den / n) * (den / n));
  CHECK(est.avar_hat(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("covariance: PSD, symmetry, and identifiability failure") {
  auto path = pure_stable_path(1.7, 512, 0.005, 8);
  path.design.horizon = HorizonErgodic{};
  ModelLite lite{LinearDrift{}, WeightPolyDecay{2.0}, ThetaBox{{-5, -5}, {5, 5}}};
  std::vector<double> theta{0.0, -1.0};
  PowerVariationConfig cfg;
  cfg.rho = 0.25;
  cfg.window = 24;
  const auto est = estimate_covariance(path, theta, lite, cfg, 1.7, ScaleMode::SpotScale);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(est.gamma_hat);
  CHECK(eg.eigenvalues().minCoeff() >= -1e-12 * est.gamma_hat.trace());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(est.sigma_mat_hat);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12 * est.sigma_mat_hat.trace());
  CHECK((est.avar_hat - est.avar_hat.transpose()).norm() < 1e-10);
  CHECK(est.sigma_cond >= 1.0);
  for (double s : est.spot_scales) CHECK(s >= est.floor_value);

  // all mass at x = 0 makes the linear-drift information singular
  std::vector<double> flatish(65, 0.0);
  flatish[64] = 1.0;  // keep the path nonconstant
  auto degenerate = path_from_values(flatish, 0.01);
  std::vector<double> ones(degenerate.n(), 1.0);
  CHECK_THROWS_AS(assemble_covariance(degenerate, theta, lite, 1.5, ones), EstimationError);
}

TEST_CASE("H2/H1 concentrates at one as n grows") {
  const double alpha = 1.5, rho = 0.25;
  std::vector<double> dev;
  for (std::size_t n : {std::size_t{4096}, std::size_t{16384}, std::size_t{65536}}) {
    std::vector<double> gaps;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto path = pure_stable_path(alpha, n, 1.0 / static_cast<double>(n), 900 + seed);
      const double ratio =
          power_variation_H2(path, rho, alpha) / power_variation_H1(path, rho, alpha);
      gaps.push_back(std::abs(ratio - 1.0));
    }
    dev.push_back(median(gaps));
  }
  CHECK(dev[1] < dev[0]);
  CHECK(dev[2] < dev[1]);
}
