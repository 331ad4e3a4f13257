#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "stablelad/errors.hpp"
#include "stablelad/numerics.hpp"
#include "stablelad/sde_sim.hpp"
#include "stablelad/stable_noise.hpp"
#include "stablelad/stats.hpp"

using namespace stablelad;

namespace {

ModelSpec linear_model(double th1, double th2, double alpha, WeightSpec w = WeightOne{}) {
  ModelSpec m;
  m.drift = LinearDrift{};
  m.theta0 = {th1, th2};
  m.sigma = ScaleConstant{1.0};
  m.weight_V = w;
  m.theta_domain = {{-10.0, -10.0}, {10.0, 10.0}};
  m.levy.alpha = alpha;
  return m;
}

std::string tmp_file(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("simulation is deterministic in the seed") {
  const ModelSpec m = linear_model(0.0, -1.0, 1.7);
  SamplingDesign d{256, 1.0 / 256, HorizonFixedT{1.0}, 0.55};
  const auto a = simulate_path(m, d, 8, 31);
  const auto b = simulate_path(m, d, 8, 31);
  CHECK(a.values == b.values);
  const auto c = simulate_path(m, d, 8, 32);
  CHECK(a.values != c.values);
}

TEST_CASE("zero-noise limit reproduces the linear ODE flow") {
  const ModelSpec m = linear_model(1.0, -1.0, 1.7);
  const std::size_t n = 64;
  const int ff = 16;
  SamplingDesign d{n, 1.0 / n, HorizonFixedT{1.0}, 0.55};
  ModelSpec m_at_x0 = m;
  const double x0 = 0.0;
  const auto path = simulate_path_with_increments(m_at_x0, d, ff, [](std::uint64_t) { return 0.0; });

  const double h_fine = d.h_n / ff;
  const double tol = 10.0 * h_fine * (1.0 + std::abs(x0));
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * d.h_n;
    const double flow = std::exp(-1.0 * t) * x0 + 1.0 * t * expm1_over_x(-1.0 * t);
    CHECK(std::abs(path.values[k] - flow) < tol);
  }
}

TEST_CASE("pure-noise degenerate case gives scaled stable coarse increments") {
  ModelSpec m = linear_model(0.0, 0.0, 1.4);
  m.theta_domain = {{-1.0, -1.0}, {1.0, 1.0}};
  SamplingDesign d{4096, 1.0 / 4096, HorizonFixedT{1.0}, 0.55};
  const auto path = simulate_path(m, d, 1, 17);
  std::vector<double> inc(d.n);
  for (std::size_t k = 1; k <= d.n; ++k) inc[k - 1] = path.values[k] - path.values[k - 1];

  const auto ref = sample_standard_stable(1.4, d.n, 9177);
  std::vector<double> scaled(ref.size());
  const double s = std::pow(d.h_n, 1.0 / 1.4);
  for (std::size_t i = 0; i < ref.size(); ++i) scaled[i] = s * ref[i];
  CHECK(ks_test_two_sample(inc, scaled).p_value > 0.01);
}

TEST_CASE("mean-reverting linear path stays finite with small lag-1 autocorrelation") {
  const ModelSpec m = linear_model(0.0, -1.0, 1.7);
  SamplingDesign d{4096, 1.0 / 4096, HorizonFixedT{1.0}, 0.55};
  const auto path = simulate_path(m, d, 16, 5);
  std::vector<double> inc(d.n);
  for (std::size_t k = 1; k <= d.n; ++k) inc[k - 1] = path.values[k] - path.values[k - 1];
  const double mu = mean(inc);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k + 1 < inc.size(); ++k) {
    num += (inc[k] - mu) * (inc[k + 1] - mu);
  }
  for (double v : inc) den += (v - mu) * (v - mu);
  CHECK(std::abs(num / den) < 0.1);
}

TEST_CASE("two-resolution self-consistency under common noise") {
  const ModelSpec m = linear_model(0.5, -1.0, 1.7);
  const std::size_t n = 256;
  SamplingDesign d{n, 1.0 / n, HorizonFixedT{1.0}, 0.55};
  const int ff_ref = 64;

  NoiseGenerator gen(m.levy, d.h_n / ff_ref, 77);
  auto fine_dz = [&gen](std::uint64_t j) { return gen.at(j).total(); };
  const auto ref = simulate_path_with_increments(m, d, ff_ref, fine_dz);

  auto aggregate = [&](int ff) {
    const int block = ff_ref / ff;
    return [&gen, block](std::uint64_t j) {
      double s = 0.0;
      for (int i = 0; i < block; ++i) s += gen.at(j * block + i).total();
      return s;
    };
  };
  const auto coarse1 = simulate_path_with_increments(m, d, 1, aggregate(1));
  const auto coarse8 = simulate_path_with_increments(m, d, 8, aggregate(8));

  double err1 = 0.0, err8 = 0.0, sup = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    err1 = std::max(err1, std::abs(coarse1.values[k] - ref.values[k]));
    err8 = std::max(err8, std::abs(coarse8.values[k] - ref.values[k]));
    sup = std::max(sup, std::abs(ref.values[k]));
  }
  CHECK(err8 < err1);
  // O(h^(1+eta-1/alpha) T) envelope with a generous constant
  const double envelope = std::pow(d.h_n, 1.0 + 1.0 - 1.0 / 1.7) * 1.0 * (1.0 + sup);
  CHECK(err1 < 100.0 * envelope);
}

TEST_CASE("ergodic Bernoulli path has stochastically bounded running maximum") {
  ModelSpec m;
  m.drift = BernoulliDrift{0.5};
  m.theta0 = {1.0, -1.0};  // mean-reverting through the linear part
  m.sigma = ScaleConstant{1.0};
  m.theta_domain = {{-5.0, -5.0}, {5.0, 5.0}};
  m.levy.alpha = 1.6;

  auto median_max = [&](std::size_t n) {
    std::vector<double> maxima;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SamplingDesign d{n, 0.01, HorizonErgodic{}, 0.55};
      const auto path = simulate_path(m, d, 4, seed);
      double mx = 0.0;
      for (double v : path.values) mx = std::max(mx, std::abs(v));
      maxima.push_back(mx);
    }
    return median(maxima);
  };
  const double m1 = median_max(2048);   // T = 20.5
  const double m4 = median_max(8192);   // T = 82
  CHECK(m1 < 20.0);
  CHECK(m4 < 20.0);
  CHECK(m4 / m1 < 3.5);  // sublinear growth in T
}

TEST_CASE("dissipation check warns when the ergodic drift does not revert") {
  const ModelSpec m = linear_model(0.0, 0.5, 1.7);
  SamplingDesign d{128, 0.01, HorizonErgodic{}, 0.55};
  const auto path = simulate_path(m, d, 2, 3);
  bool warned = false;
  for (const auto& w : path.provenance.warnings) {
    if (w.find("dissipation") != std::string::npos) warned = true;
  }
  CHECK(warned);
}

TEST_CASE("exploding drift is reported as a simulation error") {
  const ModelSpec m = linear_model(0.0, 3.0, 1.7);
  SamplingDesign d{2000, 0.05, HorizonErgodic{}, 0.55};
  CHECK_THROWS_AS(simulate_path(m, d, 2, 3), SimulationError);
}

TEST_CASE("sampling design validation") {
  SamplingDesign d{100, 0.01, HorizonFixedT{1.0}, 0.55};
  CHECK_NOTHROW(d.validate());
  d.horizon = HorizonFixedT{2.0};
  CHECK_THROWS_AS(d.validate(), ValidationError);  // n h != T
  d.horizon = HorizonErgodic{};
  d.delta = 0.5;
  CHECK_THROWS_AS(d.validate(), ValidationError);  // delta must exceed 1/2
  d.delta = 0.55;
  d.n = 10;
  d.h_n = 1e-6;
  CHECK_THROWS_AS(d.validate(), ValidationError);  // terminal time too small

  SamplingDesign big{100'000, 0.05, HorizonErgodic{}, 0.55};
  const auto warnings = big.validate();  // n h^{2 delta} large -> warn only
  CHECK(!warnings.empty());
}

TEST_CASE("csv ingestion accepts the documented formats") {
  const std::string file = tmp_file("stablelad_ok.csv");
  {
    std::ofstream out(file);
    out << "t,x\n";
    for (int k = 0; k <= 100; ++k) out << 0.01 * k << ',' << std::sin(0.1 * k) << "\n";
  }
  const auto path = ingest_path(file, 0.0, HorizonErgodic{});
  CHECK(path.n() == 100);
  CHECK(path.h() == doctest::Approx(0.01).epsilon(1e-9));
  CHECK(path.provenance.source == "ingested");

  const std::string file1 = tmp_file("stablelad_1col.csv");
  {
    std::ofstream out(file1);
    out << "x\n";
    for (int k = 0; k <= 20; ++k) out << k * 0.5 << "\n";
  }
  const auto p1 = ingest_path(file1, 0.25, HorizonErgodic{});
  CHECK(p1.n() == 20);
  CHECK(p1.h() == 0.25);
  CHECK_THROWS_AS(ingest_path(file1, 0.0, HorizonErgodic{}), ValidationError);
}

TEST_CASE("csv ingestion rejects malformed inputs") {
  const std::string jitter = tmp_file("stablelad_jitter.csv");
  {
    std::ofstream out(jitter);
    out << "t,x\n";
    double t = 0.0;
    for (int k = 0; k <= 50; ++k) {
      out << t << ',' << k << "\n";
      t += (k % 2 == 0) ? 0.01 : 0.0101;  // 1% jitter
    }
  }
  CHECK_THROWS_WITH_AS(ingest_path(jitter, 0.0, HorizonErgodic{}),
                       doctest::Contains("non-equispaced"), ValidationError);

  const std::string nan_file = tmp_file("stablelad_nan.csv");
  {
    std::ofstream out(nan_file);
    out << "x\n1\n2\n3\nnan\n5\n6\n7\n8\n9\n";
  }
  CHECK_THROWS_WITH_AS(ingest_path(nan_file, 0.1, HorizonErgodic{}), doctest::Contains("row 4"),
                       ValidationError);

  const std::string short_file = tmp_file("stablelad_short.csv");
  {
    std::ofstream out(short_file);
    out << "x\n1\n2\n3\n4\n5\n";
  }
  CHECK_THROWS_WITH_AS(ingest_path(short_file, 0.1, HorizonErgodic{}),
                       doctest::Contains("at least 8"), ValidationError);

  const std::string bad_header = tmp_file("stablelad_hdr.csv");
  {
    std::ofstream out(bad_header);
    out << "time,value\n0,1\n";
  }
  CHECK_THROWS_AS(ingest_path(bad_header, 0.1, HorizonErgodic{}), ValidationError);
}

TEST_CASE("write_path_csv round-trips bit-exactly") {
  const ModelSpec m = linear_model(0.3, -0.8, 1.5);
  SamplingDesign d{64, 0.015625, HorizonFixedT{1.0}, 0.55};
  const auto path = simulate_path(m, d, 4, 8);
  const std::string file = tmp_file("stablelad_roundtrip.csv");
  write_path_csv(path, file);
  const auto back = ingest_path(file, 0.0, HorizonFixedT{1.0});
  REQUIRE(back.values.size() == path.values.size());
  for (std::size_t k = 0; k < path.values.size(); ++k) CHECK(back.values[k] == path.values[k]);
}
