#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "stablelad/stable_noise.hpp"

namespace stablelad {

// ---------------------------------------------------------------------------
// Drift families

/// a(theta; x) = theta_1 + theta_2 x.
struct LinearDrift {};

/// a(theta; x) = theta_1 x^<kappa> + theta_2 x with x^<kappa> = |x|^kappa sgn(x).
struct BernoulliDrift {
  double kappa = 0.5;
};

/// User-supplied drift; must declare its Hoelder exponent eta in (0,1].
struct CustomDrift {
  std::function<double(std::span<const double>, double)> value;
  std::function<std::vector<double>(std::span<const double>, double)> grad_theta;
  std::function<double(std::span<const double>, double)> dx;  // optional (empty if unknown)
  double holder_eta = 1.0;
  int dim = 1;
};

using DriftFamily = std::variant<LinearDrift, BernoulliDrift, CustomDrift>;

int drift_dim(const DriftFamily& drift);
double drift_holder_eta(const DriftFamily& drift);
double drift_value(const DriftFamily& drift, std::span<const double> theta, double x);
std::vector<double> drift_grad_theta(const DriftFamily& drift, std::span<const double> theta,
                                     double x);
bool drift_has_dx(const DriftFamily& drift);
double drift_dx(const DriftFamily& drift, std::span<const double> theta, double x);

// ---------------------------------------------------------------------------
// Scale and weight functions

struct ScaleConstant {
  double value = 1.0;
};

/// sigma(x) = base + amplitude * sin(x); requires base > |amplitude|.
struct ScaleSinusoidal {
  double base = 1.0;
  double amplitude = 0.5;
};

struct ScaleCustom {
  std::function<double(double)> fn;
  double lower = 0.0;  // declared bounds: 0 < lower <= sigma(x) <= upper
  double upper = 0.0;
};

using ScaleSpec = std::variant<ScaleConstant, ScaleSinusoidal, ScaleCustom>;

double scale_value(const ScaleSpec& sigma, double x);
/// Declared bounds {sigma_min, sigma_max}.
std::pair<double, double> scale_bounds(const ScaleSpec& sigma);

struct WeightOne {};

/// V(x) = scale * (1 + |x|)^(-p). The scale leaves every argmin untouched and
/// exists for degenerate-weight checks (scale = 0 is allowed).
struct WeightPolyDecay {
  double p = 2.0;
  double scale = 1.0;
};

using WeightSpec = std::variant<WeightOne, WeightPolyDecay>;

double weight_value(const WeightSpec& w, double x);

// ---------------------------------------------------------------------------
// Model, sampling design, observation path

struct ThetaBox {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> theta) const;
  bool strictly_contains(std::span<const double> theta, double margin) const;
  std::vector<double> clamp(std::span<const double> theta) const;
  std::vector<double> center() const;
  void validate() const;
};

struct ModelSpec {
  DriftFamily drift;
  std::vector<double> theta0;
  ScaleSpec sigma;
  WeightSpec weight_V = WeightOne{};
  ThetaBox theta_domain;
  LevyConfig levy;

  void validate() const;
};

struct HorizonFixedT {
  double T = 1.0;
};
struct HorizonErgodic {};
using HorizonSpec = std::variant<HorizonFixedT, HorizonErgodic>;

bool is_ergodic(const HorizonSpec& horizon);

struct SamplingDesign {
  std::size_t n = 0;
  double h_n = 0.0;
  HorizonSpec horizon = HorizonErgodic{};
  double delta = 0.55;  // statistic-stability exponent, must exceed 1/2

  double terminal_time() const { return static_cast<double>(n) * h_n; }
  /// Throws on hard violations; returns soft warnings (e.g. n*h^(2 delta) large).
  std::vector<std::string> validate() const;
};

struct PathProvenance {
  std::string source;  // "simulated" or "ingested"
  std::uint64_t seed = 0;
  int fine_factor = 1;
  std::vector<std::string> warnings;
};

struct ObservationPath {
  SamplingDesign design;
  double x0 = 0.0;
  std::vector<double> values;  // X at t_0..t_n, length n+1
  PathProvenance provenance;

  std::size_t n() const { return design.n; }
  double h() const { return design.h_n; }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Simulation and ingestion

/// Euler-Maruyama on the fine grid h_n / fine_factor with the scale evaluated
/// at the left endpoint, subsampled to the coarse observation grid. Under an
/// ergodic horizon a burn-in of max(1000 coarse steps, 10 time units) is
/// discarded before recording. Deterministic given the seed.
ObservationPath simulate_path(const ModelSpec& model, const SamplingDesign& design,
                              int fine_factor, std::uint64_t seed);

/// Same skeleton driven by caller-supplied fine-grid noise increments
/// (indexed over recorded steps only; no burn-in). Used by the deterministic
/// and two-resolution checks.
ObservationPath simulate_path_with_increments(const ModelSpec& model,
                                              const SamplingDesign& design, int fine_factor,
                                              const std::function<double(std::uint64_t)>& dz);

/// Reads a path from CSV with header "x" (single column, h_n required) or
/// "t,x" (equispaced times; h_n = 0 infers the step from the file).
ObservationPath ingest_path(const std::string& file, double h_n, const HorizonSpec& horizon);

/// Writes the "t,x" CSV format consumed by ingest_path.
void write_path_csv(const ObservationPath& path, const std::string& file);

}  // namespace stablelad
