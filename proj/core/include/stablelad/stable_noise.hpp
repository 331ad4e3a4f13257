#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "stablelad/rng.hpp"

namespace stablelad {

/// Distribution of jump magnitudes (supported on (0, inf)).
struct JumpDist {
  enum class Kind { PointMass, Uniform, Exponential };
  Kind kind = Kind::Exponential;
  double a = 0.5;  // PointMass: the atom; Uniform: lower endpoint; Exponential: mean
  double b = 0.0;  // Uniform: upper endpoint

  double sample(SplitMix64& rng) const;
  /// E[J 1{J <= 1}], the contribution to the principal-value drift.
  double mean_below_one() const;
  /// E[J^p] for p > 0 (moment bookkeeping in tests).
  double moment(double p) const;
  void validate() const;
};

struct NuisanceNone {};

/// Signed nuisance nu = nu+ - nu- carried as two nonnegative compound-Poisson
/// measures: nu+ = rate_pos * law(+J), nu- = rate_neg * law(+K). The simulator
/// adds the nu+ jumps and subtracts the nu- jumps as independent streams; the
/// difference process Z^triangle then has Levy measure nu+ + mirror(nu-).
struct NuisanceCompoundPoisson {
  JumpDist positive_jumps;
  double rate_pos = 1.0;
  JumpDist negative_jumps;
  double rate_neg = 1.0;
};

/// Symmetric infinite-activity nuisance with density
///   n(u) = density_scale * |u|^(-beta-1)        for 0 < |u| <= 1,
///   n(u) = density_scale * |u|^(-beta_second-1) for |u| > 1.
struct NuisanceTemperedTail {
  double beta = 0.2;         // Blumenthal-Getoor index of the small jumps (>= 0)
  double beta_second = 1.5;  // tail decay index (> 0)
  double density_scale = 0.05;
};

using NuisanceSpec = std::variant<NuisanceNone, NuisanceCompoundPoisson, NuisanceTemperedTail>;

/// Driving-noise configuration: stability index, nuisance family, and the
/// declared moment order q of |Z_1| (empty when no tail moment is assumed).
struct LevyConfig {
  double alpha = 1.5;
  NuisanceSpec nuisance = NuisanceNone{};
  std::optional<double> tail_index_q;

  /// Blumenthal-Getoor index of |nu|.
  double bg_index() const;
  /// b = int_{|u|<=1} u nu(du) of the configured signed nuisance.
  double pv_drift() const;
  void validate() const;
};

struct NoiseParts {
  std::vector<double> stable;
  std::vector<double> nuisance;
};

struct NoiseIncrementBatch {
  double h = 0.0;
  std::vector<double> values;
  std::optional<NoiseParts> parts;
};

/// n i.i.d. draws from the symmetric alpha-stable law with characteristic
/// function exp(-|xi|^alpha), via the Chambers-Mallows-Stuck transform.
/// Draw i consumes substream_seed(seed, i); deterministic and chunkable.
std::vector<double> sample_standard_stable(double alpha, std::size_t n, std::uint64_t seed);

/// Increments of Z over n steps of width h: h^(1/alpha)-scaled stable part
/// plus the nuisance jumps. With keep_parts the two components are returned
/// separately and sum exactly to values.
NoiseIncrementBatch sample_noise_increments(const LevyConfig& cfg, double h, std::size_t n,
                                            std::uint64_t seed, bool keep_parts = false);

/// phi_alpha(0) = Gamma(1 + 1/alpha) / pi.
double stable_density_at_zero(double alpha);

/// m_alpha(rho) = 2^rho Gamma((rho+1)/2) / (sqrt(pi) Gamma(1-rho/2)) * Gamma(1-rho/alpha),
/// the rho-th absolute moment of the standard symmetric alpha-stable law; requires
/// 0 < rho < alpha.
double stable_fractional_moment(double alpha, double rho);

/// Streaming form of sample_noise_increments: increment k is drawn from the
/// substreams (seed, 4k), (seed, 4k+1), (seed, 4k+2) for the stable part and
/// the two nuisance channels, so any contiguous or parallel chunking yields
/// bit-identical values.
class NoiseGenerator {
 public:
  NoiseGenerator(const LevyConfig& cfg, double h, std::uint64_t seed);

  struct Increment {
    double stable = 0.0;
    double nuisance = 0.0;
    double total() const { return stable + nuisance; }
  };

  Increment at(std::uint64_t k) const;

  /// Truncation threshold for infinite-activity nuisances (h^(2/alpha), capped at 1/2).
  double truncation_epsilon() const { return epsilon_; }
  /// Total nuisance jump rate after truncation, |nu|({|u| > eps}).
  double nuisance_rate() const;

 private:
  LevyConfig cfg_;
  double h_ = 0.0;
  std::uint64_t seed_ = 0;
  double stable_scale_ = 0.0;  // h^(1/alpha)
  double epsilon_ = 0.0;
  // tempered-tail split of the truncated mass, per side
  double mass_inner_ = 0.0;
  double mass_outer_ = 0.0;
};

}  // namespace stablelad
