#include "stablelad/stable_noise.hpp"

#include <cmath>
#include <string>

#include "stablelad/errors.hpp"

namespace stablelad {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 2.0)) {
    throw ValidationError("stability index alpha must lie in (0,2), got " + std::to_string(alpha));
  }
}

/// One standard symmetric alpha-stable draw (Chambers-Mallows-Stuck).
double cms_draw(double alpha, SplitMix64& rng) {
  const double u = kPi * (rng.uniform01() - 0.5);  // Uniform(-pi/2, pi/2)
  const double e = rng.exponential();
  const double cu = std::cos(u);
  return std::sin(alpha * u) / std::pow(cu, 1.0 / alpha) *
         std::pow(std::cos(u - alpha * u) / e, (1.0 - alpha) / alpha);
}

/// Poisson sampler by inversion; exact splitting keeps the product in range
/// for large means.
std::uint64_t poisson_draw(double mean, SplitMix64& rng) {
  if (mean <= 0.0) return 0;
  std::uint64_t total = 0;
  while (mean > 60.0) {
    double half = 0.5 * mean;
    total += poisson_draw(half, rng);
    mean -= half;
  }
  const double limit = std::exp(-mean);
  double prod = 1.0;
  std::uint64_t k = 0;
  do {
    ++k;
    prod *= rng.uniform01();
  } while (prod > limit);
  return total + k - 1;
}

}  // namespace

double JumpDist::sample(SplitMix64& rng) const {
  switch (kind) {
    case Kind::PointMass:
      return a;
    case Kind::Uniform:
      return rng.uniform(a, b);
    case Kind::Exponential:
      return a * rng.exponential();
  }
  return 0.0;
}

double JumpDist::mean_below_one() const {
  switch (kind) {
    case Kind::PointMass:
      return a <= 1.0 ? a : 0.0;
    case Kind::Uniform: {
      if (a >= 1.0) return 0.0;
      const double c = std::min(b, 1.0);
      return 0.5 * (c * c - a * a) / (b - a);
    }
    case Kind::Exponential:
      // int_0^1 u e^{-u/a}/a du = a(1 - e^{-1/a}) - e^{-1/a}
      return a * (1.0 - std::exp(-1.0 / a)) - std::exp(-1.0 / a);
  }
  return 0.0;
}

double JumpDist::moment(double p) const {
  switch (kind) {
    case Kind::PointMass:
      return std::pow(a, p);
    case Kind::Uniform:
      return (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / ((p + 1.0) * (b - a));
    case Kind::Exponential:
      return std::pow(a, p) * std::tgamma(p + 1.0);
  }
  return 0.0;
}

void JumpDist::validate() const {
  switch (kind) {
    case Kind::PointMass:
      if (!(a > 0.0)) throw ValidationError("jump point mass must be positive");
      break;
    case Kind::Uniform:
      if (!(a >= 0.0) || !(b > a)) throw ValidationError("jump uniform range requires 0 <= a < b");
      break;
    case Kind::Exponential:
      if (!(a > 0.0)) throw ValidationError("jump exponential mean must be positive");
      break;
  }
}

double LevyConfig::bg_index() const {
  if (std::holds_alternative<NuisanceTemperedTail>(nuisance)) {
    return std::get<NuisanceTemperedTail>(nuisance).beta;
  }
  return 0.0;  // none / finite-rate compound Poisson
}

double LevyConfig::pv_drift() const {
  if (const auto* cp = std::get_if<NuisanceCompoundPoisson>(&nuisance)) {
    return cp->rate_pos * cp->positive_jumps.mean_below_one() -
           cp->rate_neg * cp->negative_jumps.mean_below_one();
  }
  return 0.0;  // none, or symmetric tempered tail
}

void LevyConfig::validate() const {
  require_alpha(alpha);
  if (const auto* cp = std::get_if<NuisanceCompoundPoisson>(&nuisance)) {
    cp->positive_jumps.validate();
    cp->negative_jumps.validate();
    if (cp->rate_pos < 0.0 || cp->rate_neg < 0.0) {
      throw ValidationError("compound-Poisson rates must be nonnegative");
    }
  } else if (const auto* tt = std::get_if<NuisanceTemperedTail>(&nuisance)) {
    if (!(tt->beta >= 0.0)) throw ValidationError("tempered-tail beta must be >= 0");
    if (!(tt->beta_second > 0.0)) throw ValidationError("tempered-tail beta'' must be > 0");
    if (!(tt->density_scale > 0.0)) throw ValidationError("tempered-tail density scale must be > 0");
  }
  if (bg_index() >= alpha / 2.0) {
    throw ValidationError("nuisance activity index beta must satisfy beta < alpha/2");
  }
  if (tail_index_q) {
    const double q = *tail_index_q;
    if (!(q > 0.0)) throw ValidationError("tail index q must be positive");
    if (q >= alpha) {
      throw ValidationError("tail index q must be < alpha (stable part has no higher moments)");
    }
    if (const auto* tt = std::get_if<NuisanceTemperedTail>(&nuisance)) {
      if (q >= tt->beta_second) {
        throw ValidationError("tail index q must be < beta'' for a tempered-tail nuisance");
      }
    }
  }
}

std::vector<double> sample_standard_stable(double alpha, std::size_t n, std::uint64_t seed) {
  require_alpha(alpha);
  if (n == 0) throw ValidationError("sample_standard_stable: n must be >= 1");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng(substream_seed(seed, i));
    out[i] = cms_draw(alpha, rng);
  }
  return out;
}

NoiseGenerator::NoiseGenerator(const LevyConfig& cfg, double h, std::uint64_t seed)
    : cfg_(cfg), h_(h), seed_(seed) {
  cfg_.validate();
  if (!(h > 0.0)) throw ValidationError("noise step width h must be positive");
  stable_scale_ = std::pow(h, 1.0 / cfg_.alpha);
  if (const auto* tt = std::get_if<NuisanceTemperedTail>(&cfg_.nuisance)) {
    epsilon_ = std::min(std::pow(h, 2.0 / cfg_.alpha), 0.5);
    // per-side masses of |nu| above the truncation level; truncated small jumps
    // have zero mean by symmetry, bias O(eps^(1-beta))
    mass_inner_ = tt->beta > 0.0
                      ? tt->density_scale * (std::pow(epsilon_, -tt->beta) - 1.0) / tt->beta
                      : tt->density_scale * std::log(1.0 / epsilon_);
    mass_outer_ = tt->density_scale / tt->beta_second;
  }
}

double NoiseGenerator::nuisance_rate() const {
  if (const auto* cp = std::get_if<NuisanceCompoundPoisson>(&cfg_.nuisance)) {
    return cp->rate_pos + cp->rate_neg;
  }
  if (std::holds_alternative<NuisanceTemperedTail>(cfg_.nuisance)) {
    return 2.0 * (mass_inner_ + mass_outer_);
  }
  return 0.0;
}

NoiseGenerator::Increment NoiseGenerator::at(std::uint64_t k) const {
  Increment inc;
  {
    SplitMix64 rng(substream_seed(seed_, 4 * k));
    inc.stable = stable_scale_ * cms_draw(cfg_.alpha, rng);
  }
  if (const auto* cp = std::get_if<NuisanceCompoundPoisson>(&cfg_.nuisance)) {
    SplitMix64 pos(substream_seed(seed_, 4 * k + 1));
    const std::uint64_t np = poisson_draw(cp->rate_pos * h_, pos);
    for (std::uint64_t j = 0; j < np; ++j) inc.nuisance += cp->positive_jumps.sample(pos);
    SplitMix64 neg(substream_seed(seed_, 4 * k + 2));
    const std::uint64_t nn = poisson_draw(cp->rate_neg * h_, neg);
    for (std::uint64_t j = 0; j < nn; ++j) inc.nuisance -= cp->negative_jumps.sample(neg);
  } else if (const auto* tt = std::get_if<NuisanceTemperedTail>(&cfg_.nuisance)) {
    SplitMix64 rng(substream_seed(seed_, 4 * k + 1));
    const std::uint64_t nj = poisson_draw(nuisance_rate() * h_, rng);
    const double p_inner = mass_inner_ / (mass_inner_ + mass_outer_);
    for (std::uint64_t j = 0; j < nj; ++j) {
      const double pick = rng.uniform01();
      double mag;
      if (pick < p_inner) {
        // inverse CDF of the restriction to [eps, 1]
        const double u = rng.uniform01();
        if (tt->beta > 0.0) {
          const double einv = std::pow(epsilon_, -tt->beta);
          mag = std::pow(einv - u * (einv - 1.0), -1.0 / tt->beta);
        } else {
          mag = epsilon_ * std::pow(1.0 / epsilon_, u);
        }
      } else {
        mag = std::pow(rng.uniform01(), -1.0 / tt->beta_second);  // Pareto tail on (1, inf)
      }
      inc.nuisance += (rng.uniform01() < 0.5) ? mag : -mag;
    }
  }
  return inc;
}

NoiseIncrementBatch sample_noise_increments(const LevyConfig& cfg, double h, std::size_t n,
                                            std::uint64_t seed, bool keep_parts) {
  if (n == 0) throw ValidationError("sample_noise_increments: n must be >= 1");
  NoiseGenerator gen(cfg, h, seed);
  NoiseIncrementBatch batch;
  batch.h = h;
  batch.values.resize(n);
  if (keep_parts) batch.parts = NoiseParts{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const auto inc = gen.at(k);
    batch.values[k] = inc.total();
    if (keep_parts) {
      batch.parts->stable[k] = inc.stable;
      batch.parts->nuisance[k] = inc.nuisance;
    }
  }
  return batch;
}

double stable_density_at_zero(double alpha) {
  require_alpha(alpha);
  return std::exp(std::lgamma(1.0 + 1.0 / alpha)) / kPi;
}

double stable_fractional_moment(double alpha, double rho) {
  require_alpha(alpha);
  if (!(rho > 0.0) || !(rho < alpha)) {
    throw ValidationError("fractional moment requires 0 < rho < alpha (diverges at rho = alpha)");
  }
  const double log_m = rho * std::log(2.0) + std::lgamma(0.5 * (rho + 1.0)) -
                       0.5 * std::log(kPi) - std::lgamma(1.0 - 0.5 * rho) +
                       std::lgamma(1.0 - rho / alpha);
  return std::exp(log_m);
}

}  // namespace stablelad
