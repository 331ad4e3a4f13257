#include "stablelad/sde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stablelad/errors.hpp"
#include "stablelad/numerics.hpp"

namespace stablelad {

// ---------------------------------------------------------------------------
// Drift families

int drift_dim(const DriftFamily& drift) {
  if (std::holds_alternative<CustomDrift>(drift)) return std::get<CustomDrift>(drift).dim;
  return 2;
}

double drift_holder_eta(const DriftFamily& drift) {
  if (std::holds_alternative<BernoulliDrift>(drift)) return std::get<BernoulliDrift>(drift).kappa;
  if (std::holds_alternative<CustomDrift>(drift)) return std::get<CustomDrift>(drift).holder_eta;
  return 1.0;
}

double drift_value(const DriftFamily& drift, std::span<const double> theta, double x) {
  if (std::holds_alternative<LinearDrift>(drift)) {
    return theta[0] + theta[1] * x;
  }
  if (const auto* b = std::get_if<BernoulliDrift>(&drift)) {
    return theta[0] * signed_power(x, b->kappa) + theta[1] * x;
  }
  return std::get<CustomDrift>(drift).value(theta, x);
}

std::vector<double> drift_grad_theta(const DriftFamily& drift, std::span<const double> theta,
                                     double x) {
  if (std::holds_alternative<LinearDrift>(drift)) {
    return {1.0, x};
  }
  if (const auto* b = std::get_if<BernoulliDrift>(&drift)) {
    return {signed_power(x, b->kappa), x};
  }
  return std::get<CustomDrift>(drift).grad_theta(theta, x);
}

bool drift_has_dx(const DriftFamily& drift) {
  if (std::holds_alternative<CustomDrift>(drift)) {
    return static_cast<bool>(std::get<CustomDrift>(drift).dx);
  }
  return true;
}

double drift_dx(const DriftFamily& drift, std::span<const double> theta, double x) {
  if (std::holds_alternative<LinearDrift>(drift)) {
    return theta[1];
  }
  if (const auto* b = std::get_if<BernoulliDrift>(&drift)) {
    // kink at x = 0: return the linear part there
    if (x == 0.0) return theta[1];
    return theta[0] * b->kappa * std::pow(std::abs(x), b->kappa - 1.0) + theta[1];
  }
  const auto& c = std::get<CustomDrift>(drift);
  if (!c.dx) throw ValidationError("custom drift does not expose d/dx a(theta;x)");
  return c.dx(theta, x);
}

// ---------------------------------------------------------------------------
// Scale and weight

double scale_value(const ScaleSpec& sigma, double x) {
  if (const auto* c = std::get_if<ScaleConstant>(&sigma)) return c->value;
  if (const auto* s = std::get_if<ScaleSinusoidal>(&sigma)) {
    return s->base + s->amplitude * std::sin(x);
  }
  return std::get<ScaleCustom>(sigma).fn(x);
}

std::pair<double, double> scale_bounds(const ScaleSpec& sigma) {
  if (const auto* c = std::get_if<ScaleConstant>(&sigma)) return {c->value, c->value};
  if (const auto* s = std::get_if<ScaleSinusoidal>(&sigma)) {
    return {s->base - std::abs(s->amplitude), s->base + std::abs(s->amplitude)};
  }
  const auto& c = std::get<ScaleCustom>(sigma);
  return {c.lower, c.upper};
}

double weight_value(const WeightSpec& w, double x) {
  if (std::holds_alternative<WeightOne>(w)) return 1.0;
  const auto& pd = std::get<WeightPolyDecay>(w);
  return pd.scale * std::pow(1.0 + std::abs(x), -pd.p);
}

// ---------------------------------------------------------------------------
// ThetaBox / ModelSpec / SamplingDesign

bool ThetaBox::contains(std::span<const double> theta) const {
  if (theta.size() != lo.size()) return false;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] < lo[i] || theta[i] > hi[i]) return false;
  }
  return true;
}

bool ThetaBox::strictly_contains(std::span<const double> theta, double margin) const {
  if (theta.size() != lo.size()) return false;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] < lo[i] + margin || theta[i] > hi[i] - margin) return false;
  }
  return true;
}

std::vector<double> ThetaBox::clamp(std::span<const double> theta) const {
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lo[i], hi[i]);
  return out;
}

std::vector<double> ThetaBox::center() const {
  std::vector<double> c(lo.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

void ThetaBox::validate() const {
  if (lo.empty() || lo.size() != hi.size()) {
    throw ValidationError("theta domain must give matching lo/hi vectors");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i])) {
      throw ValidationError("theta domain must be a bounded box with lo < hi");
    }
  }
}

void ModelSpec::validate() const {
  theta_domain.validate();
  const int m = drift_dim(drift);
  if (static_cast<int>(theta0.size()) != m || static_cast<int>(theta_domain.dim()) != m) {
    throw ValidationError("theta0 / theta domain dimension does not match the drift family");
  }
  if (!theta_domain.strictly_contains(theta0, 0.0)) {
    throw ValidationError("theta0 must lie in the interior of the theta domain");
  }
  if (const auto* b = std::get_if<BernoulliDrift>(&drift)) {
    if (!(b->kappa > 0.0) || !(b->kappa < 1.0)) {
      throw ValidationError("Bernoulli drift requires kappa in (0,1)");
    }
  }
  const double eta = drift_holder_eta(drift);
  if (!(eta > 0.0) || !(eta > 1.0 - levy.alpha)) {
    throw ValidationError("balance condition alpha + eta > 1 violated");
  }
  const auto [lo, hi] = scale_bounds(sigma);
  if (!(lo > 0.0) || !(hi >= lo)) {
    throw ValidationError("scale function must be bounded and separated from 0");
  }
  // probe sigma on a grid against the declared bounds
  for (double x = -50.0; x <= 50.0; x += 0.5) {
    const double s = scale_value(sigma, x);
    if (!(s >= lo * (1.0 - 1e-12)) || !(s <= hi * (1.0 + 1e-12))) {
      throw ValidationError("scale function violates its declared bounds at x = " +
                            std::to_string(x));
    }
  }
  if (const auto* pd = std::get_if<WeightPolyDecay>(&weight_V)) {
    if (!(pd->p >= 0.0)) throw ValidationError("weight decay exponent must be >= 0");
    if (!(pd->scale >= 0.0)) throw ValidationError("weight scale must be >= 0");
  }
  levy.validate();
}

bool is_ergodic(const HorizonSpec& horizon) {
  return std::holds_alternative<HorizonErgodic>(horizon);
}

std::vector<std::string> SamplingDesign::validate() const {
  std::vector<std::string> warnings;
  if (n < 1) throw ValidationError("sampling design requires n >= 1");
  if (!(h_n > 0.0)) throw ValidationError("sampling design requires h_n > 0");
  constexpr double kMinTerminalTime = 1e-3;
  if (terminal_time() < kMinTerminalTime) {
    throw ValidationError("terminal time n*h_n must stay bounded away from 0");
  }
  if (!(delta > 0.5)) {
    throw ValidationError("statistic-stability exponent delta must exceed 1/2");
  }
  if (const auto* f = std::get_if<HorizonFixedT>(&horizon)) {
    if (std::abs(terminal_time() - f->T) > 1e-12) {
      throw ValidationError("fixed horizon requires n*h_n = T (got |n*h_n - T| > 1e-12)");
    }
  }
  const double stat = static_cast<double>(n) * std::pow(h_n, 2.0 * delta);
  if (stat > 0.5) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "n*h_n^(2*delta) = %.3g exceeds 0.5; asymptotics may be weak",
                  stat);
    warnings.emplace_back(buf);
  }
  return warnings;
}

void ObservationPath::validate() const {
  if (values.size() != design.n + 1) {
    throw ValidationError("observation path must hold n+1 values");
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ValidationError("observation path has non-finite value at row " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

/// Shared Euler-Maruyama loop. `dz(j)` returns the noise increment of fine
/// step j; `skip` fine steps are burned before recording starts.
ObservationPath run_euler(const ModelSpec& model, const SamplingDesign& design, int fine_factor,
                          const std::function<double(std::uint64_t)>& dz, std::uint64_t skip,
                          std::vector<std::string> warnings, std::uint64_t seed) {
  const double h_fine = design.h_n / fine_factor;
  const std::span<const double> theta0(model.theta0);

  double x = 0.0;
  for (std::uint64_t j = 0; j < skip; ++j) {
    x += drift_value(model.drift, theta0, x) * h_fine + scale_value(model.sigma, x) * dz(j);
    if (!std::isfinite(x) || std::abs(x) > 1e12) {
      throw SimulationError("path explosion during burn-in at fine step " + std::to_string(j));
    }
  }

  ObservationPath path;
  path.design = design;
  path.x0 = x;
  path.values.resize(design.n + 1);
  path.values[0] = x;
  path.provenance = {"simulated", seed, fine_factor, std::move(warnings)};

  std::uint64_t j = skip;
  for (std::size_t k = 1; k <= design.n; ++k) {
    for (int s = 0; s < fine_factor; ++s, ++j) {
      x += drift_value(model.drift, theta0, x) * h_fine + scale_value(model.sigma, x) * dz(j);
    }
    if (!std::isfinite(x) || std::abs(x) > 1e12) {
      throw SimulationError("path explosion at coarse index " + std::to_string(k));
    }
    path.values[k] = x;
  }
  return path;
}

std::vector<std::string> dissipation_warnings(const ModelSpec& model,
                                              const SamplingDesign& design) {
  std::vector<std::string> warnings;
  if (!is_ergodic(design.horizon)) return warnings;
  for (double mag : {1e2, 1e3, 1e4}) {
    for (double x : {mag, -mag}) {
      const double a = drift_value(model.drift, model.theta0, x);
      if (a * (x > 0 ? 1.0 : -1.0) >= 0.0) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "drift dissipation check failed at x = %.0e: a(theta0,x)*sgn(x) >= 0; "
                      "ergodic horizon may be inappropriate",
                      x);
        warnings.emplace_back(buf);
        return warnings;
      }
    }
  }
  return warnings;
}

}  // namespace

ObservationPath simulate_path(const ModelSpec& model, const SamplingDesign& design,
                              int fine_factor, std::uint64_t seed) {
  model.validate();
  if (fine_factor < 1) throw ValidationError("fine_factor must be >= 1");
  std::vector<std::string> warnings = design.validate();
  auto diss = dissipation_warnings(model, design);
  warnings.insert(warnings.end(), diss.begin(), diss.end());

  std::uint64_t burn_coarse = 0;
  if (is_ergodic(design.horizon)) {
    burn_coarse = std::max<std::uint64_t>(
        1000, static_cast<std::uint64_t>(std::ceil(10.0 / design.h_n)));
  }
  const std::uint64_t skip = burn_coarse * static_cast<std::uint64_t>(fine_factor);

  NoiseGenerator gen(model.levy, design.h_n / fine_factor, seed);
  auto dz = [&gen](std::uint64_t j) { return gen.at(j).total(); };
  return run_euler(model, design, fine_factor, dz, skip, std::move(warnings), seed);
}

ObservationPath simulate_path_with_increments(const ModelSpec& model,
                                              const SamplingDesign& design, int fine_factor,
                                              const std::function<double(std::uint64_t)>& dz) {
  model.validate();
  if (fine_factor < 1) throw ValidationError("fine_factor must be >= 1");
  std::vector<std::string> warnings = design.validate();
  return run_euler(model, design, fine_factor, dz, 0, std::move(warnings), 0);
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_double(const std::string& s, std::size_t row) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("cannot parse numeric field '" + s + "' at data row " +
                          std::to_string(row));
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  std::size_t e = s.find_last_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

}  // namespace

ObservationPath ingest_path(const std::string& file, double h_n, const HorizonSpec& horizon) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open path file: " + file);

  std::string header;
  if (!std::getline(in, header)) throw ValidationError("path file is empty: " + file);
  header = trim(header);
  bool two_column = false;
  if (header == "t,x") {
    two_column = true;
  } else if (header != "x") {
    throw ValidationError("path CSV header must be 'x' or 't,x', got '" + header + "'");
  }
  if (!two_column && !(h_n > 0.0)) {
    throw ValidationError("single-column path CSV requires an explicit h_n > 0");
  }

  std::vector<double> times;
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != (two_column ? 2u : 1u)) {
      throw ValidationError("unexpected column count at data row " + std::to_string(row));
    }
    double x;
    if (two_column) {
      times.push_back(parse_double(fields[0], row));
      x = parse_double(fields[1], row);
    } else {
      x = parse_double(fields[0], row);
    }
    if (!std::isfinite(x)) {
      throw ValidationError("non-finite value at data row " + std::to_string(row));
    }
    values.push_back(x);
  }

  if (values.size() < 8) {
    throw ValidationError("path must have at least 8 observations (third-order differences)");
  }

  if (two_column) {
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw ValidationError("times must be strictly increasing");
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double step = times[i] - times[i - 1];
      if (!(step > 0.0)) throw ValidationError("times must be strictly increasing");
      if (std::abs(step - dt) > 1e-9 * dt) {
        throw ValidationError("non-equispaced times at data row " + std::to_string(i + 1));
      }
    }
    if (h_n > 0.0 && std::abs(dt - h_n) > 1e-9 * h_n) {
      throw ValidationError("file spacing disagrees with the requested h_n");
    }
    h_n = dt;
  }

  ObservationPath path;
  path.design.n = values.size() - 1;
  path.design.h_n = h_n;
  path.design.horizon = horizon;
  if (auto* f = std::get_if<HorizonFixedT>(&path.design.horizon)) {
    f->T = path.design.terminal_time();  // fixed horizon of an ingested path is its span
  }
  path.x0 = values.front();
  path.values = std::move(values);
  path.provenance.source = "ingested";
  path.design.validate();
  path.validate();
  return path;
}

void write_path_csv(const ObservationPath& path, const std::string& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot open output file: " + file);
  out << "t,x\n";
  char buf[64];
  for (std::size_t k = 0; k < path.values.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", static_cast<double>(k) * path.design.h_n,
                  path.values[k]);
    out << buf;
  }
  if (!out) throw IoError("failed writing path CSV: " + file);
}

}  // namespace stablelad
