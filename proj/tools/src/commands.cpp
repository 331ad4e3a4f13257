#include "stablelad_cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>

#include "stablelad/errors.hpp"
#include "stablelad/experiments.hpp"
#include "stablelad/numerics.hpp"
#include "stablelad/rng.hpp"
#include "stablelad/stable_noise.hpp"
#include "stablelad/stats.hpp"
#include "stablelad_cli/config.hpp"

namespace stablelad::cli {

namespace {

ConfigMap load_config(const CommonOptions& opt) {
  ConfigMap cfg = ConfigMap::from_file(opt.config_path);
  for (const auto& ov : opt.overrides) cfg.set_override(ov);
  cfg.reject_unknown_keys();
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

int run_guarded(const std::string& name, const std::function<int()>& fn, bool quiet) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    std::cerr << name << ": validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const EstimationError& e) {
    std::cerr << name << ": estimation failure: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const SimulationError& e) {
    std::cerr << name << ": simulation failure: " << e.what() << "\n";
    return kExitEstimation;
  } catch (const IoError& e) {
    std::cerr << name << ": io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    if (!quiet) std::cerr << name << ": error: " << e.what() << "\n";
    return kExitValidation;
  }
}

int cmd_simulate(const CommonOptions& opt) {
  const ConfigMap cfg = load_config(opt);
  const ModelSpec model = build_model(cfg);
  const SamplingDesign design = build_design(cfg);
  const int ff = config_fine_factor(cfg);

  const ObservationPath path = simulate_path(model, design, ff, opt.seed);
  ensure_out_dir(opt.out_dir);
  const std::string file = opt.out_dir + "/path.csv";
  write_path_csv(path, file);
  if (!opt.quiet) {
    std::cout << "wrote " << file << " (n = " << path.n() << ", h = " << fmt(path.h())
              << ", seed = " << opt.seed << ")\n";
    for (const auto& w : path.provenance.warnings) std::cout << "warning: " << w << "\n";
  }
  return kExitOk;
}

int cmd_estimate(const CommonOptions& opt, const std::string& path_csv,
                 std::optional<double> rho_override,
                 std::optional<std::string> regressor_override) {
  ConfigMap cfg = load_config(opt);
  if (rho_override) cfg.set_override("estimate.rho=" + fmt(*rho_override));
  if (regressor_override) cfg.set_override("estimate.regressor=" + *regressor_override);

  const ModelLite lite = build_model_lite(cfg);
  const RegressorKind regressor = build_regressor(cfg);
  validate_regressor_pair(regressor, lite.drift);
  const PowerVariationConfig pv = build_pv(cfg);

  double h_hint = 0.0;
  if (cfg.has("design.h")) h_hint = cfg.get_double("design.h");
  HorizonSpec horizon = HorizonErgodic{};
  if (cfg.get_string("design.horizon", std::string("ergodic")) == "fixed") {
    horizon = HorizonFixedT{cfg.get_double("design.T", 1.0)};
  }
  const ObservationPath path = ingest_path(path_csv, h_hint, horizon);

  const LadProblem problem{path, lite, regressor};
  const LadSolution sol = solve_lad(problem);
  if (sol.boundary) {
    throw EstimationError("optimum sits on the boundary of the theta domain; widen the box");
  }

  const IndexEstimate idx = estimate_alpha(path, pv);
  const double sigma_const = estimate_constant_scale(path, pv.rho, idx.alpha_hat);
  const std::string mode_str = cfg.get_string("estimate.scale_mode", std::string("spot"));
  const ScaleMode mode = mode_str == "constant" ? ScaleMode::ConstantScale : ScaleMode::SpotScale;
  const CovarianceEstimate cov =
      estimate_covariance(path, sol.theta_hat, lite, pv, idx.alpha_hat, mode);

  const double n = static_cast<double>(path.n());
  const double r_n = std::sqrt(n) * std::pow(path.h(), 1.0 - 1.0 / idx.alpha_hat);
  const std::size_t m = sol.theta_hat.size();

  std::vector<double> se(m), ci_lo(m), ci_hi(m), tstat(m);
  for (std::size_t j = 0; j < m; ++j) {
    se[j] = std::sqrt(cov.avar_hat(j, j)) / r_n;
    ci_lo[j] = sol.theta_hat[j] - 1.96 * se[j];
    ci_hi[j] = sol.theta_hat[j] + 1.96 * se[j];
    tstat[j] = sol.theta_hat[j] / se[j];
  }

  std::vector<double> spot_sorted = cov.spot_scales;
  const double spot_med = median(spot_sorted);
  double spot_min = spot_sorted.front(), spot_max = spot_sorted.front();
  for (double s : cov.spot_scales) {
    spot_min = std::min(spot_min, s);
    spot_max = std::max(spot_max, s);
  }

  ensure_out_dir(opt.out_dir);
  {
    std::ofstream out(opt.out_dir + "/estimate.csv");
    if (!out) throw IoError("cannot open " + opt.out_dir + "/estimate.csv");
    out << "# stablelad-estimate v1\nkey,value\n";
    out << "n," << path.n() << "\nh," << fmt(path.h()) << "\n";
    out << "regressor," << regressor_name(regressor) << "\n";
    out << "alpha_hat," << fmt(idx.alpha_hat) << "\nalpha_clamped," << (idx.clamped ? 1 : 0)
        << "\n";
    out << "rho," << fmt(pv.rho) << "\nr_n," << fmt(r_n) << "\n";
    out << "sigma_const," << fmt(sigma_const) << "\n";
    out << "spot_min," << fmt(spot_min) << "\nspot_median," << fmt(spot_med) << "\nspot_max,"
        << fmt(spot_max) << "\n";
    out << "objective," << fmt(sol.objective_value) << "\nsolver_converged,"
        << (sol.converged ? 1 : 0) << "\n";
    for (std::size_t j = 0; j < m; ++j) {
      out << "theta_hat_" << j + 1 << ',' << fmt(sol.theta_hat[j]) << "\n";
      out << "se_" << j + 1 << ',' << fmt(se[j]) << "\n";
      out << "ci95_lo_" << j + 1 << ',' << fmt(ci_lo[j]) << "\n";
      out << "ci95_hi_" << j + 1 << ',' << fmt(ci_hi[j]) << "\n";
      out << "tstat_" << j + 1 << ',' << fmt(tstat[j]) << "\n";
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        out << "gamma_" << i + 1 << j + 1 << ',' << fmt(cov.gamma_hat(i, j)) << "\n";
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        out << "sigma_" << i + 1 << j + 1 << ',' << fmt(cov.sigma_mat_hat(i, j)) << "\n";
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        out << "avar_" << i + 1 << j + 1 << ',' << fmt(cov.avar_hat(i, j)) << "\n";
      }
    }
    if (!out) throw IoError("failed writing estimate.csv");
  }

  std::ostringstream text;
  text << "stablelad estimate (n = " << path.n() << ", h = " << fmt(path.h()) << ")\n";
  text << "regressor: " << regressor_name(regressor) << ", scale mode: " << mode_str << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "alpha_hat = %.4f%s   sigma_const = %.4f   r_n = %.4f\n",
                idx.alpha_hat, idx.clamped ? " (clamped)" : "", sigma_const, r_n);
  text << buf;
  std::snprintf(buf, sizeof(buf), "spot scales: min %.4f  median %.4f  max %.4f\n", spot_min,
                spot_med, spot_max);
  text << buf;
  for (std::size_t j = 0; j < m; ++j) {
    std::snprintf(buf, sizeof(buf),
                  "theta_%zu = % .6f   se = %.6f   95%% CI [% .6f, % .6f]   t = % .3f\n", j + 1,
                  sol.theta_hat[j], se[j], ci_lo[j], ci_hi[j], tstat[j]);
    text << buf;
  }
  {
    std::ofstream out(opt.out_dir + "/estimate.txt");
    if (!out) throw IoError("cannot open " + opt.out_dir + "/estimate.txt");
    out << text.str();
  }
  if (!opt.quiet) std::cout << text.str();
  return kExitOk;
}

int cmd_index(const CommonOptions& opt, const std::string& path_csv, double rho,
              std::optional<double> h) {
  PowerVariationConfig pv;
  pv.rho = rho;
  pv.validate();
  // h is irrelevant for alpha_hat (ratio statistic); default 1/n for H1/H2
  ObservationPath path = [&] {
    try {
      return ingest_path(path_csv, h.value_or(0.0), HorizonErgodic{});
    } catch (const ValidationError& e) {
      if (!h && std::string(e.what()).find("requires an explicit h_n") != std::string::npos) {
        // single-column file without --h: count rows first via a 2-pass read
        std::ifstream in(path_csv);
        std::size_t rows = 0;
        std::string line;
        while (std::getline(in, line)) ++rows;
        if (rows < 2) throw;
        return ingest_path(path_csv, 1.0 / static_cast<double>(rows - 2), HorizonErgodic{});
      }
      throw;
    }
  }();

  const IndexEstimate idx = estimate_alpha(path, pv);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "alpha_hat = %.6f%s\nH1 = %.6g\nH2 = %.6g\nratio = %.6f\nrho = %.3f\nn = %zu\n",
                idx.alpha_hat, idx.clamped ? " (clamped)" : "", idx.H1, idx.H2, idx.ratio, pv.rho,
                path.n());
  if (!opt.quiet) std::cout << buf;
  ensure_out_dir(opt.out_dir);
  std::ofstream out(opt.out_dir + "/index.txt");
  if (!out) throw IoError("cannot open " + opt.out_dir + "/index.txt");
  out << buf;
  return kExitOk;
}

int cmd_mc(const CommonOptions& opt) {
  const ConfigMap cfg = load_config(opt);
  const CampaignConfig campaign = build_campaign(cfg, opt.out_dir, opt.seed);
  const CampaignSummary summary = run_campaign(campaign);
  if (!opt.quiet) std::cout << format_summary_table(summary);

  std::size_t total = 0, failures = 0;
  for (const auto& d : summary.designs) {
    total += d.replications;
    failures += d.failures;
  }
  const double failure_rate = total > 0 ? static_cast<double>(failures) / total : 1.0;
  if (failure_rate >= 0.05) {
    std::cerr << "campaign failure rate " << failure_rate << " exceeds 5%\n";
    return kExitEstimation;
  }
  return kExitOk;
}

int cmd_selftest(bool quiet) {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    if (!quiet || !ok) std::cout << (ok ? "[ok]   " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  {
    SplitMix64 rng(0x5E1F7E57u);
    bool ok = true;
    double worst = 0.0;
    for (int i = 0; i < 1'000'000; ++i) {
      const double x = rng.uniform(-5.0, 5.0);
      const double v = rng.uniform(-5.0, 5.0);
      if (x == 0.0) continue;
      worst = std::max(worst, q_identity_residual(x, v));
    }
    ok = worst < 1e-14;
    check("q identity residual < 1e-14 over 1e6 pairs", ok);
  }
  {
    bool ok = true;
    SplitMix64 rng(7u);
    for (int i = 0; i < 1000; ++i) {
      const double v = rng.uniform(-3.0, 3.0);
      const double expected = std::abs(v) <= 1.0 ? v * v : 2.0 * std::abs(v) - 1.0;
      if (std::abs(q_integral(v) - expected) > 1e-12) ok = false;
    }
    check("q integral closed form", ok);
  }
  {
    bool ok = true;
    for (double alpha : {0.6, 1.0, 1.5, 1.9}) {
      const double r_cut = std::pow(36.8, 1.0 / alpha);  // e^{-R^alpha} < 1e-16
      const double quad = integrate_gk([alpha](double t) { return std::exp(-std::pow(t, alpha)); },
                                       0.0, r_cut, 1e-12, 1e-12) /
                          3.14159265358979323846;
      if (std::abs(quad - stable_density_at_zero(alpha)) > 1e-8) ok = false;
    }
    check("phi_alpha(0) against quadrature", ok);
  }
  check("m_1(0.5) = sqrt(2)",
        std::abs(stable_fractional_moment(1.0, 0.5) - std::sqrt(2.0)) < 1e-10);

  return failures == 0 ? kExitOk : kExitValidation;
}

}  // namespace stablelad::cli
