#include "stablelad/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "stablelad/errors.hpp"
#include "stablelad/numerics.hpp"
#include "stablelad/rng.hpp"
#include "stablelad/stable_noise.hpp"
#include "stablelad/stats.hpp"
#include "stablelad/version.hpp"

namespace stablelad {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double rate_rn(std::size_t n, double h, double alpha) {
  return std::sqrt(static_cast<double>(n)) * std::pow(h, 1.0 - 1.0 / alpha);
}

}  // namespace

void CampaignConfig::validate() const {
  model.validate();
  validate_regressor_pair(regressor, model.drift);
  if (designs.empty()) throw ValidationError("campaign needs at least one design");
  for (std::size_t i = 0; i < designs.size(); ++i) {
    designs[i].design.validate();
    if (designs[i].fine_factor < 1) throw ValidationError("fine_factor must be >= 1");
    if (designs[i].id.empty()) throw ValidationError("design cells need nonempty ids");
    if (i > 0 && designs[i].design.n < designs[i - 1].design.n) {
      throw ValidationError("designs must be ordered by increasing n");
    }
  }
  if (replications < 1) throw ValidationError("campaign needs replications >= 1");
  pv.validate_against(model.levy, is_ergodic(designs.front().design.horizon));
}

std::string CampaignConfig::hash() const {
  std::ostringstream os;
  os << model.theta0.size() << ';';
  for (double t : model.theta0) os << fmt(t) << ',';
  os << "drift" << model.drift.index() << ';';
  if (const auto* b = std::get_if<BernoulliDrift>(&model.drift)) os << fmt(b->kappa) << ';';
  os << "sigma" << model.sigma.index() << ';';
  if (const auto* c = std::get_if<ScaleConstant>(&model.sigma)) os << fmt(c->value) << ';';
  if (const auto* s = std::get_if<ScaleSinusoidal>(&model.sigma)) {
    os << fmt(s->base) << ',' << fmt(s->amplitude) << ';';
  }
  os << "w" << model.weight_V.index() << ';';
  if (const auto* pd = std::get_if<WeightPolyDecay>(&model.weight_V)) {
    os << fmt(pd->p) << ',' << fmt(pd->scale) << ';';
  }
  for (std::size_t i = 0; i < model.theta_domain.dim(); ++i) {
    os << fmt(model.theta_domain.lo[i]) << ',' << fmt(model.theta_domain.hi[i]) << ';';
  }
  os << fmt(model.levy.alpha) << ";nu" << model.levy.nuisance.index() << ';';
  if (model.levy.tail_index_q) os << fmt(*model.levy.tail_index_q) << ';';
  os << static_cast<int>(regressor) << ';' << fmt(pv.rho) << ',' << fmt(pv.alpha_lo) << ','
     << fmt(pv.alpha_hi) << ',' << pv.window << ';' << replications << ';' << base_seed << ';'
     << static_cast<int>(studentizer) << ';';
  for (const auto& d : designs) {
    os << d.id << ',' << d.design.n << ',' << fmt(d.design.h_n) << ','
       << is_ergodic(d.design.horizon) << ',' << d.fine_factor << ';';
  }
  const std::string s = os.str();
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(std::span<const char>(s.data(), s.size()))));
  return buf;
}

NormalityReport normality_report(const std::vector<std::vector<double>>& z_records) {
  if (z_records.size() < 50) {
    throw ValidationError("normality diagnostics need at least 50 records");
  }
  const std::size_t m = z_records.front().size();
  NormalityReport rep;
  rep.count = z_records.size();
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> coord(z_records.size());
    for (std::size_t i = 0; i < z_records.size(); ++i) coord[i] = z_records[i][j];
    const KsResult ks = ks_test_standard_normal(coord);
    rep.ks_stat.push_back(ks.statistic);
    rep.ks_p.push_back(ks.p_value);
  }
  const double q90 = chi_square_quantile(0.90, static_cast<int>(m));
  const double q95 = chi_square_quantile(0.95, static_cast<int>(m));
  const double q99 = chi_square_quantile(0.99, static_cast<int>(m));
  std::size_t c90 = 0, c95 = 0, c99 = 0;
  for (const auto& z : z_records) {
    double norm2 = 0.0;
    for (double v : z) norm2 += v * v;
    if (norm2 <= q90) ++c90;
    if (norm2 <= q95) ++c95;
    if (norm2 <= q99) ++c99;
  }
  const double r = static_cast<double>(z_records.size());
  rep.cov90 = c90 / r;
  rep.cov95 = c95 / r;
  rep.cov99 = c99 / r;
  return rep;
}

Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw EstimationError("studentizer matrix not positive definite");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

namespace {

ReplicationRecord run_one(const CampaignConfig& cfg, std::size_t design_index,
                          std::size_t replication) {
  const DesignCell& cell = cfg.designs[design_index];
  const std::uint64_t seed =
      substream_seed(substream_seed(cfg.base_seed, design_index), replication);

  ReplicationRecord rec;
  rec.design_id = cell.id;
  rec.n = cell.design.n;
  rec.h = cell.design.h_n;
  rec.r_n = rate_rn(cell.design.n, cell.design.h_n, cfg.model.levy.alpha);
  rec.alpha_true = cfg.model.levy.alpha;
  rec.seed = seed;

  const int m = drift_dim(cfg.model.drift);
  try {
    const ObservationPath path = simulate_path(cfg.model, cell.design, cell.fine_factor, seed);

    const ModelLite lite{cfg.model.drift, cfg.model.weight_V, cfg.model.theta_domain};
    LadProblem problem{path, lite, cfg.regressor};
    const LadSolution sol = solve_lad(problem);
    rec.theta_hat = sol.theta_hat;
    rec.solver_iterations = sol.iterations;
    rec.converged = sol.converged;
    rec.boundary = sol.boundary;

    const IndexEstimate idx = estimate_alpha(path, cfg.pv);
    rec.alpha_hat = idx.alpha_hat;
    rec.alpha_clamped = idx.clamped;

    rec.u.resize(m);
    for (int j = 0; j < m; ++j) rec.u[j] = rec.r_n * (sol.theta_hat[j] - cfg.model.theta0[j]);

    // the studentized pivot pairs the rate with the same alpha that built the
    // covariance plug-in; with the data-driven A_hat that is r_n(alpha_hat)
    Eigen::MatrixXd root;
    double rate_for_z = rec.r_n;
    switch (cfg.studentizer) {
      case StudentizerMode::Identity:
        root = Eigen::MatrixXd::Identity(m, m);
        break;
      case StudentizerMode::Oracle: {
        std::vector<double> true_scales(path.n());
        for (std::size_t k = 1; k <= path.n(); ++k) {
          true_scales[k - 1] = scale_value(cfg.model.sigma, path.values[k - 1]);
        }
        const CovarianceEstimate est = assemble_covariance(
            path, sol.theta_hat, lite, cfg.model.levy.alpha, std::move(true_scales));
        root = inverse_sqrt_spd(est.avar_hat);
        break;
      }
      case StudentizerMode::DataDriven: {
        const CovarianceEstimate est = estimate_covariance(
            path, sol.theta_hat, lite, cfg.pv, idx.alpha_hat, ScaleMode::SpotScale);
        root = inverse_sqrt_spd(est.avar_hat);
        rate_for_z = rate_rn(cell.design.n, cell.design.h_n, idx.alpha_hat);
        break;
      }
    }
    Eigen::VectorXd scaled_err(m);
    for (int j = 0; j < m; ++j) scaled_err(j) = rate_for_z * (sol.theta_hat[j] - cfg.model.theta0[j]);
    const Eigen::VectorXd z = root * scaled_err;
    rec.z.assign(z.data(), z.data() + m);
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.failure = e.what();
    rec.theta_hat.assign(m, 0.0);
    rec.u.assign(m, 0.0);
    rec.z.assign(m, 0.0);
  }
  return rec;
}

}  // namespace

std::vector<ReplicationRecord> run_replications(const CampaignConfig& cfg) {
  cfg.validate();
  const std::size_t total = cfg.designs.size() * cfg.replications;
  std::vector<ReplicationRecord> records(total);

  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads)
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(total));

  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < total; i += workers) {
      const std::size_t d = i / cfg.replications;
      const std::size_t r = i % cfg.replications;
      records[i] = run_one(cfg, d, r);
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  return records;
}

CampaignSummary summarize(const std::vector<ReplicationRecord>& records,
                          const std::string& config_hash) {
  if (records.empty()) throw ValidationError("summarize: empty record set");
  CampaignSummary summary;
  summary.config_hash = config_hash;
  summary.version = kVersion;

  // group by design id, preserving first-seen order (records are ordered)
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (order.empty() || order.back() != r.design_id) {
      if (std::find(order.begin(), order.end(), r.design_id) == order.end()) {
        order.push_back(r.design_id);
      }
    }
  }

  for (const auto& id : order) {
    DesignSummary ds;
    ds.design_id = id;
    std::vector<const ReplicationRecord*> ok;
    std::vector<double> alpha_err;
    for (const auto& r : records) {
      if (r.design_id != id) continue;
      ++ds.replications;
      ds.n = r.n;
      ds.h = r.h;
      if (r.ok) {
        ok.push_back(&r);
      } else {
        ++ds.failures;
      }
    }
    if (!ok.empty()) {
      const std::size_t m = ok.front()->theta_hat.size();
      ds.rmse_u.assign(m, 0.0);
      ds.rmse_theta.assign(m, 0.0);
      double su = 0.0, st = 0.0;
      std::vector<std::vector<double>> zrec;
      zrec.reserve(ok.size());
      for (const auto* r : ok) {
        for (std::size_t j = 0; j < m; ++j) {
          const double uj = r->u[j];
          const double tj = uj / r->r_n;
          ds.rmse_u[j] += uj * uj;
          ds.rmse_theta[j] += tj * tj;
          su += uj * uj;
          st += tj * tj;
        }
        zrec.push_back(r->z);
        alpha_err.push_back(r->alpha_hat - r->alpha_true);
      }
      const double cnt = static_cast<double>(ok.size());
      for (std::size_t j = 0; j < m; ++j) {
        ds.rmse_u[j] = std::sqrt(ds.rmse_u[j] / cnt);
        ds.rmse_theta[j] = std::sqrt(ds.rmse_theta[j] / cnt);
      }
      ds.rmse_u_norm = std::sqrt(su / cnt);
      ds.rmse_theta_norm = std::sqrt(st / cnt);
      if (ok.size() >= 50) {
        const NormalityReport rep = normality_report(zrec);
        ds.ks_stat = rep.ks_stat;
        ds.ks_p = rep.ks_p;
        ds.cov90 = rep.cov90;
        ds.cov95 = rep.cov95;
        ds.cov99 = rep.cov99;
      }
      double se = 0.0, sse = 0.0;
      for (double e : alpha_err) {
        se += e;
        sse += e * e;
      }
      ds.alpha_mean_error = se / cnt;
      ds.alpha_rmse = std::sqrt(sse / cnt);
    }
    summary.designs.push_back(std::move(ds));
  }
  return summary;
}

// ---------------------------------------------------------------------------
// CSV emission / ingestion

namespace {

constexpr const char* kRecordsHeaderTag = "# stablelad-records v1";
constexpr const char* kSummaryHeaderTag = "# stablelad-summary v1";

}  // namespace

void emit_reports(const CampaignSummary& summary, const std::vector<ReplicationRecord>& records,
                  const std::string& dir) {
  if (records.empty()) throw ValidationError("emit_reports: empty record set");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());

  const std::size_t m = records.front().theta_hat.size();

  {
    std::ofstream out(dir + "/records.csv");
    if (!out) throw IoError("cannot open " + dir + "/records.csv");
    out << kRecordsHeaderTag << "\n";
    out << "design_id,n,h,r_n,seed,ok,failure,alpha_hat,alpha_true,alpha_clamped,"
           "solver_iterations,converged,boundary";
    for (std::size_t j = 1; j <= m; ++j) out << ",theta_hat_" << j;
    for (std::size_t j = 1; j <= m; ++j) out << ",u_" << j;
    for (std::size_t j = 1; j <= m; ++j) out << ",z_" << j;
    out << "\n";
    for (const auto& r : records) {
      std::string failure = r.failure;
      std::replace(failure.begin(), failure.end(), ',', ';');
      std::replace(failure.begin(), failure.end(), '\n', ' ');
      out << r.design_id << ',' << r.n << ',' << fmt(r.h) << ',' << fmt(r.r_n) << ',' << r.seed
          << ',' << (r.ok ? 1 : 0) << ',' << failure << ',' << fmt(r.alpha_hat) << ','
          << fmt(r.alpha_true) << ',' << (r.alpha_clamped ? 1 : 0) << ',' << r.solver_iterations
          << ',' << (r.converged ? 1 : 0) << ',' << (r.boundary ? 1 : 0);
      for (double v : r.theta_hat) out << ',' << fmt(v);
      for (double v : r.u) out << ',' << fmt(v);
      for (double v : r.z) out << ',' << fmt(v);
      out << "\n";
    }
    if (!out) throw IoError("failed writing records.csv");
  }

  {
    std::ofstream out(dir + "/summary.csv");
    if (!out) throw IoError("cannot open " + dir + "/summary.csv");
    out << kSummaryHeaderTag << " config=" << summary.config_hash
        << " version=" << summary.version << "\n";
    out << "design_id,n,h,replications,failures,rmse_u_norm,rmse_theta_norm";
    for (std::size_t j = 1; j <= m; ++j) out << ",rmse_u_" << j;
    for (std::size_t j = 1; j <= m; ++j) out << ",rmse_theta_" << j;
    for (std::size_t j = 1; j <= m; ++j) out << ",ks_stat_" << j;
    for (std::size_t j = 1; j <= m; ++j) out << ",ks_p_" << j;
    out << ",cov90,cov95,cov99,alpha_mean_error,alpha_rmse\n";
    for (const auto& d : summary.designs) {
      out << d.design_id << ',' << d.n << ',' << fmt(d.h) << ',' << d.replications << ','
          << d.failures << ',' << fmt(d.rmse_u_norm) << ',' << fmt(d.rmse_theta_norm);
      auto dump = [&](const std::vector<double>& v) {
        for (std::size_t j = 0; j < m; ++j) out << ',' << fmt(j < v.size() ? v[j] : 0.0);
      };
      dump(d.rmse_u);
      dump(d.rmse_theta);
      dump(d.ks_stat);
      dump(d.ks_p);
      out << ',' << fmt(d.cov90) << ',' << fmt(d.cov95) << ',' << fmt(d.cov99) << ','
          << fmt(d.alpha_mean_error) << ',' << fmt(d.alpha_rmse) << "\n";
    }
    if (!out) throw IoError("failed writing summary.csv");
  }

  {
    std::ofstream out(dir + "/summary.txt");
    if (!out) throw IoError("cannot open " + dir + "/summary.txt");
    out << format_summary_table(summary);
    if (!out) throw IoError("failed writing summary.txt");
  }
}

std::string format_summary_table(const CampaignSummary& summary) {
  std::ostringstream os;
  os << "stablelad campaign summary (version " << summary.version << ", config "
     << summary.config_hash << ")\n\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %8s %12s %5s %5s %12s %12s %8s %8s %8s\n", "design", "n",
                "h", "R", "fail", "rmse|u|", "rmse|th|", "cov90", "cov95", "cov99");
  os << buf;
  for (const auto& d : summary.designs) {
    if (d.ks_stat.empty()) {  // too few successes for normality diagnostics
      std::snprintf(buf, sizeof(buf), "%-12s %8zu %12.5g %5zu %5zu %12.5g %12.5g %8s %8s %8s\n",
                    d.design_id.c_str(), d.n, d.h, d.replications, d.failures, d.rmse_u_norm,
                    d.rmse_theta_norm, "n/a", "n/a", "n/a");
    } else {
      std::snprintf(buf, sizeof(buf),
                    "%-12s %8zu %12.5g %5zu %5zu %12.5g %12.5g %8.3f %8.3f %8.3f\n",
                    d.design_id.c_str(), d.n, d.h, d.replications, d.failures, d.rmse_u_norm,
                    d.rmse_theta_norm, d.cov90, d.cov95, d.cov99);
    }
    os << buf;
    for (std::size_t j = 0; j < d.ks_stat.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "    z_%zu: KS = %.4f (p = %.4g)\n", j + 1, d.ks_stat[j],
                    d.ks_p[j]);
      os << buf;
    }
  }
  return os.str();
}

std::vector<ReplicationRecord> read_records_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open records file: " + file);
  std::string line;
  if (!std::getline(in, line) || line.rfind(kRecordsHeaderTag, 0) != 0) {
    throw ValidationError("records file does not start with '" + std::string(kRecordsHeaderTag) +
                          "'");
  }
  if (!std::getline(in, line)) throw ValidationError("records file has no column header");
  std::size_t m = 0;
  {
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) {
      if (col.rfind("theta_hat_", 0) == 0) ++m;
    }
  }
  if (m == 0) throw ValidationError("records file has no theta_hat columns");

  std::vector<ReplicationRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> f;
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 13 + 3 * m) {
      throw ValidationError("records row has wrong column count: " + line);
    }
    ReplicationRecord r;
    r.design_id = f[0];
    r.n = std::stoull(f[1]);
    r.h = std::stod(f[2]);
    r.r_n = std::stod(f[3]);
    r.seed = std::stoull(f[4]);
    r.ok = f[5] == "1";
    r.failure = f[6];
    r.alpha_hat = std::stod(f[7]);
    r.alpha_true = std::stod(f[8]);
    r.alpha_clamped = f[9] == "1";
    r.solver_iterations = std::stoi(f[10]);
    r.converged = f[11] == "1";
    r.boundary = f[12] == "1";
    for (std::size_t j = 0; j < m; ++j) r.theta_hat.push_back(std::stod(f[13 + j]));
    for (std::size_t j = 0; j < m; ++j) r.u.push_back(std::stod(f[13 + m + j]));
    for (std::size_t j = 0; j < m; ++j) r.z.push_back(std::stod(f[13 + 2 * m + j]));
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ValidationError("records file has no data rows");
  return records;
}

CampaignSummary run_campaign(const CampaignConfig& cfg) {
  if (cfg.out_dir.empty()) throw ValidationError("campaign requires an output directory");
  const std::vector<ReplicationRecord> records = run_replications(cfg);
  CampaignSummary summary = summarize(records, cfg.hash());
  emit_reports(summary, records, cfg.out_dir);
  return summary;
}

}  // namespace stablelad
