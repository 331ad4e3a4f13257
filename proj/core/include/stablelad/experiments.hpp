#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stablelad/index_scale.hpp"
#include "stablelad/lad.hpp"
#include "stablelad/sde_sim.hpp"

namespace stablelad {

struct DesignCell {
  std::string id;
  SamplingDesign design;
  int fine_factor = 32;
};

enum class StudentizerMode {
  DataDriven,  // plug-in A_hat from alpha_hat, spot scales, theta_hat
  Oracle,      // true alpha and true scale function (plug-in diagnostics)
  Identity     // A_hat forced to I (test hook: z == u)
};

struct CampaignConfig {
  ModelSpec model;
  std::vector<DesignCell> designs;
  RegressorKind regressor = RegressorKind::Euler;
  PowerVariationConfig pv;
  std::size_t replications = 100;
  std::uint64_t base_seed = 1;
  std::string out_dir;
  StudentizerMode studentizer = StudentizerMode::DataDriven;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;
  /// FNV-1a fingerprint of the canonical serialization (summary provenance).
  std::string hash() const;
};

struct ReplicationRecord {
  std::string design_id;
  std::size_t n = 0;
  double h = 0.0;
  double r_n = 0.0;  // sqrt(n) h^(1 - 1/alpha_true); constant within a design
  std::uint64_t seed = 0;
  bool ok = false;
  std::string failure;  // empty on success
  std::vector<double> theta_hat;
  std::vector<double> u;  // r_n (theta_hat - theta0)
  std::vector<double> z;  // A_hat^{-1/2} u
  double alpha_hat = 0.0;
  double alpha_true = 0.0;  // campaign metadata carried per row for summarization
  bool alpha_clamped = false;
  int solver_iterations = 0;
  bool converged = false;
  bool boundary = false;
};

struct DesignSummary {
  std::string design_id;
  std::size_t n = 0;
  double h = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::vector<double> rmse_u;      // per theta coordinate
  std::vector<double> rmse_theta;  // per coordinate, of theta_hat - theta0 (= u / r_n)
  double rmse_u_norm = 0.0;
  double rmse_theta_norm = 0.0;
  std::vector<double> ks_stat;  // per z coordinate, against N(0,1)
  std::vector<double> ks_p;
  double cov90 = 0.0, cov95 = 0.0, cov99 = 0.0;  // chi-square ellipsoid coverage of z
  double alpha_mean_error = 0.0;
  double alpha_rmse = 0.0;
};

struct CampaignSummary {
  std::vector<DesignSummary> designs;
  std::string config_hash;
  std::string version;
};

struct NormalityReport {
  std::vector<double> ks_stat;
  std::vector<double> ks_p;
  double cov90 = 0.0, cov95 = 0.0, cov99 = 0.0;
  std::size_t count = 0;
};

/// Per-coordinate KS diagnostics against N(0,1) plus joint chi-square
/// ellipsoid coverage at the 90/95/99% levels; needs >= 50 records.
NormalityReport normality_report(const std::vector<std::vector<double>>& z_records);

/// A^{-1/2} of a symmetric positive-definite matrix via eigendecomposition
/// (the studentizer root).
Eigen::MatrixXd inverse_sqrt_spd(const Eigen::MatrixXd& a);

/// Simulate -> solve_lad -> index/scale/avar plug-in -> (u, z) per replication.
/// Replication r of design d uses seed substream_seed(substream_seed(base_seed, d), r).
/// Failures are recorded per replication, never dropped.
std::vector<ReplicationRecord> run_replications(const CampaignConfig& cfg);

/// Aggregates records into per-design summaries. Uses exclusively the record
/// fields, so re-ingested records reproduce the summary bit-identically.
CampaignSummary summarize(const std::vector<ReplicationRecord>& records,
                          const std::string& config_hash);

/// Writes records.csv, summary.csv, summary.txt under dir (refuses empty sets).
void emit_reports(const CampaignSummary& summary, const std::vector<ReplicationRecord>& records,
                  const std::string& dir);

std::vector<ReplicationRecord> read_records_csv(const std::string& file);

/// run_replications + summarize + emit_reports under cfg.out_dir.
CampaignSummary run_campaign(const CampaignConfig& cfg);

std::string format_summary_table(const CampaignSummary& summary);

}  // namespace stablelad
