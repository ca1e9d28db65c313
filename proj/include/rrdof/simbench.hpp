#pragma once

// Seeded simulation studies: (1) comparison of df estimators on a fixed
// design, (2) prediction performance of GCV with exact vs naive df.
//
// Data model: rows of X ~ N_p(0, Sigma) with Sigma_jk = rho^|j-k|;
// B = E_r0 diag(r0*gap, ..., 2*gap, gap) R', where E_r0 holds the leading
// eigenvectors of Sigma and R is an orthonormalized q x r0 standard normal
// matrix; Y = X B + E with iid N(0, sigma2) errors.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rrdof/dof.hpp"

namespace rrdof {

struct SimConfig {
  std::string name = "custom";
  Index n = 50, p = 10, q = 8, r0 = 4;
  double sigma2 = 1.0;
  double rho = 0.3;
  double sv_gap = 2.0;
  Index reps = 200;
  std::uint64_t seed = 20130101;
  Index n_pert = 50;          // perturbations per replication (df study)
  double pert_scale = 0.1;    // perturbation sd as a multiple of sigma
  bool fixed_design = true;   // draw X once (df study) or per replication

  void validate() const;
};

/// Named presets: setting1, setting2 (full df studies), setting1-desk,
/// setting2-desk (scaled for CI), ld, hd (prediction studies).
SimConfig preset(std::string_view name);
std::vector<std::string> preset_names();

struct SimInstance {
  Eigen::MatrixXd x;              // n x p
  Eigen::MatrixXd b;              // p x q, rank r0
  Eigen::MatrixXd noise;          // n x q
  Eigen::MatrixXd y;              // X B + noise
  Eigen::MatrixXd sigma_eigvecs;  // p x r0, leading eigenvectors of Sigma
};

Eigen::MatrixXd ar1_covariance(Index p, double rho);
Eigen::MatrixXd leading_eigenvectors(const Eigen::MatrixXd& sym, Index count);
Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m);

/// Replication rep_index of cfg. X comes from substream (seed, design, 0) when
/// cfg.fixed_design and from (seed, design, rep_index + 1) otherwise; the
/// right factor of B from (seed, coefficients, 0); the noise from
/// (seed, noise, rep_index).
SimInstance gen_instance(const SimConfig& cfg, Index rep_index);

/// d_r0(XB) / d_1(E) with d_r0 the smallest nonzero singular value of XB.
double snr(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b, const Eigen::MatrixXd& e);

struct Moments {
  double mean = 0.0;
  double sd = 0.0;  // sample sd across replications
  double se = 0.0;  // sd / sqrt(reps)
};

Moments summarize(const std::vector<double>& values);
double median(std::vector<double> values);

struct RankDof {
  Index rank = 0;
  double naive = 0.0;
  Moments naive_spread;      // identically zero: the naive count ignores the data
  Moments exact;
  Moments perturbation;
  double monte_carlo = 0.0;  // covariance over the study's own replications
  double monte_carlo_se = 0.0;
  Index degenerate_reps = 0;
};

struct DofStudyResult {
  SimConfig config;
  Index r_x = 0;
  Index r_bar = 0;
  std::vector<RankDof> per_rank;
  std::vector<std::vector<double>> exact_by_rep;  // [rep][rank-1]
};

struct PredReplication {
  double snr = 0.0;
  double est_exact = 0.0, est_naive = 0.0;
  double pred_exact = 0.0, pred_naive = 0.0;
  Index rank_exact = 0, rank_naive = 0;
  double prg = 0.0;  // 100 (Pred(n) - Pred(e)) / Pred(e)
};

struct PredStudyResult {
  SimConfig config;
  std::vector<PredReplication> reps;
  Moments snr, est_exact, est_naive, pred_exact, pred_naive, rank_exact, rank_naive, prg;
  double prg_median = 0.0;
};

DofStudyResult run_dof_study(const SimConfig& cfg, std::size_t jobs = 1);
PredStudyResult run_pred_study(const SimConfig& cfg, std::size_t jobs = 1);

}  // namespace rrdof
