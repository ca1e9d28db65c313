#include <cmath>

#include "rrdof/simbench.hpp"
#include "test_support.hpp"

using namespace rrdof;

namespace {

SimConfig small_dof_config() {
  SimConfig c = preset("setting1-desk");
  c.reps = 30;
  c.n_pert = 10;
  return c;
}

SimConfig small_pred_config() {
  SimConfig c = preset("ld");
  c.reps = 12;
  return c;
}

}  // namespace

TEST(Presets, AllValidAndNamed) {
  for (const std::string& name : preset_names()) {
    const SimConfig c = preset(name);
    EXPECT_EQ(c.name, name);
    EXPECT_NO_THROW(c.validate());
  }
  EXPECT_EQ(preset("setting1").n, 100);
  EXPECT_EQ(preset("setting2").p, 80);
  EXPECT_FALSE(preset("hd").fixed_design);
  EXPECT_RRDOF_ERROR(preset("nope"), Errc::config);
}

TEST(SimConfig, ValidationErrors) {
  SimConfig c;
  c.r0 = 9;
  EXPECT_RRDOF_ERROR(c.validate(), Errc::config);
  c = SimConfig{};
  c.sigma2 = 0.0;
  EXPECT_RRDOF_ERROR(c.validate(), Errc::config);
  c = SimConfig{};
  c.rho = 1.0;
  EXPECT_RRDOF_ERROR(c.validate(), Errc::config);
  c = SimConfig{};
  c.reps = 1;
  EXPECT_RRDOF_ERROR(c.validate(), Errc::config);
  EXPECT_RRDOF_ERROR(gen_instance(SimConfig{}, -1), Errc::config);
}

TEST(GenInstance, ZeroCorrelationUsesCoordinateBasis) {
  SimConfig c;
  c.rho = 0.0;
  EXPECT_EQ(ar1_covariance(c.p, 0.0), Eigen::MatrixXd::Identity(c.p, c.p));
  const SimInstance inst = gen_instance(c, 0);
  for (Index k = 0; k < c.r0; ++k) {
    EXPECT_NEAR(inst.sigma_eigvecs.col(k).cwiseAbs().maxCoeff(), 1.0, 1e-12);
    EXPECT_NEAR(inst.sigma_eigvecs.col(k).norm(), 1.0, 1e-12);
  }
}

TEST(GenInstance, CoefficientStructure) {
  const SimConfig c = preset("setting1-desk");
  const SimInstance inst = gen_instance(c, 0);
  const Eigen::VectorXd d = Eigen::JacobiSVD<Eigen::MatrixXd>(inst.b).singularValues();
  for (Index k = 0; k < c.r0; ++k) EXPECT_NEAR(d(k), c.sv_gap * static_cast<double>(c.r0 - k), 1e-10);
  for (Index k = c.r0; k < d.size(); ++k) EXPECT_LT(d(k), 1e-10);
  // Left factor spans the leading eigenvectors of Sigma.
  const Eigen::MatrixXd e = inst.sigma_eigvecs;
  EXPECT_LT((e * e.transpose() * inst.b - inst.b).norm(), 1e-10);
  EXPECT_LT((inst.y - inst.x * inst.b - inst.noise).norm(), 1e-12);
}

TEST(GenInstance, NoiselessSignalHasTrueRank) {
  const SimConfig c = preset("setting1-desk");
  const SimInstance inst = gen_instance(c, 0);
  const Eigen::VectorXd d = Eigen::JacobiSVD<Eigen::MatrixXd>(inst.x * inst.b).singularValues();
  EXPECT_EQ(effective_rank(d), c.r0);
}

TEST(GenInstance, DesignRowsFollowSigma) {
  SimConfig c = preset("setting1");
  c.n = 5000;
  const SimInstance inst = gen_instance(c, 0);
  const Eigen::MatrixXd centred = inst.x.rowwise() - inst.x.colwise().mean();
  const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(c.n - 1);
  EXPECT_LT((cov - ar1_covariance(c.p, c.rho)).cwiseAbs().maxCoeff(), 0.1);
}

TEST(GenInstance, FixedDesignSharesXAcrossReplications) {
  SimConfig c = preset("setting1-desk");
  const SimInstance a = gen_instance(c, 0), b = gen_instance(c, 3);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.b, b.b);
  EXPECT_NE(a.noise, b.noise);
  c.fixed_design = false;
  EXPECT_NE(gen_instance(c, 0).x, gen_instance(c, 3).x);
  EXPECT_EQ(gen_instance(c, 3).noise, b.noise);
}

TEST(Snr, ErrorsAndHomogeneity) {
  const SimInstance inst = gen_instance(preset("ld"), 0);
  const double base = snr(inst.x, inst.b, inst.noise);
  EXPECT_GT(base, 0.0);
  EXPECT_NEAR(snr(inst.x, Eigen::MatrixXd(3.0 * inst.b), inst.noise), 3.0 * base, 1e-10 * base);
  EXPECT_RRDOF_ERROR(snr(inst.x, inst.b, Eigen::MatrixXd::Zero(inst.noise.rows(), inst.noise.cols())),
                     Errc::undefined_snr);
  EXPECT_RRDOF_ERROR(snr(inst.x, Eigen::MatrixXd::Zero(inst.b.rows(), inst.b.cols()), inst.noise),
                     Errc::undefined_snr);
}

TEST(Snr, LowDimensionalSettingIsOrderOne) {
  // B's offset is not pinned down, so only the order of magnitude is checked.
  const SimConfig c = preset("ld");
  double sum = 0.0;
  for (Index r = 0; r < 40; ++r) {
    const SimInstance inst = gen_instance(c, r);
    sum += snr(inst.x, inst.b, inst.noise);
  }
  const double mean = sum / 40.0;
  EXPECT_GT(mean, 0.5);
  EXPECT_LT(mean, 2.0);
}

TEST(Summaries, MomentsAndMedian) {
  const Moments m = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.sd, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_NEAR(m.se, m.sd / 2.0, 1e-15);
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_RRDOF_ERROR(median({}), Errc::domain);
}

TEST(DofStudy, Structure) {
  const SimConfig c = small_dof_config();
  const DofStudyResult r = run_dof_study(c);
  EXPECT_EQ(r.r_x, c.p);
  EXPECT_EQ(r.r_bar, std::min(c.p, c.q));
  ASSERT_EQ(static_cast<Index>(r.per_rank.size()), r.r_bar);
  ASSERT_EQ(static_cast<Index>(r.exact_by_rep.size()), c.reps);
  for (const RankDof& rd : r.per_rank) {
    EXPECT_EQ(rd.naive, naive_df(c.p, c.q, rd.rank));
    EXPECT_EQ(rd.naive_spread.sd, 0.0);
    EXPECT_EQ(rd.naive_spread.se, 0.0);
    EXPECT_GE(rd.exact.mean, rd.naive - 1e-9);
    EXPECT_TRUE(std::isfinite(rd.perturbation.mean));
  }
  EXPECT_EQ(r.per_rank.back().exact.mean, static_cast<double>(c.p * c.q));
  EXPECT_EQ(r.per_rank.back().exact.sd, 0.0);
  // Strong signal: exact is close to naive at the true rank.
  const RankDof& at_r0 = r.per_rank[static_cast<std::size_t>(c.r0 - 1)];
  EXPECT_LT(std::abs(at_r0.exact.mean - at_r0.naive) / at_r0.naive, 0.05);
}

TEST(DofStudy, RejectsRandomDesign) {
  SimConfig c = small_dof_config();
  c.fixed_design = false;
  EXPECT_RRDOF_ERROR(run_dof_study(c), Errc::config);
}

TEST(DofStudy, DeterministicAcrossJobs) {
  const SimConfig c = small_dof_config();
  const DofStudyResult a = run_dof_study(c, 1), b = run_dof_study(c, 3);
  EXPECT_EQ(a.exact_by_rep, b.exact_by_rep);
  for (std::size_t k = 0; k < a.per_rank.size(); ++k) {
    EXPECT_EQ(a.per_rank[k].perturbation.mean, b.per_rank[k].perturbation.mean);
    EXPECT_EQ(a.per_rank[k].monte_carlo, b.per_rank[k].monte_carlo);
  }
}

TEST(PredStudy, StructureAndMetrics) {
  const SimConfig c = small_pred_config();
  const PredStudyResult r = run_pred_study(c);
  ASSERT_EQ(static_cast<Index>(r.reps.size()), c.reps);
  for (const PredReplication& rep : r.reps) {
    EXPECT_GE(rep.pred_exact, 0.0);
    EXPECT_GE(rep.est_naive, 0.0);
    EXPECT_GE(rep.rank_exact, 1);
    EXPECT_LE(rep.rank_exact, std::min(c.p, c.q));
    EXPECT_NEAR(rep.prg, 100.0 * (rep.pred_naive - rep.pred_exact) / rep.pred_exact, 1e-9);
  }
  EXPECT_TRUE(std::isfinite(r.prg_median));
}

TEST(PredStudy, NearNoiselessNeverUnderfits) {
  // Exact zero noise is outside the config; with tiny noise the directions past
  // r0 are pure noise, which GCV may still fit because it is scale invariant.
  SimConfig c = small_pred_config();
  c.sigma2 = 1e-16;
  c.reps = 6;
  const PredStudyResult r = run_pred_study(c);
  for (const PredReplication& rep : r.reps) {
    EXPECT_GE(rep.rank_exact, c.r0);
    EXPECT_GE(rep.rank_naive, c.r0);
    EXPECT_LT(rep.pred_exact, 1e-10);
    if (rep.rank_exact == rep.rank_naive) {
      EXPECT_EQ(rep.prg, 0.0);
    }
  }
}

TEST(PredStudy, DeterministicAcrossJobs) {
  const SimConfig c = small_pred_config();
  const PredStudyResult a = run_pred_study(c, 1), b = run_pred_study(c, 4);
  for (std::size_t i = 0; i < a.reps.size(); ++i) {
    EXPECT_EQ(a.reps[i].pred_exact, b.reps[i].pred_exact);
    EXPECT_EQ(a.reps[i].rank_naive, b.reps[i].rank_naive);
  }
  EXPECT_EQ(a.prg_median, b.prg_median);
}
