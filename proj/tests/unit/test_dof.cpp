#include "rrdof/dof.hpp"
#include "test_support.hpp"

using namespace rrdof;
using fixtures::gaussian;
using fixtures::min_relative_gap;
using fixtures::with_spectrum;

namespace {

using Rule = ShrinkageRule<double>;

struct FdDerivatives {
  Eigen::VectorXd dd;
  Eigen::MatrixXd dv, du;
};

FdDerivatives fd_sv(const Eigen::MatrixXd& h, Index i, Index j, double step = 1e-6) {
  Eigen::MatrixXd plus = h, minus = h;
  plus(i, j) += step;
  minus(i, j) -= step;
  const SvdFactors<double> p = thin_svd(plus), m = thin_svd(minus);
  return {(p.d - m.d) / (2 * step), (p.right - m.right) / (2 * step), (p.left - m.left) / (2 * step)};
}

Eigen::MatrixXd random_separated(Index rows, Index cols, double min_gap, std::uint64_t& idx) {
  for (;;) {
    Eigen::MatrixXd h = gaussian(rows, cols, idx++);
    if (min_relative_gap(thin_svd(h).d) > min_gap) return h;
  }
}

}  // namespace

TEST(NaiveDf, Examples) {
  EXPECT_EQ(naive_df(3, 2, 1), 4.0);
  EXPECT_EQ(naive_df(20, 12, 0), 0.0);
  EXPECT_EQ(naive_df(3, 2, 2), 6.0);
  EXPECT_RRDOF_ERROR(naive_df(3, 2, 3), Errc::domain);
  EXPECT_RRDOF_ERROR(naive_df(3, 2, -1), Errc::domain);
}

TEST(ExactDfRrr, FullRankBranch) {
  EXPECT_EQ(exact_df_rrr(Eigen::VectorXd(Eigen::Vector2d(2, 1)), 3, 2, 2).value, 6.0);
}

TEST(ExactDfRrr, WorkedExample) {
  const Eigen::VectorXd d = Eigen::Vector2d(2, 1);
  EXPECT_NEAR(exact_df_rrr(d, 3, 2, 1).value, 3.0 + 5.0 / 3.0, 1e-14);
  // Same value from the finite-difference divergence of an H with this spectrum.
  const Eigen::MatrixXd h = with_spectrum(3, 2, d, 1);
  EXPECT_NEAR(divergence_fd(h, Rule::hard(1)).value, 3.0 + 5.0 / 3.0, 1e-4);
}

TEST(ExactDfRrr, NonMonotoneNearTies) {
  const Eigen::VectorXd d = Eigen::Vector3d(10, 3.01, 3.0);
  const double df2 = exact_df_rrr(d, 5, 3, 2).value, df3 = exact_df_rrr(d, 5, 3, 3).value;
  EXPECT_GT(df2, df3);
  EXPECT_GT(df2, 300.0);
}

TEST(ExactDfRrr, Preconditions) {
  const Eigen::VectorXd d = Eigen::Vector2d(2, 1);
  EXPECT_RRDOF_ERROR(exact_df_rrr(d, 3, 2, 0), Errc::domain);
  EXPECT_RRDOF_ERROR(exact_df_rrr(d, 3, 2, 3), Errc::domain);
  EXPECT_RRDOF_ERROR(exact_df_rrr(d, 3, 3, 1), Errc::shape);
  EXPECT_RRDOF_ERROR(exact_df_rrr(Eigen::VectorXd(Eigen::Vector2d(1, 2)), 3, 2, 1), Errc::contract_violation);
}

TEST(ExactDfRrr, GapPolicyOnlyInspectsTheCut) {
  const Eigen::VectorXd d = Eigen::Vector3d(3, 2, 2);
  const GapPolicy<double> strict{1e-8, GapMode::error};
  EXPECT_FALSE(exact_df_rrr(d, 4, 3, 1, strict).degenerate_flag);
  EXPECT_RRDOF_ERROR(exact_df_rrr(d, 4, 3, 2, strict), Errc::degeneracy);
  const DofEstimate<double> flagged = exact_df_rrr(d, 4, 3, 2);
  EXPECT_TRUE(flagged.degenerate_flag);
  EXPECT_FALSE(std::isfinite(flagged.value));
}

TEST(ExactDfRrr, LowerBoundOverNaive) {
  Rng rng(5);
  bool strict_gap_seen = false;
  for (int t = 0; t < 500; ++t) {
    const Index r_x = 1 + static_cast<Index>(rng.below(10)), q = 1 + static_cast<Index>(rng.below(10));
    const Index rb = std::min(r_x, q);
    Eigen::VectorXd d(rb);
    for (Index k = 0; k < rb; ++k) d(k) = 0.01 + 10 * rng.uniform();
    std::sort(d.data(), d.data() + rb, std::greater<>());
    for (Index r = 1; r <= rb; ++r) {
      const double exact = exact_df_rrr(d, r_x, q, r).value, naive = naive_df(r_x, q, r);
      if (!std::isfinite(exact)) continue;
      EXPECT_GE(exact, naive - 1e-9);
      strict_gap_seen |= exact - naive > 1.0;
    }
  }
  EXPECT_TRUE(strict_gap_seen);
}

TEST(ExactDfRrr, ApproachesNaiveWhenTailVanishes) {
  const Eigen::VectorXd d = Eigen::Vector3d(5, 4, 1e-6);
  EXPECT_NEAR(exact_df_rrr(d, 6, 3, 2).value, naive_df(6, 3, 2), 1e-9);
}

TEST(ExactDfShrunk, HardWeightsReduceToRrr) {
  const Eigen::VectorXd d = Eigen::Vector4d(9, 5, 2, 0.5);
  for (Index r = 1; r <= 4; ++r) {
    const Weights<double> w = Rule::hard(r).evaluate(d);
    EXPECT_NEAR(exact_df_shrunk(d, 6, 4, w).value, exact_df_rrr(d, 6, 4, r).value, 1e-12);
  }
}

TEST(ExactDfShrunk, SoftWorkedExample) {
  const Eigen::VectorXd d = Eigen::Vector2d(2, 1);
  const Eigen::VectorXd s = Eigen::Vector2d(0.5, 0), sp = Eigen::Vector2d(0.25, 0);
  EXPECT_NEAR(exact_df_shrunk(d, 3, 2, s, sp).value, 17.0 / 6.0, 1e-14);
  const Weights<double> w = Rule::soft(1.0).evaluate(d);
  EXPECT_EQ(w.s_prime(1), 0.0);
  EXPECT_NEAR(exact_df_shrunk(d, 3, 2, w).value, 17.0 / 6.0, 1e-14);
}

TEST(ExactDfShrunk, SoftExampleAgreesWithOraclesJustOffTheKink) {
  // lambda = d_2 is a kink of s_2; the oracles are checked a step away from it.
  const Eigen::MatrixXd h = with_spectrum(3, 2, Eigen::Vector2d(2, 1), 2);
  const SvdFactors<double> svd = thin_svd(h);
  const Rule rule = Rule::soft(1.0 + 1e-4);
  const double closed = exact_df_shrunk(svd.d, 3, 2, rule.evaluate(svd.d)).value;
  EXPECT_NEAR(closed, 17.0 / 6.0, 1e-3);
  EXPECT_NEAR(divergence_analytic(h, rule).value, closed, 1e-8);
  EXPECT_NEAR(divergence_fd(h, rule).value, closed, 1e-4);
}

TEST(ExactDfShrunk, AllZeroWeights) {
  const Eigen::VectorXd d = Eigen::Vector3d(3, 2, 1);
  EXPECT_EQ(exact_df_shrunk(d, 3, 5, Eigen::VectorXd(Eigen::Vector3d::Zero()), Eigen::VectorXd(Eigen::Vector3d::Zero()))
                .value,
            0.0);
}

TEST(ExactDfShrunk, NonMonotoneWeightsRejected) {
  const Eigen::VectorXd d = Eigen::Vector3d(3, 2, 1);
  EXPECT_RRDOF_ERROR(exact_df_shrunk(d, 3, 3, Eigen::VectorXd(Eigen::Vector3d(0.2, 0.5, 0)),
                                     Eigen::VectorXd(Eigen::Vector3d::Zero())),
                     Errc::contract_violation);
}

TEST(SvDerivatives, DiagonalCase) {
  Eigen::MatrixXd h(2, 2);
  h << 2, 0, 0, 1;
  const SvDerivatives<double> on = sv_derivatives(h, 0, 0);
  EXPECT_NEAR(on.dd(0), 1.0, 1e-14);
  EXPECT_LT(on.dv.col(0).norm(), 1e-14);
  EXPECT_NEAR(sv_derivatives(h, 0, 1).dd(0), 0.0, 1e-14);
}

TEST(SvDerivatives, MatchFiniteDifferences) {
  std::uint64_t idx = 100;
  for (auto [rows, cols] : {std::pair<Index, Index>{3, 2}, {2, 3}, {5, 5}, {6, 4}, {4, 6}}) {
    for (int rep = 0; rep < 5; ++rep) {
      const Eigen::MatrixXd h = random_separated(rows, cols, rows == 5 ? 0.05 : 0.1, idx);
      const SvdFactors<double> svd = thin_svd(h);
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
          const SvDerivatives<double> an = sv_derivatives(h, svd, i, j);
          const FdDerivatives fd = fd_sv(h, i, j);
          EXPECT_LT((an.dd - fd.dd).cwiseAbs().maxCoeff(), 1e-6);
          EXPECT_LT((an.dv - fd.dv).cwiseAbs().maxCoeff(), 1e-6) << rows << "x" << cols;
          EXPECT_LT((an.du - fd.du).cwiseAbs().maxCoeff(), 1e-6) << rows << "x" << cols;
        }
    }
  }
}

TEST(SvDerivatives, DegenerateSpectrumFollowsPolicy) {
  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(3, 2);
  EXPECT_TRUE(sv_derivatives(h, 0, 0).degenerate);
  EXPECT_RRDOF_ERROR(sv_derivatives(h, 0, 0, GapPolicy<double>{1e-8, GapMode::error}), Errc::degeneracy);
  EXPECT_RRDOF_ERROR(sv_derivatives(h, 3, 0), Errc::domain);
}

TEST(DivergenceAnalytic, Examples) {
  const Eigen::MatrixXd h = with_spectrum(3, 2, Eigen::Vector2d(2, 1), 3);
  EXPECT_NEAR(divergence_analytic(h, Rule::hard(2)).value, 6.0, 1e-8);
  EXPECT_NEAR(divergence_analytic(h, Rule::hard(1)).value, 3.0 + 5.0 / 3.0, 1e-8);
  EXPECT_NEAR(divergence_analytic(h, Rule::soft(1.0 + 1e-9)).value, 17.0 / 6.0, 1e-8);
  EXPECT_EQ(divergence_analytic(h, Rule::hard(0)).value, 0.0);
}

TEST(DivergenceFd, Examples) {
  const Eigen::MatrixXd h = with_spectrum(3, 2, Eigen::Vector2d(2, 1), 4);
  EXPECT_NEAR(divergence_fd(h, Rule::hard(2)).value, 6.0, 1e-6);
  EXPECT_NEAR(divergence_fd(h, Rule::hard(1)).value, 3.0 + 5.0 / 3.0, 1e-4);
  EXPECT_EQ(divergence_fd(h, Rule::hard(0)).value, 0.0);
  EXPECT_RRDOF_ERROR(divergence_fd(h, Rule::hard(1), 0.0), Errc::domain);
}

TEST(Divergence, TripleAgreementOnRandomInstances) {
  std::uint64_t idx = 500;
  Rng rng(9);
  for (int t = 0; t < 40; ++t) {
    const Index r_x = 1 + static_cast<Index>(rng.below(6)), q = 1 + static_cast<Index>(rng.below(6));
    const Eigen::MatrixXd h = random_separated(r_x, q, 0.1, idx);
    const SvdFactors<double> svd = thin_svd(h);
    const Index rb = svd.size();
    // Thresholds placed midway between singular values keep FD away from kinks.
    const double lambda = rb > 1 ? 0.5 * (svd.d(0) + svd.d(1)) : 0.5 * svd.d(0);
    for (const Rule& rule : {Rule::hard(std::max<Index>(1, rb / 2)), Rule::soft(lambda), Rule::adaptive(lambda),
                             Rule::adaptive(0.5 * svd.d(rb - 1), 1.0)}) {
      const Weights<double> w = rule.evaluate(svd.d);
      const double closed = exact_df_shrunk(svd.d, r_x, q, w).value;
      const double analytic = divergence_analytic(h, rule).value;
      const double fd = divergence_fd(h, rule).value;
      EXPECT_NEAR(closed, analytic, 1e-8) << rule.describe() << " " << r_x << "x" << q;
      EXPECT_NEAR(closed, fd, 1e-4) << rule.describe();
      EXPECT_NEAR(analytic, fd, 1e-4) << rule.describe();
    }
  }
}
