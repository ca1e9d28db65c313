#pragma once

// Dense linear-algebra substrate: thin SVD with a reproducible sign
// convention, the eigenfactorization of the Gram matrix X'X, and the
// r_x x q matrix H = S^-1 Q' X' Y whose spectrum carries all of the
// degrees-of-freedom information of the least-squares fit.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "rrdof/errors.hpp"

namespace rrdof {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

/// Relative rank tolerance used throughout (relative to the largest
/// singular value or eigenvalue).
template <typename Scalar>
constexpr Scalar kDefaultRankTol = Scalar(1e-10);

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  require(m.allFinite(), Errc::domain, std::string(what) + " contains non-finite entries");
}

template <typename Scalar>
struct SvdFactors {
  Mat<Scalar> left;   // m x k, orthonormal columns
  Vec<Scalar> d;      // k singular values, nonincreasing
  Mat<Scalar> right;  // n x k, orthonormal columns

  Index size() const { return d.size(); }
  Mat<Scalar> reconstruct() const { return left * d.asDiagonal() * right.transpose(); }
};

/// Thin SVD with k = min(rows, cols). Each right singular vector is oriented
/// so that its largest-magnitude entry is positive (first such entry on ties);
/// the matching left vector is flipped with it.
template <typename Derived>
SvdFactors<typename Derived::Scalar> thin_svd(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  require(m.rows() >= 1 && m.cols() >= 1, Errc::shape, "thin_svd: empty matrix");
  require_finite(m, "thin_svd input");

  const Mat<Scalar> a = m;
  Eigen::JacobiSVD<Mat<Scalar>> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(svd.info() == Eigen::Success, Errc::numerical_failure, "thin_svd: factorization did not converge");

  SvdFactors<Scalar> f{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Index k = 0; k < f.d.size(); ++k) {
    Index pivot = 0;
    f.right.col(k).cwiseAbs().maxCoeff(&pivot);
    if (f.right(pivot, k) < Scalar(0)) {
      f.right.col(k) *= Scalar(-1);
      f.left.col(k) *= Scalar(-1);
    }
  }
  return f;
}

/// Largest k with d_k > rel_tol * d_1 (d nonincreasing); 0 when d_1 == 0.
template <typename Derived>
Index effective_rank(const Eigen::MatrixBase<Derived>& d,
                     typename Derived::Scalar rel_tol = kDefaultRankTol<typename Derived::Scalar>) {
  using Scalar = typename Derived::Scalar;
  if (d.size() == 0 || !(d(0) > Scalar(0))) return 0;
  const Scalar cutoff = rel_tol * d(0);
  Index k = 0;
  while (k < d.size() && d(k) > cutoff) ++k;
  return k;
}

/// X'X = Q diag(s^2) Q' restricted to the r_x eigenpairs above tolerance.
template <typename Scalar>
struct GramFactors {
  Mat<Scalar> q_mat;  // p x r_x
  Vec<Scalar> s;      // r_x, strictly positive
  Index r_x = 0;
  // X Q S^-1, the orthonormal basis of col(X). Kept because every fitted
  // value in the estimator class is basis * (something r_x x q).
  Mat<Scalar> basis;  // n x r_x
};

/// Rank is decided on eigenvalues of X'X: r_x counts eigenvalues above
/// rank_tol * (largest eigenvalue). The factors come from the SVD of X itself,
/// which avoids squaring the condition number.
template <typename Derived>
GramFactors<typename Derived::Scalar> gram_factors(
    const Eigen::MatrixBase<Derived>& x,
    typename Derived::Scalar rank_tol = kDefaultRankTol<typename Derived::Scalar>) {
  using Scalar = typename Derived::Scalar;
  require(rank_tol > Scalar(0), Errc::domain, "gram_factors: rank_tol must be positive");
  const SvdFactors<Scalar> svd = thin_svd(x);
  require(svd.d(0) > Scalar(0), Errc::degenerate_design, "gram_factors: design matrix is identically zero");

  const Vec<Scalar> eig = svd.d.cwiseAbs2();
  const Scalar cutoff = rank_tol * eig(0);
  Index r_x = 0;
  while (r_x < eig.size() && eig(r_x) > cutoff) ++r_x;

  GramFactors<Scalar> gf;
  gf.r_x = r_x;
  gf.q_mat = svd.right.leftCols(r_x);
  gf.s = svd.d.head(r_x);
  gf.basis = svd.left.leftCols(r_x);
  return gf;
}

/// Orthogonal projection onto col(X): X Q S^-2 Q' X'.
template <typename Derived>
Mat<typename Derived::Scalar> design_projection(const Eigen::MatrixBase<Derived>& x,
                                                const GramFactors<typename Derived::Scalar>& gf) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> xq = x * gf.q_mat;
  return xq * gf.s.cwiseAbs2().cwiseInverse().asDiagonal() * xq.transpose();
}

template <typename Scalar>
struct HFactor {
  Mat<Scalar> h;  // r_x x q
  SvdFactors<Scalar> svd;
  Index r_bar = 0;  // min(r_x, q)
};

/// H = diag(1/s) Q' X' Y. H'H equals Yhat'Yhat, so H shares singular values
/// and right singular vectors with the least-squares fit.
template <typename DerivedX, typename DerivedY>
HFactor<typename DerivedX::Scalar> build_h(const Eigen::MatrixBase<DerivedX>& x,
                                           const Eigen::MatrixBase<DerivedY>& y,
                                           const GramFactors<typename DerivedX::Scalar>& gf) {
  using Scalar = typename DerivedX::Scalar;
  require(x.rows() == y.rows(), Errc::shape,
          "build_h: x has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(y.rows()));
  require(gf.q_mat.rows() == x.cols(), Errc::shape, "build_h: Gram factors do not match x");
  require_finite(y, "build_h response");

  HFactor<Scalar> hf;
  hf.h = gf.s.cwiseInverse().asDiagonal() * (gf.q_mat.transpose() * (x.transpose() * y));
  hf.svd = thin_svd(hf.h);
  hf.r_bar = std::min<Index>(gf.r_x, y.cols());
  return hf;
}

}  // namespace rrdof
