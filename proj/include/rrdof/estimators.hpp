#pragma once

// Least-squares, rank-constrained and singular-value-shrinkage estimators.
// Every estimator in the class keeps the right singular vectors of the
// least-squares fit and rescales its singular values by weights
// 1 >= s_1 >= ... >= s_rbar >= 0:
//
//   Ytilde = Yhat * sum_k s_k v_k v_k'  =  (X Q S^-1) * U diag(s .* d) V'.

#include <cmath>
#include <functional>
#include <string>

#include "rrdof/linalg.hpp"

namespace rrdof {

template <typename Scalar>
struct Weights {
  Vec<Scalar> s;        // s_k in [0, 1], nonincreasing
  Vec<Scalar> s_prime;  // ds_k / dd_k

  /// max{k : s_k > 0} (1-based count).
  Index r_tilde() const {
    Index r = 0;
    for (Index k = 0; k < s.size(); ++k)
      if (s(k) > Scalar(0)) r = k + 1;
    return r;
  }
};

/// Throws contract_violation unless 0 <= s_k <= 1 and s is nonincreasing.
template <typename Scalar>
void check_weights(const Weights<Scalar>& w) {
  require(w.s.size() == w.s_prime.size(), Errc::contract_violation, "weights: s and s' differ in length");
  for (Index k = 0; k < w.s.size(); ++k) {
    require(std::isfinite(w.s(k)) && std::isfinite(w.s_prime(k)), Errc::contract_violation,
            "weights: non-finite weight at k=" + std::to_string(k + 1));
    require(w.s(k) >= Scalar(0) && w.s(k) <= Scalar(1), Errc::contract_violation,
            "weights: s_" + std::to_string(k + 1) + " outside [0, 1]");
    if (k > 0)
      require(w.s(k) <= w.s(k - 1), Errc::contract_violation,
              "weights: s is not nonincreasing at k=" + std::to_string(k + 1));
  }
}

enum class RuleKind { hard, soft, adaptive, custom };

/// A family s_k(d_k, lambda). `hard` is rank truncation, `soft` is the
/// nuclear-norm soft threshold s_k = (1 - lambda/d_k)_+, and `adaptive` is the
/// power-weighted threshold s_k = (1 - (lambda/d_k)^(gamma+1))_+.
/// At d_k == lambda the weight is 0 and so is its derivative.
template <typename Scalar>
struct ShrinkageRule {
  using Evaluator = std::function<Weights<Scalar>(const Vec<Scalar>&)>;

  RuleKind kind = RuleKind::hard;
  Index rank = 0;
  Scalar lambda = Scalar(0);
  Scalar gamma = Scalar(2);
  Evaluator custom;

  static ShrinkageRule hard(Index r) {
    require(r >= 0, Errc::domain, "hard rule: rank must be nonnegative");
    ShrinkageRule rule;
    rule.kind = RuleKind::hard;
    rule.rank = r;
    return rule;
  }
  static ShrinkageRule soft(Scalar lambda) {
    require(lambda >= Scalar(0) && std::isfinite(lambda), Errc::domain, "soft rule: lambda must be finite and >= 0");
    ShrinkageRule rule;
    rule.kind = RuleKind::soft;
    rule.lambda = lambda;
    return rule;
  }
  static ShrinkageRule adaptive(Scalar lambda, Scalar gamma = Scalar(2)) {
    require(lambda >= Scalar(0) && std::isfinite(lambda), Errc::domain,
            "adaptive rule: lambda must be finite and >= 0");
    require(gamma >= Scalar(0) && std::isfinite(gamma), Errc::domain, "adaptive rule: gamma must be finite and >= 0");
    ShrinkageRule rule;
    rule.kind = RuleKind::adaptive;
    rule.lambda = lambda;
    rule.gamma = gamma;
    return rule;
  }
  static ShrinkageRule from(Evaluator evaluator) {
    ShrinkageRule rule;
    rule.kind = RuleKind::custom;
    rule.custom = std::move(evaluator);
    return rule;
  }

  Weights<Scalar> evaluate(const Vec<Scalar>& d) const {
    const Index n = d.size();
    Weights<Scalar> w{Vec<Scalar>::Zero(n), Vec<Scalar>::Zero(n)};
    switch (kind) {
      case RuleKind::hard:
        for (Index k = 0; k < std::min(rank, n); ++k) w.s(k) = Scalar(1);
        break;
      case RuleKind::soft:
        for (Index k = 0; k < n; ++k) {
          if (!(d(k) > Scalar(0))) continue;
          if (lambda == Scalar(0)) {
            w.s(k) = Scalar(1);
            continue;
          }
          if (d(k) > lambda) {
            w.s(k) = Scalar(1) - lambda / d(k);
            w.s_prime(k) = lambda / (d(k) * d(k));
          }
        }
        break;
      case RuleKind::adaptive:
        for (Index k = 0; k < n; ++k) {
          if (!(d(k) > Scalar(0))) continue;
          if (lambda == Scalar(0)) {
            w.s(k) = Scalar(1);
            continue;
          }
          if (d(k) > lambda) {
            const Scalar ratio = std::pow(lambda / d(k), gamma + Scalar(1));
            w.s(k) = Scalar(1) - ratio;
            w.s_prime(k) = (gamma + Scalar(1)) * ratio / d(k);
          }
        }
        break;
      case RuleKind::custom:
        require(static_cast<bool>(custom), Errc::contract_violation, "custom rule without evaluator");
        w = custom(d);
        require(w.s.size() == n && w.s_prime.size() == n, Errc::contract_violation,
                "custom rule returned weights of the wrong length");
        break;
    }
    return w;
  }

  std::string describe() const {
    switch (kind) {
      case RuleKind::hard: return "hard(r=" + std::to_string(rank) + ")";
      case RuleKind::soft: return "soft(lambda=" + std::to_string(static_cast<double>(lambda)) + ")";
      case RuleKind::adaptive:
        return "adaptive(lambda=" + std::to_string(static_cast<double>(lambda)) +
               ", gamma=" + std::to_string(static_cast<double>(gamma)) + ")";
      case RuleKind::custom: return "custom";
    }
    return "unknown";
  }
};

/// U diag(s .* d) V' for the factors of H. All-ones weights return H itself so
/// that the saturated fit reproduces the least-squares fit exactly.
template <typename Scalar>
Mat<Scalar> shrink_h(const Mat<Scalar>& h, const SvdFactors<Scalar>& svd, const Weights<Scalar>& w) {
  if ((w.s.array() == Scalar(1)).all() && w.s.size() == std::min(h.rows(), h.cols())) return h;
  const Vec<Scalar> d_tilde = w.s.cwiseProduct(svd.d);
  return svd.left * d_tilde.asDiagonal() * svd.right.transpose();
}

template <typename Scalar>
struct LsFit {
  Mat<Scalar> x;
  Mat<Scalar> y;
  GramFactors<Scalar> gram;
  HFactor<Scalar> hf;
  Mat<Scalar> y_hat;      // n x q
  Mat<Scalar> fit_basis;  // X Q S^-1, n x r_x
  Mat<Scalar> coef_map;   // Q S^-1, p x r_x
  Index r_bar = 0;

  Index n() const { return y.rows(); }
  Index p() const { return x.cols(); }
  Index q() const { return y.cols(); }
  Index r_x() const { return gram.r_x; }
  const Vec<Scalar>& d() const { return hf.svd.d; }
};

/// Yhat = X (X'X)^+ X' Y, valid for any n, p, q including p, q > n.
template <typename DerivedX, typename DerivedY>
LsFit<typename DerivedX::Scalar> fit_ols(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
                                         typename DerivedX::Scalar rank_tol =
                                             kDefaultRankTol<typename DerivedX::Scalar>) {
  using Scalar = typename DerivedX::Scalar;
  require(x.rows() >= 1, Errc::shape, "fit_ols: need at least one observation");
  require(x.rows() == y.rows(), Errc::shape,
          "fit_ols: x has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(y.rows()));
  require_finite(x, "fit_ols design");
  require_finite(y, "fit_ols response");

  LsFit<Scalar> ls;
  ls.x = x;
  ls.y = y;
  ls.gram = gram_factors(ls.x, rank_tol);
  ls.hf = build_h(ls.x, ls.y, ls.gram);
  ls.coef_map = ls.gram.q_mat * ls.gram.s.cwiseInverse().asDiagonal();
  ls.fit_basis = ls.x * ls.coef_map;
  ls.y_hat = ls.fit_basis * ls.hf.h;
  ls.r_bar = ls.hf.r_bar;
  return ls;
}

/// Unbiased noise variance from least-squares residuals, rss / ((n - r_x) q).
template <typename Scalar>
Scalar residual_variance(const LsFit<Scalar>& ls) {
  const Index dof = (ls.n() - ls.r_x()) * ls.q();
  require(dof > 0, Errc::domain, "residual_variance: design rank equals n, no residual degrees of freedom");
  return (ls.y - ls.y_hat).squaredNorm() / static_cast<Scalar>(dof);
}

template <typename Scalar>
struct FittedModel {
  ShrinkageRule<Scalar> rule;
  Weights<Scalar> weights;
  Vec<Scalar> d_tilde;  // s_k * d_k
  Mat<Scalar> h_tilde;  // r_x x q
  Mat<Scalar> y_fit;    // n x q
  Mat<Scalar> coef_map; // Q S^-1 of the source fit
  Index r_tilde = 0;
  Index r_bar = 0;
};

template <typename Scalar>
FittedModel<Scalar> fit_shrunk(const LsFit<Scalar>& ls, const ShrinkageRule<Scalar>& rule) {
  FittedModel<Scalar> fm;
  fm.rule = rule;
  fm.weights = rule.evaluate(ls.d());
  check_weights(fm.weights);
  fm.d_tilde = fm.weights.s.cwiseProduct(ls.d());
  fm.h_tilde = shrink_h(ls.hf.h, ls.hf.svd, fm.weights);
  fm.y_fit = ls.fit_basis * fm.h_tilde;
  fm.coef_map = ls.coef_map;
  fm.r_tilde = fm.weights.r_tilde();
  fm.r_bar = ls.r_bar;
  return fm;
}

/// Rank-r reduced-rank regression: Yhat * sum_{k<=r} v_k v_k'.
template <typename Scalar>
FittedModel<Scalar> fit_rrr(const LsFit<Scalar>& ls, Index r) {
  require(r >= 1 && r <= ls.r_bar, Errc::domain,
          "fit_rrr: rank " + std::to_string(r) + " outside [1, " + std::to_string(ls.r_bar) + "]");
  return fit_shrunk(ls, ShrinkageRule<Scalar>::hard(r));
}

/// B such that X B = Ytilde, lying in the row space of X: Q S^-1 Htilde.
template <typename Scalar>
Mat<Scalar> coef_matrix(const FittedModel<Scalar>& fm) {
  return fm.coef_map * fm.h_tilde;
}

}  // namespace rrdof
