#pragma once

// Model-selection criteria driven by a degrees-of-freedom estimate, and
// searches over the rank path or a lambda path of the shrinkage estimators.
//
// All criteria work on the multivariate residual sum of squares
// rss = ||Y - Ytilde||_F^2 with N = n q observations:
//   GCV = N rss / (N - df)^2
//   Cp  = rss / N + 2 df sigma2 / N
//   BIC = N ln(rss / N) + ln(N) df     (Gaussian log-likelihood surrogate)

#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "rrdof/dof.hpp"
#include "rrdof/estimators.hpp"

namespace rrdof {

enum class CriterionKind { cp, gcv, bic };
enum class DfMode { exact, naive };

constexpr std::string_view to_string(CriterionKind k) {
  switch (k) {
    case CriterionKind::cp: return "cp";
    case CriterionKind::gcv: return "gcv";
    case CriterionKind::bic: return "bic";
  }
  return "unknown";
}
constexpr std::string_view to_string(DfMode m) { return m == DfMode::exact ? "exact" : "naive"; }

template <typename Scalar = double>
struct Criterion {
  CriterionKind kind = CriterionKind::gcv;
  DfMode df_mode = DfMode::exact;
  Scalar sigma2 = Scalar(0);  // Cp only

  static Criterion gcv(DfMode mode) { return {CriterionKind::gcv, mode, Scalar(0)}; }
  static Criterion bic(DfMode mode) { return {CriterionKind::bic, mode, Scalar(0)}; }
  static Criterion cp(Scalar sigma2, DfMode mode) {
    require(sigma2 > Scalar(0) && std::isfinite(sigma2), Errc::domain, "Cp criterion requires sigma2 > 0");
    return {CriterionKind::cp, mode, sigma2};
  }

  /// e.g. "GCV(e)", matching the usual table labels.
  std::string label() const {
    std::string name = kind == CriterionKind::cp ? "Cp" : kind == CriterionKind::gcv ? "GCV" : "BIC";
    return name + (df_mode == DfMode::exact ? "(e)" : "(n)");
  }
};

template <typename Scalar>
Scalar gcv_score(Scalar rss, Scalar df, Index n, Index q) {
  require(rss >= Scalar(0), Errc::domain, "gcv_score: rss must be nonnegative");
  require(df >= Scalar(0), Errc::domain, "gcv_score: df must be nonnegative");
  const Scalar nq = static_cast<Scalar>(n * q);
  require(df < nq, Errc::saturation, "gcv_score: df >= n q, criterion undefined");
  const Scalar gap = nq - df;
  return nq * rss / (gap * gap);
}

template <typename Scalar>
Scalar cp_score(Scalar rss, Scalar df, Scalar sigma2, Index n, Index q) {
  require(sigma2 > Scalar(0), Errc::domain, "cp_score: sigma2 must be positive");
  const Scalar nq = static_cast<Scalar>(n * q);
  return rss / nq + Scalar(2) * df * sigma2 / nq;
}

template <typename Scalar>
Scalar bic_score(Scalar rss, Scalar df, Index n, Index q) {
  require(rss > Scalar(0), Errc::undefined_score, "bic_score: rss must be positive");
  const Scalar nq = static_cast<Scalar>(n * q);
  return nq * std::log(rss / nq) + std::log(nq) * df;
}

/// Score of one candidate; +inf marks a candidate the criterion cannot rank
/// (saturated GCV, zero-residual BIC, non-finite df).
template <typename Scalar>
Scalar criterion_score(const Criterion<Scalar>& crit, Scalar rss, Scalar df, Index n, Index q) {
  constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
  if (!std::isfinite(df) || df < Scalar(0)) return inf;
  switch (crit.kind) {
    case CriterionKind::gcv:
      return df < static_cast<Scalar>(n * q) ? gcv_score(rss, df, n, q) : inf;
    case CriterionKind::cp:
      return cp_score(rss, df, crit.sigma2, n, q);
    case CriterionKind::bic:
      return rss > Scalar(0) ? bic_score(rss, df, n, q) : inf;
  }
  return inf;
}

template <typename Scalar = double>
struct SelectionReport {
  Criterion<Scalar> criterion;
  std::vector<Scalar> parameter;  // candidate rank, or lambda on a lambda path
  std::vector<Index> rank;        // rank of each candidate fit (r, or r_tilde)
  std::vector<Scalar> scores;
  std::vector<DofEstimate<Scalar>> df_used;
  std::vector<Scalar> residual_ss;
  std::size_t chosen = 0;  // index into the candidate vectors

  Scalar chosen_parameter() const { return parameter.at(chosen); }
  Index chosen_rank() const { return rank.at(chosen); }
};

namespace detail {

template <typename Scalar>
void finish_selection(SelectionReport<Scalar>& report) {
  bool found = false;
  for (std::size_t c = 0; c < report.scores.size(); ++c) {
    if (!std::isfinite(report.scores[c])) continue;
    // Strict comparison keeps the earliest (most parsimonious) candidate on ties.
    if (!found || report.scores[c] < report.scores[report.chosen]) {
      report.chosen = c;
      found = true;
    }
  }
  require(found, Errc::no_model, "selection: every candidate is saturated or undefined under " +
                                     report.criterion.label());
}

}  // namespace detail

/// Residual sum of squares of the rank-r fit, ||Y - Yhat||^2 + sum_{k>r} d_k^2
/// (the two pieces are orthogonal).
template <typename Scalar>
Scalar rrr_residual_ss(const LsFit<Scalar>& ls, Index r) {
  const Scalar base = (ls.y - ls.y_hat).squaredNorm();
  const Vec<Scalar>& d = ls.d();
  return base + d.tail(d.size() - r).squaredNorm();
}

/// Scores ranks 1..rbar (rbar <= min(n, p, q)) and picks the minimizer,
/// breaking ties toward the smaller rank.
template <typename Scalar>
SelectionReport<Scalar> select_rank(const LsFit<Scalar>& ls, const Criterion<Scalar>& crit,
                                    const GapPolicy<Scalar>& gp = {}) {
  const Index n = ls.n(), q = ls.q();
  const Index r_max = std::min({ls.r_bar, n, ls.p(), q});
  SelectionReport<Scalar> report;
  report.criterion = crit;
  for (Index r = 1; r <= r_max; ++r) {
    DofEstimate<Scalar> df;
    if (crit.df_mode == DfMode::exact) {
      df = exact_df_rrr(ls.d(), ls.r_x(), q, r, gp);
    } else {
      df.method = DofMethod::naive;
      df.value = naive_df<Scalar>(ls.r_x(), q, r);
    }
    const Scalar rss = rrr_residual_ss(ls, r);
    report.parameter.push_back(static_cast<Scalar>(r));
    report.rank.push_back(r);
    report.df_used.push_back(df);
    report.residual_ss.push_back(rss);
    report.scores.push_back(criterion_score(crit, rss, df.value, n, q));
  }
  detail::finish_selection(report);
  return report;
}

/// 50 log-spaced lambdas from d_1 down to d_1 * 1e-3.
template <typename Scalar>
std::vector<Scalar> lambda_grid(Scalar d1, Index count = 50, Scalar ratio = Scalar(1e-3)) {
  require(d1 > Scalar(0), Errc::domain, "lambda_grid: largest singular value must be positive");
  require(count >= 2, Errc::domain, "lambda_grid: need at least two points");
  std::vector<Scalar> grid(static_cast<std::size_t>(count));
  for (Index i = 0; i < count; ++i)
    grid[static_cast<std::size_t>(i)] =
        d1 * std::pow(ratio, static_cast<Scalar>(i) / static_cast<Scalar>(count - 1));
  return grid;
}

/// Searches a lambda path of a soft or adaptive rule. Naive df on this path
/// is the free-parameter count at the fitted rank r_tilde.
template <typename Scalar>
SelectionReport<Scalar> select_lambda(const LsFit<Scalar>& ls, RuleKind family, const Criterion<Scalar>& crit,
                                      Scalar gamma = Scalar(2), const GapPolicy<Scalar>& gp = {},
                                      Index grid_size = 50) {
  require(family == RuleKind::soft || family == RuleKind::adaptive, Errc::domain,
          "select_lambda: family must be soft or adaptive");
  const Index n = ls.n(), q = ls.q();
  SelectionReport<Scalar> report;
  report.criterion = crit;
  const Scalar base = (ls.y - ls.y_hat).squaredNorm();
  for (Scalar lambda : lambda_grid(ls.d()(0), grid_size)) {
    const ShrinkageRule<Scalar> rule = family == RuleKind::soft ? ShrinkageRule<Scalar>::soft(lambda)
                                                                : ShrinkageRule<Scalar>::adaptive(lambda, gamma);
    const Weights<Scalar> w = rule.evaluate(ls.d());
    check_weights(w);
    const Index rt = w.r_tilde();
    DofEstimate<Scalar> df;
    if (crit.df_mode == DfMode::exact) {
      df = exact_df_shrunk(ls.d(), ls.r_x(), q, w, gp);
    } else {
      df.method = DofMethod::naive;
      df.value = naive_df<Scalar>(ls.r_x(), q, rt);
    }
    const Vec<Scalar> resid = (Vec<Scalar>::Ones(w.s.size()) - w.s).cwiseProduct(ls.d());
    const Scalar rss = base + resid.squaredNorm();
    report.parameter.push_back(lambda);
    report.rank.push_back(rt);
    report.df_used.push_back(df);
    report.residual_ss.push_back(rss);
    report.scores.push_back(criterion_score(crit, rss, df.value, n, q));
  }
  detail::finish_selection(report);
  return report;
}

}  // namespace rrdof
