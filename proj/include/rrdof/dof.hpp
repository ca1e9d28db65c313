#pragma once

// Degrees of freedom of the singular-value-shrinkage estimator class.
//
// The fitted values depend on Y only through H = S^-1 Q' X' Y, and the
// divergence of Y -> Ytilde equals the divergence of H -> Htilde. The closed
// forms below consume only the spectrum of H (plus the weights). Three
// independent oracles check them: the chain-rule divergence assembled from the
// singular-vector derivative kernels, a central finite-difference divergence,
// and covariance-based Monte-Carlo / data-perturbation estimates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rrdof/estimators.hpp"
#include "rrdof/linalg.hpp"
#include "rrdof/parallel.hpp"
#include "rrdof/random.hpp"

namespace rrdof {

enum class DofMethod { naive, exact, analytic_divergence, finite_difference, monte_carlo, perturbation };

constexpr std::string_view to_string(DofMethod m) {
  switch (m) {
    case DofMethod::naive: return "naive";
    case DofMethod::exact: return "exact";
    case DofMethod::analytic_divergence: return "analytic_divergence";
    case DofMethod::finite_difference: return "finite_difference";
    case DofMethod::monte_carlo: return "monte_carlo";
    case DofMethod::perturbation: return "perturbation";
  }
  return "unknown";
}

template <typename Scalar = double>
struct DofEstimate {
  Scalar value = Scalar(0);
  DofMethod method = DofMethod::exact;
  std::optional<Scalar> std_error;
  bool degenerate_flag = false;
};

enum class GapMode { error, flag };

/// Singular values closer than rel_gap_tol * d_1 are treated as repeated.
/// The closed forms are undefined there; `flag` still evaluates them and marks
/// the estimate, `error` throws Errc::degeneracy.
template <typename Scalar = double>
struct GapPolicy {
  Scalar rel_gap_tol = Scalar(1e-8);
  GapMode mode = GapMode::flag;
};

namespace detail {

template <typename Scalar>
void check_spectrum(const Vec<Scalar>& d, const char* where) {
  for (Index k = 0; k < d.size(); ++k) {
    require(std::isfinite(d(k)) && d(k) >= Scalar(0), Errc::contract_violation,
            std::string(where) + ": singular values must be finite and nonnegative");
    if (k > 0)
      require(d(k) <= d(k - 1), Errc::contract_violation,
              std::string(where) + ": singular values must be nonincreasing");
  }
}

/// Inspects adjacent pairs (k, k+1) for k in [first, last) (0-based) plus
/// positivity of d_0..d_{last}. Returns true when degenerate (flag mode).
template <typename Scalar>
bool gap_guard(const Vec<Scalar>& d, Index first, Index last, Index positive_upto, const GapPolicy<Scalar>& gp,
               const char* where) {
  require(gp.rel_gap_tol > Scalar(0), Errc::domain, "GapPolicy: rel_gap_tol must be positive");
  bool degenerate = d.size() == 0 || !(d(0) > Scalar(0));
  const Scalar scale = d.size() > 0 ? d(0) : Scalar(0);
  for (Index k = first; !degenerate && k < last && k + 1 < d.size(); ++k)
    if (d(k) - d(k + 1) < gp.rel_gap_tol * scale) degenerate = true;
  for (Index k = 0; !degenerate && k < positive_upto && k < d.size(); ++k)
    if (d(k) < gp.rel_gap_tol * scale) degenerate = true;
  if (degenerate && gp.mode == GapMode::error)
    fail(Errc::degeneracy, std::string(where) + ": repeated or vanishing singular values under the gap tolerance");
  return degenerate;
}

}  // namespace detail

/// Free-parameter count (r_x + q - r) r of a rank-r coefficient matrix.
template <typename Scalar = double>
Scalar naive_df(Index r_x, Index q, Index r) {
  require(r_x >= 0 && q >= 0, Errc::domain, "naive_df: dimensions must be nonnegative");
  require(r >= 0 && r <= std::min(r_x, q), Errc::domain,
          "naive_df: rank " + std::to_string(r) + " outside [0, min(r_x, q)]");
  return static_cast<Scalar>((r_x + q - r) * r);
}

/// Unbiased df of rank-r reduced-rank regression:
///   max(r_x, q) r + sum_{k<=r} sum_{l=r+1..rbar} (d_k^2 + d_l^2) / (d_k^2 - d_l^2),
/// and exactly r_x q at r = rbar.
template <typename Scalar>
DofEstimate<Scalar> exact_df_rrr(const Vec<Scalar>& d, Index r_x, Index q, Index r,
                                 const GapPolicy<Scalar>& gp = {}) {
  const Index r_bar = std::min(r_x, q);
  require(d.size() == r_bar, Errc::shape,
          "exact_df_rrr: expected " + std::to_string(r_bar) + " singular values, got " + std::to_string(d.size()));
  require(r >= 1 && r <= r_bar, Errc::domain,
          "exact_df_rrr: rank " + std::to_string(r) + " outside [1, " + std::to_string(r_bar) + "]");
  detail::check_spectrum(d, "exact_df_rrr");

  DofEstimate<Scalar> out;
  out.method = DofMethod::exact;
  if (r == r_bar) {
    out.value = static_cast<Scalar>(r_x * q);
    return out;
  }
  // Only the gap across the truncation point enters a denominator.
  out.degenerate_flag = detail::gap_guard(d, r - 1, r, r, gp, "exact_df_rrr");

  Scalar cross = Scalar(0);
  for (Index k = 0; k < r; ++k) {
    const Scalar dk2 = d(k) * d(k);
    for (Index l = r; l < r_bar; ++l) {
      const Scalar dl2 = d(l) * d(l);
      cross += (dk2 + dl2) / (dk2 - dl2);
    }
  }
  out.value = static_cast<Scalar>(std::max(r_x, q) * r) + cross;
  return out;
}

/// Unbiased df of the shrinkage estimator with weights s (and s' = ds/dd):
///   max(r_x,q) sum_k s_k
///   + sum_{k<=rt} sum_{l>rt} s_k (d_k^2 + d_l^2) / (d_k^2 - d_l^2)      [rt < rbar only]
///   + sum_{k<=rt} sum_{l<=rt, l!=k} d_k^2 (s_k - s_l) / (d_k^2 - d_l^2)
///   + sum_{k<=rt} d_k s_k'
/// with rt = max{k : s_k > 0}.
template <typename Scalar>
DofEstimate<Scalar> exact_df_shrunk(const Vec<Scalar>& d, Index r_x, Index q, const Weights<Scalar>& w,
                                    const GapPolicy<Scalar>& gp = {}) {
  const Index r_bar = std::min(r_x, q);
  require(d.size() == r_bar, Errc::shape,
          "exact_df_shrunk: expected " + std::to_string(r_bar) + " singular values, got " +
              std::to_string(d.size()));
  require(w.s.size() == r_bar, Errc::shape, "exact_df_shrunk: weight vector length differs from spectrum");
  check_weights(w);
  detail::check_spectrum(d, "exact_df_shrunk");

  DofEstimate<Scalar> out;
  out.method = DofMethod::exact;
  const Index rt = w.r_tilde();
  if (rt == 0) return out;

  // Pairs with at least one index in the support appear in denominators.
  out.degenerate_flag = detail::gap_guard(d, 0, std::min(rt, r_bar - 1), rt, gp, "exact_df_shrunk");

  const Scalar m = static_cast<Scalar>(std::max(r_x, q));
  Scalar total = m * w.s.head(rt).sum();
  for (Index k = 0; k < rt; ++k) {
    const Scalar dk2 = d(k) * d(k);
    for (Index l = rt; l < r_bar; ++l) {
      const Scalar dl2 = d(l) * d(l);
      total += w.s(k) * (dk2 + dl2) / (dk2 - dl2);
    }
    for (Index l = 0; l < rt; ++l) {
      if (l == k) continue;
      const Scalar dl2 = d(l) * d(l);
      total += dk2 * (w.s(k) - w.s(l)) / (dk2 - dl2);
    }
    total += d(k) * w.s_prime(k);
  }
  out.value = total;
  return out;
}

template <typename Scalar>
DofEstimate<Scalar> exact_df_shrunk(const Vec<Scalar>& d, Index r_x, Index q, const Vec<Scalar>& s,
                                    const Vec<Scalar>& s_prime, const GapPolicy<Scalar>& gp = {}) {
  return exact_df_shrunk(d, r_x, q, Weights<Scalar>{s, s_prime}, gp);
}

// ---------------------------------------------------------------------------
// Singular-value / singular-vector derivative kernels.

/// Derivatives of the thin SVD H = U D V' (as returned by thin_svd) with
/// respect to the single entry h_ij.
template <typename Scalar>
struct SvDerivatives {
  Vec<Scalar> dd;  // d(d_k)/dh_ij, length rbar
  Mat<Scalar> dv;  // d(v_k)/dh_ij, q x rbar
  Mat<Scalar> du;  // d(u_k)/dh_ij, r_x x rbar
  bool degenerate = false;
};

/// Eigen-derivative kernel for a tall matrix A (rows >= cols) with thin SVD
/// A = L D R'. For theta = a_ij and each k,
///   dR_k = -(A'A - d_k^2 I)^- (A'Z + Z'A) R_k,   dd_k = R_k'(A'Z + Z'A) R_k / (2 d_k),
/// with the generalized inverse (A'A - d_k^2 I)^- = R (D^2 - d_k^2 I)^+ R'.
template <typename Scalar>
class TallSpectralKernel {
 public:
  TallSpectralKernel(const Mat<Scalar>& a, const Mat<Scalar>& left, const Vec<Scalar>& d, const Mat<Scalar>& right,
                     Index kernel_count)
      : a_(a), left_(left), d_(d), right_(right) {
    const Index b = right.cols();
    resolvents_.reserve(static_cast<std::size_t>(kernel_count));
    for (Index k = 0; k < kernel_count; ++k) {
      Vec<Scalar> pinv(b);
      for (Index l = 0; l < b; ++l) {
        const Scalar diff = d(l) * d(l) - d(k) * d(k);
        pinv(l) = (l == k || diff == Scalar(0)) ? Scalar(0) : Scalar(1) / diff;
      }
      resolvents_.push_back(right * pinv.asDiagonal() * right.transpose());
    }
  }

  /// (A'Z + Z'A) R_k for Z = e_i e_j'.
  Vec<Scalar> dgram_times(Index i, Index j, Index k) const {
    Vec<Scalar> g = a_.row(i).transpose() * right_(j, k);
    g(j) += a_.row(i).dot(right_.col(k));
    return g;
  }

  Scalar dd(Index i, Index j, Index k) const {
    return right_.col(k).dot(dgram_times(i, j, k)) / (Scalar(2) * d_(k));
  }

  Vec<Scalar> dright(Index i, Index j, Index k) const {
    return -(resolvents_[static_cast<std::size_t>(k)] * dgram_times(i, j, k));
  }

  /// From L_k = A R_k / d_k.
  Vec<Scalar> dleft(Index i, Index j, Index k, const Vec<Scalar>& dr, Scalar ddk) const {
    Vec<Scalar> out = a_ * dr - left_.col(k) * ddk;
    out(i) += right_(j, k);
    return out / d_(k);
  }

 private:
  const Mat<Scalar>& a_;
  const Mat<Scalar>& left_;
  const Vec<Scalar>& d_;
  const Mat<Scalar>& right_;
  std::vector<Mat<Scalar>> resolvents_;
};

/// Derivatives of every singular value and singular vector of h with respect
/// to h_ij (0-based). Wide matrices are handled through H', for which the
/// kernel above applies; the results are mapped back to the factors of h.
template <typename Scalar>
SvDerivatives<Scalar> sv_derivatives(const Mat<Scalar>& h, const SvdFactors<Scalar>& svd, Index i, Index j,
                                     const GapPolicy<Scalar>& gp = {}) {
  require(i >= 0 && i < h.rows() && j >= 0 && j < h.cols(), Errc::domain, "sv_derivatives: entry out of range");
  const Index b = svd.d.size();
  SvDerivatives<Scalar> out;
  out.degenerate = detail::gap_guard(svd.d, 0, b - 1, b, gp, "sv_derivatives");

  const bool transposed = h.rows() < h.cols();
  const Mat<Scalar> a = transposed ? Mat<Scalar>(h.transpose()) : h;
  const Mat<Scalar>& left = transposed ? svd.right : svd.left;
  const Mat<Scalar>& right = transposed ? svd.left : svd.right;
  const Index ia = transposed ? j : i;
  const Index ja = transposed ? i : j;

  TallSpectralKernel<Scalar> kernel(a, left, svd.d, right, b);
  out.dd.resize(b);
  Mat<Scalar> dright(right.rows(), b);
  Mat<Scalar> dleft(left.rows(), b);
  for (Index k = 0; k < b; ++k) {
    out.dd(k) = kernel.dd(ia, ja, k);
    dright.col(k) = kernel.dright(ia, ja, k);
    dleft.col(k) = kernel.dleft(ia, ja, k, dright.col(k), out.dd(k));
  }
  out.dv = transposed ? dleft : dright;
  out.du = transposed ? dright : dleft;
  return out;
}

template <typename Scalar>
SvDerivatives<Scalar> sv_derivatives(const Mat<Scalar>& h, Index i, Index j, const GapPolicy<Scalar>& gp = {}) {
  return sv_derivatives(h, thin_svd(h), i, j, gp);
}

/// sum_ij d(htilde_ij)/d(h_ij) assembled by the chain rule from the kernel
/// derivatives and the rule's (s, s'). Does not use the closed forms.
template <typename Scalar>
DofEstimate<Scalar> divergence_analytic(const Mat<Scalar>& h, const ShrinkageRule<Scalar>& rule,
                                        const GapPolicy<Scalar>& gp = {}) {
  const SvdFactors<Scalar> svd = thin_svd(h);
  const Weights<Scalar> w = rule.evaluate(svd.d);
  check_weights(w);
  const Index b = svd.d.size();
  const Index rt = w.r_tilde();

  DofEstimate<Scalar> out;
  out.method = DofMethod::analytic_divergence;
  if (rt == 0) return out;
  out.degenerate_flag = detail::gap_guard(svd.d, 0, std::min(rt, b - 1), rt, gp, "divergence_analytic");

  const bool transposed = h.rows() < h.cols();
  const Mat<Scalar> a = transposed ? Mat<Scalar>(h.transpose()) : h;
  const Mat<Scalar>& left = transposed ? svd.right : svd.left;
  const Mat<Scalar>& right = transposed ? svd.left : svd.right;
  TallSpectralKernel<Scalar> kernel(a, left, svd.d, right, rt);

  // Atilde = A M with M = sum_k s_k R_k R_k'. Differentiating:
  //   Z M + A sum_k s_k (dR_k R_k' + R_k dR_k') + A sum_k s_k' dd_k R_k R_k'.
  const Mat<Scalar> m_proj = right.leftCols(rt) * w.s.head(rt).asDiagonal() * right.leftCols(rt).transpose();
  Scalar total = Scalar(0);
  for (Index ia = 0; ia < a.rows(); ++ia) {
    const Vec<Scalar> a_row = a.row(ia).transpose();
    for (Index ja = 0; ja < a.cols(); ++ja) {
      Scalar entry = m_proj(ja, ja);
      for (Index k = 0; k < rt; ++k) {
        const Vec<Scalar> dr = kernel.dright(ia, ja, k);
        const Scalar ddk = kernel.dd(ia, ja, k);
        const Scalar a_rk = a_row.dot(right.col(k));
        entry += w.s(k) * (a_row.dot(dr) * right(ja, k) + a_rk * dr(ja));
        entry += w.s_prime(k) * ddk * a_rk * right(ja, k);
      }
      total += entry;
    }
  }
  out.value = total;
  return out;
}

/// Central-difference divergence of h -> Htilde(h): every entry is perturbed by
/// +-step, the SVD and rule are recomputed, and the diagonal Jacobian entries
/// accumulated. Accuracy degrades when singular-value gaps approach `step`.
template <typename Scalar>
DofEstimate<Scalar> divergence_fd(const Mat<Scalar>& h, const ShrinkageRule<Scalar>& rule,
                                  Scalar step = Scalar(1e-6)) {
  require(step > Scalar(0), Errc::domain, "divergence_fd: step must be positive");
  const auto shrunk_entry = [&](const Mat<Scalar>& m, Index i, Index j) {
    const SvdFactors<Scalar> svd = thin_svd(m);
    return shrink_h(m, svd, rule.evaluate(svd.d))(i, j);
  };
  Scalar total = Scalar(0);
  Mat<Scalar> probe = h;
  for (Index j = 0; j < h.cols(); ++j) {
    for (Index i = 0; i < h.rows(); ++i) {
      probe(i, j) = h(i, j) + step;
      const Scalar plus = shrunk_entry(probe, i, j);
      probe(i, j) = h(i, j) - step;
      const Scalar minus = shrunk_entry(probe, i, j);
      probe(i, j) = h(i, j);
      total += (plus - minus) / (Scalar(2) * step);
    }
  }
  DofEstimate<Scalar> out;
  out.method = DofMethod::finite_difference;
  out.value = total;
  return out;
}

// ---------------------------------------------------------------------------
// Covariance-based estimators.

using Fitter = std::function<Eigen::MatrixXd(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y)>;

struct CovarianceTrace {
  double value = 0.0;
  std::optional<double> std_error;
};

/// sum_ij cov(fitted_ij, probe_ij) over replications, using the unbiased
/// (R-1) sample covariance, with a leave-one-replication-out jackknife
/// standard error (needs R >= 3).
///
/// With c_t, e_t the centred replicates and p_t = <c_t, e_t>, the
/// leave-one-out statistic reduces to (sum_s p_s - p_t R/(R-1)) / (R-2).
inline CovarianceTrace covariance_trace(const std::vector<Eigen::MatrixXd>& fitted,
                                        const std::vector<Eigen::MatrixXd>& probes) {
  const std::size_t reps = fitted.size();
  require(reps >= 2 && probes.size() == reps, Errc::domain, "covariance_trace: need at least two paired replicates");
  Eigen::MatrixXd mean_fit = Eigen::MatrixXd::Zero(fitted[0].rows(), fitted[0].cols());
  Eigen::MatrixXd mean_probe = Eigen::MatrixXd::Zero(probes[0].rows(), probes[0].cols());
  for (std::size_t t = 0; t < reps; ++t) {
    require(fitted[t].rows() == mean_fit.rows() && fitted[t].cols() == mean_fit.cols() &&
                probes[t].rows() == mean_fit.rows() && probes[t].cols() == mean_fit.cols(),
            Errc::shape, "covariance_trace: replicate shapes differ");
    mean_fit += fitted[t];
    mean_probe += probes[t];
  }
  const double r = static_cast<double>(reps);
  mean_fit /= r;
  mean_probe /= r;

  std::vector<double> p(reps);
  double sum_p = 0.0;
  for (std::size_t t = 0; t < reps; ++t) {
    p[t] = (fitted[t] - mean_fit).cwiseProduct(probes[t] - mean_probe).sum();
    sum_p += p[t];
  }
  CovarianceTrace out;
  out.value = sum_p / (r - 1.0);
  if (reps >= 3) {
    const double mean_p = sum_p / r;
    double ss = 0.0;
    for (double pt : p) ss += (pt - mean_p) * (pt - mean_p);
    out.std_error = std::sqrt((r - 1.0) / r) * r / ((r - 1.0) * (r - 2.0)) * std::sqrt(ss);
  }
  return out;
}

/// Monte-Carlo df: draws Y_t = mean + E_t, E_t iid N(0, sigma2), replicate t
/// using substream (seed, monte_carlo, t), and returns
/// sum_ij cov(muhat_ij, y_ij) / sigma2.
inline DofEstimate<double> mc_df(const Eigen::MatrixXd& x, const Eigen::MatrixXd& mean, double sigma2,
                                 const Fitter& fitter, Index reps, std::uint64_t seed, std::size_t jobs = 1) {
  require(reps >= 2, Errc::domain, "mc_df: need at least 2 replications");
  require(sigma2 > 0.0 && std::isfinite(sigma2), Errc::domain, "mc_df: sigma2 must be positive");
  require(x.rows() == mean.rows(), Errc::shape, "mc_df: x and mean differ in rows");
  const double sd = std::sqrt(sigma2);
  std::vector<Eigen::MatrixXd> fitted(static_cast<std::size_t>(reps));
  std::vector<Eigen::MatrixXd> noise(static_cast<std::size_t>(reps));
  parallel_for(static_cast<std::size_t>(reps), jobs, [&](std::size_t t) {
    Rng rng(seed, Stream::monte_carlo, t);
    noise[t] = rng.normal_matrix(mean.rows(), mean.cols(), sd);
    fitted[t] = fitter(x, mean + noise[t]);
  });
  const CovarianceTrace ct = covariance_trace(fitted, noise);
  DofEstimate<double> out;
  out.method = DofMethod::monte_carlo;
  out.value = ct.value / sigma2;
  if (ct.std_error) out.std_error = *ct.std_error / sigma2;
  return out;
}

/// Data-perturbation df: perturbs the observed Y by Delta_t with iid
/// N(0, tau^2) entries (substream (seed, perturbation, t)) and returns
/// sum_ij cov(muhat_ij(Y + Delta), Delta_ij) / tau^2.
inline DofEstimate<double> perturbation_df(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Fitter& fitter,
                                           Index n_pert, double tau, std::uint64_t seed, std::size_t jobs = 1) {
  require(n_pert >= 2, Errc::domain, "perturbation_df: need at least 2 perturbations");
  require(tau > 0.0 && std::isfinite(tau), Errc::domain, "perturbation_df: tau must be positive");
  std::vector<Eigen::MatrixXd> fitted(static_cast<std::size_t>(n_pert));
  std::vector<Eigen::MatrixXd> deltas(static_cast<std::size_t>(n_pert));
  parallel_for(static_cast<std::size_t>(n_pert), jobs, [&](std::size_t t) {
    Rng rng(seed, Stream::perturbation, t);
    deltas[t] = rng.normal_matrix(y.rows(), y.cols(), tau);
    fitted[t] = fitter(x, y + deltas[t]);
  });
  const CovarianceTrace ct = covariance_trace(fitted, deltas);
  DofEstimate<double> out;
  out.method = DofMethod::perturbation;
  out.value = ct.value / (tau * tau);
  if (ct.std_error) out.std_error = *ct.std_error / (tau * tau);
  return out;
}

}  // namespace rrdof
