#include "rrdof/simbench.hpp"

#include <algorithm>
#include <cmath>

#include "rrdof/estimators.hpp"
#include "rrdof/selection.hpp"

namespace rrdof {

void SimConfig::validate() const {
  require(n >= 1 && p >= 1 && q >= 1, Errc::config, "simulation dimensions must be positive");
  require(r0 >= 1 && r0 <= std::min(p, q), Errc::config,
          "r0 = " + std::to_string(r0) + " must lie in [1, min(p, q)]");
  require(sigma2 > 0.0 && std::isfinite(sigma2), Errc::config, "sigma2 must be positive");
  require(rho >= 0.0 && rho < 1.0, Errc::config, "rho must lie in [0, 1)");
  require(sv_gap > 0.0 && std::isfinite(sv_gap), Errc::config, "sv_gap must be positive");
  require(reps >= 2, Errc::config, "need at least two replications");
  require(n_pert >= 2, Errc::config, "need at least two perturbations");
  require(pert_scale > 0.0, Errc::config, "perturbation scale must be positive");
}

SimConfig preset(std::string_view name) {
  SimConfig c;
  c.name = std::string(name);
  if (name == "setting1") {
    c.n = 100, c.p = 20, c.q = 12, c.r0 = 6, c.rho = 0.3, c.reps = 200;
  } else if (name == "setting2") {
    c.n = 40, c.p = 80, c.q = 50, c.r0 = 10, c.rho = 0.3, c.reps = 200;
  } else if (name == "setting1-desk") {
    c.n = 50, c.p = 10, c.q = 8, c.r0 = 4, c.rho = 0.3, c.reps = 200;
  } else if (name == "setting2-desk") {
    c.n = 30, c.p = 40, c.q = 20, c.r0 = 5, c.rho = 0.3, c.reps = 100;
  } else if (name == "ld") {
    c.n = 50, c.p = 12, c.q = 10, c.r0 = 3, c.rho = 0.5, c.sigma2 = 1.0, c.reps = 100, c.fixed_design = false;
  } else if (name == "hd") {
    c.n = 40, c.p = 80, c.q = 50, c.r0 = 5, c.rho = 0.5, c.sigma2 = 4.0, c.reps = 100, c.fixed_design = false;
  } else {
    fail(Errc::config, "unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"setting1", "setting2", "setting1-desk", "setting2-desk", "ld", "hd"};
}

Eigen::MatrixXd ar1_covariance(Index p, double rho) {
  Eigen::MatrixXd sigma(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index k = 0; k < p; ++k) sigma(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k)));
  return sigma;
}

Eigen::MatrixXd leading_eigenvectors(const Eigen::MatrixXd& sym, Index count) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  require(eig.info() == Eigen::Success, Errc::numerical_failure, "eigendecomposition of Sigma failed");
  const Index p = sym.rows();
  Eigen::MatrixXd out(p, count);
  for (Index k = 0; k < count; ++k) {
    // Eigen sorts ascending; take from the top.
    Eigen::VectorXd v = eig.eigenvectors().col(p - 1 - k);
    Index pivot = 0;
    v.cwiseAbs().maxCoeff(&pivot);
    if (v(pivot) < 0.0) v = -v;
    out.col(k) = v;
  }
  return out;
}

Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
  const Eigen::MatrixXd r = qr.matrixQR().topRows(m.cols()).triangularView<Eigen::Upper>();
  for (Index k = 0; k < m.cols(); ++k)
    if (r(k, k) < 0.0) q.col(k) = -q.col(k);
  return q;
}

SimInstance gen_instance(const SimConfig& cfg, Index rep_index) {
  cfg.validate();
  require(rep_index >= 0, Errc::config, "replication index must be nonnegative");
  const Eigen::MatrixXd sigma = ar1_covariance(cfg.p, cfg.rho);
  const Eigen::LLT<Eigen::MatrixXd> chol(sigma);
  require(chol.info() == Eigen::Success, Errc::numerical_failure, "Cholesky factorization of Sigma failed");

  SimInstance inst;
  Rng design_rng(cfg.seed, Stream::design, cfg.fixed_design ? 0 : static_cast<std::uint64_t>(rep_index) + 1);
  inst.x = design_rng.normal_matrix(cfg.n, cfg.p) * chol.matrixL().transpose();

  inst.sigma_eigvecs = leading_eigenvectors(sigma, cfg.r0);
  Rng coef_rng(cfg.seed, Stream::coefficients, 0);
  const Eigen::MatrixXd right = orthonormalize(coef_rng.normal_matrix(cfg.q, cfg.r0));
  Eigen::VectorXd values(cfg.r0);
  for (Index k = 0; k < cfg.r0; ++k) values(k) = static_cast<double>(cfg.r0 - k) * cfg.sv_gap;
  inst.b = inst.sigma_eigvecs * values.asDiagonal() * right.transpose();

  Rng noise_rng(cfg.seed, Stream::noise, static_cast<std::uint64_t>(rep_index));
  inst.noise = noise_rng.normal_matrix(cfg.n, cfg.q, std::sqrt(cfg.sigma2));
  inst.y = inst.x * inst.b + inst.noise;
  return inst;
}

double snr(const Eigen::MatrixXd& x, const Eigen::MatrixXd& b, const Eigen::MatrixXd& e) {
  require(x.cols() == b.rows() && x.rows() == e.rows() && b.cols() == e.cols(), Errc::shape,
          "snr: shapes do not conform");
  const Eigen::MatrixXd signal = x * b;
  require(signal.allFinite() && e.allFinite(), Errc::domain, "snr: non-finite input");
  const Eigen::VectorXd ds = Eigen::JacobiSVD<Eigen::MatrixXd>(signal).singularValues();
  const Eigen::VectorXd de = Eigen::JacobiSVD<Eigen::MatrixXd>(e).singularValues();
  const Index rank = effective_rank(ds);
  require(rank > 0, Errc::undefined_snr, "snr: signal matrix is zero");
  require(de(0) > 0.0, Errc::undefined_snr, "snr: noise matrix is zero");
  return ds(rank - 1) / de(0);
}

Moments summarize(const std::vector<double>& values) {
  Moments m;
  if (values.empty()) return m;
  const double count = static_cast<double>(values.size());
  for (double v : values) m.mean += v;
  m.mean /= count;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sd = std::sqrt(ss / (count - 1.0));
    m.se = m.sd / std::sqrt(count);
  }
  return m;
}

double median(std::vector<double> values) {
  require(!values.empty(), Errc::domain, "median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

std::uint64_t perturbation_seed(std::uint64_t seed, Index rep) {
  return splitmix64(splitmix64(seed ^ 0x5045525455524221ULL) + static_cast<std::uint64_t>(rep));
}

// Rank-r reduced-rank fit reusing the Gram factors of a fixed design.
Eigen::MatrixXd rrr_fit_fixed_design(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                                     const GramFactors<double>& gram, const Eigen::MatrixXd& fit_basis, Index r) {
  const HFactor<double> hf = build_h(x, y, gram);
  const Weights<double> w = ShrinkageRule<double>::hard(r).evaluate(hf.svd.d);
  return fit_basis * shrink_h(hf.h, hf.svd, w);
}

}  // namespace

DofStudyResult run_dof_study(const SimConfig& cfg, std::size_t jobs) {
  cfg.validate();
  require(cfg.fixed_design, Errc::config, "the df study treats X as fixed; set fixed_design");

  const SimInstance first = gen_instance(cfg, 0);
  const Eigen::MatrixXd& x = first.x;
  const GramFactors<double> gram = gram_factors(x);
  const Eigen::MatrixXd fit_basis = x * gram.q_mat * gram.s.cwiseInverse().asDiagonal();
  const Index r_bar = std::min(gram.r_x, cfg.q);
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  const std::size_t ranks = static_cast<std::size_t>(r_bar);
  const double tau = cfg.pert_scale * std::sqrt(cfg.sigma2);

  struct RepOutput {
    std::vector<double> exact, perturbation;
    std::vector<char> degenerate;
    std::vector<Eigen::MatrixXd> fitted;  // per rank
    Eigen::MatrixXd noise;
  };
  std::vector<RepOutput> outputs(reps);

  parallel_for(reps, jobs, [&](std::size_t t) {
    const SimInstance inst = gen_instance(cfg, static_cast<Index>(t));
    const HFactor<double> hf = build_h(x, inst.y, gram);
    RepOutput& out = outputs[t];
    out.noise = inst.noise;
    for (Index r = 1; r <= r_bar; ++r) {
      const DofEstimate<double> ex = exact_df_rrr(hf.svd.d, gram.r_x, cfg.q, r);
      out.exact.push_back(ex.value);
      out.degenerate.push_back(ex.degenerate_flag ? 1 : 0);
      const Weights<double> w = ShrinkageRule<double>::hard(r).evaluate(hf.svd.d);
      out.fitted.push_back(fit_basis * shrink_h(hf.h, hf.svd, w));
      const Fitter fitter = [&, r](const Eigen::MatrixXd& xx, const Eigen::MatrixXd& yy) {
        return rrr_fit_fixed_design(xx, yy, gram, fit_basis, r);
      };
      out.perturbation.push_back(
          perturbation_df(x, inst.y, fitter, cfg.n_pert, tau, perturbation_seed(cfg.seed, static_cast<Index>(t)))
              .value);
    }
  });

  DofStudyResult result;
  result.config = cfg;
  result.r_x = gram.r_x;
  result.r_bar = r_bar;
  result.exact_by_rep.resize(reps);
  for (std::size_t t = 0; t < reps; ++t) result.exact_by_rep[t] = outputs[t].exact;

  std::vector<Eigen::MatrixXd> noises(reps);
  for (std::size_t t = 0; t < reps; ++t) noises[t] = outputs[t].noise;

  for (std::size_t k = 0; k < ranks; ++k) {
    RankDof rd;
    rd.rank = static_cast<Index>(k) + 1;
    rd.naive = naive_df<double>(gram.r_x, cfg.q, rd.rank);
    std::vector<double> exact(reps), pert(reps), naive(reps, rd.naive);
    std::vector<Eigen::MatrixXd> fitted(reps);
    for (std::size_t t = 0; t < reps; ++t) {
      exact[t] = outputs[t].exact[k];
      pert[t] = outputs[t].perturbation[k];
      fitted[t] = outputs[t].fitted[k];
      rd.degenerate_reps += outputs[t].degenerate[k];
    }
    rd.naive_spread = summarize(naive);
    rd.exact = summarize(exact);
    rd.perturbation = summarize(pert);
    const CovarianceTrace mc = covariance_trace(fitted, noises);
    rd.monte_carlo = mc.value / cfg.sigma2;
    rd.monte_carlo_se = mc.std_error.value_or(0.0) / cfg.sigma2;
    result.per_rank.push_back(rd);
  }
  return result;
}

PredStudyResult run_pred_study(const SimConfig& cfg, std::size_t jobs) {
  cfg.validate();
  const std::size_t reps = static_cast<std::size_t>(cfg.reps);
  PredStudyResult result;
  result.config = cfg;
  result.reps.resize(reps);

  parallel_for(reps, jobs, [&](std::size_t t) {
    const SimInstance inst = gen_instance(cfg, static_cast<Index>(t));
    const LsFit<double> ls = fit_ols(inst.x, inst.y);
    const Eigen::MatrixXd signal = inst.x * inst.b;
    const double pq = static_cast<double>(cfg.p * cfg.q);
    const double nq = static_cast<double>(cfg.n * cfg.q);

    PredReplication& rep = result.reps[t];
    rep.snr = snr(inst.x, inst.b, inst.noise);
    for (DfMode mode : {DfMode::exact, DfMode::naive}) {
      const SelectionReport<double> sel = select_rank(ls, Criterion<double>::gcv(mode));
      const FittedModel<double> fm = fit_rrr(ls, sel.chosen_rank());
      const Eigen::MatrixXd b_hat = coef_matrix(fm);
      const double est = 100.0 * (inst.b - b_hat).squaredNorm() / pq;
      const double pred = 100.0 * (signal - inst.x * b_hat).squaredNorm() / nq;
      if (mode == DfMode::exact) {
        rep.est_exact = est, rep.pred_exact = pred, rep.rank_exact = sel.chosen_rank();
      } else {
        rep.est_naive = est, rep.pred_naive = pred, rep.rank_naive = sel.chosen_rank();
      }
    }
    rep.prg = rep.pred_exact > 0.0 ? 100.0 * (rep.pred_naive - rep.pred_exact) / rep.pred_exact : 0.0;
  });

  auto collect = [&](auto field) {
    std::vector<double> v;
    v.reserve(reps);
    for (const PredReplication& r : result.reps) v.push_back(static_cast<double>(field(r)));
    return v;
  };
  result.snr = summarize(collect([](const PredReplication& r) { return r.snr; }));
  result.est_exact = summarize(collect([](const PredReplication& r) { return r.est_exact; }));
  result.est_naive = summarize(collect([](const PredReplication& r) { return r.est_naive; }));
  result.pred_exact = summarize(collect([](const PredReplication& r) { return r.pred_exact; }));
  result.pred_naive = summarize(collect([](const PredReplication& r) { return r.pred_naive; }));
  result.rank_exact = summarize(collect([](const PredReplication& r) { return r.rank_exact; }));
  result.rank_naive = summarize(collect([](const PredReplication& r) { return r.rank_naive; }));
  const std::vector<double> prg = collect([](const PredReplication& r) { return r.prg; });
  result.prg = summarize(prg);
  result.prg_median = median(prg);
  return result;
}

}  // namespace rrdof
