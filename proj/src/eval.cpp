#include "rrdof/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rrdof/parallel.hpp"
#include "rrdof/random.hpp"
#include "rrdof/simbench.hpp"

namespace rrdof {

double mspe(const Eigen::MatrixXd& x_test, const Eigen::MatrixXd& y_test, const Eigen::MatrixXd& b) {
  require(x_test.rows() == y_test.rows() && x_test.cols() == b.rows() && y_test.cols() == b.cols(), Errc::shape,
          "mspe: shapes do not conform");
  require(y_test.size() > 0, Errc::shape, "mspe: empty test set");
  const double scale = 2.0 / static_cast<double>(y_test.rows() * y_test.cols());
  return scale * (y_test - x_test * b).squaredNorm();
}

std::vector<Index> split_test_rows(Index n, double split_fraction, std::uint64_t seed, Index index) {
  require(split_fraction > 0.0 && split_fraction < 1.0, Errc::config, "split_fraction must lie in (0, 1)");
  require(n >= 2, Errc::shape, "need at least two observations to split");
  Index n_train = static_cast<Index>(std::llround(split_fraction * static_cast<double>(n)));
  n_train = std::clamp<Index>(n_train, 1, n - 1);

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed, Stream::splits, static_cast<std::uint64_t>(index));
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<Index> test(perm.begin() + n_train, perm.end());
  std::sort(test.begin(), test.end());
  return test;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Index>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

SplitOutcome run_method(const LsFit<double>& ls, const EvalMethod& method, const Eigen::MatrixXd& x_test,
                        const Eigen::MatrixXd& y_test) {
  SplitOutcome out;
  try {
    Index r = ls.r_bar;
    if (method.kind == EvalMethod::Kind::criterion) r = select_rank(ls, method.criterion).chosen_rank();
    const FittedModel<double> fm = fit_rrr(ls, r);
    out.rank = r;
    out.mspe = mspe(x_test, y_test, coef_matrix(fm));
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

}  // namespace

EvalReport eval_splits(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::vector<EvalMethod>& methods,
                       Index n_splits, double split_fraction, std::uint64_t seed, std::size_t jobs) {
  require(x.rows() == y.rows(), Errc::shape, "eval: x and y must have the same number of rows");
  require(n_splits >= 1, Errc::config, "eval: need at least one split");
  require(split_fraction > 0.0 && split_fraction < 1.0, Errc::config, "split_fraction must lie in (0, 1)");
  require_finite(x, "eval: x");
  require_finite(y, "eval: y");

  EvalReport report;
  report.split_fraction = split_fraction;
  report.seed = seed;
  for (const auto& m : methods) report.labels.push_back(m.label());
  report.labels.push_back("OLS");
  report.normalization = "2/(n_test*q)";
  if (std::abs(split_fraction - 0.5) > 1e-12)
    report.normalization += "; split_fraction != 0.5, so the factor 2 no longer corresponds to equal halves";

  const Index n = x.rows();
  report.splits.resize(static_cast<std::size_t>(n_splits));
  parallel_for(static_cast<std::size_t>(n_splits), jobs, [&](std::size_t s) {
    SplitResult& split = report.splits[s];
    split.index = static_cast<Index>(s);
    split.test_rows = split_test_rows(n, split_fraction, seed, split.index);
    std::vector<Index> train;
    for (Index i = 0, t = 0; i < n; ++i) {
      if (t < static_cast<Index>(split.test_rows.size()) && split.test_rows[static_cast<std::size_t>(t)] == i) {
        ++t;
        continue;
      }
      train.push_back(i);
    }
    split.n_train = static_cast<Index>(train.size());
    split.n_test = static_cast<Index>(split.test_rows.size());
    const Eigen::MatrixXd x_test = take_rows(x, split.test_rows);
    const Eigen::MatrixXd y_test = take_rows(y, split.test_rows);
    try {
      const LsFit<double> ls = fit_ols(take_rows(x, train), take_rows(y, train));
      for (const auto& m : methods) split.outcomes.push_back(run_method(ls, m, x_test, y_test));
      split.outcomes.push_back(run_method(ls, EvalMethod::full(), x_test, y_test));
    } catch (const Error& e) {
      split.outcomes.assign(methods.size() + 1, SplitOutcome{std::nullopt, 0, e.what()});
    }
  });

  bool any = false;
  for (std::size_t m = 0; m < report.labels.size(); ++m) {
    MethodSummary sum;
    sum.label = report.labels[m];
    std::vector<double> errs, ranks;
    for (const auto& split : report.splits) {
      const SplitOutcome& o = split.outcomes[m];
      if (!o.mspe) continue;
      errs.push_back(*o.mspe);
      ranks.push_back(static_cast<double>(o.rank));
    }
    sum.succeeded = static_cast<Index>(errs.size());
    if (!errs.empty()) {
      any = true;
      const Moments e = summarize(errs), r = summarize(ranks);
      sum.mspe_mean = e.mean;
      sum.mspe_sd = e.sd;
      sum.rank_mean = r.mean;
      sum.rank_sd = r.sd;
    }
    report.summary.push_back(sum);
  }
  require(any, Errc::no_model, "eval: every split failed for every method");
  return report;
}

}  // namespace rrdof
