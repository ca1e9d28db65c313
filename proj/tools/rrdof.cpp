// rrdof command-line interface: fit, dof, select, simulate, eval.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rrdof/eval.hpp"
#include "rrdof/io.hpp"
#include "rrdof/report.hpp"
#include "rrdof/selection.hpp"
#include "rrdof/simbench.hpp"

namespace {

using namespace rrdof;

constexpr std::uint64_t kDefaultSeed = 20130101;

struct DataArgs {
  std::string x_path, y_path;
  bool header = false, log = false;
  bool center_x = false, center_y = false, standardize_x = false, standardize_y = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--x", x_path, "Predictor CSV (rows are observations)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--y", y_path, "Response CSV (rows are observations)")->required()->check(CLI::ExistingFile);
    cmd->add_flag("--header", header, "First row of each CSV is a header");
    cmd->add_flag("--log", log, "Natural-log transform all cells");
    cmd->add_flag("--center-x", center_x, "Subtract predictor column means");
    cmd->add_flag("--center-y", center_y, "Subtract response column means");
    cmd->add_flag("--standardize-x", standardize_x, "Centre and scale predictor columns");
    cmd->add_flag("--standardize-y", standardize_y, "Centre and scale response columns");
  }
  std::pair<Eigen::MatrixXd, Eigen::MatrixXd> load() const {
    Eigen::MatrixXd x = ingest_csv(x_path, {header, log, center_x, standardize_x});
    Eigen::MatrixXd y = ingest_csv(y_path, {header, log, center_y, standardize_y});
    require(x.rows() == y.rows(), Errc::shape,
            "x has " + std::to_string(x.rows()) + " rows but y has " + std::to_string(y.rows()));
    return {std::move(x), std::move(y)};
  }
};

struct RuleArgs {
  std::optional<long> rank;
  std::optional<double> soft, adaptive;
  double gamma = 2.0;

  void add(CLI::App* cmd, bool required) {
    auto* g = cmd->add_option_group("rule", "Estimator");
    g->add_option("--rank", rank, "Reduced-rank fit of rank r");
    g->add_option("--soft", soft, "Soft singular-value threshold lambda");
    g->add_option("--adaptive", adaptive, "Adaptive threshold lambda");
    g->require_option(required ? 1 : 0, 1);
    cmd->add_option("--gamma", gamma, "Adaptive exponent")->capture_default_str();
  }
  ShrinkageRule<double> rule(Index r_bar) const {
    if (soft) return ShrinkageRule<double>::soft(*soft);
    if (adaptive) return ShrinkageRule<double>::adaptive(*adaptive, gamma);
    const long r = rank.value_or(static_cast<long>(r_bar));
    require(r >= 1 && r <= r_bar, Errc::domain,
            "--rank " + std::to_string(r) + " outside [1, " + std::to_string(r_bar) + "]");
    return ShrinkageRule<double>::hard(r);
  }
};

struct OutArgs {
  std::string out, csv;
  void add(CLI::App* cmd) {
    cmd->add_option("--out", out, "JSON report path (stdout when omitted)");
    cmd->add_option("--csv", csv, "Flat CSV table path");
  }
  void emit(const Json& report, const std::string& table) const {
    validate_report(report);
    if (out.empty())
      std::cout << dump_report(report);
    else
      write_text(out, dump_report(report));
    if (!csv.empty()) write_text(csv, table);
  }
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RRDOF_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used);
      require(used == std::string(env).size(), Errc::config, "");
      return v;
    } catch (const std::exception&) {
      fail(Errc::config, std::string("RRDOF_SEED is not a nonnegative integer: '") + env + "'");
    }
  }
  return kDefaultSeed;
}

Criterion<double> make_criterion(const std::string& name, DfMode mode, std::optional<double> sigma2) {
  if (name == "gcv") return Criterion<double>::gcv(mode);
  if (name == "bic") return Criterion<double>::bic(mode);
  require(sigma2.has_value(), Errc::config, "the Cp criterion needs --sigma2");
  return Criterion<double>::cp(*sigma2, mode);
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-rank regression with exact degrees of freedom"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed_flag;
  std::size_t jobs = 1;
  app.add_option("--seed", seed_flag, "RNG seed (falls back to RRDOF_SEED)");
  app.add_option("--jobs", jobs, "Worker threads")->check(CLI::Range(std::size_t{1}, std::size_t{1024}));

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a reduced-rank or shrinkage estimator");
  DataArgs fit_data;
  RuleArgs fit_rule;
  OutArgs fit_out;
  std::string coef_csv;
  fit_data.add(fit_cmd);
  fit_rule.add(fit_cmd, true);
  fit_out.add(fit_cmd);
  fit_cmd->add_option("--coef-csv", coef_csv, "Write the p x q coefficient matrix");

  // dof
  auto* dof_cmd = app.add_subcommand("dof", "Degrees of freedom of a fitted estimator");
  DataArgs dof_data;
  RuleArgs dof_rule;
  OutArgs dof_out;
  std::string dof_method = "exact";
  std::optional<double> dof_sigma2;
  long dof_reps = 200;
  double pert_scale = 0.1;
  dof_data.add(dof_cmd);
  dof_rule.add(dof_cmd, false);
  dof_out.add(dof_cmd);
  dof_cmd->add_option("--method", dof_method)->check(CLI::IsMember({"exact", "naive", "mc", "perturb", "fd"}))
      ->capture_default_str();
  dof_cmd->add_option("--sigma2", dof_sigma2, "Noise variance (mc, perturb); estimated from residuals if omitted");
  dof_cmd->add_option("--reps", dof_reps, "Replications (mc) or perturbations (perturb)")->capture_default_str();
  dof_cmd->add_option("--pert-scale", pert_scale, "Perturbation sd as a multiple of sigma")->capture_default_str();

  // select
  auto* sel_cmd = app.add_subcommand("select", "Choose a rank or threshold by an information criterion");
  DataArgs sel_data;
  OutArgs sel_out;
  std::string criterion = "gcv", df_mode = "exact", path = "rank";
  std::optional<double> sel_sigma2;
  double sel_gamma = 2.0;
  sel_data.add(sel_cmd);
  sel_out.add(sel_cmd);
  sel_cmd->add_option("--criterion", criterion)->check(CLI::IsMember({"gcv", "cp", "bic"}))->capture_default_str();
  sel_cmd->add_option("--df", df_mode)->check(CLI::IsMember({"exact", "naive"}))->capture_default_str();
  sel_cmd->add_option("--path", path, "Candidate family")->check(CLI::IsMember({"rank", "soft", "adaptive"}))
      ->capture_default_str();
  sel_cmd->add_option("--sigma2", sel_sigma2, "Noise variance, required for Cp");
  sel_cmd->add_option("--gamma", sel_gamma, "Adaptive exponent")->capture_default_str();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Run a preset simulation study");
  std::string preset_name;
  std::optional<long> sim_reps;
  OutArgs sim_out;
  sim_cmd->add_option("--preset", preset_name)->required()->check(CLI::IsMember(preset_names()));
  sim_cmd->add_option("--reps", sim_reps, "Override the replication count");
  sim_out.add(sim_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Random train/test split evaluation");
  DataArgs eval_data;
  OutArgs eval_out;
  long n_splits = 100;
  double split_fraction = 0.5;
  std::optional<double> eval_sigma2;
  std::vector<std::string> eval_criteria{"gcv", "bic"};
  eval_data.add(eval_cmd);
  eval_out.add(eval_cmd);
  eval_cmd->add_option("--splits", n_splits)->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--split-fraction", split_fraction, "Training share")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  eval_cmd->add_option("--criteria", eval_criteria, "Criteria to compare (each in exact and naive form)")
      ->check(CLI::IsMember({"gcv", "cp", "bic"}));
  eval_cmd->add_option("--sigma2", eval_sigma2, "Noise variance, required when Cp is among the criteria");

  CLI11_PARSE(app, argc, argv);

  try {
    const std::uint64_t seed = resolve_seed(seed_flag);

    if (*fit_cmd) {
      const auto [x, y] = fit_data.load();
      const LsFit<double> ls = fit_ols(x, y);
      const ShrinkageRule<double> rule = fit_rule.rule(ls.r_bar);
      const FittedModel<double> fm = fit_shrunk(ls, rule);
      const Eigen::MatrixXd b = coef_matrix(fm);
      Json data{{"rule", rule.describe()},     {"n", ls.n()},           {"p", ls.p()},
                {"q", ls.q()},                 {"r_x", ls.r_x()},       {"r_bar", ls.r_bar},
                {"r_tilde", fm.r_tilde},       {"singular_values", std::vector<double>(ls.d().data(), ls.d().data() + ls.d().size())},
                {"weights", std::vector<double>(fm.weights.s.data(), fm.weights.s.data() + fm.weights.s.size())},
                {"rss", (y - fm.y_fit).squaredNorm()},
                {"coefficients", matrix_json(b)}};
      fit_out.emit(make_report("fit", seed, data), format_csv(b));
      if (!coef_csv.empty()) write_csv(coef_csv, b);
    } else if (*dof_cmd) {
      const auto [x, y] = dof_data.load();
      const LsFit<double> ls = fit_ols(x, y);
      const ShrinkageRule<double> rule = dof_rule.rule(ls.r_bar);
      const Weights<double> w = rule.evaluate(ls.d());
      DofEstimate<double> est;
      Json extra = Json::object();
      if (dof_method == "exact") {
        est = rule.kind == RuleKind::hard ? exact_df_rrr(ls.d(), ls.r_x(), ls.q(), w.r_tilde())
                                          : exact_df_shrunk(ls.d(), ls.r_x(), ls.q(), w);
      } else if (dof_method == "naive") {
        est.method = DofMethod::naive;
        est.value = naive_df<double>(ls.r_x(), ls.q(), w.r_tilde());
      } else if (dof_method == "fd") {
        est = divergence_fd(ls.hf.h, rule);
      } else {
        const double sigma2 = dof_sigma2.value_or(residual_variance(ls));
        extra["sigma2"] = sigma2;
        extra["sigma2_source"] = dof_sigma2 ? "flag" : "residuals";
        const Fitter fitter = [&rule](const Eigen::MatrixXd& xx, const Eigen::MatrixXd& yy) {
          return fit_shrunk(fit_ols(xx, yy), rule).y_fit;
        };
        if (dof_method == "mc") {
          extra["mean"] = "least-squares fit";
          est = mc_df(x, ls.y_hat, sigma2, fitter, dof_reps, seed, jobs);
        } else {
          extra["pert_scale"] = pert_scale;
          est = perturbation_df(x, y, fitter, dof_reps, pert_scale * std::sqrt(sigma2), seed, jobs);
        }
      }
      Json data{{"rule", rule.describe()}, {"r_x", ls.r_x()}, {"q", ls.q()}, {"r_tilde", w.r_tilde()},
                {"estimate", to_json(est)}};
      if (!extra.empty()) data["settings"] = extra;
      dof_out.emit(make_report("dof", seed, data),
                   "method,value\n" + std::string(to_string(est.method)) + "," + format_double(est.value) + "\n");
    } else if (*sel_cmd) {
      const auto [x, y] = sel_data.load();
      const LsFit<double> ls = fit_ols(x, y);
      const DfMode mode = df_mode == "exact" ? DfMode::exact : DfMode::naive;
      const Criterion<double> crit = make_criterion(criterion, mode, sel_sigma2);
      const SelectionReport<double> rep =
          path == "rank" ? select_rank(ls, crit)
                         : select_lambda(ls, path == "soft" ? RuleKind::soft : RuleKind::adaptive, crit, sel_gamma);
      Json data = to_json(rep);
      data["path"] = path;
      if (sel_sigma2) data["sigma2"] = *sel_sigma2;
      sel_out.emit(make_report("select", seed, data), selection_table_csv(rep));
    } else if (*sim_cmd) {
      SimConfig cfg = preset(preset_name);
      cfg.seed = seed;
      if (sim_reps) cfg.reps = *sim_reps;
      if (cfg.fixed_design) {
        const DofStudyResult r = run_dof_study(cfg, jobs);
        sim_out.emit(make_report("dof_study", seed, to_json(r)), dof_table_csv(r));
      } else {
        const PredStudyResult r = run_pred_study(cfg, jobs);
        sim_out.emit(make_report("pred_study", seed, to_json(r)), pred_table_csv(r));
      }
    } else if (*eval_cmd) {
      require(split_fraction > 0.0 && split_fraction < 1.0, Errc::config, "--split-fraction must lie in (0, 1)");
      const auto [x, y] = eval_data.load();
      std::vector<EvalMethod> methods;
      for (const auto& c : eval_criteria)
        for (DfMode mode : {DfMode::exact, DfMode::naive}) methods.push_back(EvalMethod::select(make_criterion(c, mode, eval_sigma2)));
      const EvalReport r = eval_splits(x, y, methods, n_splits, split_fraction, seed, jobs);
      Json data = to_json(r);
      if (eval_sigma2) data["cp_sigma2"] = *eval_sigma2;
      eval_out.emit(make_report("eval", seed, data), eval_table_csv(r));
    }
  } catch (const Error& e) {
    std::cerr << "rrdof: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rrdof: internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
