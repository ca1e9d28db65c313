#include "rrdof/report.hpp"

#include <array>
#include <cmath>

#include "rrdof/io.hpp"

namespace rrdof {

Json make_report(const std::string& kind, std::uint64_t seed, Json data) {
  Json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = kind;
  j["generator"] = kGenerator;
  j["seed"] = seed;
  j["data"] = std::move(data);
  return j;
}

Json to_json(const Moments& m) { return Json{{"mean", m.mean}, {"sd", m.sd}, {"se", m.se}}; }

Json to_json(const DofEstimate<double>& e) {
  Json j{{"value", e.value}, {"method", std::string(to_string(e.method))}};
  j["std_error"] = e.std_error ? Json(*e.std_error) : Json(nullptr);
  j["degenerate"] = e.degenerate_flag;
  return j;
}

Json to_json(const SimConfig& c) {
  return Json{{"name", c.name},   {"n", c.n},           {"p", c.p},
              {"q", c.q},         {"r0", c.r0},         {"sigma2", c.sigma2},
              {"rho", c.rho},     {"sv_gap", c.sv_gap}, {"reps", c.reps},
              {"seed", c.seed},   {"n_pert", c.n_pert}, {"pert_scale", c.pert_scale},
              {"fixed_design", c.fixed_design}};
}

Json to_json(const DofStudyResult& r) {
  Json ranks = Json::array();
  for (const RankDof& rd : r.per_rank) {
    ranks.push_back(Json{{"rank", rd.rank},
                         {"naive", rd.naive},
                         {"naive_spread", to_json(rd.naive_spread)},
                         {"exact", to_json(rd.exact)},
                         {"perturbation", to_json(rd.perturbation)},
                         {"monte_carlo", rd.monte_carlo},
                         {"monte_carlo_se", rd.monte_carlo_se},
                         {"degenerate_reps", rd.degenerate_reps}});
  }
  return Json{{"config", to_json(r.config)}, {"r_x", r.r_x}, {"r_bar", r.r_bar}, {"per_rank", ranks}};
}

Json to_json(const PredStudyResult& r) {
  Json reps = Json::array();
  for (const PredReplication& p : r.reps) {
    reps.push_back(Json{{"snr", p.snr},
                        {"est_exact", p.est_exact},
                        {"est_naive", p.est_naive},
                        {"pred_exact", p.pred_exact},
                        {"pred_naive", p.pred_naive},
                        {"rank_exact", p.rank_exact},
                        {"rank_naive", p.rank_naive},
                        {"prg", p.prg}});
  }
  Json agg{{"snr", to_json(r.snr)},
           {"est_exact", to_json(r.est_exact)},
           {"est_naive", to_json(r.est_naive)},
           {"pred_exact", to_json(r.pred_exact)},
           {"pred_naive", to_json(r.pred_naive)},
           {"rank_exact", to_json(r.rank_exact)},
           {"rank_naive", to_json(r.rank_naive)},
           {"prg", to_json(r.prg)},
           {"prg_median", r.prg_median}};
  return Json{{"config", to_json(r.config)}, {"aggregate", agg}, {"replications", reps}};
}

Json to_json(const EvalReport& r) {
  Json splits = Json::array();
  for (const SplitResult& s : r.splits) {
    Json outcomes = Json::array();
    for (std::size_t m = 0; m < s.outcomes.size(); ++m) {
      const SplitOutcome& o = s.outcomes[m];
      Json jo{{"method", r.labels[m]}};
      jo["mspe"] = o.mspe ? Json(*o.mspe) : Json(nullptr);
      jo["rank"] = o.rank;
      jo["error"] = o.error.empty() ? Json(nullptr) : Json(o.error);
      outcomes.push_back(jo);
    }
    splits.push_back(Json{{"index", s.index},
                          {"n_train", s.n_train},
                          {"n_test", s.n_test},
                          {"test_rows", s.test_rows},
                          {"outcomes", outcomes}});
  }
  Json summary = Json::array();
  for (const MethodSummary& m : r.summary) {
    summary.push_back(Json{{"method", m.label},
                           {"succeeded", m.succeeded},
                           {"mspe_mean", m.mspe_mean},
                           {"mspe_sd", m.mspe_sd},
                           {"rank_mean", m.rank_mean},
                           {"rank_sd", m.rank_sd}});
  }
  return Json{{"methods", r.labels},
              {"n_splits", r.splits.size()},
              {"split_fraction", r.split_fraction},
              {"mspe_normalization", r.normalization},
              {"summary", summary},
              {"splits", splits}};
}

Json to_json(const SelectionReport<double>& r) {
  Json cands = Json::array();
  for (std::size_t c = 0; c < r.scores.size(); ++c) {
    Json jc{{"parameter", r.parameter[c]}, {"rank", r.rank[c]}, {"df", to_json(r.df_used[c])},
            {"rss", r.residual_ss[c]}};
    jc["score"] = std::isfinite(r.scores[c]) ? Json(r.scores[c]) : Json(nullptr);
    cands.push_back(jc);
  }
  return Json{{"criterion", r.criterion.label()},
              {"chosen_index", r.chosen},
              {"chosen_rank", r.chosen_rank()},
              {"chosen_parameter", r.chosen_parameter()},
              {"candidates", cands}};
}

namespace {

void need(bool ok, const std::string& path, const std::string& what) {
  require(ok, Errc::parse, "report validation: " + path + " " + what);
}

const Json& field(const Json& obj, const std::string& key, const std::string& path) {
  need(obj.is_object(), path, "is not an object");
  need(obj.contains(key), path + "." + key, "is missing");
  return obj.at(key);
}

void need_number(const Json& obj, const std::string& key, const std::string& path) {
  need(field(obj, key, path).is_number(), path + "." + key, "must be a number");
}

void need_moments(const Json& obj, const std::string& key, const std::string& path) {
  const Json& m = field(obj, key, path);
  for (const char* k : {"mean", "sd", "se"}) need_number(m, k, path + "." + key);
}

void validate_config(const Json& c, const std::string& path) {
  for (const char* k : {"n", "p", "q", "r0", "sigma2", "rho", "sv_gap", "reps", "seed"}) need_number(c, k, path);
}

}  // namespace

void validate_report(const Json& report) {
  need(report.is_object(), "$", "is not an object");
  need(field(report, "schema_version", "$") == kReportSchemaVersion, "$.schema_version", "is unsupported");
  need(field(report, "generator", "$").is_string(), "$.generator", "must be a string");
  need(field(report, "seed", "$").is_number_unsigned(), "$.seed", "must be a nonnegative integer");
  const Json& kind = field(report, "kind", "$");
  need(kind.is_string(), "$.kind", "must be a string");
  const Json& data = field(report, "data", "$");
  need(data.is_object(), "$.data", "must be an object");
  const std::string k = kind.get<std::string>();

  if (k == "dof_study") {
    validate_config(field(data, "config", "$.data"), "$.data.config");
    const Json& ranks = field(data, "per_rank", "$.data");
    need(ranks.is_array() && !ranks.empty(), "$.data.per_rank", "must be a nonempty array");
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      const std::string p = "$.data.per_rank[" + std::to_string(i) + "]";
      for (const char* f : {"rank", "naive", "monte_carlo", "monte_carlo_se", "degenerate_reps"}) need_number(ranks[i], f, p);
      for (const char* f : {"naive_spread", "exact", "perturbation"}) need_moments(ranks[i], f, p);
    }
  } else if (k == "pred_study") {
    validate_config(field(data, "config", "$.data"), "$.data.config");
    const Json& agg = field(data, "aggregate", "$.data");
    for (const char* f : {"snr", "est_exact", "est_naive", "pred_exact", "pred_naive", "rank_exact", "rank_naive", "prg"})
      need_moments(agg, f, "$.data.aggregate");
    need_number(agg, "prg_median", "$.data.aggregate");
    const Json& reps = field(data, "replications", "$.data");
    need(reps.is_array(), "$.data.replications", "must be an array");
    need(reps.size() == field(data, "config", "$.data").at("reps").get<std::size_t>(), "$.data.replications",
         "count does not match config.reps");
  } else if (k == "eval") {
    const Json& methods = field(data, "methods", "$.data");
    need(methods.is_array() && !methods.empty(), "$.data.methods", "must be a nonempty array");
    need_number(data, "split_fraction", "$.data");
    need(field(data, "mspe_normalization", "$.data").is_string(), "$.data.mspe_normalization", "must be a string");
    const Json& summary = field(data, "summary", "$.data");
    need(summary.is_array() && summary.size() == methods.size(), "$.data.summary", "must have one entry per method");
    for (std::size_t i = 0; i < summary.size(); ++i)
      for (const char* f : {"succeeded", "mspe_mean", "mspe_sd", "rank_mean", "rank_sd"})
        need_number(summary[i], f, "$.data.summary[" + std::to_string(i) + "]");
    const Json& splits = field(data, "splits", "$.data");
    need(splits.is_array() && splits.size() == field(data, "n_splits", "$.data").get<std::size_t>(), "$.data.splits",
         "count does not match n_splits");
    for (std::size_t i = 0; i < splits.size(); ++i) {
      const Json& outs = field(splits[i], "outcomes", "$.data.splits[" + std::to_string(i) + "]");
      need(outs.is_array() && outs.size() == methods.size(), "$.data.splits[" + std::to_string(i) + "].outcomes",
           "must have one entry per method");
      for (const Json& o : outs) {
        const Json& m = field(o, "mspe", "outcome");
        need(m.is_null() || (m.is_number() && m.get<double>() >= 0.0), "outcome.mspe", "must be null or >= 0");
      }
    }
  } else if (k == "fit" || k == "dof" || k == "select") {
    // Free-form payloads; only the envelope is constrained.
  } else {
    need(false, "$.kind", "has unknown value '" + k + "'");
  }
}

std::string dump_report(const Json& report) { return report.dump(2) + "\n"; }

std::string dof_table_csv(const DofStudyResult& r) {
  std::string out = "rank,naive,exact_mean,exact_se,perturbation_mean,perturbation_se,monte_carlo,monte_carlo_se\n";
  for (const RankDof& rd : r.per_rank) {
    const std::array<double, 8> row{static_cast<double>(rd.rank), rd.naive, rd.exact.mean, rd.exact.se,
                                    rd.perturbation.mean, rd.perturbation.se, rd.monte_carlo, rd.monte_carlo_se};
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
    out += '\n';
  }
  return out;
}

std::string pred_table_csv(const PredStudyResult& r) {
  std::string out = "rep,snr,est_exact,est_naive,pred_exact,pred_naive,rank_exact,rank_naive,prg\n";
  for (std::size_t t = 0; t < r.reps.size(); ++t) {
    const PredReplication& p = r.reps[t];
    out += std::to_string(t) + "," + format_double(p.snr) + "," + format_double(p.est_exact) + "," +
           format_double(p.est_naive) + "," + format_double(p.pred_exact) + "," + format_double(p.pred_naive) + "," +
           std::to_string(p.rank_exact) + "," + std::to_string(p.rank_naive) + "," + format_double(p.prg) + "\n";
  }
  return out;
}

std::string eval_table_csv(const EvalReport& r) {
  std::string out = "split,method,mspe,rank,error\n";
  for (const SplitResult& s : r.splits) {
    for (std::size_t m = 0; m < s.outcomes.size(); ++m) {
      const SplitOutcome& o = s.outcomes[m];
      std::string err = o.error;
      for (char& c : err)
        if (c == '"') c = '\'';
      out += std::to_string(s.index) + "," + r.labels[m] + "," + (o.mspe ? format_double(*o.mspe) : "") + "," +
             std::to_string(o.rank) + "," + (err.empty() ? "" : "\"" + err + "\"") + "\n";
    }
  }
  return out;
}

std::string selection_table_csv(const SelectionReport<double>& r) {
  std::string out = "parameter,rank,df,rss,score\n";
  for (std::size_t c = 0; c < r.scores.size(); ++c) {
    out += format_double(r.parameter[c]) + "," + std::to_string(r.rank[c]) + "," + format_double(r.df_used[c].value) +
           "," + format_double(r.residual_ss[c]) + "," +
           (std::isfinite(r.scores[c]) ? format_double(r.scores[c]) : std::string("inf")) + "\n";
  }
  return out;
}

}  // namespace rrdof
