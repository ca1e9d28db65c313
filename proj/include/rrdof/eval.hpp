#pragma once

// Repeated random train/test splits: select a rank on the training half,
// predict the test half, and summarize prediction error per method.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rrdof/selection.hpp"

namespace rrdof {

struct EvalMethod {
  enum class Kind { criterion, full_rank };
  Kind kind = Kind::criterion;
  Criterion<double> criterion;

  static EvalMethod select(const Criterion<double>& c) { return {Kind::criterion, c}; }
  static EvalMethod full() { return {Kind::full_rank, {}}; }
  std::string label() const { return kind == Kind::full_rank ? "full-rank" : criterion.label(); }
};

struct SplitOutcome {
  std::optional<double> mspe;  // empty when the method failed on this split
  Index rank = 0;
  std::string error;
};

struct SplitResult {
  Index index = 0;
  Index n_train = 0;
  Index n_test = 0;
  std::vector<Index> test_rows;        // sorted, 0-based
  std::vector<SplitOutcome> outcomes;  // one per method, the OLS baseline last
};

struct MethodSummary {
  std::string label;
  Index succeeded = 0;
  double mspe_mean = 0.0, mspe_sd = 0.0;
  double rank_mean = 0.0, rank_sd = 0.0;
};

struct EvalReport {
  std::vector<std::string> labels;  // methods then "OLS"
  std::vector<SplitResult> splits;
  std::vector<MethodSummary> summary;
  double split_fraction = 0.5;
  std::uint64_t seed = 0;
  std::string normalization;  // how MSPE is scaled, including any deviation note
};

/// 2 / (n_test q) * ||y_test - x_test b||_F^2.
double mspe(const Eigen::MatrixXd& x_test, const Eigen::MatrixXd& y_test, const Eigen::MatrixXd& b);

/// Row indices of the test part of split `index`; deterministic in (seed, index).
std::vector<Index> split_test_rows(Index n, double split_fraction, std::uint64_t seed, Index index);

EvalReport eval_splits(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const std::vector<EvalMethod>& methods,
                       Index n_splits, double split_fraction, std::uint64_t seed, std::size_t jobs = 1);

}  // namespace rrdof
