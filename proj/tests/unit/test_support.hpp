#pragma once

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "rrdof/errors.hpp"
#include "rrdof/random.hpp"

#define EXPECT_RRDOF_ERROR(stmt, errc)                                     \
  do {                                                                     \
    try {                                                                  \
      stmt;                                                                \
      ADD_FAILURE() << "expected rrdof::Error(" << #errc << ")";            \
    } catch (const rrdof::Error& e) {                                      \
      EXPECT_EQ(e.code(), errc) << e.what();                               \
    }                                                                      \
  } while (0)

namespace rrdof::fixtures {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t index, double sd = 1.0) {
  Rng rng(424242, Stream::test, index);
  return rng.normal_matrix(rows, cols, sd);
}

/// m x n matrix with prescribed singular values and Haar-like factors.
inline Eigen::MatrixXd with_spectrum(Eigen::Index m, Eigen::Index n, const Eigen::VectorXd& d, std::uint64_t index) {
  const Eigen::Index k = d.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qu(gaussian(m, k, 2 * index));
  Eigen::HouseholderQR<Eigen::MatrixXd> qv(gaussian(n, k, 2 * index + 1));
  const Eigen::MatrixXd u = qu.householderQ() * Eigen::MatrixXd::Identity(m, k);
  const Eigen::MatrixXd v = qv.householderQ() * Eigen::MatrixXd::Identity(n, k);
  return u * d.asDiagonal() * v.transpose();
}

/// Smallest adjacent gap and smallest value, both relative to d_1.
inline double min_relative_gap(const Eigen::VectorXd& d) {
  double g = d(d.size() - 1) / d(0);
  for (Eigen::Index k = 0; k + 1 < d.size(); ++k) g = std::min(g, (d(k) - d(k + 1)) / d(0));
  return g;
}

}  // namespace rrdof::fixtures
