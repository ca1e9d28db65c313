// Generates the bundled synthetic stand-in for the 118 x (39 + 36) expression
// data: positive values whose logs follow a low-rank multivariate regression.
//
//   make_fixture <out_dir> [seed]

#include <cmath>
#include <iostream>
#include <string>

#include "rrdof/io.hpp"
#include "rrdof/random.hpp"
#include "rrdof/simbench.hpp"

int main(int argc, char** argv) {
  using namespace rrdof;
  if (argc < 2) {
    std::cerr << "usage: make_fixture <out_dir> [seed]\n";
    return 1;
  }
  const std::string dir = argv[1];
  const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 20130101;
  constexpr Index n = 118, p = 39, q = 36, r0 = 4;

  try {
    Rng design(seed, Stream::fixture, 0);
    Rng coef(seed, Stream::fixture, 1);
    Rng noise(seed, Stream::fixture, 2);

    const Eigen::MatrixXd sigma = ar1_covariance(p, 0.5);
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
    const Eigen::MatrixXd x_log = design.normal_matrix(n, p) * chol.transpose();

    const Eigen::MatrixXd left = orthonormalize(coef.normal_matrix(p, r0));
    const Eigen::MatrixXd right = orthonormalize(coef.normal_matrix(q, r0));
    Eigen::VectorXd sv(r0);
    for (Index k = 0; k < r0; ++k) sv(k) = 2.0 * static_cast<double>(r0 - k);
    const Eigen::MatrixXd b = left * sv.asDiagonal() * right.transpose();
    const Eigen::MatrixXd y_log = x_log * b + noise.normal_matrix(n, q, 1.0);

    // Shift to a positive log-scale level before exponentiating.
    const Eigen::MatrixXd x = (x_log.array() * 0.5 + 2.0).exp().matrix();
    const Eigen::MatrixXd y = (y_log.array() * 0.5 + 3.0).exp().matrix();

    std::vector<std::string> hx, hy;
    for (Index j = 0; j < p; ++j) hx.push_back("gene" + std::to_string(j + 1));
    for (Index j = 0; j < q; ++j) hy.push_back("response" + std::to_string(j + 1));
    write_csv(dir + "/synthetic_x.csv", x, hx);
    write_csv(dir + "/synthetic_y.csv", y, hy);
  } catch (const std::exception& e) {
    std::cerr << "make_fixture: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
