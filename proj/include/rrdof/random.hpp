#pragma once

// Reproducible random streams ("rrdof-rng v1").
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++ standard.
// Substreams: the engine for (seed, stream, index) is seeded with
//   splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
// so each replication owns an independent generator regardless of the order in
// which replications execute. Normals use Box-Muller on 53-bit uniforms rather
// than std::normal_distribution, whose algorithm is implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace rrdof {

inline constexpr const char* kRngName = "rrdof-rng v1 (mt19937_64 + splitmix64 substreams + Box-Muller)";

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Well-known stream identifiers so that different consumers of one seed never
/// share draws.
enum class Stream : std::uint64_t {
  design = 1,
  coefficients = 2,
  noise = 3,
  monte_carlo = 4,
  perturbation = 5,
  splits = 6,
  fixture = 7,
  acceptance = 8,
  test = 99,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, Stream stream, std::uint64_t index)
      : engine_(splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    // Rejection keeps the draw unbiased; the threshold is 2^64 mod bound.
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, double sd = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    // Column-major fill order is part of the reproducibility contract.
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sd * normal();
    return m;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rrdof
