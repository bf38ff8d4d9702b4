#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "lindyn/errors.hpp"

// Deterministic sampling layer. std::mt19937_64 has a pinned algorithm, but the
// std distributions do not, so uniform and normal variates are produced by
// hand: identical seeds must give byte-identical experiment output on every
// platform.

namespace lindyn {

/// splitmix64 step; used to derive independent subseeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Mixes a master seed with salts (e.g. grid indices, trial numbers) so that
/// concurrent work items draw from disjoint streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt_a,
                                 std::uint64_t salt_b = 0) {
  std::uint64_t s = seed;
  (void)splitmix64(s);
  s ^= 0x632be59bd9b4e019ull ^ salt_a;
  (void)splitmix64(s);
  s ^= 0x9e6c63d0876a9a43ull ^ salt_b;
  return splitmix64(s);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (second variate cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  /// Uniform integer in [0, n) by rejection; n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw ShapeError("uniform_index: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = eng_();
    while (x >= limit) x = eng_();
    return x % n;
  }

  Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols,
                           double stddev = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = stddev * normal();
    return m;
  }

  Eigen::VectorXd gaussian_vector(Eigen::Index n, double stddev = 1.0) {
    return gaussian(n, 1, stddev);
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Haar-ish random orthogonal matrix: QR of a Gaussian with the sign of
/// diag(R) folded into Q so the distribution does not depend on the QR
/// implementation's sign convention.
inline Eigen::MatrixXd random_orthogonal(Rng& rng, Eigen::Index n) {
  const Eigen::MatrixXd g = rng.gaussian(n, n);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i)
    if (r(i, i) < 0.0) q.col(i) = -q.col(i);
  return q;
}

}  // namespace lindyn
