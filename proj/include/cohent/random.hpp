#pragma once

// Seeded random states. Gaussian variates come from an explicit Box-Muller
// transform over raw mt19937_64 output so that streams are reproducible
// across standard library implementations.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "cohent/errors.hpp"
#include "cohent/hilbert.hpp"
#include "cohent/linalg.hpp"

namespace cohent {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent stream per (seed, trial) pair.
inline Rng trial_rng(std::uint64_t seed, std::uint64_t trial) {
  return Rng(splitmix64(seed ^ splitmix64(trial + 1)));
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline Complex complex_normal(Rng& rng) {
  const double re = standard_normal(rng);
  return {re, standard_normal(rng)};
}

inline ComplexVector gaussian_vector(Eigen::Index n, Rng& rng) {
  ComplexVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = complex_normal(rng);
  return v;
}

inline ComplexMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_normal(rng);
  }
  return m;
}

inline PureState random_pure(int d, Rng& rng) {
  return PureState::normalized(SpaceShape({d}), gaussian_vector(d, rng));
}

/// k distinct levels out of d, sorted (0-based).
inline std::vector<int> random_subset(int d, int k, Rng& rng) {
  std::vector<int> all(d);
  for (int i = 0; i < d; ++i) all[i] = i;
  for (int i = 0; i < k; ++i) std::swap(all[i], all[uniform_int(rng, i, d - 1)]);
  std::vector<int> out(all.begin(), all.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

/// Gaussian amplitudes on a uniformly chosen support of exactly k levels.
inline PureState random_sparse_pure(int d, int k, Rng& rng) {
  if (k < 1 || k > d) throw InputError("random_sparse_pure: support size out of range");
  ComplexVector v = ComplexVector::Zero(d);
  for (int i : random_subset(d, k, rng)) {
    Complex c = complex_normal(rng);
    while (std::abs(c) < 1e-3) c = complex_normal(rng);
    v(i) = c;
  }
  return PureState::normalized(SpaceShape({d}), std::move(v));
}

/// Support size uniform in 1..d, then random_sparse_pure.
inline PureState random_sparse_pure(int d, Rng& rng) { return random_sparse_pure(d, uniform_int(rng, 1, d), rng); }

/// Wishart-style rho = G G^dag / tr(G G^dag) with G of size d x rank.
inline DensityMatrix random_mixed(int d, int rank, Rng& rng) {
  if (rank < 1 || rank > d) throw InputError("random_mixed: rank out of range");
  const ComplexMatrix g = gaussian_matrix(d, rank, rng);
  return DensityMatrix::normalized(SpaceShape({d}), g * g.adjoint());
}

/// d normalized Gaussian vectors in C^d; linearly independent with
/// probability one, redrawn otherwise.
inline ClassicalFrame random_frame(int d, Rng& rng) {
  while (true) {
    ComplexMatrix m = gaussian_matrix(d, d, rng);
    for (Eigen::Index c = 0; c < m.cols(); ++c) m.col(c).normalize();
    if (rank_with_tol(m.adjoint() * m, 1e-6) == d) return ClassicalFrame(std::move(m));
  }
}

}  // namespace cohent
