#pragma once

// Dense complex linear algebra for desk-scale Hilbert spaces.
//
// All matrices are row-major Eigen matrices of std::complex<double>. The
// helpers here add the checks the rest of the library relies on: a global
// dimension guard, Hermiticity validation, and deterministic orthonormal
// completion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cohent/errors.hpp"

namespace cohent {

using Complex = std::complex<double>;
using ComplexMatrix =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kRankTol = 1e-8;
inline constexpr double kNegativeEigenClamp = 1e-8;
inline constexpr std::size_t kDefaultMaxDimension = 4096;

/// Largest composite dimension any operation will build. Defaults to 4096;
/// the COHENT_MAX_DIM environment variable overrides it.
inline std::size_t max_dimension() {
  if (const char* env = std::getenv("COHENT_MAX_DIM"); env != nullptr) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) {
      return static_cast<std::size_t>(v);
    }
  }
  return kDefaultMaxDimension;
}

inline void check_dimension(std::size_t dim, const std::string& what) {
  if (dim > max_dimension()) {
    throw DimensionError(what + ": dimension " + std::to_string(dim) +
                         " exceeds limit " + std::to_string(max_dimension()));
  }
}

inline ComplexMatrix identity(Eigen::Index n) {
  return ComplexMatrix::Identity(n, n);
}

inline ComplexMatrix adjoint(const ComplexMatrix& m) { return m.adjoint(); }

inline bool all_finite(const ComplexMatrix& m) {
  return m.array().isFinite().all();
}

inline double hermiticity_defect(const ComplexMatrix& h) {
  if (h.rows() != h.cols()) return INFINITY;
  return (h - h.adjoint()).norm();
}

inline bool is_hermitian(const ComplexMatrix& h, double tol = kHermitianTol) {
  return h.rows() == h.cols() &&
         hermiticity_defect(h) <= tol * std::max(1.0, h.norm());
}

inline bool is_unitary(const ComplexMatrix& u, double tol = kUnitaryTol) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u - identity(u.rows())).norm() <= tol * std::sqrt(double(u.rows()));
}

/// V^dagger V = I (columns orthonormal).
inline bool is_isometry(const ComplexMatrix& v, double tol) {
  return (v.adjoint() * v - identity(v.cols())).norm() <= tol;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const auto rows = static_cast<std::size_t>(a.rows() * b.rows());
  const auto cols = static_cast<std::size_t>(a.cols() * b.cols());
  check_dimension(std::max(rows, cols), "kron");
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexVector kron(const ComplexVector& a, const ComplexVector& b) {
  check_dimension(static_cast<std::size_t>(a.size() * b.size()), "kron");
  ComplexVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    out.segment(i * b.size(), b.size()) = a(i) * b;
  }
  return out;
}

namespace detail {

inline std::size_t product(std::span<const int> dims) {
  std::size_t p = 1;
  for (int d : dims) p *= static_cast<std::size_t>(d);
  return p;
}

// Splits every composite index of a space with factor dims `shape` into the
// index over the kept factors and the index over the remaining factors
// (both row-major, most significant factor first).
struct IndexSplit {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> rest;
  std::size_t kept_dim = 1;
  std::size_t rest_dim = 1;
};

inline IndexSplit split_indices(std::span<const int> shape,
                                const std::vector<bool>& keep_mask) {
  IndexSplit s;
  const std::size_t n = shape.size();
  for (std::size_t f = 0; f < n; ++f) {
    (keep_mask[f] ? s.kept_dim : s.rest_dim) *= static_cast<std::size_t>(shape[f]);
  }
  const std::size_t total = s.kept_dim * s.rest_dim;
  s.kept.resize(total);
  s.rest.resize(total);
  std::vector<int> digit(n, 0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t k = 0, r = 0;
    for (std::size_t f = 0; f < n; ++f) {
      if (keep_mask[f]) {
        k = k * shape[f] + digit[f];
      } else {
        r = r * shape[f] + digit[f];
      }
    }
    s.kept[idx] = k;
    s.rest[idx] = r;
    for (std::size_t f = n; f-- > 0;) {
      if (++digit[f] < shape[f]) break;
      digit[f] = 0;
    }
  }
  return s;
}

inline std::vector<bool> mask_from(std::span<const int> shape,
                                   std::span<const int> keep) {
  std::vector<bool> mask(shape.size(), false);
  for (int k : keep) {
    if (k < 0 || static_cast<std::size_t>(k) >= shape.size()) {
      throw ShapeError("factor index " + std::to_string(k) + " out of range");
    }
    if (mask[k]) throw ShapeError("duplicate factor index " + std::to_string(k));
    mask[k] = true;
  }
  return mask;
}

}  // namespace detail

/// Traces out every factor of `shape` not listed in `keep`. The kept factors
/// appear in the output in their original order.
inline ComplexMatrix partial_trace(const ComplexMatrix& rho,
                                   std::span<const int> shape,
                                   std::span<const int> keep) {
  if (rho.rows() != rho.cols()) throw ShapeError("partial_trace: matrix not square");
  for (int d : shape) {
    if (d < 1) throw ShapeError("partial_trace: factor dimension < 1");
  }
  if (detail::product(shape) != static_cast<std::size_t>(rho.rows())) {
    throw ShapeError("partial_trace: shape does not match matrix dimension");
  }
  const auto mask = detail::mask_from(shape, keep);
  const auto split = detail::split_indices(shape, mask);
  // full index for each (kept, rest) pair
  std::vector<std::size_t> full(split.kept_dim * split.rest_dim);
  for (std::size_t idx = 0; idx < full.size(); ++idx) {
    full[split.kept[idx] * split.rest_dim + split.rest[idx]] = idx;
  }
  ComplexMatrix out = ComplexMatrix::Zero(split.kept_dim, split.kept_dim);
  for (std::size_t a = 0; a < split.kept_dim; ++a) {
    for (std::size_t b = 0; b < split.kept_dim; ++b) {
      Complex acc{0.0, 0.0};
      for (std::size_t r = 0; r < split.rest_dim; ++r) {
        acc += rho(full[a * split.rest_dim + r], full[b * split.rest_dim + r]);
      }
      out(a, b) = acc;
    }
  }
  return out;
}

/// Reshapes a pure-state amplitude vector into the (kept x rest) matrix whose
/// singular values are the Schmidt coefficients across the cut.
inline ComplexMatrix reshape_for_cut(const ComplexVector& psi,
                                     std::span<const int> shape,
                                     std::span<const int> keep) {
  if (detail::product(shape) != static_cast<std::size_t>(psi.size())) {
    throw ShapeError("reshape_for_cut: shape does not match vector length");
  }
  const auto mask = detail::mask_from(shape, keep);
  const auto split = detail::split_indices(shape, mask);
  ComplexMatrix m(split.kept_dim, split.rest_dim);
  for (Eigen::Index idx = 0; idx < psi.size(); ++idx) {
    m(split.kept[idx], split.rest[idx]) = psi(idx);
  }
  return m;
}

struct HermitianSpectrum {
  RealVector eigenvalues;     // descending
  ComplexMatrix eigenvectors;  // columns, matching eigenvalues
};

inline HermitianSpectrum hermitian_eig(const ComplexMatrix& h) {
  if (!is_hermitian(h)) {
    throw InputError("hermitian_eig: input is not Hermitian (defect " +
                     std::to_string(hermiticity_defect(h)) + ")");
  }
  const Eigen::MatrixXcd sym = (h + h.adjoint()) * 0.5;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw Error("hermitian_eig: eigensolver did not converge");
  }
  const Eigen::Index n = h.rows();
  HermitianSpectrum out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
    out.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

/// Principal square root of a PSD matrix. Eigenvalues in [-1e-8, 0) are
/// treated as round-off and clamped; anything below is rejected.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& rho) {
  const auto spec = hermitian_eig(rho);
  const double floor = -kNegativeEigenClamp * std::max(1.0, spec.eigenvalues.cwiseAbs().maxCoeff());
  if (spec.eigenvalues.size() > 0 && spec.eigenvalues.minCoeff() < floor) {
    throw InputError("psd_sqrt: eigenvalue " +
                     std::to_string(spec.eigenvalues.minCoeff()) +
                     " is significantly negative");
  }
  const RealVector roots = spec.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return spec.eigenvectors * roots.asDiagonal() * spec.eigenvectors.adjoint();
}

inline RealVector singular_values(const ComplexMatrix& m) {
  if (m.size() == 0) return RealVector();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues();
}

/// Number of singular values above tol * sigma_max.
inline int rank_with_tol(const ComplexMatrix& m, double tol = kRankTol) {
  if (!(tol > 0)) throw InputError("rank_with_tol: tolerance must be positive");
  const RealVector s = singular_values(m);
  if (s.size() == 0 || s(0) == 0.0) return 0;
  const double cutoff = tol * s(0);
  return static_cast<int>((s.array() > cutoff).count());
}

/// Extends linearly independent columns to a full unitary. The first columns
/// are the Gram-Schmidt orthonormalization of the input (positive real
/// diagonal in the triangular factor), so a unitary input is returned as is.
inline ComplexMatrix orthonormal_completion(const ComplexMatrix& cols) {
  const Eigen::Index n = cols.rows();
  const Eigen::Index m = cols.cols();
  if (m > n) throw RankDeficientError("orthonormal_completion: more columns than rows");
  if (rank_with_tol(cols) < m) {
    throw RankDeficientError("orthonormal_completion: input columns are linearly dependent");
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(cols);
  Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
  const Eigen::MatrixXcd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m; ++j) {
    const Complex diag = r(j, j);
    const double mag = std::abs(diag);
    if (mag > 0) q.col(j) *= diag / mag;
  }
  return q;
}

/// Gram-Schmidt orthonormalization in the given column order (two passes).
/// Returns Q (orthonormal columns) and the upper-triangular R with cols = Q R.
/// R depends only on the Gram matrix of the input, which is what makes two
/// sequences with equal Gram matrices map onto each other column by column.
struct GramSchmidtResult {
  ComplexMatrix q;
  ComplexMatrix r;
};

inline GramSchmidtResult gram_schmidt(const ComplexMatrix& cols) {
  const Eigen::Index n = cols.rows();
  const Eigen::Index m = cols.cols();
  GramSchmidtResult out{ComplexMatrix::Zero(n, m), ComplexMatrix::Zero(m, m)};
  for (Eigen::Index j = 0; j < m; ++j) {
    ComplexVector v = cols.col(j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const Complex c = out.q.col(i).dot(v);
        out.r(i, j) += c;
        v -= c * out.q.col(i);
      }
    }
    const double nrm = v.norm();
    if (nrm <= kRankTol * std::max(1.0, cols.col(j).norm())) {
      throw RankDeficientError("gram_schmidt: column " + std::to_string(j) +
                               " is linearly dependent on earlier columns");
    }
    out.r(j, j) = nrm;
    out.q.col(j) = v / nrm;
  }
  return out;
}

}  // namespace cohent
