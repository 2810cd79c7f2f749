#include <cstdlib>

#include <gtest/gtest.h>

#include "cohent/linalg.hpp"
#include "cohent/random.hpp"
#include "oracles.hpp"

using namespace cohent;

namespace {

ComplexMatrix pauli_x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

ComplexMatrix pauli_y() {
  ComplexMatrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}

ComplexMatrix random_hermitian(int n, Rng& rng) {
  const ComplexMatrix g = gaussian_matrix(n, n, rng);
  return (g + g.adjoint()) * 0.5;
}

ComplexMatrix random_psd(int n, int rank, Rng& rng) {
  const ComplexMatrix g = gaussian_matrix(n, rank, rng);
  return g * g.adjoint();
}

}  // namespace

TEST(Kron, IdentityAndDiagonalCases) {
  EXPECT_TRUE(kron(identity(2), identity(2)).isApprox(identity(4)));
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 0) = 1;
  a(1, 1) = 2;
  ComplexMatrix b(1, 1);
  b(0, 0) = 3;
  const ComplexMatrix k = kron(a, b);
  ASSERT_EQ(k.rows(), 2);
  EXPECT_EQ(k(0, 0), Complex(3));
  EXPECT_EQ(k(1, 1), Complex(6));
  EXPECT_EQ(k(0, 1), Complex(0));
}

TEST(Kron, PauliSquaredIsIdentityByDirectMultiplication) {
  const ComplexMatrix xx = kron(pauli_x(), pauli_x());
  EXPECT_LT((xx * xx - identity(4)).norm(), 1e-15);
}

TEST(Kron, MatchesLiteralOracleAndIsAssociative) {
  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const ComplexMatrix a = gaussian_matrix(2, 3, rng), b = gaussian_matrix(3, 2, rng), c = gaussian_matrix(2, 2, rng);
    EXPECT_LT((kron(a, b) - oracle::kron(a, b)).norm(), 1e-14);
    EXPECT_LT((kron(kron(a, b), c) - kron(a, kron(b, c))).norm(), 1e-12);
  }
}

TEST(Kron, RespectsDimensionGuard) {
  ::setenv("COHENT_MAX_DIM", "16", 1);
  EXPECT_EQ(max_dimension(), 16u);
  EXPECT_THROW(kron(identity(4), identity(8)), DimensionError);
  EXPECT_NO_THROW(kron(identity(4), identity(4)));
  ::unsetenv("COHENT_MAX_DIM");
  EXPECT_EQ(max_dimension(), kDefaultMaxDimension);
}

TEST(PartialTrace, ProductAndBellExamples) {
  ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
  rho(0, 0) = 1;
  const std::vector<int> shape{2, 2}, keep0{0};
  ComplexMatrix expect = ComplexMatrix::Zero(2, 2);
  expect(0, 0) = 1;
  EXPECT_LT((partial_trace(rho, shape, keep0) - expect).norm(), 1e-15);

  ComplexVector bell = ComplexVector::Zero(4);
  bell(0) = bell(3) = 1 / std::sqrt(2.0);
  const ComplexMatrix b = bell * bell.adjoint();
  EXPECT_LT((partial_trace(b, shape, keep0) - identity(2) * 0.5).norm(), 1e-15);
}

TEST(PartialTrace, MatchesLiteralOracleOnRandomStates) {
  Rng rng(5);
  const std::vector<int> dims{3, 2, 2};
  const std::vector<std::vector<int>> keeps{{0}, {1}, {2}, {0, 2}, {1, 2}, {0, 1, 2}};
  for (int t = 0; t < 10; ++t) {
    const ComplexMatrix rho = random_psd(12, 4, rng);
    for (const auto& keep : keeps) {
      const ComplexMatrix got = partial_trace(rho, dims, keep);
      EXPECT_LT((got - oracle::partial_trace(rho, dims, keep)).norm(), 1e-12);
      EXPECT_NEAR(got.trace().real(), rho.trace().real(), 1e-12 * rho.norm());
    }
    const std::vector<int> all{0, 1, 2};
    EXPECT_EQ(partial_trace(rho, dims, all), rho);
  }
}

TEST(PartialTrace, RejectsBadShapes) {
  const std::vector<int> shape{2, 3}, keep{0}, bad{2}, dup{0, 0};
  EXPECT_THROW(partial_trace(identity(5), shape, keep), ShapeError);
  EXPECT_THROW(partial_trace(identity(6), shape, bad), ShapeError);
  EXPECT_THROW(partial_trace(identity(6), shape, dup), ShapeError);
  EXPECT_THROW(partial_trace(ComplexMatrix::Zero(6, 5), shape, keep), ShapeError);
}

TEST(HermitianEig, Examples) {
  ComplexMatrix h = ComplexMatrix::Zero(2, 2);
  h(0, 0) = 1;
  h(1, 1) = 3;
  auto s = hermitian_eig(h);
  EXPECT_NEAR(s.eigenvalues(0), 3, 1e-14);
  EXPECT_NEAR(s.eigenvalues(1), 1, 1e-14);

  s = hermitian_eig(pauli_x());
  EXPECT_NEAR(s.eigenvalues(0), 1, 1e-14);
  EXPECT_NEAR(s.eigenvalues(1), -1, 1e-14);
  // |+> and |-> up to phase
  EXPECT_NEAR(std::abs(s.eigenvectors(0, 0)), 1 / std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(std::abs(s.eigenvectors.col(0).sum()), std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(std::abs(s.eigenvectors.col(1).sum()), 0.0, 1e-14);
}

TEST(HermitianEig, ReconstructionOrthonormalityAndTrace) {
  Rng rng(3);
  for (int n : {1, 2, 5, 16}) {
    const ComplexMatrix h = random_hermitian(n, rng);
    const auto s = hermitian_eig(h);
    const ComplexMatrix rec = s.eigenvectors * s.eigenvalues.cast<Complex>().asDiagonal() * s.eigenvectors.adjoint();
    EXPECT_LT((rec - h).norm(), 1e-10 * std::max(1.0, h.norm()));
    EXPECT_LT((s.eigenvectors.adjoint() * s.eigenvectors - identity(n)).norm(), 1e-10);
    EXPECT_NEAR(s.eigenvalues.sum(), h.trace().real(), 1e-10 * std::max(1.0, h.norm()));
    for (int i = 1; i < n; ++i) EXPECT_GE(s.eigenvalues(i - 1), s.eigenvalues(i));
  }
}

TEST(HermitianEig, RejectsNonHermitian) {
  ComplexMatrix m = identity(2);
  m(0, 1) = 1;
  EXPECT_THROW(hermitian_eig(m), InputError);
}

TEST(PsdSqrt, Examples) {
  EXPECT_LT((psd_sqrt(identity(3)) - identity(3)).norm(), 1e-14);
  ComplexMatrix d = ComplexMatrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const ComplexMatrix r = psd_sqrt(d);
  EXPECT_NEAR(r(0, 0).real(), 2, 1e-14);
  EXPECT_NEAR(r(1, 1).real(), 3, 1e-14);
  ComplexVector u(2);
  u << 1, Complex(0, 1);
  u.normalize();
  const ComplexMatrix p = u * u.adjoint();
  EXPECT_LT((psd_sqrt(p) - p).norm(), 1e-14);
}

TEST(PsdSqrt, SquaresBackOnRandomPsd) {
  Rng rng(8);
  for (int n : {2, 7, 32, 64}) {
    for (int rank : {1, n / 2 + 1, n}) {
      ComplexMatrix rho = random_psd(n, rank, rng);
      rho /= rho.trace().real();
      const ComplexMatrix s = psd_sqrt(rho);
      EXPECT_LT((s * s - rho).norm(), 1e-9);
      EXPECT_TRUE(is_hermitian(s));
      EXPECT_GE(hermitian_eig(s).eigenvalues.minCoeff(), -1e-12);
    }
  }
}

TEST(PsdSqrt, RejectsSignificantlyNegative) {
  ComplexMatrix m = identity(2);
  m(1, 1) = -1e-3;
  EXPECT_THROW(psd_sqrt(m), InputError);
  m(1, 1) = -1e-12;
  EXPECT_NO_THROW(psd_sqrt(m));
}

TEST(RankWithTol, Examples) {
  EXPECT_EQ(rank_with_tol(identity(3), 1e-8), 3);
  EXPECT_EQ(rank_with_tol(ComplexMatrix::Zero(3, 3)), 0);
  Rng rng(1);
  const ComplexVector u = gaussian_vector(4, rng), v = gaussian_vector(4, rng);
  EXPECT_EQ(rank_with_tol(u * v.adjoint()), 1);
  EXPECT_THROW(rank_with_tol(identity(2), 0.0), InputError);
}

TEST(OrthonormalCompletion, Examples) {
  ComplexMatrix e0 = ComplexMatrix::Zero(2, 1);
  e0(0, 0) = 1;
  const ComplexMatrix u = orthonormal_completion(e0);
  EXPECT_TRUE(is_unitary(u));
  EXPECT_LT((u.col(0) - e0.col(0)).norm(), 1e-14);

  Rng rng(4);
  ComplexMatrix q = orthonormal_completion(gaussian_matrix(4, 4, rng));
  EXPECT_LT((orthonormal_completion(q) - q).norm(), 1e-12);

  ComplexMatrix two(2, 2);
  two << 1, 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0);
  EXPECT_LT((orthonormal_completion(two).adjoint() * orthonormal_completion(two) - identity(2)).norm(), 1e-10);
}

TEST(OrthonormalCompletion, LeadingColumnsSpanInput) {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const ComplexMatrix cols = gaussian_matrix(6, 3, rng);
    const ComplexMatrix u = orthonormal_completion(cols);
    ASSERT_TRUE(is_unitary(u));
    const ComplexMatrix lead = u.leftCols(3);
    // projector onto the leading columns leaves the input unchanged
    EXPECT_LT((lead * (lead.adjoint() * cols) - cols).norm(), 1e-10 * cols.norm());
  }
  ComplexMatrix dep(3, 2);
  dep << 1, 2, 0, 0, 0, 0;
  EXPECT_THROW(orthonormal_completion(dep), RankDeficientError);
}

TEST(GramSchmidt, FactorsInputAndDependsOnlyOnGram) {
  Rng rng(10);
  const ComplexMatrix cols = gaussian_matrix(5, 3, rng);
  const auto gs = gram_schmidt(cols);
  EXPECT_LT((gs.q * gs.r - cols).norm(), 1e-12);
  EXPECT_LT((gs.q.adjoint() * gs.q - identity(3)).norm(), 1e-12);
  // a unitary image has the same Gram matrix, hence the same R
  const ComplexMatrix w = orthonormal_completion(gaussian_matrix(5, 5, rng));
  EXPECT_LT((gram_schmidt(w * cols).r - gs.r).norm(), 1e-12);
}

TEST(Predicates, UnitaryIsometryHermitian) {
  EXPECT_TRUE(is_unitary(pauli_y()));
  EXPECT_TRUE(is_hermitian(pauli_y()));
  ComplexMatrix v = ComplexMatrix::Zero(3, 2);
  v(0, 0) = v(1, 1) = 1;
  EXPECT_TRUE(is_isometry(v, 1e-12));
  EXPECT_FALSE(is_unitary(v));
  ComplexMatrix bad = identity(2);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(all_finite(bad));
}
