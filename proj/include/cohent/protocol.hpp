#pragma once

// State-independent maps of the coherence-to-entanglement conversion:
//
//   activation_unitary   U_A, a ladder of generalized CNOTs copying level i
//                        of the qudit into ancilla qubit i
//   qft                  Fourier transform on the qudit
//   decoupling_unitary   U_D, level-conditioned phases on the ancillas
//   locc_decouple        the one-way LOCC channel replacing QFT + U_D
//   killoran_isometry    Gram-matrix isometry for an arbitrary classical frame
//   local_filter         S (x) L^(x)d that reveals the canonical form
//
// The Fourier kernel and the decoupling phases use the stored (0-based)
// level indices, i.e. <m|QFT|j> = exp(2 pi i j m / d) / sqrt(d) with
// j, m in 0..d-1. Both maps use the same convention, so the decoupling is
// exact.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cohent/hilbert.hpp"
#include "cohent/linalg.hpp"

namespace cohent {

inline constexpr int kMinProtocolDim = 2;
inline constexpr int kMaxProtocolDim = 6;

namespace detail {

inline void check_protocol_dim(int d, const char* what) {
  if (d < kMinProtocolDim || d > kMaxProtocolDim) {
    throw InputError(std::string(what) + ": qudit dimension " + std::to_string(d) +
                     " outside " + std::to_string(kMinProtocolDim) + ".." +
                     std::to_string(kMaxProtocolDim));
  }
}

inline Complex root_of_unity(long long power, int d) {
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(power % d) / d;
  return std::polar(1.0, angle);
}

inline ComplexMatrix pauli_x() {
  ComplexMatrix x = ComplexMatrix::Zero(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  return x;
}

}  // namespace detail

/// Shape of a qudit followed by d ancilla qubits.
inline SpaceShape protocol_shape(int d) { return SpaceShape::qudit_with_ancillas(d, d, 2); }

/// Shape of the d-qubit ancilla register alone.
inline SpaceShape register_shape(int d) { return SpaceShape(std::vector<int>(d, 2)); }

/// U_A = sum_i |i><i| (x) 1^(i-1) (x) sigma_x (x) 1^(d-i).
inline ComplexMatrix activation_unitary(int d) {
  detail::check_protocol_dim(d, "activation_unitary");
  const std::size_t reg = std::size_t{1} << d;
  const auto n = static_cast<Eigen::Index>(d * reg);
  check_dimension(static_cast<std::size_t>(n), "activation_unitary");
  ComplexMatrix u = ComplexMatrix::Zero(n, n);
  for (int level = 1; level <= d; ++level) {
    const std::size_t flip = binary_string_index(d, level);
    for (std::size_t r = 0; r < reg; ++r) {
      const auto row = static_cast<Eigen::Index>((level - 1) * reg + (r ^ flip));
      const auto col = static_cast<Eigen::Index>((level - 1) * reg + r);
      u(row, col) = 1.0;
    }
  }
  return u;
}

/// (1_d - |i><i|) (x) 1_2 + |i><i| (x) sigma_x acting on the qudit and
/// ancilla qubit `level`, embedded in the full qudit (x) d-qubit space.
inline ComplexMatrix generalized_cnot(int d, int level) {
  detail::check_protocol_dim(d, "generalized_cnot");
  if (level < 1 || level > d) throw InputError("generalized_cnot: level out of range");
  ComplexMatrix proj = ComplexMatrix::Zero(d, d);
  proj(level - 1, level - 1) = 1.0;
  ComplexMatrix target = identity(1);
  for (int q = 1; q <= d; ++q) target = kron(target, q == level ? detail::pauli_x() : identity(2));
  const ComplexMatrix reg_identity = identity(std::int64_t{1} << d);
  return kron(identity(d) - proj, reg_identity) + kron(proj, target);
}

inline ComplexMatrix qft(int d) {
  if (d < 2) throw InputError("qft: dimension must be >= 2");
  ComplexMatrix f(d, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int m = 0; m < d; ++m) {
    for (int j = 0; j < d; ++j) f(m, j) = scale * detail::root_of_unity(static_cast<long long>(j) * m, d);
  }
  return f;
}

/// U_D = sum_{j,m} exp(-2 pi i j m / d) |m><m| (x) |2^(d-j)><2^(d-j)|, extended
/// by the identity outside the span of the basis strings |2^(d-j)>.
inline ComplexMatrix decoupling_unitary(int d) {
  detail::check_protocol_dim(d, "decoupling_unitary");
  const std::size_t reg = std::size_t{1} << d;
  const auto n = static_cast<Eigen::Index>(d * reg);
  ComplexMatrix u = identity(n);
  for (int m = 0; m < d; ++m) {
    for (int j = 1; j <= d; ++j) {
      const auto idx = static_cast<Eigen::Index>(m * reg + binary_string_index(d, j));
      u(idx, idx) = detail::root_of_unity(-static_cast<long long>(j - 1) * m + static_cast<long long>(d) * d, d);
    }
  }
  return u;
}

/// U_{D_j}^{(m)} = |0><0| + exp(-2 pi i j m / d) |1><1| on ancilla qubit j.
inline ComplexMatrix decoupling_phase_gate(int d, int j, int m) {
  ComplexMatrix g = identity(2);
  g(1, 1) = detail::root_of_unity(-static_cast<long long>(j - 1) * m + static_cast<long long>(d) * d, d);
  return g;
}

/// U_D^{(m)} = (x)_j U_{D_j}^{(m)} on the d-qubit register (m is 0-based).
inline ComplexMatrix register_decoupling(int d, int m) {
  ComplexMatrix u = identity(1);
  for (int j = 1; j <= d; ++j) u = kron(u, decoupling_phase_gate(d, j, m));
  return u;
}

/// The d^2 controlled phase gates |m><m| (x) U_{D_j}^{(m)} + (1 - |m><m|) (x) 1,
/// multiplied in sequence over the full qudit (x) d-qubit space.
inline ComplexMatrix decoupling_gate_sequence(int d) {
  detail::check_protocol_dim(d, "decoupling_gate_sequence");
  const auto reg = static_cast<Eigen::Index>(std::int64_t{1} << d);
  ComplexMatrix total = identity(d * reg);
  for (int m = 0; m < d; ++m) {
    ComplexMatrix proj = ComplexMatrix::Zero(d, d);
    proj(m, m) = 1.0;
    for (int j = 1; j <= d; ++j) {
      ComplexMatrix local = identity(1);
      for (int q = 1; q <= d; ++q) local = kron(local, q == j ? decoupling_phase_gate(d, j, m) : identity(2));
      total = (kron(proj, local) + kron(identity(d) - proj, identity(reg))) * total;
    }
  }
  return total;
}

/// U_B = U_D (QFT (x) 1).
inline ComplexMatrix decoupling_full_unitary(int d) {
  const auto reg = static_cast<Eigen::Index>(std::int64_t{1} << d);
  return decoupling_unitary(d) * kron(qft(d), identity(reg));
}

/// Phi+ = sum_i |i> / sqrt(d).
inline PureState maximally_coherent(int d) {
  return PureState(SpaceShape({d}), ComplexVector::Constant(d, 1.0 / std::sqrt(double(d))));
}

/// rho' = U_A (rho (x) |0><0|^(x)d) U_A^dagger.
inline DensityMatrix activate(const DensityMatrix& rho) {
  if (rho.shape().factors() != 1) throw ShapeError("activate: input must be a single qudit");
  const int d = rho.shape().dim(0);
  const ComplexMatrix ua = activation_unitary(d);
  const auto reg = static_cast<Eigen::Index>(std::int64_t{1} << d);
  ComplexMatrix anc = ComplexMatrix::Zero(reg, reg);
  anc(0, 0) = 1.0;
  ComplexMatrix out = ua * kron(rho.matrix(), anc) * ua.adjoint();
  return DensityMatrix::normalized(protocol_shape(d), std::move(out));
}

inline PureState activate(const PureState& psi) {
  if (psi.shape().factors() != 1) throw ShapeError("activate: input must be a single qudit");
  const int d = psi.shape().dim(0);
  const PureState with_anc = attach_ancillas(psi, d, 2, 0);
  return PureState::normalized(protocol_shape(d), activation_unitary(d) * with_anc.amplitudes());
}

/// Delta(rho') = sum_m U_D^(m) <m| (QFT (x) 1) rho' (QFT (x) 1)^dag |m> U_D^(m)dag.
inline DensityMatrix locc_decouple(const DensityMatrix& rho_prime) {
  const auto& dims = rho_prime.shape().dims();
  const int d = dims.front();
  if (dims.size() != static_cast<std::size_t>(d) + 1 ||
      std::any_of(dims.begin() + 1, dims.end(), [](int x) { return x != 2; })) {
    throw ShapeError("locc_decouple: expected shape (d, 2, ..., 2) with d qubits");
  }
  detail::check_protocol_dim(d, "locc_decouple");
  const auto reg = static_cast<Eigen::Index>(std::int64_t{1} << d);
  const ComplexMatrix f = kron(qft(d), identity(reg));
  const ComplexMatrix rotated = f * rho_prime.matrix() * f.adjoint();
  ComplexMatrix out = ComplexMatrix::Zero(reg, reg);
  for (int m = 0; m < d; ++m) {
    const ComplexMatrix u = register_decoupling(d, m);
    out += u * rotated.block(m * reg, m * reg, reg, reg) * u.adjoint();
  }
  return DensityMatrix::normalized(register_shape(d), std::move(out));
}

/// Ancilla register state Psi'' of a pure protocol output: applies U_B and
/// splits off the qudit. Throws if the result is not a product state.
inline PureState decouple_pure(const PureState& psi_prime) {
  const int d = psi_prime.shape().dim(0);
  if (!(psi_prime.shape() == protocol_shape(d))) {
    throw ShapeError("decouple_pure: expected shape (d, 2, ..., 2) with d qubits");
  }
  const auto reg = static_cast<Eigen::Index>(std::int64_t{1} << d);
  const ComplexVector out = decoupling_full_unitary(d) * psi_prime.amplitudes();
  ComplexMatrix m(d, reg);
  for (int q = 0; q < d; ++q) m.row(q) = out.segment(q * reg, reg).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector s = svd.singularValues();
  if (s.size() > 1 && s(1) > 1e-8) throw InputError("decouple_pure: qudit did not decouple");
  // fix the global phase so the qudit factor is Phi+ with a positive overlap
  ComplexVector qudit = svd.matrixU().col(0);
  const Complex phase = qudit.sum() / std::abs(qudit.sum());
  ComplexVector anc = svd.matrixV().col(0).conjugate() * s(0) * phase;
  return PureState::normalized(register_shape(d), std::move(anc));
}

// ---------------------------------------------------------------------------
// Gram-matrix isometry

enum class IsometryVariant { W, GHZ };

inline std::string to_string(IsometryVariant v) { return v == IsometryVariant::W ? "W" : "GHZ"; }

struct IsometryBundle {
  ComplexMatrix v;                     // d -> d * anc_dim^d isometry
  std::vector<ComplexVector> a_states;  // |a_i>, in C^d
  std::vector<ComplexVector> b_states;  // |b_i>, in the ancilla register
  double lambda = 1.0;
  double epsilon = 0.0;
  IsometryVariant variant = IsometryVariant::W;
  int d = 0;
  int anc_dim = 2;

  SpaceShape output_shape() const { return SpaceShape::qudit_with_ancillas(d, d, anc_dim); }

  /// Gram matrices of {|a_i>} and {|b_i>}.
  ComplexMatrix gram_a() const { return gram_matrix(std::span<const ComplexVector>(a_states)); }
  ComplexMatrix gram_b() const { return gram_matrix(std::span<const ComplexVector>(b_states)); }

  PureState apply(const PureState& psi) const {
    if (psi.dim() != v.cols()) throw ShapeError("IsometryBundle::apply: dimension mismatch");
    return PureState::normalized(output_shape(), v * psi.amplitudes());
  }
};

/// Policy for the perturbation epsilon: the largest 2^-t (t = 1..40) for which
/// G o B(1 + epsilon) stays positive definite with margin 1e-9.
inline constexpr int kEpsilonSearchSteps = 40;
inline constexpr double kEpsilonMinEig = 1e-9;

inline ComplexMatrix hadamard_b(const ComplexMatrix& g, double mu) {
  ComplexMatrix out = g * mu;
  out.diagonal() = g.diagonal();
  return out;
}

/// Unitary on the full space mapping from_i to to_i for two sequences with
/// equal Gram matrices: both are orthonormalized in the same order, completed
/// to bases, and matched as U = T C^dagger.
inline ComplexMatrix matching_unitary(const ComplexMatrix& from, const ComplexMatrix& to) {
  if (from.rows() != to.rows() || from.cols() != to.cols()) {
    throw ShapeError("matching_unitary: sequences differ in shape");
  }
  const ComplexMatrix c = orthonormal_completion(from);
  const ComplexMatrix t = orthonormal_completion(to);
  return t * c.adjoint();
}

inline IsometryBundle killoran_isometry(const ClassicalFrame& frame,
                                        IsometryVariant variant = IsometryVariant::W) {
  const int d = frame.dim();
  const ComplexMatrix g = gram_matrix(frame);

  double epsilon = 0.0;
  for (int t = 1; t <= kEpsilonSearchSteps; ++t) {
    const double eps = std::ldexp(1.0, -t);
    const ComplexMatrix m = hadamard_b(g, 1.0 + eps);
    if (hermitian_eig(m).eigenvalues.minCoeff() > kEpsilonMinEig) {
      epsilon = eps;
      break;
    }
  }
  if (epsilon == 0.0) {
    throw RankDeficientError("killoran_isometry: G o B(1+eps) not positive definite for any eps in the search grid");
  }

  IsometryBundle out;
  out.d = d;
  out.variant = variant;
  out.epsilon = epsilon;
  out.lambda = 1.0 / (1.0 + epsilon);

  // |a_i> from the factorization M = (sqrt(L) Q^dag)^dag (sqrt(L) Q^dag)
  const auto spec = hermitian_eig(hadamard_b(g, 1.0 + epsilon));
  const ComplexMatrix factor =
      spec.eigenvalues.cwiseMax(0.0).cwiseSqrt().asDiagonal() * spec.eigenvectors.adjoint();
  for (int i = 0; i < d; ++i) out.a_states.push_back(factor.col(i));

  if (variant == IsometryVariant::W) {
    out.anc_dim = 2;
    ComplexVector lam(2);
    lam << std::sqrt(out.lambda), std::sqrt(1.0 - out.lambda);
    ComplexVector zero = ComplexVector::Zero(2);
    zero(0) = 1.0;
    for (int i = 1; i <= d; ++i) {
      ComplexVector b = ComplexVector::Ones(1);
      for (int q = 1; q <= d; ++q) b = kron(b, q == i ? lam : zero);
      out.b_states.push_back(std::move(b));
    }
  } else {
    out.anc_dim = d + 1;
    const double mu = std::pow(out.lambda, 1.0 / d);
    for (int j = 1; j <= d; ++j) {
      ComplexVector lam = ComplexVector::Zero(d + 1);
      lam(0) = std::sqrt(mu);
      lam(j) = std::sqrt(1.0 - mu);
      ComplexVector b = ComplexVector::Ones(1);
      for (int q = 0; q < d; ++q) b = kron(b, lam);
      out.b_states.push_back(std::move(b));
    }
  }

  const auto total = static_cast<Eigen::Index>(out.output_shape().total());

  // c_i = chi_i (x) |0...0> and t_i = a_i (x) b_i share a Gram matrix, so their
  // Gram-Schmidt factors agree and V = T_o C_o^dag restricted to the qudit.
  ComplexMatrix targets(total, d);
  for (int i = 0; i < d; ++i) targets.col(i) = kron(out.a_states[i], out.b_states[i]);
  const auto gs_chi = gram_schmidt(frame.vectors());
  const auto gs_t = gram_schmidt(targets);
  out.v = gs_t.q * gs_chi.q.adjoint();
  return out;
}

/// Full unitary U with U (chi_i (x) |0..0>) = a_i (x) b_i, built with
/// orthonormal completions. Only practical for small output dimensions.
inline ComplexMatrix isometry_unitary(const ClassicalFrame& frame, const IsometryBundle& bundle) {
  const int d = frame.dim();
  const SpaceShape shape = bundle.output_shape();
  const auto total = static_cast<Eigen::Index>(shape.total());
  const auto anc_total = total / d;
  ComplexMatrix from = ComplexMatrix::Zero(total, d);
  ComplexMatrix to(total, d);
  for (int i = 0; i < d; ++i) {
    for (int r = 0; r < d; ++r) from(r * anc_total, i) = frame.vectors()(r, i);
    to.col(i) = kron(bundle.a_states[i], bundle.b_states[i]);
  }
  return matching_unitary(from, to);
}

/// S (x) L^(x)d with S|a_i> = |i>, L|0> = |0>, L|lambda> = |1> (W), or
/// L|lambda_j> = |j> for the GHZ-type ancillas.
inline ComplexMatrix local_filter(const IsometryBundle& bundle) {
  const int d = bundle.d;
  if (!(bundle.lambda < 1.0)) throw InputError("local_filter: lambda = 1 makes the ancilla filter singular");
  ComplexMatrix a(d, d);
  for (int i = 0; i < d; ++i) a.col(i) = bundle.a_states[i];
  const ComplexMatrix s = a.inverse();

  ComplexMatrix l;
  if (bundle.variant == IsometryVariant::W) {
    ComplexMatrix p(2, 2);
    p << 1.0, std::sqrt(bundle.lambda), 0.0, std::sqrt(1.0 - bundle.lambda);
    l = p.inverse();
  } else {
    const double mu = std::pow(bundle.lambda, 1.0 / d);
    ComplexMatrix p = identity(d + 1);
    for (int j = 1; j <= d; ++j) {
      p(0, j) = std::sqrt(mu);
      p(j, j) = std::sqrt(1.0 - mu);
    }
    l = p.inverse();
  }
  ComplexMatrix out = s;
  for (int q = 0; q < d; ++q) out = kron(out, l);
  return out;
}

/// sum_i psi_i |i>|2^(d-i)> (W) or sum_i psi_i |i>|i...i> (GHZ), normalized.
inline PureState canonical_form(const ComplexVector& coords, IsometryVariant variant) {
  const auto d = static_cast<int>(coords.size());
  const SpaceShape shape = SpaceShape::qudit_with_ancillas(d, d, variant == IsometryVariant::W ? 2 : d + 1);
  ComplexVector out = ComplexVector::Zero(static_cast<Eigen::Index>(shape.total()));
  const auto anc_total = static_cast<std::size_t>(shape.total() / d);
  for (int i = 1; i <= d; ++i) {
    std::size_t anc = 0;
    if (variant == IsometryVariant::W) {
      anc = binary_string_index(d, i);
    } else {
      for (int q = 0; q < d; ++q) anc = anc * (d + 1) + i;
    }
    out(static_cast<Eigen::Index>((i - 1) * anc_total + anc)) = coords(i - 1);
  }
  return PureState::normalized(shape, std::move(out));
}

}  // namespace cohent
