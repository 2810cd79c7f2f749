#pragma once

// Resource quantifiers: ranks, entanglement depth, fidelity, the fidelity-based
// geometric measures and the conversion-bound harness.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohent/errors.hpp"
#include "cohent/hilbert.hpp"
#include "cohent/linalg.hpp"
#include "cohent/protocol.hpp"
#include "cohent/sdp.hpp"

namespace cohent {

inline constexpr double kAmplitudeTol = 1e-9;
inline constexpr double kPurityTol = 1e-9;
inline constexpr double kCertificateTol = 1e-6;
inline constexpr double kCoherenceNumberTol = 1e-7;
inline constexpr double kImageTol = 1e-9;
inline constexpr double kConversionSlack = 2e-6;

// ---------------------------------------------------------------------------
// Ranks and depth

inline void require_single_qudit(const SpaceShape& s, const char* what) {
  if (s.factors() != 1) throw ShapeError(std::string(what) + ": expected a single-qudit state");
}

inline int coherence_rank(const PureState& psi, double tol = kAmplitudeTol) {
  require_single_qudit(psi.shape(), "coherence_rank");
  int n = 0;
  for (Eigen::Index i = 0; i < psi.dim(); ++i) n += std::abs(psi.amplitudes()(i)) > tol ? 1 : 0;
  return n;
}

/// `side` lists the factors (0-based) on one side of the cut.
inline int schmidt_rank(const PureState& psi, const std::vector<int>& side, double tol = kAmplitudeTol) {
  const int n = static_cast<int>(psi.shape().factors());
  std::vector<bool> seen(n, false);
  for (int f : side) {
    if (f < 0 || f >= n || seen[f]) throw ShapeError("schmidt_rank: invalid cut");
    seen[f] = true;
  }
  if (side.empty() || static_cast<int>(side.size()) == n) throw ShapeError("schmidt_rank: cut must be proper");
  const auto& dims = psi.shape().dims();
  return rank_with_tol(reshape_for_cut(psi.amplitudes(), dims, side), tol);
}

struct DepthReport {
  int depth = 1;
  SetPartition witness_partition;
  double tolerance = kPurityTol;
};

/// Smallest k such that psi is a product over some partition with blocks of
/// size <= k. A block factorizes off a pure state iff its marginal is pure.
inline DepthReport entanglement_depth_pure(const PureState& psi, double tol = kPurityTol) {
  const int n = static_cast<int>(psi.shape().factors());
  if (n > kMaxPartitionParties) {
    throw DimensionError("entanglement_depth_pure: " + std::to_string(n) + " factors exceeds " +
                         std::to_string(kMaxPartitionParties));
  }
  const auto& dims = psi.shape().dims();
  std::vector<double> cache(std::size_t{1} << n, -1.0);
  auto block_purity = [&](const std::vector<int>& block) {
    unsigned mask = 0;
    for (int f : block) mask |= 1u << f;
    double& slot = cache[mask];
    if (slot < 0) {
      if (static_cast<int>(block.size()) == n) {
        slot = 1.0;
      } else {
        const ComplexMatrix m = reshape_for_cut(psi.amplitudes(), dims, block);
        const ComplexMatrix g = m.rows() <= m.cols() ? ComplexMatrix(m * m.adjoint()) : ComplexMatrix(m.adjoint() * m);
        slot = g.squaredNorm();
      }
    }
    return slot;
  };
  for (int k = 1; k <= n; ++k) {
    for (const auto& part : enumerate_partitions(n, k)) {
      if (static_cast<int>(part.max_block()) != k) continue;
      const bool ok = std::all_of(part.blocks.begin(), part.blocks.end(),
                                  [&](const auto& b) { return block_purity(b) >= 1.0 - tol; });
      if (ok) return DepthReport{k, part, tol};
    }
  }
  throw Error("entanglement_depth_pure: no factorizing partition found");
}

// ---------------------------------------------------------------------------
// Fidelity

inline constexpr double kFidelitySupportTol = 1e-14;

// F = ||L^dag M||_1^2 with rho = L L^dag, sigma = M M^dag over the supports.
inline double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma) {
  if (!(rho.shape() == sigma.shape())) throw ShapeError("fidelity: shape mismatch");
  const ComplexMatrix l = support_factor(rho.matrix(), kFidelitySupportTol);
  const ComplexMatrix m = support_factor(sigma.matrix(), kFidelitySupportTol);
  const double root = singular_values(l.adjoint() * m).sum();
  return std::clamp(root * root, 0.0, 1.0);
}

inline double fidelity(const PureState& a, const PureState& b) {
  if (!(a.shape() == b.shape())) throw ShapeError("fidelity: shape mismatch");
  return std::min(1.0, std::norm(a.amplitudes().dot(b.amplitudes())));
}

// ---------------------------------------------------------------------------
// Geometric measures

enum class MeasureMethod { ClosedForm, Sdp, BruteForce };

inline std::string to_string(MeasureMethod m) {
  switch (m) {
    case MeasureMethod::ClosedForm: return "closed_form";
    case MeasureMethod::Sdp: return "sdp";
    case MeasureMethod::BruteForce: return "brute_force";
  }
  return "unknown";
}

struct MeasureResult {
  double value = 0.0;
  std::optional<State> closest_state;
  MeasureMethod method = MeasureMethod::ClosedForm;
  std::optional<double> solver_gap;
};

/// Indices ordered by decreasing |c_i|, ties broken by the lower index.
inline std::vector<int> descending_order(const ComplexVector& c) {
  std::vector<int> order(c.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(c(a)) > std::abs(c(b)); });
  return order;
}

inline void check_level_k(int k, int d, const char* what) {
  if (k < 2 || k > d) {
    throw InputError(std::string(what) + ": k = " + std::to_string(k) + " outside 2.." + std::to_string(d));
  }
}

/// 1 - sum of the k-1 largest |c_i|^2; the closest state keeps those terms.
inline MeasureResult geometric_coherence_pure(const PureState& psi, int k) {
  require_single_qudit(psi.shape(), "geometric_coherence_pure");
  const int d = static_cast<int>(psi.dim());
  check_level_k(k, d, "geometric_coherence_pure");
  const ComplexVector& c = psi.amplitudes();
  const auto order = descending_order(c);
  ComplexVector kept = ComplexVector::Zero(d);
  double weight = 0.0;
  for (int i = 0; i < k - 1; ++i) {
    kept(order[i]) = c(order[i]);
    weight += std::norm(c(order[i]));
  }
  MeasureResult out;
  out.value = std::clamp(1.0 - weight, 0.0, 1.0);
  out.closest_state = PureState::normalized(psi.shape(), kept);
  return out;
}

/// Coefficients c_i of a state sum_i c_i |i>|2^(d-i)>; rejects other states.
inline ComplexVector protocol_coefficients(const PureState& psi_prime, double tol = kAmplitudeTol) {
  const int d = psi_prime.shape().dim(0);
  if (!(psi_prime.shape() == protocol_shape(d))) {
    throw ShapeError("protocol_coefficients: expected shape (d, 2, ..., 2) with d qubits");
  }
  ComplexVector c(d);
  ComplexVector rest = psi_prime.amplitudes();
  for (int i = 1; i <= d; ++i) {
    const auto idx = static_cast<Eigen::Index>(protocol_index(d, i));
    c(i - 1) = rest(idx);
    rest(idx) = 0.0;
  }
  if (rest.norm() > tol) throw InputError("protocol_coefficients: state is not of protocol form");
  return c;
}

inline PureState protocol_state(const ComplexVector& c) {
  const int d = static_cast<int>(c.size());
  const SpaceShape shape = protocol_shape(d);
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(shape.total()));
  for (int i = 1; i <= d; ++i) v(static_cast<Eigen::Index>(protocol_index(d, i))) = c(i - 1);
  return PureState::normalized(shape, std::move(v));
}

/// E_G^(k+1) of a protocol-form state: one minus the k-1 largest branch
/// weights |c_i|^2. The closest k-producible state keeps those branches.
inline MeasureResult geometric_entanglement_protocol_pure(const PureState& psi_prime, int k) {
  const ComplexVector c = protocol_coefficients(psi_prime);
  const int d = static_cast<int>(c.size());
  check_level_k(k, d, "geometric_entanglement_protocol_pure");
  std::vector<double> w(d);
  for (int i = 0; i < d; ++i) w[i] = std::norm(c(i));
  std::vector<double> top = w;
  std::partial_sort(top.begin(), top.begin() + (k - 1), top.end(), std::greater<>());
  const double overlap = std::accumulate(top.begin(), top.begin() + (k - 1), 0.0);
  const double threshold = top[k - 2];
  ComplexVector kept = ComplexVector::Zero(d);
  int taken = 0;
  for (int i = 0; i < d && taken < k - 1; ++i) {
    if (w[i] > threshold) kept(i) = c(i), ++taken;
  }
  for (int i = 0; i < d && taken < k - 1; ++i) {
    if (w[i] == threshold) kept(i) = c(i), ++taken;
  }
  MeasureResult out;
  out.value = std::clamp(1.0 - overlap, 0.0, 1.0);
  out.closest_state = protocol_state(kept);
  return out;
}

/// 1 - max F(rho, sigma) over states supported on sums of (k-1)-level
/// subspaces, by SDP. Throws SolverError unless the solve is certified.
inline MeasureResult geometric_coherence_mixed(const DensityMatrix& rho, int k,
                                               const SdpSolver& solver = SdpSolver()) {
  require_single_qudit(rho.shape(), "geometric_coherence_mixed");
  const int d = static_cast<int>(rho.dim());
  check_level_k(k, d, "geometric_coherence_mixed");
  const SdpProblem p = build_kcoherent_fidelity_sdp(rho, k);
  const SdpSolution sol = solver.solve(p);
  if (!sol.certified() || std::abs(sol.duality_gap) > kCertificateTol) {
    throw SolverError("geometric_coherence_mixed: solver status " + to_string(sol.status), sol.duality_gap);
  }
  ComplexMatrix sigma = ComplexMatrix::Zero(d, d);
  for (const auto& sub : enumerate_subsets(d, k - 1)) {
    const ComplexMatrix y = complex_block(p, sol, subset_block_name(sub));
    for (int a = 0; a < k - 1; ++a) {
      for (int b = 0; b < k - 1; ++b) sigma(sub[a], sub[b]) += y(a, b);
    }
  }
  // project onto the PSD cone to absorb interior-point round-off
  HermitianSpectrum spec = hermitian_eig(sigma);
  spec.eigenvalues = spec.eigenvalues.cwiseMax(0.0);
  sigma = spec.eigenvectors * spec.eigenvalues.cast<Complex>().asDiagonal() * spec.eigenvectors.adjoint();
  MeasureResult out;
  const double opt = std::clamp(sol.primal_value, 0.0, 1.0);
  out.value = std::clamp(1.0 - opt * opt, 0.0, 1.0);
  out.closest_state = DensityMatrix::normalized(rho.shape(), sigma);
  out.method = MeasureMethod::Sdp;
  out.solver_gap = sol.duality_gap;
  return out;
}

inline MeasureResult geometric_coherence(const State& s, int k, const SdpSolver& solver = SdpSolver()) {
  if (const auto* p = std::get_if<PureState>(&s)) return geometric_coherence_pure(*p, k);
  return geometric_coherence_mixed(std::get<DensityMatrix>(s), k, solver);
}

// ---------------------------------------------------------------------------
// Pullbacks onto image coordinates

namespace detail {

inline DensityMatrix pullback(const DensityMatrix& rho, const std::vector<Eigen::Index>& idx, const char* what) {
  const auto d = static_cast<Eigen::Index>(idx.size());
  ComplexMatrix x(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) x(a, b) = rho.matrix()(idx[a], idx[b]);
  }
  const double inside = x.trace().real();
  if (std::abs(1.0 - inside) > kImageTol) {
    throw InputError(std::string(what) + ": state has weight " + std::to_string(1.0 - inside) +
                     " outside the image subspace");
  }
  return DensityMatrix::normalized(SpaceShape({static_cast<int>(d)}), x);
}

}  // namespace detail

/// Restriction of rho' to span{|i>|2^(d-i)>}, read in qudit coordinates.
inline DensityMatrix protocol_pullback(const DensityMatrix& rho_prime) {
  const int d = rho_prime.shape().dim(0);
  if (!(rho_prime.shape() == protocol_shape(d))) {
    throw ShapeError("protocol_pullback: expected shape (d, 2, ..., 2) with d qubits");
  }
  std::vector<Eigen::Index> idx;
  for (int i = 1; i <= d; ++i) idx.push_back(static_cast<Eigen::Index>(protocol_index(d, i)));
  return detail::pullback(rho_prime, idx, "protocol_pullback");
}

/// Restriction of a d-qubit register state to span{|2^(d-i)>}.
inline DensityMatrix register_pullback(const DensityMatrix& rho_dp) {
  const int d = static_cast<int>(rho_dp.shape().factors());
  if (!(rho_dp.shape() == register_shape(d))) throw ShapeError("register_pullback: expected d qubits");
  std::vector<Eigen::Index> idx;
  for (int i = 1; i <= d; ++i) idx.push_back(static_cast<Eigen::Index>(binary_string_index(d, i)));
  return detail::pullback(rho_dp, idx, "register_pullback");
}

/// E_G^(k+1)(rho') for states in the protocol image.
inline MeasureResult geometric_entanglement_protocol_mixed(const DensityMatrix& rho_prime, int k,
                                                           const SdpSolver& solver = SdpSolver()) {
  MeasureResult r = geometric_coherence_mixed(protocol_pullback(rho_prime), k, solver);
  if (r.closest_state) {
    const DensityMatrix sigma = std::get<DensityMatrix>(*r.closest_state);
    r.closest_state = activate(sigma);
  }
  return r;
}

struct ConversionReport {
  int k = 2;
  double coherence = 0.0;               // C^(k)(rho)
  double entanglement_activated = 0.0;  // E^(k+1)(rho')
  double entanglement_decoupled = 0.0;  // pullback evaluation for rho''
  double gap_activated = 0.0;           // E' - C
  double gap_decoupled = 0.0;           // E'' - C
  double max_solver_gap = 0.0;
  double slack = kConversionSlack;

  bool first_holds() const { return gap_activated <= slack; }
  bool second_holds() const { return gap_decoupled <= slack; }
  bool holds() const { return first_holds() && second_holds(); }
};

inline ConversionReport verify_conversion_bounds(const DensityMatrix& rho, int k,
                                                 const SdpSolver& solver = SdpSolver(),
                                                 double slack = kConversionSlack) {
  require_single_qudit(rho.shape(), "verify_conversion_bounds");
  const DensityMatrix rho_prime = activate(rho);
  const DensityMatrix rho_dp = locc_decouple(rho_prime);
  const MeasureResult c = geometric_coherence_mixed(rho, k, solver);
  const MeasureResult e1 = geometric_coherence_mixed(protocol_pullback(rho_prime), k, solver);
  const MeasureResult e2 = geometric_coherence_mixed(register_pullback(rho_dp), k, solver);
  ConversionReport r;
  r.k = k;
  r.coherence = c.value;
  r.entanglement_activated = e1.value;
  r.entanglement_decoupled = e2.value;
  r.gap_activated = e1.value - c.value;
  r.gap_decoupled = e2.value - c.value;
  r.max_solver_gap = std::max({std::abs(*c.solver_gap), std::abs(*e1.solver_gap), std::abs(*e2.solver_gap)});
  r.slack = slack;
  return r;
}

/// Largest k with C^(k)(rho) > tol, or 1 if there is none. A positive value
/// certifies that rho lies outside the (k-1)-coherent states.
inline int coherence_number_lower_bound(const DensityMatrix& rho, const SdpSolver& solver = SdpSolver(),
                                        double tol = kCoherenceNumberTol) {
  require_single_qudit(rho.shape(), "coherence_number_lower_bound");
  const int d = static_cast<int>(rho.dim());
  for (int k = d; k >= 2; --k) {
    if (geometric_coherence_mixed(rho, k, solver).value > tol) return k;
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Reports

inline nlohmann::json measure_json(const std::string& measure, std::optional<int> k, const MeasureResult& r) {
  nlohmann::json j;
  j["measure"] = measure;
  j["k"] = k ? nlohmann::json(*k) : nlohmann::json(nullptr);
  j["value"] = r.value;
  j["method"] = to_string(r.method);
  j["closest_state"] = r.closest_state ? state_json(*r.closest_state) : nlohmann::json(nullptr);
  j["solver_gap"] = r.solver_gap ? nlohmann::json(*r.solver_gap) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json partition_json(const SetPartition& p) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : p.blocks) {
    nlohmann::json blk = nlohmann::json::array();
    for (int f : b) blk.push_back(f + 1);
    blocks.push_back(blk);
  }
  return blocks;
}

}  // namespace cohent
