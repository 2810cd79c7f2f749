#pragma once

// State model for composite qudit (x) qubit^d spaces.
//
// Index conventions: levels of a d-level system are labelled 1..d at the
// API boundary (level i is stored at index i-1). Composite indices are
// row-major with the first factor most significant. In a register of d
// qubits, qubit 1 is the most significant bit, so the basis string
// |0...010...0> with the 1 in position i is stored at index 2^(d-i).

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cohent/linalg.hpp"

namespace cohent {

inline constexpr double kNormTol = 1e-10;
inline constexpr double kFrameRankTol = 1e-8;
inline constexpr int kMaxPartitionParties = 8;

class SpaceShape {
 public:
  SpaceShape() = default;
  explicit SpaceShape(std::vector<int> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw ShapeError("SpaceShape: no factors");
    std::size_t total = 1;
    for (int d : dims_) {
      if (d < 2) throw ShapeError("SpaceShape: factor dimension must be >= 2");
      total *= static_cast<std::size_t>(d);
      check_dimension(total, "SpaceShape");
    }
    total_ = total;
  }

  /// d-level qudit followed by n ancillas of dimension anc_dim.
  static SpaceShape qudit_with_ancillas(int d, int n, int anc_dim) {
    std::vector<int> dims{d};
    dims.insert(dims.end(), n, anc_dim);
    return SpaceShape(std::move(dims));
  }

  const std::vector<int>& dims() const { return dims_; }
  std::size_t factors() const { return dims_.size(); }
  std::size_t total() const { return total_; }
  int dim(std::size_t f) const { return dims_.at(f); }

  bool operator==(const SpaceShape&) const = default;

 private:
  std::vector<int> dims_;
  std::size_t total_ = 0;
};

class PureState {
 public:
  /// Validates that the amplitudes have unit norm within 1e-10.
  PureState(SpaceShape shape, ComplexVector amplitudes)
      : shape_(std::move(shape)), amps_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amps_.size()) != shape_.total()) {
      throw ShapeError("PureState: amplitude count " + std::to_string(amps_.size()) +
                       " does not match dimension " + std::to_string(shape_.total()));
    }
    if (!amps_.allFinite()) throw InputError("PureState: non-finite amplitude");
    const double norm = amps_.norm();
    if (std::abs(norm - 1.0) > kNormTol) {
      std::ostringstream os;
      os.precision(17);
      os << "PureState: norm " << norm << " differs from 1";
      throw InputError(os.str());
    }
  }

  /// Rescales to unit norm; rejects the zero vector.
  static PureState normalized(SpaceShape shape, ComplexVector amplitudes) {
    const double norm = amplitudes.norm();
    if (!(norm > 0) || !std::isfinite(norm)) {
      throw InputError("PureState::normalized: zero or non-finite vector");
    }
    return PureState(std::move(shape), amplitudes / norm);
  }

  /// Computational basis state on a single d-level system (level 1..d).
  static PureState basis(int d, int level) {
    if (level < 1 || level > d) throw InputError("PureState::basis: level out of range");
    ComplexVector v = ComplexVector::Zero(d);
    v(level - 1) = 1.0;
    return PureState(SpaceShape({d}), std::move(v));
  }

  const SpaceShape& shape() const { return shape_; }
  const ComplexVector& amplitudes() const { return amps_; }
  Eigen::Index dim() const { return amps_.size(); }

  ComplexMatrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  SpaceShape shape_;
  ComplexVector amps_;
};

class DensityMatrix {
 public:
  /// Validates Hermiticity (1e-10), unit trace (1e-10) and eigenvalues
  /// >= -1e-10.
  DensityMatrix(SpaceShape shape, ComplexMatrix matrix)
      : shape_(std::move(shape)), m_(std::move(matrix)) {
    if (m_.rows() != m_.cols() || static_cast<std::size_t>(m_.rows()) != shape_.total()) {
      throw ShapeError("DensityMatrix: matrix size does not match shape");
    }
    if (!all_finite(m_)) throw InputError("DensityMatrix: non-finite entry");
    if (!is_hermitian(m_)) {
      throw InputError("DensityMatrix: not Hermitian (defect " +
                       std::to_string(hermiticity_defect(m_)) + ")");
    }
    const double tr = m_.trace().real();
    if (std::abs(tr - 1.0) > kNormTol) {
      std::ostringstream os;
      os.precision(17);
      os << "DensityMatrix: trace " << tr << " differs from 1";
      throw InputError(os.str());
    }
    const double min_eig = hermitian_eig(m_).eigenvalues.minCoeff();
    if (min_eig < -kNormTol) {
      std::ostringstream os;
      os.precision(17);
      os << "DensityMatrix: negative eigenvalue " << min_eig;
      throw InputError(os.str());
    }
    m_ = (m_ + m_.adjoint()).eval() * 0.5;
  }

  static DensityMatrix from_pure(const PureState& psi) {
    return DensityMatrix(psi.shape(), psi.projector());
  }

  /// Scales to unit trace and symmetrizes before validating.
  static DensityMatrix normalized(SpaceShape shape, ComplexMatrix matrix) {
    const Complex tr = matrix.trace();
    if (!(std::abs(tr) > 0)) throw InputError("DensityMatrix::normalized: zero trace");
    ComplexMatrix herm = (matrix + matrix.adjoint()) * (0.5 / tr.real());
    return DensityMatrix(std::move(shape), std::move(herm));
  }

  const SpaceShape& shape() const { return shape_; }
  const ComplexMatrix& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

  double purity() const { return (m_ * m_).trace().real(); }

 private:
  SpaceShape shape_;
  ComplexMatrix m_;
};

using State = std::variant<PureState, DensityMatrix>;

inline DensityMatrix to_density(const State& s) {
  if (const auto* p = std::get_if<PureState>(&s)) return DensityMatrix::from_pure(*p);
  return std::get<DensityMatrix>(s);
}

inline const SpaceShape& shape_of(const State& s) {
  return std::visit([](const auto& x) -> const SpaceShape& { return x.shape(); }, s);
}

/// d linearly independent unit vectors in C^d, stored as matrix columns.
/// The i-th column (0-based) is the classical state of level i+1.
class ClassicalFrame {
 public:
  explicit ClassicalFrame(ComplexMatrix vectors) : v_(std::move(vectors)) {
    if (v_.rows() != v_.cols() || v_.rows() < 2) {
      throw ShapeError("ClassicalFrame: need d unit vectors in dimension d >= 2");
    }
    for (Eigen::Index j = 0; j < v_.cols(); ++j) {
      if (std::abs(v_.col(j).norm() - 1.0) > kNormTol) {
        throw InputError("ClassicalFrame: vector " + std::to_string(j + 1) +
                         " is not normalized");
      }
    }
    if (rank_with_tol(v_.adjoint() * v_, kFrameRankTol) < v_.cols()) {
      throw RankDeficientError("ClassicalFrame: vectors are linearly dependent");
    }
  }

  static ClassicalFrame orthonormal(int d) { return ClassicalFrame(identity(d)); }

  int dim() const { return static_cast<int>(v_.rows()); }
  const ComplexMatrix& vectors() const { return v_; }
  ComplexVector vector(int level) const { return v_.col(level - 1); }

  /// State sum_i coords_i |chi_i>, normalized.
  PureState superposition(const ComplexVector& coords) const {
    return PureState::normalized(SpaceShape({dim()}), v_ * coords);
  }

 private:
  ComplexMatrix v_;
};

inline ComplexMatrix gram_matrix(const ClassicalFrame& frame) {
  return frame.vectors().adjoint() * frame.vectors();
}

inline ComplexMatrix gram_matrix(std::span<const ComplexVector> vectors) {
  const auto n = static_cast<Eigen::Index>(vectors.size());
  ComplexMatrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = vectors[i].dot(vectors[j]);
  }
  return g;
}

/// psi (x) |ref>^(x)n with ancillas of dimension anc_dim; ref_index is 0-based.
inline PureState attach_ancillas(const PureState& psi, int n, int anc_dim, int ref_index) {
  if (n == 0) return psi;
  if (n < 0) throw InputError("attach_ancillas: negative ancilla count");
  if (ref_index < 0 || ref_index >= anc_dim) {
    throw InputError("attach_ancillas: reference index out of range");
  }
  std::vector<int> dims = psi.shape().dims();
  dims.insert(dims.end(), n, anc_dim);
  SpaceShape shape(std::move(dims));
  std::size_t anc_total = 1;
  std::size_t ref = 0;
  for (int k = 0; k < n; ++k) {
    anc_total *= anc_dim;
    ref = ref * anc_dim + ref_index;
  }
  ComplexVector out = ComplexVector::Zero(static_cast<Eigen::Index>(shape.total()));
  for (Eigen::Index i = 0; i < psi.dim(); ++i) {
    out(static_cast<Eigen::Index>(i * anc_total + ref)) = psi.amplitudes()(i);
  }
  return PureState(std::move(shape), std::move(out));
}

/// Index of the basis string |2^(d-i)> in a d-qubit register, level i in 1..d.
inline std::size_t binary_string_index(int d, int i) {
  if (d < 1 || d > 30) throw InputError("binary_string_index: register size out of range");
  if (i < 1 || i > d) {
    throw InputError("binary_string_index: level " + std::to_string(i) +
                     " outside 1.." + std::to_string(d));
  }
  return std::size_t{1} << (d - i);
}

/// Composite index of |i>|2^(d-i)> in the qudit (x) d-qubit space.
inline std::size_t protocol_index(int d, int i) {
  return static_cast<std::size_t>(i - 1) * (std::size_t{1} << d) + binary_string_index(d, i);
}

struct SetPartition {
  std::vector<std::vector<int>> blocks;

  std::size_t max_block() const {
    std::size_t m = 0;
    for (const auto& b : blocks) m = std::max(m, b.size());
    return m;
  }

  bool operator==(const SetPartition&) const = default;
};

/// All set partitions of {0..n-1} whose blocks have at most max_block
/// elements, in lexicographic order of their restricted growth strings.
inline std::vector<SetPartition> enumerate_partitions(int n, int max_block) {
  if (n < 1) throw InputError("enumerate_partitions: need at least one element");
  if (n > kMaxPartitionParties) {
    throw DimensionError("enumerate_partitions: n = " + std::to_string(n) +
                         " exceeds " + std::to_string(kMaxPartitionParties));
  }
  std::vector<SetPartition> out;
  std::vector<int> label(n, 0);
  std::vector<int> sizes;
  sizes.reserve(n);
  std::function<void(int, int)> recurse = [&](int pos, int blocks) {
    if (pos == n) {
      SetPartition p;
      p.blocks.assign(blocks, {});
      for (int e = 0; e < n; ++e) p.blocks[label[e]].push_back(e);
      out.push_back(std::move(p));
      return;
    }
    for (int b = 0; b <= blocks; ++b) {
      if (b == blocks) {
        if (max_block < 1) continue;
        sizes.push_back(1);
        label[pos] = b;
        recurse(pos + 1, blocks + 1);
        sizes.pop_back();
      } else {
        if (sizes[b] >= max_block) continue;
        ++sizes[b];
        label[pos] = b;
        recurse(pos + 1, blocks);
        --sizes[b];
      }
    }
  };
  recurse(0, 0);
  return out;
}

// ---------------------------------------------------------------------------
// JSON state files
//
//   pure:  {"dims":[d1,...],"amplitudes":[[re,im],...]}
//   mixed: {"dims":[d1,...],"matrix":[[[re,im],...],...]}

namespace detail {

inline Complex parse_complex(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw InputError("state JSON: complex numbers must be [re, im] pairs");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline nlohmann::json complex_json(Complex c) {
  return nlohmann::json::array({c.real(), c.imag()});
}

}  // namespace detail

inline State parse_state(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("dims") || !j["dims"].is_array()) {
    throw InputError("state JSON: missing \"dims\" array");
  }
  std::vector<int> dims;
  for (const auto& d : j["dims"]) {
    if (!d.is_number_integer()) throw InputError("state JSON: dims must be integers");
    dims.push_back(d.get<int>());
  }
  SpaceShape shape(std::move(dims));
  const auto n = static_cast<Eigen::Index>(shape.total());
  if (j.contains("amplitudes")) {
    const auto& a = j["amplitudes"];
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != n) {
      throw InputError("state JSON: expected " + std::to_string(n) + " amplitudes");
    }
    ComplexVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = detail::parse_complex(a[i]);
    return PureState(std::move(shape), std::move(v));
  }
  if (j.contains("matrix")) {
    const auto& m = j["matrix"];
    if (!m.is_array() || static_cast<Eigen::Index>(m.size()) != n) {
      throw InputError("state JSON: expected " + std::to_string(n) + " matrix rows");
    }
    ComplexMatrix rho(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      if (!m[r].is_array() || static_cast<Eigen::Index>(m[r].size()) != n) {
        throw InputError("state JSON: matrix row " + std::to_string(r) + " has wrong length");
      }
      for (Eigen::Index c = 0; c < n; ++c) rho(r, c) = detail::parse_complex(m[r][c]);
    }
    return DensityMatrix(std::move(shape), std::move(rho));
  }
  throw InputError("state JSON: needs \"amplitudes\" or \"matrix\"");
}

inline State parse_state(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(std::string("state JSON: ") + e.what());
  }
  return parse_state(j);
}

inline nlohmann::json state_json(const PureState& psi) {
  nlohmann::json amps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < psi.dim(); ++i) amps.push_back(detail::complex_json(psi.amplitudes()(i)));
  return {{"dims", psi.shape().dims()}, {"amplitudes", std::move(amps)}};
}

inline nlohmann::json state_json(const DensityMatrix& rho) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < rho.dim(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < rho.dim(); ++c) row.push_back(detail::complex_json(rho.matrix()(r, c)));
    rows.push_back(std::move(row));
  }
  return {{"dims", rho.shape().dims()}, {"matrix", std::move(rows)}};
}

inline nlohmann::json state_json(const State& s) {
  return std::visit([](const auto& x) { return state_json(x); }, s);
}

inline std::string serialize_state(const State& s) { return state_json(s).dump(); }

}  // namespace cohent
