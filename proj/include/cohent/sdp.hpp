#pragma once

// Dense block-diagonal semidefinite programming.
//
// Problems are stated in the form
//
//     maximize    <C, X>
//     subject to  <A_i, X> = b_i,   i = 1..m
//                 X = diag(X_1, ..., X_p) >= 0
//
// with real symmetric blocks; the dual is  minimize b'y  s.t.
// sum_i y_i A_i - C = Z >= 0. The solver is an infeasible-start primal-dual
// path-following method using the HKM search direction and a Mehrotra
// predictor-corrector step. Complex Hermitian programs are mapped to real
// ones through realify(); ComplexSdpBuilder takes care of the bookkeeping.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cohent/errors.hpp"
#include "cohent/hilbert.hpp"
#include "cohent/linalg.hpp"

namespace cohent {

/// One upper-triangle entry (row <= col) of a symmetric block matrix; the
/// mirrored entry is implied.
struct SdpEntry {
  int block = 0;
  int row = 0;
  int col = 0;
  double value = 0.0;
};

struct SdpCoefficients {
  std::vector<SdpEntry> entries;

  void add(int block, int row, int col, double value) {
    if (row > col) std::swap(row, col);
    if (value != 0.0) entries.push_back({block, row, col, value});
  }
};

struct SdpBlockSpec {
  std::string name;
  int size = 0;
};

using BlockMatrix = std::vector<RealMatrix>;

struct SdpProblem {
  std::vector<SdpBlockSpec> blocks;
  SdpCoefficients objective;
  std::vector<SdpCoefficients> constraints;
  std::vector<double> rhs;

  int block_index(const std::string& name) const {
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (blocks[b].name == name) return static_cast<int>(b);
    }
    throw InputError("SdpProblem: no block named " + name);
  }

  int total_size() const {
    int n = 0;
    for (const auto& b : blocks) n += b.size;
    return n;
  }

  void validate() const {
    if (blocks.empty()) throw InputError("SdpProblem: no blocks");
    if (constraints.size() != rhs.size()) throw InputError("SdpProblem: constraint/rhs count mismatch");
    auto check = [&](const SdpCoefficients& c, const char* what) {
      for (const auto& e : c.entries) {
        if (e.block < 0 || e.block >= static_cast<int>(blocks.size()) || e.row < 0 ||
            e.col >= blocks[e.block].size || e.row > e.col || !std::isfinite(e.value)) {
          throw InputError(std::string("SdpProblem: invalid entry in ") + what);
        }
      }
    };
    for (const auto& b : blocks) {
      if (b.size < 1) throw InputError("SdpProblem: empty block " + b.name);
    }
    check(objective, "objective");
    for (const auto& c : constraints) check(c, "constraint");
  }
};

inline BlockMatrix zero_blocks(const SdpProblem& p) {
  BlockMatrix out;
  for (const auto& b : p.blocks) out.push_back(RealMatrix::Zero(b.size, b.size));
  return out;
}

inline BlockMatrix to_dense(const SdpCoefficients& c, const SdpProblem& p) {
  BlockMatrix out = zero_blocks(p);
  for (const auto& e : c.entries) {
    out[e.block](e.row, e.col) += e.value;
    if (e.row != e.col) out[e.block](e.col, e.row) += e.value;
  }
  return out;
}

/// <A, R> = trace(A R) for sparse symmetric A and any dense block matrix R.
inline double inner(const SdpCoefficients& a, const BlockMatrix& r) {
  double acc = 0.0;
  for (const auto& e : a.entries) {
    const auto& m = r[e.block];
    acc += e.row == e.col ? e.value * m(e.row, e.row)
                          : e.value * (m(e.row, e.col) + m(e.col, e.row));
  }
  return acc;
}

inline double inner(const BlockMatrix& a, const BlockMatrix& b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += (a[k].array() * b[k].array()).sum();
  return acc;
}

inline double frobenius(const BlockMatrix& a) { return std::sqrt(inner(a, a)); }

enum class SdpStatus { Optimal, IterationLimit, NumericalFailure, Infeasible };

inline std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::IterationLimit: return "iteration_limit";
    case SdpStatus::NumericalFailure: return "numerical_failure";
    case SdpStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

struct SdpIterate {
  int iteration = 0;
  double primal = 0.0;  // <C, X>
  double dual = 0.0;    // b'y, an upper bound on the optimum once Z >= 0 and rd = 0
  double gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double duality_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  BlockMatrix block_values;
  BlockMatrix dual_slack;
  std::vector<double> multipliers;
  std::vector<SdpIterate> history;
  double tolerance = 0.0;

  bool certified() const { return status == SdpStatus::Optimal; }
};

struct SdpOptions {
  double tol = 1e-7;
  int max_iter = 100;
};

class SdpSolver {
 public:
  explicit SdpSolver(SdpOptions options = {}) : opt_(options) {}

  const SdpOptions& options() const { return opt_; }

  SdpSolution solve(const SdpProblem& p) const;

 private:
  SdpOptions opt_;
};

namespace detail {

// Largest alpha with X + alpha dX >= 0 (infinity when dX keeps X PSD).
inline double max_step(const BlockMatrix& x, const BlockMatrix& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < x.size(); ++b) {
    Eigen::LLT<RealMatrix> llt(x[b]);
    if (llt.info() != Eigen::Success) return 0.0;
    const RealMatrix linv_dx = llt.matrixL().solve(dx[b]);
    const RealMatrix s = llt.matrixL().solve(linv_dx.transpose());
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig((s + s.transpose()) * 0.5, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

inline BlockMatrix axpy(const BlockMatrix& x, double a, const BlockMatrix& dx) {
  BlockMatrix out = x;
  for (std::size_t b = 0; b < x.size(); ++b) out[b] += a * dx[b];
  return out;
}

// Per-block constraint entries, for the sparse Schur complement assembly.
struct BlockEntries {
  std::vector<std::vector<std::vector<SdpEntry>>> by_constraint;  // [i][block]
};

inline BlockEntries group_entries(const SdpProblem& p) {
  BlockEntries g;
  g.by_constraint.assign(p.constraints.size(), std::vector<std::vector<SdpEntry>>(p.blocks.size()));
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    for (const auto& e : p.constraints[i].entries) g.by_constraint[i][e.block].push_back(e);
  }
  return g;
}

// trace(S_e X S_f W) for symmetric unit matrices S_e, S_f built from entries.
inline double sym_unit_product(const SdpEntry& e, const SdpEntry& f, const RealMatrix& x,
                               const RealMatrix& w) {
  const int ep[2][2] = {{e.row, e.col}, {e.col, e.row}};
  const int fp[2][2] = {{f.row, f.col}, {f.col, f.row}};
  const int ne = e.row == e.col ? 1 : 2;
  const int nf = f.row == f.col ? 1 : 2;
  double acc = 0.0;
  for (int a = 0; a < ne; ++a) {
    for (int b = 0; b < nf; ++b) {
      // trace(E_{pq} X E_{gh} W) = X(q, g) W(h, p)
      acc += x(ep[a][1], fp[b][0]) * w(fp[b][1], ep[a][0]);
    }
  }
  return acc;
}

}  // namespace detail

inline SdpSolution SdpSolver::solve(const SdpProblem& p) const {
  p.validate();
  const auto m = static_cast<Eigen::Index>(p.constraints.size());
  const std::size_t nb = p.blocks.size();
  const double n = p.total_size();
  const double tol = opt_.tol;

  // internal minimization form: min <Cmin, X>, Cmin = -C
  BlockMatrix cmin = to_dense(p.objective, p);
  for (auto& blk : cmin) blk = -blk;
  const detail::BlockEntries grouped = detail::group_entries(p);
  Eigen::VectorXd b(m);
  for (Eigen::Index i = 0; i < m; ++i) b(i) = p.rhs[i];

  std::vector<double> norm_a(m, 0.0);
  double max_norm_a = 0.0, max_ratio = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = 0.0;
    for (const auto& e : p.constraints[i].entries) s += (e.row == e.col ? 1.0 : 2.0) * e.value * e.value;
    norm_a[i] = std::sqrt(s);
    max_norm_a = std::max(max_norm_a, norm_a[i]);
    max_ratio = std::max(max_ratio, (1.0 + std::abs(b(i))) / (1.0 + norm_a[i]));
  }
  const double norm_c = frobenius(cmin);
  const double norm_b = b.norm();
  const double xi = std::max({10.0, std::sqrt(n), n * max_ratio});
  const double eta = std::max({10.0, std::sqrt(n), max_norm_a, norm_c});

  BlockMatrix x, z;
  for (const auto& blk : p.blocks) {
    x.push_back(xi * RealMatrix::Identity(blk.size, blk.size));
    z.push_back(eta * RealMatrix::Identity(blk.size, blk.size));
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);

  auto apply_a = [&](const BlockMatrix& r) {
    Eigen::VectorXd out(m);
    for (Eigen::Index i = 0; i < m; ++i) out(i) = inner(p.constraints[i], r);
    return out;
  };
  auto apply_at = [&](const Eigen::VectorXd& v) {
    BlockMatrix out = zero_blocks(p);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (const auto& e : p.constraints[i].entries) {
        out[e.block](e.row, e.col) += v(i) * e.value;
        if (e.row != e.col) out[e.block](e.col, e.row) += v(i) * e.value;
      }
    }
    return out;
  };

  SdpSolution sol;
  sol.tolerance = tol;
  double best_merit = std::numeric_limits<double>::infinity();
  BlockMatrix best_x = x, best_z = z;
  Eigen::VectorXd best_y = y;
  SdpIterate best_it;
  int stall = 0;
  SdpStatus status = SdpStatus::IterationLimit;

  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd rp = b - apply_a(x);
    BlockMatrix rd = cmin;
    {
      const BlockMatrix aty = apply_at(y);
      for (std::size_t k = 0; k < nb; ++k) rd[k] -= aty[k] + z[k];
    }
    SdpIterate it;
    it.iteration = iter;
    it.primal = -inner(cmin, x);
    it.dual = -b.dot(y);
    it.gap = it.dual - it.primal;
    it.primal_infeasibility = rp.norm() / (1.0 + norm_b);
    it.dual_infeasibility = frobenius(rd) / (1.0 + norm_c);
    sol.history.push_back(it);

    const double merit = std::max({std::abs(it.gap), it.primal_infeasibility, it.dual_infeasibility});
    if (merit < best_merit) {
      if (merit < 0.5 * best_merit) stall = 0;
      best_merit = merit;
      best_x = x;
      best_z = z;
      best_y = y;
      best_it = it;
    } else {
      ++stall;
    }
    if (std::abs(it.gap) <= tol && it.primal_infeasibility <= tol && it.dual_infeasibility <= tol) {
      status = SdpStatus::Optimal;
      break;
    }
    if (y.lpNorm<Eigen::Infinity>() > 1e12 || frobenius(x) > 1e12) {
      status = SdpStatus::Infeasible;
      break;
    }
    if (iter >= opt_.max_iter) {
      status = SdpStatus::IterationLimit;
      break;
    }
    if (stall >= 8) {
      status = SdpStatus::NumericalFailure;
      break;
    }

    const double mu = inner(x, z) / n;
    BlockMatrix zinv;
    bool ok = true;
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<RealMatrix> llt(z[k]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      zinv.push_back(llt.solve(RealMatrix::Identity(z[k].rows(), z[k].cols())));
    }
    if (!ok) {
      status = SdpStatus::NumericalFailure;
      break;
    }

    // Schur complement M_ij = trace(A_i X A_j Z^-1)
    RealMatrix schur = RealMatrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = i; j < m; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
          const auto& ei = grouped.by_constraint[i][k];
          const auto& ej = grouped.by_constraint[j][k];
          if (ei.empty() || ej.empty()) continue;
          for (const auto& e : ei) {
            for (const auto& f : ej) acc += e.value * f.value * detail::sym_unit_product(e, f, x[k], zinv[k]);
          }
        }
        schur(i, j) = schur(j, i) = acc;
      }
    }
    Eigen::LDLT<RealMatrix> schur_f(schur);
    if (schur_f.info() != Eigen::Success) {
      status = SdpStatus::NumericalFailure;
      break;
    }

    // Direction for the centering target R: X Z + dX Z + X dZ = R.
    auto direction = [&](const BlockMatrix& target, BlockMatrix& dx, Eigen::VectorXd& dy, BlockMatrix& dz) {
      BlockMatrix h(nb);
      for (std::size_t k = 0; k < nb; ++k) h[k] = target[k] * zinv[k] - x[k] - x[k] * rd[k] * zinv[k];
      dy = schur_f.solve(rp - apply_a(h));
      const BlockMatrix atdy = apply_at(dy);
      dz.resize(nb);
      dx.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) {
        dz[k] = rd[k] - atdy[k];
        RealMatrix d = target[k] * zinv[k] - x[k] - x[k] * dz[k] * zinv[k];
        dx[k] = (d + d.transpose()) * 0.5;
      }
    };

    BlockMatrix dx_a, dz_a;
    Eigen::VectorXd dy_a;
    direction(zero_blocks(p), dx_a, dy_a, dz_a);
    const double ap_a = std::min(1.0, detail::max_step(x, dx_a));
    const double ad_a = std::min(1.0, detail::max_step(z, dz_a));
    const double mu_aff = inner(detail::axpy(x, ap_a, dx_a), detail::axpy(z, ad_a, dz_a)) / n;
    const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    BlockMatrix target(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      target[k] = sigma * mu * RealMatrix::Identity(x[k].rows(), x[k].cols()) - dx_a[k] * dz_a[k];
    }
    BlockMatrix dx, dz;
    Eigen::VectorXd dy;
    direction(target, dx, dy, dz);

    const double gamma = 0.9 + 0.09 * std::min(ap_a, ad_a);
    const double ap = std::min(1.0, gamma * detail::max_step(x, dx));
    const double ad = std::min(1.0, gamma * detail::max_step(z, dz));
    if (ap < 1e-12 && ad < 1e-12) {
      status = SdpStatus::NumericalFailure;
      break;
    }
    x = detail::axpy(x, ap, dx);
    z = detail::axpy(z, ad, dz);
    y += ad * dy;
    sol.iterations = iter + 1;
  }

  const bool converged = status == SdpStatus::Optimal;
  const SdpIterate& fin = converged ? sol.history.back() : best_it;
  sol.status = status;
  sol.block_values = converged ? x : best_x;
  sol.dual_slack = converged ? z : best_z;
  const Eigen::VectorXd& yy = converged ? y : best_y;
  sol.multipliers.assign(yy.data(), yy.data() + yy.size());
  sol.primal_value = fin.primal;
  sol.dual_value = fin.dual;
  sol.duality_gap = fin.gap;
  sol.primal_infeasibility = fin.primal_infeasibility;
  sol.dual_infeasibility = fin.dual_infeasibility;
  return sol;
}

inline SdpSolution solve(const SdpProblem& p, double tol = 1e-7, int max_iter = 100) {
  return SdpSolver(SdpOptions{tol, max_iter}).solve(p);
}

// ---------------------------------------------------------------------------
// Complex Hermitian programs

/// [[Re H, -Im H], [Im H, Re H]]; H >= 0 iff the embedding is >= 0.
inline RealMatrix realify(const ComplexMatrix& h) {
  if (!is_hermitian(h)) throw InputError("realify: input is not Hermitian");
  const Eigen::Index n = h.rows();
  RealMatrix out(2 * n, 2 * n);
  const RealMatrix re = h.real();
  const RealMatrix im = h.imag();
  out << re, -im, im, re;
  return (out + out.transpose()) * 0.5;
}

/// Inverse of realify for a (possibly unstructured) symmetric 2n x 2n block:
/// averages over the complex structure before reading off H.
inline ComplexMatrix complexify(const RealMatrix& z) {
  const Eigen::Index n = z.rows() / 2;
  const RealMatrix re = (z.topLeftCorner(n, n) + z.bottomRightCorner(n, n)) * 0.5;
  const RealMatrix im = (z.bottomLeftCorner(n, n) - z.topRightCorner(n, n)) * 0.5;
  ComplexMatrix h(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) h(r, c) = Complex(re(r, c), im(r, c));
  }
  return (h + h.adjoint()) * 0.5;
}

/// Collects real-valued linear functionals Re tr(A H) of complex Hermitian
/// block variables and emits the equivalent real program. Each Hermitian
/// n x n block becomes a real 2n x 2n block; a real symmetric relaxation has
/// the same optimum because averaging with its complex-structure conjugate
/// keeps it feasible.
class ComplexSdpBuilder {
 public:
  class Functional {
   public:
    /// Adds c * H(q, p) to the functional, i.e. A(p, q) += c.
    void add(int block, int p, int q, Complex c) { terms_.push_back({block, p, q, c}); }

    /// Re H(p, q).
    void add_real_part(int block, int p, int q, double w = 1.0) {
      add(block, q, p, 0.5 * w);
      add(block, p, q, 0.5 * w);
    }
    /// Im H(p, q).
    void add_imag_part(int block, int p, int q, double w = 1.0) { add(block, q, p, Complex(0.0, -w)); }

   private:
    friend class ComplexSdpBuilder;
    struct Term {
      int block, p, q;
      Complex c;
    };
    std::vector<Term> terms_;
  };

  int add_block(std::string name, int complex_size) {
    names_.push_back(std::move(name));
    sizes_.push_back(complex_size);
    return static_cast<int>(sizes_.size()) - 1;
  }

  void set_objective(const Functional& f) { objective_ = f; }

  void add_constraint(const Functional& f, double rhs) {
    constraints_.push_back(f);
    rhs_.push_back(rhs);
  }

  /// Pins a Hermitian sub-block: H(offset + p, offset + q) = target(p, q).
  void pin(int block, int offset, const ComplexMatrix& target) {
    for (Eigen::Index p = 0; p < target.rows(); ++p) {
      for (Eigen::Index q = p; q < target.cols(); ++q) {
        Functional re;
        re.add_real_part(block, offset + p, offset + q);
        add_constraint(re, target(p, q).real());
        if (p != q) {
          Functional im;
          im.add_imag_part(block, offset + p, offset + q);
          add_constraint(im, target(p, q).imag());
        }
      }
    }
  }

  SdpProblem build() const {
    SdpProblem out;
    for (std::size_t b = 0; b < sizes_.size(); ++b) out.blocks.push_back({names_[b], 2 * sizes_[b]});
    out.objective = emit(objective_);
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
      out.constraints.push_back(emit(constraints_[i]));
      out.rhs.push_back(rhs_[i]);
    }
    return out;
  }

 private:
  SdpCoefficients emit(const Functional& f) const {
    std::map<int, ComplexMatrix> dense;
    for (const auto& t : f.terms_) {
      auto [it, inserted] = dense.try_emplace(t.block);
      if (inserted) it->second = ComplexMatrix::Zero(sizes_[t.block], sizes_[t.block]);
      it->second(t.p, t.q) += t.c;
    }
    SdpCoefficients out;
    for (const auto& [block, a] : dense) {
      const ComplexMatrix herm = (a + a.adjoint()) * 0.5;
      const RealMatrix r = realify(herm) * 0.5;
      for (Eigen::Index i = 0; i < r.rows(); ++i) {
        for (Eigen::Index j = i; j < r.cols(); ++j) {
          if (std::abs(r(i, j)) > 1e-300) out.add(block, static_cast<int>(i), static_cast<int>(j), r(i, j));
        }
      }
    }
    return out;
  }

  std::vector<std::string> names_;
  std::vector<int> sizes_;
  Functional objective_;
  std::vector<Functional> constraints_;
  std::vector<double> rhs_;
};

// ---------------------------------------------------------------------------
// SDPA sparse format (.dat-s). Our program is SDPA's "dual" side:
// F0 = C, Fi = A_i, c = b.

inline void write_sdpa(const SdpProblem& p, std::ostream& os) {
  p.validate();
  os << "* cohent SDP export: maximize <F0, X> s.t. <Fi, X> = c_i, X >= 0\n";
  os << p.constraints.size() << "\n" << p.blocks.size() << "\n";
  for (std::size_t b = 0; b < p.blocks.size(); ++b) os << (b ? " " : "") << p.blocks[b].size;
  os << "\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < p.rhs.size(); ++i) os << (i ? " " : "") << p.rhs[i];
  os << "\n";
  auto dump = [&](std::size_t matno, const SdpCoefficients& c) {
    for (const auto& e : c.entries) {
      os << matno << " " << e.block + 1 << " " << e.row + 1 << " " << e.col + 1 << " " << e.value << "\n";
    }
  };
  dump(0, p.objective);
  for (std::size_t i = 0; i < p.constraints.size(); ++i) dump(i + 1, p.constraints[i]);
}

inline SdpProblem read_sdpa(std::istream& is) {
  std::string line;
  std::stringstream body;
  while (std::getline(is, line)) {
    if (!line.empty() && (line[0] == '*' || line[0] == '"')) continue;
    for (char& ch : line) {
      if (ch == ',' || ch == '{' || ch == '}' || ch == '(' || ch == ')') ch = ' ';
    }
    body << line << "\n";
  }
  SdpProblem p;
  std::size_t m = 0, nblocks = 0;
  if (!(body >> m >> nblocks)) throw InputError("read_sdpa: missing header");
  for (std::size_t b = 0; b < nblocks; ++b) {
    int size = 0;
    if (!(body >> size)) throw InputError("read_sdpa: missing block size");
    if (size < 0) throw InputError("read_sdpa: diagonal (LP) blocks are not supported");
    p.blocks.push_back({"block" + std::to_string(b + 1), size});
  }
  p.rhs.resize(m);
  for (auto& v : p.rhs) {
    if (!(body >> v)) throw InputError("read_sdpa: missing rhs");
  }
  p.constraints.resize(m);
  std::size_t matno = 0;
  int blk = 0, r = 0, c = 0;
  double v = 0.0;
  while (body >> matno >> blk >> r >> c >> v) {
    if (matno > m) throw InputError("read_sdpa: matrix number out of range");
    auto& target = matno == 0 ? p.objective : p.constraints[matno - 1];
    target.add(blk - 1, r - 1, c - 1, v);
  }
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Builders

inline constexpr int kMaxSubsetCount = 256;
inline constexpr double kSupportTol = 1e-13;

/// How the state enters the block operator [[T, K], [K^dag, S]] >= 0.
///   SupportReduced: rho = L L^dag with L = Q_r sqrt(Lambda_r); T = I_r and
///                   the objective becomes Re tr(L K). Strictly feasible for
///                   every rho, singular or not.
///   Direct:         T = rho and the objective is Re tr(K). Strictly feasible
///                   only for full-rank inputs.
enum class SdpFormulation { SupportReduced, Direct };

/// Columns span the support of a PSD matrix: rho = L L^dag.
inline ComplexMatrix support_factor(const ComplexMatrix& rho, double tol = kSupportTol) {
  const HermitianSpectrum spec = hermitian_eig(rho);
  const double scale = std::max(1.0, spec.eigenvalues.cwiseAbs().maxCoeff());
  Eigen::Index r = 0;
  while (r < spec.eigenvalues.size() && spec.eigenvalues(r) > tol * scale) ++r;
  if (r == 0) throw InputError("support_factor: matrix has no positive eigenvalues");
  ComplexMatrix l = spec.eigenvectors.leftCols(r);
  for (Eigen::Index c = 0; c < r; ++c) l.col(c) *= std::sqrt(spec.eigenvalues(c));
  return l;
}

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long out = 1;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

/// All size-`size` subsets of {0..n-1} (stored indices), lexicographic.
inline std::vector<std::vector<int>> enumerate_subsets(int n, int size) {
  if (size < 1 || size > n) throw InputError("enumerate_subsets: size out of range");
  if (binomial(n, size) > kMaxSubsetCount) {
    throw DimensionError("enumerate_subsets: C(" + std::to_string(n) + "," + std::to_string(size) +
                         ") exceeds " + std::to_string(kMaxSubsetCount));
  }
  std::vector<std::vector<int>> out;
  std::vector<int> cur(size);
  for (int i = 0; i < size; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    int i = size - 1;
    while (i >= 0 && cur[i] == n - size + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < size; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

inline std::string subset_block_name(const std::vector<int>& subset) {
  std::string name = "Y{";
  for (std::size_t i = 0; i < subset.size(); ++i) name += (i ? "," : "") + std::to_string(subset[i] + 1);
  return name + "}";
}

/// Optimum equals sqrt(F(rho, sigma)).
inline SdpProblem build_fidelity_sdp(const DensityMatrix& rho, const DensityMatrix& sigma,
                                     SdpFormulation form = SdpFormulation::SupportReduced) {
  if (rho.dim() != sigma.dim()) throw ShapeError("build_fidelity_sdp: dimension mismatch");
  ComplexSdpBuilder b;
  ComplexSdpBuilder::Functional obj;
  if (form == SdpFormulation::Direct) {
    const int d = static_cast<int>(rho.dim());
    const int w = b.add_block("W", 2 * d);
    b.pin(w, 0, rho.matrix());
    b.pin(w, d, sigma.matrix());
    for (int a = 0; a < d; ++a) obj.add(w, d + a, a, 1.0);
  } else {
    const ComplexMatrix l = support_factor(rho.matrix());
    const ComplexMatrix m = support_factor(sigma.matrix());
    const int r = static_cast<int>(l.cols());
    const int s = static_cast<int>(m.cols());
    const ComplexMatrix n = m.adjoint() * l;
    const int w = b.add_block("W", r + s);
    b.pin(w, 0, identity(r));
    b.pin(w, r, identity(s));
    for (int bb = 0; bb < s; ++bb) {
      for (int a = 0; a < r; ++a) obj.add(w, r + bb, a, n(bb, a));
    }
  }
  b.set_objective(obj);
  return b.build();
}

/// Optimum equals sqrt(max F(rho, sigma)) over states sigma supported on
/// sums of (k-1)-level subspaces. Blocks: "W" (the 2x2 operator) and one
/// "Y{...}" block per subset.
inline SdpProblem build_kcoherent_fidelity_sdp(const DensityMatrix& rho, int k,
                                               SdpFormulation form = SdpFormulation::SupportReduced) {
  if (rho.shape().factors() != 1) throw ShapeError("build_kcoherent_fidelity_sdp: expected a single qudit");
  const int d = static_cast<int>(rho.dim());
  if (k < 2 || k > d) throw InputError("build_kcoherent_fidelity_sdp: k must satisfy 2 <= k <= d");
  const auto subsets = enumerate_subsets(d, k - 1);

  ComplexSdpBuilder b;
  ComplexSdpBuilder::Functional obj;
  int r = d;
  int w = 0;
  if (form == SdpFormulation::Direct) {
    w = b.add_block("W", 2 * d);
    b.pin(w, 0, rho.matrix());
    for (int p = 0; p < d; ++p) obj.add(w, d + p, p, 1.0);
  } else {
    const ComplexMatrix l = support_factor(rho.matrix());
    r = static_cast<int>(l.cols());
    w = b.add_block("W", r + d);
    b.pin(w, 0, identity(r));
    for (int p = 0; p < d; ++p) {
      for (int a = 0; a < r; ++a) obj.add(w, r + p, a, l(p, a));
    }
  }
  b.set_objective(obj);

  std::vector<int> y_blocks;
  for (const auto& sub : subsets) y_blocks.push_back(b.add_block(subset_block_name(sub), k - 1));

  // S = sum_I P_I Y_I P_I, entry by entry
  for (int p = 0; p < d; ++p) {
    for (int q = p; q < d; ++q) {
      ComplexSdpBuilder::Functional re, im;
      re.add_real_part(w, r + p, r + q);
      if (p != q) im.add_imag_part(w, r + p, r + q);
      for (std::size_t s = 0; s < subsets.size(); ++s) {
        const auto& sub = subsets[s];
        const auto ip = std::find(sub.begin(), sub.end(), p);
        const auto iq = std::find(sub.begin(), sub.end(), q);
        if (ip == sub.end() || iq == sub.end()) continue;
        const int a = static_cast<int>(ip - sub.begin());
        const int c = static_cast<int>(iq - sub.begin());
        re.add_real_part(y_blocks[s], a, c, -1.0);
        if (p != q) im.add_imag_part(y_blocks[s], a, c, -1.0);
      }
      b.add_constraint(re, 0.0);
      if (p != q) b.add_constraint(im, 0.0);
    }
  }
  ComplexSdpBuilder::Functional trace;
  for (int yb : y_blocks) {
    for (int a = 0; a < k - 1; ++a) trace.add_real_part(yb, a, a);
  }
  b.add_constraint(trace, 1.0);
  return b.build();
}

/// Complex Hermitian value of a named block of a problem built by
/// ComplexSdpBuilder.
inline ComplexMatrix complex_block(const SdpProblem& p, const SdpSolution& sol, const std::string& name) {
  return complexify(sol.block_values.at(p.block_index(name)));
}

}  // namespace cohent
