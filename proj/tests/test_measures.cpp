#include <gtest/gtest.h>

#include "cohent/measures.hpp"
#include "cohent/random.hpp"
#include "oracles.hpp"

using namespace cohent;

namespace {

PureState from_amps(std::initializer_list<Complex> a) {
  ComplexVector v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (auto x : a) v(i++) = x;
  return PureState::normalized(SpaceShape({static_cast<int>(a.size())}), v);
}

PureState uniform(int d) { return PureState(SpaceShape({d}), ComplexVector::Constant(d, 1 / std::sqrt(double(d)))); }

DensityMatrix diagonal(std::initializer_list<double> p) {
  const int d = static_cast<int>(p.size());
  ComplexMatrix m = ComplexMatrix::Zero(d, d);
  int i = 0;
  for (double x : p) m(i, i) = x, ++i;
  return DensityMatrix::normalized(SpaceShape({d}), m);
}

}  // namespace

TEST(CoherenceRank, Examples) {
  EXPECT_EQ(coherence_rank(from_amps({1, 0, 1, 0})), 2);
  EXPECT_EQ(coherence_rank(PureState::basis(3, 2)), 1);
  EXPECT_EQ(coherence_rank(uniform(5)), 5);
  EXPECT_THROW(coherence_rank(activate(uniform(2))), ShapeError);
}

TEST(SchmidtRank, Examples) {
  const PureState product(SpaceShape({2, 2}), ComplexVector::Unit(4, 0));
  EXPECT_EQ(schmidt_rank(product, {0}), 1);
  ComplexVector b = ComplexVector::Zero(4);
  b(0) = b(3) = 1 / std::sqrt(2.0);
  EXPECT_EQ(schmidt_rank(PureState(SpaceShape({2, 2}), b), {0}), 2);
  EXPECT_THROW(schmidt_rank(product, {}), ShapeError);
  EXPECT_THROW(schmidt_rank(product, {0, 1}), ShapeError);
  EXPECT_THROW(schmidt_rank(product, {2}), ShapeError);
}

TEST(EntanglementDepth, Examples) {
  const PureState zeros(SpaceShape({2, 2, 2}), ComplexVector::Unit(8, 0));
  EXPECT_EQ(entanglement_depth_pure(zeros).depth, 1);

  ComplexVector v = ComplexVector::Zero(8);
  v(4) = v(2) = 1 / std::sqrt(2.0);  // (|10> + |01>)/sqrt2 (x) |0>
  const DepthReport r = entanglement_depth_pure(PureState(SpaceShape({2, 2, 2}), v));
  EXPECT_EQ(r.depth, 2);
  EXPECT_EQ(r.witness_partition.max_block(), 2u);
  EXPECT_EQ(r.witness_partition.blocks, (std::vector<std::vector<int>>{{0, 1}, {2}}));

  EXPECT_EQ(entanglement_depth_pure(activate(uniform(3))).depth, 4);
}

TEST(EntanglementDepth, WitnessBlocksFactorizeAndMatchBruteForce) {
  // product of random blocks over a random partition: depth is the largest
  // block size unless a block happens to factor further (probability zero)
  Rng rng(51);
  for (int t = 0; t < 20; ++t) {
    const int n = 5;
    const auto parts = enumerate_partitions(n, n);
    const SetPartition part = parts[uniform_int(rng, 0, static_cast<int>(parts.size()) - 1)];
    std::vector<int> dims(n, 2);
    ComplexVector psi = ComplexVector::Zero(32);
    // amplitude = product over blocks of a random block tensor
    std::vector<ComplexVector> tensors;
    for (const auto& b : part.blocks) tensors.push_back(gaussian_vector(1 << b.size(), rng));
    for (int idx = 0; idx < 32; ++idx) {
      const auto dig = oracle::digits(idx, dims);
      Complex a = 1.0;
      for (std::size_t bi = 0; bi < part.blocks.size(); ++bi) {
        int local = 0;
        for (int f : part.blocks[bi]) local = local * 2 + dig[f];
        a *= tensors[bi](local);
      }
      psi(idx) = a;
    }
    const DepthReport r = entanglement_depth_pure(PureState::normalized(SpaceShape(dims), psi));
    EXPECT_EQ(r.depth, static_cast<int>(part.max_block()));
    EXPECT_EQ(r.witness_partition.max_block(), static_cast<std::size_t>(r.depth));
  }
  EXPECT_THROW(entanglement_depth_pure(PureState(SpaceShape(std::vector<int>(9, 2)), ComplexVector::Unit(512, 0))),
               DimensionError);
}

TEST(Fidelity, Examples) {
  Rng rng(52);
  const DensityMatrix rho = random_mixed(3, 2, rng);
  EXPECT_NEAR(fidelity(rho, rho), 1.0, 1e-9);
  EXPECT_NEAR(fidelity(DensityMatrix::from_pure(PureState::basis(2, 1)), DensityMatrix::from_pure(PureState::basis(2, 2))),
              0.0, 1e-12);
  EXPECT_NEAR(fidelity(DensityMatrix::from_pure(PureState::basis(2, 1)), diagonal({0.5, 0.5})), 0.5, 1e-12);
  EXPECT_THROW(fidelity(rho, diagonal({0.5, 0.5})), ShapeError);
}

TEST(Fidelity, SymmetricAndMatchesOracle) {
  Rng rng(53);
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 5;
    const DensityMatrix a = random_mixed(n, 1 + t % n, rng), b = random_mixed(n, n, rng);
    const double f = fidelity(a, b);
    EXPECT_NEAR(f, fidelity(b, a), 1e-9);
    EXPECT_NEAR(f, oracle::fidelity(a.matrix(), b.matrix()), 1e-8);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  const PureState p = random_pure(4, rng), q = random_pure(4, rng);
  EXPECT_NEAR(fidelity(p, q), fidelity(DensityMatrix::from_pure(p), DensityMatrix::from_pure(q)), 1e-9);
}

TEST(GeometricCoherencePure, Examples) {
  EXPECT_NEAR(geometric_coherence_pure(uniform(4), 2).value, 0.75, 1e-15);
  EXPECT_NEAR(geometric_coherence_pure(from_amps({0.8, 0.6}), 2).value, 0.36, 1e-15);
  EXPECT_NEAR(oracle::best_sparse_overlap(from_amps({0.8, 0.6}).amplitudes(), 1), 0.64, 1e-15);
  EXPECT_NEAR(geometric_coherence_pure(uniform(4), 4).value, 0.25, 1e-15);
  EXPECT_THROW(geometric_coherence_pure(uniform(4), 1), InputError);
  EXPECT_THROW(geometric_coherence_pure(uniform(4), 5), InputError);
}

TEST(GeometricCoherencePure, MatchesExhaustiveSparseOptimization) {
  Rng rng(54);
  for (int d = 2; d <= 6; ++d) {
    for (int t = 0; t < 10; ++t) {
      const PureState psi = random_pure(d, rng);
      for (int k = 2; k <= d; ++k) {
        const MeasureResult r = geometric_coherence_pure(psi, k);
        EXPECT_NEAR(r.value, 1.0 - oracle::best_sparse_overlap(psi.amplitudes(), k - 1), 1e-10);
        // the reported closest state attains the optimum and is (k-1)-sparse
        const PureState& c = std::get<PureState>(*r.closest_state);
        EXPECT_LE(coherence_rank(c), k - 1);
        EXPECT_NEAR(1.0 - fidelity(c, psi), r.value, 1e-10);
      }
    }
  }
}

TEST(GeometricCoherencePure, MonotoneInK) {
  Rng rng(55);
  for (int t = 0; t < 20; ++t) {
    const PureState psi = random_pure(6, rng);
    double prev = 1.0;
    for (int k = 2; k <= 6; ++k) {
      const double v = geometric_coherence_pure(psi, k).value;
      EXPECT_LE(v, prev + 1e-15);
      EXPECT_GE(v, 0.0);
      prev = v;
    }
  }
}

TEST(GeometricCoherencePure, TiesBrokenByLowestIndex) {
  const MeasureResult r = geometric_coherence_pure(uniform(3), 2);
  const auto& c = std::get<PureState>(*r.closest_state);
  EXPECT_NEAR(std::abs(c.amplitudes()(0)), 1.0, 1e-15);
}

TEST(GeometricEntanglementProtocolPure, Examples) {
  EXPECT_NEAR(geometric_entanglement_protocol_pure(activate(uniform(3)), 2).value, 2.0 / 3, 1e-15);
  for (int k = 2; k <= 4; ++k) {
    EXPECT_NEAR(geometric_entanglement_protocol_pure(activate(PureState::basis(4, 3)), k).value, 0.0, 1e-15);
  }
  EXPECT_THROW(geometric_entanglement_protocol_pure(PureState(protocol_shape(2), ComplexVector::Unit(8, 0)), 2),
               InputError);
  EXPECT_THROW(geometric_entanglement_protocol_pure(uniform(3), 2), ShapeError);
}

TEST(GeometricEntanglementProtocolPure, EqualsCoherenceOfPreimage) {
  Rng rng(56);
  for (int d = 2; d <= 5; ++d) {
    for (int t = 0; t < 10; ++t) {
      const PureState psi = random_pure(d, rng);
      for (int k = 2; k <= d; ++k) {
        EXPECT_NEAR(geometric_coherence_pure(psi, k).value,
                    geometric_entanglement_protocol_pure(activate(psi), k).value, 1e-10);
      }
    }
  }
}

// Alternating optimization over product states for every partition with
// blocks <= k: no k-producible state beats the formula, and the best found
// reaches it.
TEST(GeometricEntanglementProtocolPure, FormulaMatchesProducibleOptimization) {
  Rng rng(57);
  std::mt19937_64 restart(7);
  for (int d = 2; d <= 3; ++d) {
    for (int t = 0; t < 3; ++t) {
      const PureState psi = random_pure(d, rng);
      const PureState pp = activate(psi);
      const auto& dims = pp.shape().dims();
      for (int k = 2; k <= d; ++k) {
        const MeasureResult r = geometric_entanglement_protocol_pure(pp, k);
        const double formula_overlap = 1.0 - r.value;
        double best = 0.0;
        for (const auto& part : enumerate_partitions(d + 1, k)) {
          for (int s = 0; s < 3; ++s) {
            const double ov = oracle::product_overlap(pp.amplitudes(), dims, part.blocks, restart);
            EXPECT_LE(ov, formula_overlap + 1e-9);
            best = std::max(best, ov);
          }
        }
        EXPECT_NEAR(best, formula_overlap, 1e-6);
        const PureState& closest = std::get<PureState>(*r.closest_state);
        EXPECT_LE(entanglement_depth_pure(closest).depth, k);
        EXPECT_NEAR(fidelity(closest, pp), formula_overlap, 1e-10);
      }
    }
  }
}

TEST(GeometricCoherenceMixed, Examples) {
  for (int k = 2; k <= 3; ++k) {
    const MeasureResult r = geometric_coherence_mixed(diagonal({0.2, 0.3, 0.5}), k);
    EXPECT_NEAR(r.value, 0.0, 1e-6);
    EXPECT_EQ(r.method, MeasureMethod::Sdp);
    ASSERT_TRUE(r.solver_gap.has_value());
    EXPECT_LE(std::abs(*r.solver_gap), 1e-7);
    EXPECT_NEAR(geometric_coherence_mixed(diagonal({1, 1, 1}), k).value, 0.0, 1e-6);
  }
  EXPECT_THROW(geometric_coherence_mixed(diagonal({0.5, 0.5}), 3), InputError);
}

TEST(GeometricCoherenceMixed, PureInputsMatchClosedForm) {
  Rng rng(58);
  for (int d = 2; d <= 5; ++d) {
    for (int t = 0; t < 3; ++t) {
      const PureState psi = random_pure(d, rng);
      for (int k = 2; k <= d; ++k) {
        const MeasureResult sdp = geometric_coherence_mixed(DensityMatrix::from_pure(psi), k);
        EXPECT_NEAR(sdp.value, geometric_coherence_pure(psi, k).value, 1e-5);
      }
    }
  }
}

TEST(GeometricCoherenceMixed, ClosestStateIsFeasibleAndAttainsValue) {
  Rng rng(59);
  for (int t = 0; t < 5; ++t) {
    const DensityMatrix rho = random_mixed(4, 2, rng);
    for (int k = 2; k <= 4; ++k) {
      const MeasureResult r = geometric_coherence_mixed(rho, k);
      const DensityMatrix& sigma = std::get<DensityMatrix>(*r.closest_state);
      EXPECT_NEAR(1.0 - oracle::fidelity(rho.matrix(), sigma.matrix()), r.value, 1e-5);
      if (k == 2) {
        // incoherent states are diagonal
        EXPECT_LT((sigma.matrix() - ComplexMatrix(sigma.matrix().diagonal().asDiagonal())).norm(), 1e-6);
      }
    }
  }
}

TEST(GeometricCoherenceMixed, MonotoneInK) {
  Rng rng(60);
  for (int t = 0; t < 4; ++t) {
    const DensityMatrix rho = random_mixed(4, 1 + t % 3, rng);
    double prev = 1.0;
    for (int k = 2; k <= 4; ++k) {
      const double v = geometric_coherence_mixed(rho, k).value;
      EXPECT_LE(v, prev + 1e-6);
      prev = v;
    }
  }
}

TEST(SolverFailure, SurfacesAsSolverError) {
  Rng rng(61);
  const SdpSolver starved(SdpOptions{1e-7, 1});
  EXPECT_THROW(geometric_coherence_mixed(random_mixed(3, 3, rng), 2, starved), SolverError);
}

TEST(Pullback, RejectsStatesOutsideImage) {
  const DensityMatrix outside(protocol_shape(2), ComplexMatrix(ComplexMatrix::Identity(8, 8) / 8.0));
  EXPECT_THROW(protocol_pullback(outside), InputError);
  const DensityMatrix reg(register_shape(2), ComplexMatrix(ComplexMatrix::Identity(4, 4) / 4.0));
  EXPECT_THROW(register_pullback(reg), InputError);
  Rng rng(62);
  const DensityMatrix rho = random_mixed(3, 2, rng);
  EXPECT_LT((protocol_pullback(activate(rho)).matrix() - rho.matrix()).norm(), 1e-14);
  EXPECT_LT((register_pullback(locc_decouple(activate(rho))).matrix() - rho.matrix()).norm(), 1e-10);
}

TEST(ConversionBounds, Examples) {
  Rng rng(63);
  // pure: all three equal
  const PureState psi = random_pure(3, rng);
  for (int k = 2; k <= 3; ++k) {
    const ConversionReport r = verify_conversion_bounds(DensityMatrix::from_pure(psi), k);
    const double closed = geometric_coherence_pure(psi, k).value;
    EXPECT_NEAR(r.coherence, closed, 1e-5);
    EXPECT_NEAR(r.entanglement_activated, closed, 1e-5);
    EXPECT_NEAR(r.entanglement_decoupled, closed, 1e-5);
    EXPECT_TRUE(r.holds());
  }
  // incoherent: all zero
  const ConversionReport z = verify_conversion_bounds(diagonal({0.3, 0.3, 0.4}), 2);
  EXPECT_NEAR(z.coherence, 0.0, 1e-6);
  EXPECT_NEAR(z.entanglement_activated, 0.0, 1e-6);
  EXPECT_NEAR(z.entanglement_decoupled, 0.0, 1e-6);
  // rank-2 mixed
  const ConversionReport m = verify_conversion_bounds(random_mixed(3, 2, rng), 2);
  EXPECT_TRUE(m.first_holds());
  EXPECT_TRUE(m.second_holds());
  EXPECT_LE(m.max_solver_gap, 1e-7);
}

TEST(CoherenceNumberBound, Examples) {
  EXPECT_EQ(coherence_number_lower_bound(DensityMatrix::from_pure(uniform(4))), 4);
  EXPECT_EQ(coherence_number_lower_bound(diagonal({0.1, 0.2, 0.7})), 1);
  const double p = 0.05;
  const ComplexMatrix mix = (1 - p) * uniform(3).projector() + p * identity(3) / 3.0;
  EXPECT_GE(coherence_number_lower_bound(DensityMatrix::normalized(SpaceShape({3}), mix)), 2);
  Rng rng(64);
  for (int k = 1; k <= 4; ++k) {
    const PureState s = random_sparse_pure(4, k, rng);
    EXPECT_EQ(coherence_number_lower_bound(DensityMatrix::from_pure(s)), k);
  }
}

TEST(Reports, MeasureJsonShape) {
  const MeasureResult r = geometric_coherence_pure(uniform(2), 2);
  const nlohmann::json j = measure_json("geometric_coherence", 2, r);
  EXPECT_EQ(j["measure"], "geometric_coherence");
  EXPECT_EQ(j["k"], 2);
  EXPECT_EQ(j["method"], "closed_form");
  EXPECT_TRUE(j["solver_gap"].is_null());
  EXPECT_TRUE(j["closest_state"].contains("amplitudes"));
  EXPECT_DOUBLE_EQ(j["value"].get<double>(), 0.5);
}
