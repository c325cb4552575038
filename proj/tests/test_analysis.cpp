#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "srw/analysis.hpp"
#include "srw/cluster_eom.hpp"

using namespace srw;

namespace {

SystemParams params(int n, double kappa, double gamma) {
  SystemParams p;
  p.n_emitters = n;
  p.kappa = kappa;
  p.gamma = gamma;
  return p;
}

TimeGrid grid(double t_end, int samples) {
  TimeGrid g;
  g.t_end = t_end;
  g.n_samples = samples;
  return g;
}

// Random pure state in the symmetric subspace.
ComplexMatrix random_symmetric(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  ComplexVector psi = ComplexVector::Zero(Eigen::Index{1} << n);
  for (int k = 0; k <= n; ++k) psi += Complex(normal(rng), normal(rng)) * dicke_state(n, k);
  psi.normalize();
  return psi * psi.adjoint();
}

// Relabels emitters: emitter i moves to slot perm[i].
ComplexMatrix permutation_matrix(int n, const std::vector<int>& perm) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    std::uint64_t t = 0;
    for (int i = 0; i < n; ++i) {
      if (static_cast<std::uint64_t>(s) & emitter_bit(n, i)) t |= emitter_bit(n, perm[static_cast<std::size_t>(i)]);
    }
    p(static_cast<Eigen::Index>(t), s) = 1.0;
  }
  return p;
}

const JMComponent& component(const std::vector<JMComponent>& comps, const JMLabel& l) {
  for (const auto& c : comps) {
    if (c.label == l) return c;
  }
  throw std::runtime_error("missing label");
}

}  // namespace

TEST(Witness, PrintedExamples) {
  EXPECT_DOUBLE_EQ(witness({0.0, 0.0}, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(witness({0.0, 0.0}, 0.0), 1.0);
  EXPECT_NEAR(witness(c0_of_jm({4, 4, 0}), czz_of_jm({4, 4, 0})), -2.0 / 3.0, 1e-15);
  EXPECT_NEAR(witness_lower_bound(50), -2.0 / 49.0, 1e-15);
  EXPECT_THROW(witness_lower_bound(1), InvalidParameter);
}

TEST(Witness, LinearInMixtures) {
  const double a = witness(c0_of_jm({6, 6, 0}), czz_of_jm({6, 6, 0}));
  const double b = witness(c0_of_jm({6, 2, 2}), czz_of_jm({6, 2, 2}));
  const double mixed = witness(0.3 * c0_of_jm({6, 6, 0}) + 0.7 * c0_of_jm({6, 2, 2}),
                               0.3 * czz_of_jm({6, 6, 0}) + 0.7 * czz_of_jm({6, 2, 2}));
  EXPECT_NEAR(mixed, 0.3 * a + 0.7 * b, 1e-14);
}

TEST(Witness, BoundHoldsOnRandomSymmetricStates) {
  for (int n = 2; n <= 6; ++n) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
      const ComplexMatrix rho = random_symmetric(n, seed * 31u + static_cast<unsigned>(n));
      const double w = witness(pair_correlation(rho, n, 0, 1), pair_zz(rho, n, 0, 1));
      EXPECT_GE(w, witness_lower_bound(n) - 1e-12);
    }
  }
}

TEST(Classification, SignOfPairCorrelation) {
  EXPECT_EQ(classify({4, 4, 0}), Radiance::Superradiant);
  EXPECT_EQ(classify({4, 0, 0}), Radiance::Subradiant);
  EXPECT_EQ(classify({4, 4, 4}), Radiance::Neutral);
  EXPECT_EQ(to_string(Radiance::Subradiant), "subradiant");
}

TEST(Decomposition, DickeStateIsSingleComponent) {
  const ComplexVector d = dicke_state(4, 2);
  const auto comps = decompose(d * d.adjoint(), 4);
  EXPECT_NEAR(component(comps, {4, 4, 0}).weight, 1.0, 1e-12);
  EXPECT_NEAR(total_weight(comps), 1.0, 1e-12);
  for (const auto& c : comps) {
    if (!(c.label == JMLabel{4, 4, 0})) {
      EXPECT_NEAR(c.weight, 0.0, 1e-12);
    }
  }
}

TEST(Decomposition, MaximallyMixedGivesMultiplicityWeights) {
  const ComplexMatrix mixed = ComplexMatrix::Identity(16, 16) / 16.0;
  const auto comps = decompose(mixed, 4);
  for (const auto& c : comps) EXPECT_NEAR(c.weight, static_cast<double>(c.multiplicity) / 16.0, 1e-12);
  EXPECT_NEAR(purity_lower_bound(comps), 1.0 / 16.0, 1e-12);
}

TEST(Decomposition, DimensionMismatchIsError) {
  EXPECT_THROW(decompose(ComplexMatrix::Identity(8, 8), 4), InvalidParameter);
}

TEST(Decomposition, ReconstructsPairCorrelationsOfSymmetricStates) {
  const DickeDecomposer dec(4);
  for (unsigned seed = 1; seed <= 10; ++seed) {
    const ComplexMatrix raw = oracle::random_density(16, seed);
    ComplexMatrix rho = ComplexMatrix::Zero(16, 16);
    std::vector<int> perm = {0, 1, 2, 3};
    int count = 0;
    do {
      rho += permutation_matrix(4, perm) * raw * permutation_matrix(4, perm).transpose();
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    rho /= static_cast<double>(count);
    ASSERT_TRUE(dec.is_permutation_symmetric(rho));
    const auto comps = dec.decompose(rho);
    EXPECT_NEAR(total_weight(comps), 1.0, 1e-10);
    EXPECT_NEAR(reconstructed_c0(comps), pair_correlation(rho, 4, 0, 1).real(), 1e-8);
    EXPECT_NEAR(reconstructed_czz(comps), pair_zz(rho, 4, 0, 1), 1e-8);
    EXPECT_GE(purity(rho), purity_lower_bound(comps) - 1e-10);
  }
}

TEST(Decomposition, AsymmetricStateIsFlagged) {
  ComplexMatrix rho = ComplexMatrix::Zero(16, 16);
  rho(0b0001, 0b0001) = 1.0;
  EXPECT_FALSE(DickeDecomposer(4).is_permutation_symmetric(rho));
}

TEST(RadianceSplitTest, SingletAndDicke) {
  const auto singlet = radiance_split(decompose(rho_jm({2, 0, 0}), 2));
  EXPECT_NEAR(singlet.superradiant, 0.0, 1e-12);
  EXPECT_NEAR(singlet.subradiant, -0.5, 1e-12);
  const ComplexVector d = dicke_state(4, 2);
  const auto dicke = radiance_split(decompose(d * d.adjoint(), 4));
  EXPECT_NEAR(dicke.superradiant, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(dicke.subradiant, 0.0, 1e-12);
  EXPECT_NEAR(dicke.net(), 1.0 / 3.0, 1e-12);
}

TEST(WitnessTraceTest, FullyInvertedClusterNeverDetects) {
  const auto traj = run(params(50, 20, 1), FullyInverted{}, grid(10.0, 1001), true);
  std::vector<ObservableRecord> recs;
  for (const auto& s : traj.samples) recs.push_back(to_record(s));
  const auto w = witness_trace(recs);
  EXPECT_GE(w.min_value, -1e-6);
  EXPECT_NEAR(w.values.front(), 2.0, 1e-14);
}

TEST(WitnessTraceTest, DickeStartDetectsAtTimeZero) {
  const auto traj = run(params(50, 20, 1), DickeState{25}, grid(1.0, 11), true);
  std::vector<ObservableRecord> recs;
  for (const auto& s : traj.samples) recs.push_back(to_record(s));
  const auto w = witness_trace(recs);
  EXPECT_NEAR(w.values.front(), -2.0 / 49.0, 1e-8);
  EXPECT_TRUE(w.detected);
}

TEST(WitnessTraceTest, BadInput) {
  EXPECT_THROW(make_witness_trace({}, {}), InvalidParameter);
  EXPECT_THROW(make_witness_trace({0.0, 1.0}, {1.0}), InvalidParameter);
}

TEST(Threshold, ClosedSystemReachesWitnessMinimum) {
  SystemParams p = params(2, 0.0, 0.0);
  const TimeGrid g = grid(3.0, 601);
  // Lossless N=2: |0,0,1> <-> |D_{2,1}>|0> oscillation, W reaches -2 exactly.
  const double wmin = min_witness_for_gamma(p, 0.0, g);
  EXPECT_NEAR(wmin, -2.0, 1e-4);
}

TEST(Threshold, NoSignChangeIsError) {
  const std::vector<double> gammas = {0.05, 0.1};
  EXPECT_THROW(threshold_sweep(params(2, 0.1, 0.1), 2, gammas, grid(10.0, 201)), InvalidParameter);
  const std::vector<double> unordered = {0.5, 0.1};
  EXPECT_THROW(threshold_sweep(params(2, 0.1, 0.1), 2, unordered, grid(10.0, 201)), InvalidParameter);
}

TEST(Threshold, TwoEmitterCriticalDephasing) {
  std::vector<double> gammas;
  for (int i = 0; i < 10; ++i) gammas.push_back(0.2 + 0.2 * i);
  const auto res = threshold_sweep(params(2, 0.1, 0.1), 2, gammas, grid(10.0, 401), 2);
  EXPECT_TRUE(res.monotone);
  EXPECT_NEAR(res.critical_gamma, 1.32, 0.15);
  EXPECT_LT(res.min_witness.front(), 0.0);
  EXPECT_GE(res.min_witness.back(), 0.0);
}
