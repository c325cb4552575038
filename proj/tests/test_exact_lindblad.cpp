#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "srw/exact_lindblad.hpp"

using namespace srw;

namespace {

SystemParams params(int n, double kappa, double gamma, double gamma_phi = 0.0, double g = 1.0) {
  SystemParams p;
  p.n_emitters = n;
  p.kappa = kappa;
  p.gamma = gamma;
  p.gamma_phi = gamma_phi;
  p.coupling_g = g;
  return p;
}

TimeGrid grid(double t_end, int samples) {
  TimeGrid g;
  g.t_end = t_end;
  g.n_samples = samples;
  return g;
}

/// Least-squares slope of log(y) over samples with t in [t0, t1].
double log_slope(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    const double ly = std::log(y[i]);
    sx += t[i];
    sy += ly;
    sxx += t[i] * t[i];
    sxy += t[i] * ly;
    m += 1;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

TEST(Liouvillian, DecoupledClosedSystemIsStationary) {
  const Liouvillian l0(params(1, 0, 0, 0, 0.0), 1);
  EXPECT_EQ(l0.apply(initial_density_matrix(FullyInverted{}, 1, 1).data).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(l0.apply(initial_density_matrix(PhotonFock{1}, 1, 1).data).cwiseAbs().maxCoeff(), 0.0);
  const Liouvillian l1(params(1, 0, 0, 0, 1.0), 1);
  EXPECT_GT(l1.apply(initial_density_matrix(PhotonFock{1}, 1, 1).data).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Liouvillian, MatchesExplicitSuperoperator) {
  const SystemParams p = params(2, 0.7, 0.3, 0.2);
  Liouvillian l(p, 3);
  const oracle::Mat rho = oracle::random_density(l.dimension(), 7);
  const ComplexMatrix a = l.apply(rho);
  const ComplexVector v = Eigen::Map<const ComplexVector>(rho.data(), rho.size());
  const ComplexVector b = l.superoperator() * v;
  EXPECT_LT((Eigen::Map<const ComplexVector>(a.data(), a.size()) - b).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Liouvillian, TracelessAndHermiticityPreserving) {
  const SystemParams p = params(3, 1.0, 0.5, 0.25);
  Liouvillian l(p, 3);
  const oracle::Mat rho = oracle::random_density(l.dimension(), 11);
  const ComplexMatrix out = l.apply(rho);
  EXPECT_LT(std::abs(out.trace()), 1e-12);
  EXPECT_LT((out - out.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Liouvillian, DimensionLimit) {
  EXPECT_THROW(Liouvillian(params(10, 1, 1), 10), CapacityError);
  EXPECT_NO_THROW(Liouvillian(params(2, 1, 1), 3, 16));
  EXPECT_THROW(Liouvillian(params(2, 1, 1), 4, 16), CapacityError);
}

TEST(ExactSolver, IdentityEvolutionWhenGeneratorVanishes) {
  const SystemParams p = params(2, 0, 0, 0, 0.0);
  ExactOptions o;
  o.keep_emitter_states = true;
  const auto tr = solve_exact(p, DickeState{1}, grid(3.0, 7), o);
  for (const auto& s : tr.emitter_states) EXPECT_LT((s - tr.emitter_states.front()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ExactSolver, PhotonDecaysAtKappa) {
  const SystemParams p = params(1, 0.8, 0.0, 0.0, 0.0);
  const auto tr = solve_exact(p, PhotonFock{1}, grid(5.0, 51));
  for (const auto& r : tr.records) EXPECT_NEAR(r.n, std::exp(-0.8 * r.time), 1e-6);
}

TEST(ExactSolver, SingleEmitterPurcellDecay) {
  const SystemParams p = params(1, 20, 1);
  const double expected = p.gamma + single_emitter_rate(p);
  const auto tr = solve_exact(p, FullyInverted{}, grid(5.0 / expected, 201));
  std::vector<double> t, pe;
  for (const auto& r : tr.records) {
    t.push_back(r.time);
    pe.push_back(0.5 * (1.0 + r.sz));
  }
  const double rate = -log_slope(t, pe, 1.0 / expected, 5.0 / expected);
  EXPECT_NEAR(rate / expected, 1.0, 0.05);
}

TEST(ExactSolver, VacuumRabiOscillationTwoEmitters) {
  // One photon and two ground-state emitters couple to |D_{2,1}> with strength sqrt(2) g.
  const SystemParams p = params(2, 0, 0);
  const auto tr = solve_exact(p, PhotonFock{1}, grid(6.0, 121));
  for (const auto& r : tr.records) {
    const double c = std::cos(std::sqrt(2.0) * r.time);
    EXPECT_NEAR(r.n, c * c, 1e-6);
  }
}

TEST(ExactSolver, ExcitationBookkeepingFourEmitters) {
  const SystemParams p = params(4, 20, 1);
  const auto tr = solve_exact(p, FullyInverted{}, grid(15.0, 3001));
  double emitted = 0.0;
  for (std::size_t i = 1; i < tr.records.size(); ++i) {
    auto flux = [&](const ObservableRecord& r) { return p.kappa * r.n + p.gamma * 4.0 * (1.0 + r.sz) / 2.0; };
    emitted += 0.5 * (flux(tr.records[i]) + flux(tr.records[i - 1])) * (tr.records[i].time - tr.records[i - 1].time);
  }
  EXPECT_NEAR(emitted / 4.0, 1.0, 0.01);
}

TEST(PartialTrace, ProductStateWithVacuum) {
  const oracle::Mat rq = oracle::random_density(4, 3);
  const DensityMatrix rho = product_state(rq, 2, 3, 0);
  EXPECT_LT((reduce_to_emitters(rho) - rq).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PartialTrace, MaximallyEntangledEmitterPhoton) {
  // (|e,0> + |g,1>)/sqrt(2)
  DensityMatrix rho{ComplexMatrix::Zero(4, 4), 1, 1};
  ComplexVector psi = ComplexVector::Zero(4);
  psi(1 * 2 + 0) = psi(0 * 2 + 1) = 1.0 / std::sqrt(2.0);
  rho.data = psi * psi.adjoint();
  EXPECT_LT((reduce_to_emitters(rho) - 0.5 * ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PartialTrace, MidEvolutionPurityMatchesContraction) {
  ExactOptions o;
  o.keep_emitter_states = true;
  const auto tr = solve_exact(params(2, 1.0, 0.2), FullyInverted{}, grid(1.0, 3), o);
  const auto rho = integrate(Liouvillian(params(2, 1.0, 0.2), tr.n_max),
                             initial_density_matrix(FullyInverted{}, 2, tr.n_max), grid(1.0, 3));
  // Contract rho[(e,p),(e',p)] over p with explicit index arithmetic.
  const DensityMatrix& r = rho[1];
  const int levels = tr.n_max + 1;
  double pur = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      Complex s = 0;
      for (int k = 0; k < levels; ++k) s += r.data(a * levels + k, b * levels + k);
      pur += std::norm(s);
    }
  }
  EXPECT_NEAR(purity(tr.emitter_states[1]), pur, 1e-12);
  EXPECT_NEAR(*tr.records[1].purity, pur, 1e-12);
}

TEST(Observables, HalfInvertedDickeState) {
  const ObservableEvaluator eval(params(4, 1, 1), 2);
  const DensityMatrix rho = initial_density_matrix(DickeState{2}, 4, 2);
  const auto rec = eval(0.0, rho);
  EXPECT_NEAR(rec.c0.real(), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(rec.czz, -1.0 / 3.0, 1e-14);
  EXPECT_NEAR(*rec.dicke_overlap, 1.0, 1e-14);
  EXPECT_NEAR(*rec.purity, 1.0, 1e-14);
  EXPECT_NEAR(rec.sz, 0.0, 1e-14);
}

TEST(Observables, ProductStates) {
  const ObservableEvaluator eval(params(3, 1, 1), 2);
  const auto fi = eval(0.0, initial_density_matrix(FullyInverted{}, 3, 2));
  EXPECT_NEAR(fi.sz, 1.0, 1e-14);
  EXPECT_NEAR(std::abs(fi.c0), 0.0, 1e-14);
  EXPECT_NEAR(fi.czz, 1.0, 1e-14);
  const auto mixed = eval(0.0, initial_density_matrix(HalfInvertedProduct{}, 3, 2));
  EXPECT_NEAR(mixed.sz, 0.0, 1e-14);
  EXPECT_NEAR(std::abs(mixed.c0), 0.0, 1e-14);
  EXPECT_NEAR(mixed.czz, 0.0, 1e-14);
  EXPECT_NEAR(*mixed.purity, 1.0 / 8.0, 1e-14);
}

TEST(Negativity, KnownValues) {
  const oracle::Mat product = oracle::kron(oracle::random_density(2, 1), oracle::random_density(2, 2));
  EXPECT_NEAR(negativity(product, 2, {0}), 0.0, 1e-12);
  EXPECT_NEAR(negativity(rho_jm({2, 0, 0}), 2, {0}), 0.5, 1e-12);
  const ComplexMatrix d = rho_jm({4, 4, 0});
  const double v = negativity(d, 4, {0, 1});
  EXPECT_GT(v, 0.0);
  EXPECT_NEAR(v, oracle::negativity(d, 4, {0, 1}), 1e-10);
}

TEST(Negativity, AgreesWithBlockOracleOnRandomStates) {
  const oracle::Mat rho = oracle::random_density(16, 5, 3);
  for (const std::vector<int>& cut : {std::vector<int>{0}, {1, 3}, {0, 2, 3}}) {
    EXPECT_NEAR(negativity(rho, 4, cut), oracle::negativity(rho, 4, cut), 1e-10);
  }
}

TEST(Negativity, Errors) {
  const ComplexMatrix d = rho_jm({4, 4, 0});
  EXPECT_THROW(negativity(d, 4, {}), InvalidParameter);
  EXPECT_THROW(negativity(d, 4, {0, 1, 2, 3}), InvalidParameter);
  EXPECT_THROW(negativity(ComplexMatrix::Identity(512, 512) / 512.0, 9, {0}), CapacityError);
  ComplexMatrix bad = ComplexMatrix::Zero(4, 4);
  bad(0, 0) = 1.5;
  bad(1, 1) = -0.5;
  EXPECT_THROW(negativity(bad, 2, {0}), NumericalError);
}

TEST(TrajectoryInvariants, TraceHermiticityPositivity) {
  const SystemParams p = params(3, 2.0, 0.5, 0.3);
  const int n_max = default_photon_cutoff(3, FullyInverted{});
  Liouvillian l(p, n_max);
  double worst_trace = 0, worst_herm = 0, lowest = 1;
  integrate(l, initial_density_matrix(FullyInverted{}, 3, n_max), grid(4.0, 41),
            [&](std::size_t, double, const DensityMatrix& rho) {
              worst_trace = std::max(worst_trace, std::abs(rho.trace() - 1.0));
              worst_herm = std::max(worst_herm, (rho.data - rho.data.adjoint()).cwiseAbs().maxCoeff());
              lowest = std::min(lowest, min_eigenvalue(rho.data));
            });
  EXPECT_LT(worst_trace, 1e-8);
  EXPECT_LT(worst_herm, 1e-9);
  EXPECT_GT(lowest, -1e-8);
}

TEST(TrajectoryInvariants, BlockPositivityCheckAgreesWithFullSpectrum) {
  const SystemParams p = params(2, 0.5, 0.1);
  const auto states = integrate(Liouvillian(p, 4), initial_density_matrix(DickeState{1}, 2, 4), grid(3.0, 4));
  for (const auto& s : states) EXPECT_NEAR(min_eigenvalue(s), min_eigenvalue(s.data), 1e-12);
  DensityMatrix mixed = states.back();
  mixed.data(0, 1) += 0.01;
  mixed.data(1, 0) += 0.01;
  EXPECT_NEAR(min_eigenvalue(mixed), min_eigenvalue(mixed.data), 1e-12);
}

TEST(TrajectoryInvariants, PairCorrelationsAreSymmetric) {
  ExactOptions o;
  o.keep_emitter_states = true;
  const auto tr = solve_exact(params(4, 20, 1, 0.2), FullyInverted{}, grid(2.0, 21), o);
  for (const auto& rq : tr.emitter_states) {
    const Complex ref = pair_correlation(rq, 4, 0, 1);
    for (int i = 0; i < 4; ++i) {
      for (int l = 0; l < 4; ++l) {
        if (i == l) continue;
        EXPECT_LT(std::abs(pair_correlation(rq, 4, i, l) - ref), 1e-8);
      }
    }
  }
}

TEST(TrajectoryInvariants, ClosedSystemConservesJSquaredAndExcitation) {
  const SystemParams p = params(3, 0, 0);
  const int n_max = default_photon_cutoff(3, HalfInvertedProduct{});
  Liouvillian l(p, n_max);
  const ObservableEvaluator eval(p, n_max);
  std::vector<double> j2, exc;
  integrate(l, initial_density_matrix(HalfInvertedProduct{}, 3, n_max), grid(10.0, 101),
            [&](std::size_t, double t, const DensityMatrix& rho) {
              const auto rec = eval(t, rho);
              j2.push_back(eval.j_squared(reduce_to_emitters(rho)));
              exc.push_back(3.0 * (1.0 + rec.sz) / 2.0 + rec.n);
            });
  for (std::size_t i = 0; i < j2.size(); ++i) {
    EXPECT_NEAR(j2[i], j2.front(), 1e-6);
    EXPECT_NEAR(exc[i], exc.front(), 1e-6);
  }
}

TEST(TrajectoryInvariants, ExcitationBalanceAndPhotonSourceIdentity) {
  const SystemParams p = params(3, 1.5, 0.4, 0.3);
  const int n_max = default_photon_cutoff(3, FullyInverted{});
  Liouvillian l(p, n_max);
  const ObservableEvaluator eval(p, n_max);
  const CollectiveOperators ops(3);
  SparseMatrix exc_op = detail::kron(SparseMatrix(0.5 * (ops.j_z() * 2.0) + 1.5 * detail::identity(8)),
                                     detail::identity(n_max + 1)) +
                        l.number();
  integrate(l, initial_density_matrix(FullyInverted{}, 3, n_max), grid(3.0, 31),
            [&](std::size_t, double t, const DensityMatrix& rho) {
              const auto rec = eval(t, rho);
              const ComplexMatrix drho = l.apply(rho.data);
              const double d_exc = expectation(exc_op, drho).real();
              const double losses = -p.kappa * rec.n - p.gamma * 3.0 * (1.0 + rec.sz) / 2.0;
              EXPECT_NEAR(d_exc, losses, 1e-6);
              const double dn = expectation(l.number(), drho).real();
              EXPECT_NEAR(dn + p.kappa * rec.n, *rec.photon_source, 1e-10);
            });
}

TEST(Cutoff, DefaultAndLossless) {
  EXPECT_EQ(default_photon_cutoff(4, PhotonFock{2}), 10);
  EXPECT_EQ(default_photon_cutoff(4, FullyInverted{}), 8);
  EXPECT_EQ(lossless_photon_cutoff(4, PhotonFock{2}), 3);
  EXPECT_EQ(lossless_photon_cutoff(4, DickeState{1}), 2);
  const auto a = solve_exact(params(2, 0.1, 0.1), PhotonFock{1}, grid(5.0, 51));
  ExactOptions tight;
  tight.n_max = lossless_photon_cutoff(2, PhotonFock{1});
  const auto b = solve_exact(params(2, 0.1, 0.1), PhotonFock{1}, grid(5.0, 51), tight);
  EXPECT_TRUE(b.cutoff_adequate);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    EXPECT_NEAR(a.records[i].n, b.records[i].n, 1e-8);
    EXPECT_NEAR(a.records[i].c0.real(), b.records[i].c0.real(), 1e-8);
  }
}

TEST(Cutoff, InadequateCutoffIsFlagged) {
  ExactOptions o;
  o.n_max = 2;
  const auto tr = solve_exact(params(2, 0.1, 0.1), PhotonFock{2}, grid(1.0, 11), o);
  EXPECT_FALSE(tr.cutoff_adequate);
  EXPECT_FALSE(tr.quality_ok());
  EXPECT_THROW(solve_exact(params(2, 0.1, 0.1), PhotonFock{3}, grid(1.0, 11), o), InvalidParameter);
}

TEST(Cutoff, DefaultRunsAreAdequate) {
  const auto tr = solve_exact(params(4, 20, 1), FullyInverted{}, grid(3.0, 31));
  EXPECT_TRUE(tr.cutoff_adequate);
  EXPECT_TRUE(tr.positivity_ok);
  EXPECT_LE(tr.max_trace_drift, 1e-8);
}
