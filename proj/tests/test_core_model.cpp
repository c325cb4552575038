#include <gtest/gtest.h>

#include "srw/core_model.hpp"

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

}  // namespace

TEST(SingleEmitterRate, PrintedExamples) {
  EXPECT_NEAR(single_emitter_rate(params(1, 20, 1)), 4.0 / 21.0, 1e-15);
  EXPECT_NEAR(single_emitter_rate(params(1, 0.1, 0.1)), 20.0, 1e-12);
  EXPECT_NEAR(single_emitter_rate(params(1, 20, 1, 0.5)), 4.0 / 22.0, 1e-15);
}

TEST(SingleEmitterRate, ZeroDenominatorIsError) {
  EXPECT_THROW(single_emitter_rate(params(1, 0, 0, 0)), InvalidParameter);
}

TEST(SingleEmitterRate, QuadraticInCouplingAndDecreasingInRates) {
  const SystemParams base = params(3, 2.0, 0.5, 0.25);
  SystemParams doubled = base;
  doubled.coupling_g = 2.0;
  EXPECT_NEAR(single_emitter_rate(doubled), 4.0 * single_emitter_rate(base), 1e-12);
  for (double SystemParams::*field : {&SystemParams::kappa, &SystemParams::gamma, &SystemParams::gamma_phi}) {
    SystemParams up = base;
    up.*field += 0.1;
    EXPECT_LT(single_emitter_rate(up), single_emitter_rate(base));
  }
}

TEST(Validate, FigureOneParametersAreWeakCoupling) {
  const auto rep = validate(params(50, 20, 1), FullyInverted{}, TimeGrid{}, SolverKind::Cluster);
  EXPECT_TRUE(rep.weak_coupling);
  EXPECT_TRUE(rep.warnings.empty());
}

TEST(Validate, FigureFourParametersAreStrongCoupling) {
  const auto rep = validate(params(2, 0.1, 0.1), PhotonFock{1}, TimeGrid{}, SolverKind::Exact);
  EXPECT_FALSE(rep.weak_coupling);
}

TEST(Validate, ClusterOutsideWeakCouplingWarns) {
  const auto rep = validate(params(2, 0.1, 0.1), FullyInverted{}, TimeGrid{}, SolverKind::Cluster);
  EXPECT_FALSE(rep.warnings.empty());
}

TEST(Validate, DickeExcitationsAboveNIsError) {
  EXPECT_THROW(validate(params(4, 20, 1), DickeState{5}, TimeGrid{}), InvalidParameter);
}

TEST(Validate, RejectsBadParameters) {
  EXPECT_THROW(validate(params(0, 1, 1), FullyInverted{}, TimeGrid{}), InvalidParameter);
  EXPECT_THROW(validate(params(2, -1, 1), FullyInverted{}, TimeGrid{}), InvalidParameter);
  EXPECT_THROW(validate(params(2, 1, 1, 0, 0.0), FullyInverted{}, TimeGrid{}), InvalidParameter);
  EXPECT_THROW(validate(params(2, 1, 1), PhotonFock{-1}, TimeGrid{}), InvalidParameter);
  TimeGrid bad;
  bad.t_end = 0.0;
  EXPECT_THROW(validate(params(2, 1, 1), FullyInverted{}, bad), InvalidParameter);
  bad = TimeGrid{};
  bad.n_samples = 1;
  EXPECT_THROW(validate(params(2, 1, 1), FullyInverted{}, bad), InvalidParameter);
}

TEST(Validate, CollectsEveryViolation) {
  TimeGrid bad;
  bad.t_end = -1.0;
  try {
    validate(params(0, -1, 1), FullyInverted{}, bad);
    FAIL() << "expected InvalidParameter";
  } catch (const InvalidParameter& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("n_emitters"), std::string::npos);
    EXPECT_NE(msg.find("kappa"), std::string::npos);
    EXPECT_NE(msg.find("t_end"), std::string::npos);
  }
}

TEST(Validate, ClusterRejectsFockStartAndDetuning) {
  EXPECT_THROW(validate(params(2, 20, 1), PhotonFock{1}, TimeGrid{}, SolverKind::Cluster), InvalidParameter);
  SystemParams p = params(2, 20, 1);
  p.detuning = 0.5;
  EXPECT_THROW(validate(p, FullyInverted{}, TimeGrid{}, SolverKind::Cluster), InvalidParameter);
  EXPECT_NO_THROW(validate(p, FullyInverted{}, TimeGrid{}, SolverKind::Exact));
}

TEST(Validate, NormalizesToUnitCoupling) {
  const auto rep = validate(params(3, 40, 2, 1, 2.0), FullyInverted{}, TimeGrid{});
  EXPECT_DOUBLE_EQ(rep.config.params.coupling_g, 1.0);
  EXPECT_DOUBLE_EQ(rep.config.params.kappa, 20.0);
  EXPECT_DOUBLE_EQ(rep.config.params.gamma, 1.0);
  EXPECT_DOUBLE_EQ(rep.config.params.gamma_phi, 0.5);
}

TEST(Validate, IsPure) {
  const auto a = validate(params(5, 3, 1), DickeState{2}, TimeGrid{}, SolverKind::Cluster);
  const auto b = validate(params(5, 3, 1), DickeState{2}, TimeGrid{}, SolverKind::Cluster);
  EXPECT_EQ(a.weak_coupling, b.weak_coupling);
  EXPECT_EQ(a.warnings, b.warnings);
  EXPECT_EQ(to_string(a.config.initial), to_string(b.config.initial));
}

TEST(InitialCondition, ParsesAllForms) {
  EXPECT_TRUE(std::holds_alternative<FullyInverted>(parse_initial_condition("fully_inverted", 4)));
  EXPECT_TRUE(std::holds_alternative<HalfInvertedProduct>(parse_initial_condition("fshi", 4)));
  EXPECT_EQ(std::get<DickeState>(parse_initial_condition("dicke:3", 4)).excitations, 3);
  EXPECT_EQ(std::get<DickeState>(parse_initial_condition("dicke_half", 6)).excitations, 3);
  EXPECT_EQ(std::get<PhotonFock>(parse_initial_condition("fock_half", 4)).photons, 2);
  EXPECT_EQ(initial_photons(parse_initial_condition("fock:7", 4)), 7);
  EXPECT_THROW(parse_initial_condition("dicke:x", 4), InvalidParameter);
  EXPECT_THROW(parse_initial_condition("bogus", 4), InvalidParameter);
  EXPECT_EQ(to_string(parse_initial_condition("dicke:2", 4)), "dicke:2");
}

TEST(TimeGridTest, EndpointsAreExact) {
  TimeGrid g;
  g.t_end = 3.0;
  g.n_samples = 7;
  const auto t = g.times();
  ASSERT_EQ(t.size(), 7u);
  EXPECT_EQ(t.front(), 0.0);
  EXPECT_EQ(t.back(), 3.0);
}

TEST(Solver, ParseRoundTrip) {
  for (auto s : {SolverKind::Exact, SolverKind::Cluster, SolverKind::Both}) EXPECT_EQ(parse_solver(to_string(s)), s);
  EXPECT_THROW(parse_solver("quantum"), InvalidParameter);
}
