#pragma once

// Doublet-level cluster-expansion equations of motion for N identical emitters
// in a lossy cavity, valid for any N in the weak-coupling (bad-cavity) regime.
//
// Dynamical variables: s_z = <s^z>, n = <a^+ a>, C0 = <s_1^+ s_2^->, Czz = <s_1^z s_2^z>.
// <a> and <s^-> vanish for every supported initial state and are not tracked.
//
// Two photon-assisted quantities are eliminated adiabatically:
//
//   psi = <a^+ s_1^->          decays at G_psi = (kappa + gamma + 2 gamma_phi)/2
//       => Im psi = g Q / G_psi,  Q = (1+s_z)/2 + s_z n + (N-1) Re C0
//   X   = <s_1^z s_2^- a^+>     decays at G_X = G_psi + gamma, fed by -gamma psi
//       => Im X = g (B - gamma Q / G_psi) / G_X,
//          B = (s_z + Czz)/2 + Czz n + C0 ((N-2) s_z - (2n+1))
//
// Only <s_k^+ s_1^z s_2^-> with k != 1,2 is factorized (to s_z C0). With
// I0 = 2 g^2 / G_psi and IX = 2 g^2 / G_X this gives
//
//   dn/dt   = I0 N Q - kappa n
//   ds_z/dt = -gamma (1 + s_z) - 2 I0 Q
//   dC0/dt  = -(gamma + 2 gamma_phi) C0 + IX (B - gamma Q / G_psi)
//   dCzz/dt = -2 gamma (s_z + Czz) - 4 IX Re(B - gamma Q / G_psi)

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <span>
#include <variant>
#include <vector>

#include "srw/core_model.hpp"
#include "srw/dicke_algebra.hpp"
#include "srw/errors.hpp"
#include "srw/extrema.hpp"
#include "srw/observables.hpp"
#include "srw/ode.hpp"
#include "srw/parallel.hpp"

namespace srw {

struct ClusterState {
  double s_z = 0.0;
  double n = 0.0;
  std::complex<double> c0{0.0, 0.0};
  double c_zz = 0.0;

  using Vector = Eigen::Matrix<double, 5, 1>;

  Vector to_vector() const { return (Vector() << s_z, n, c0.real(), c0.imag(), c_zz).finished(); }
  static ClusterState from_vector(const Vector& v) { return {v(0), v(1), {v(2), v(3)}, v(4)}; }
};

/// Photon-number rate decomposition evaluated on a cluster state.
inline EmissionRates rates(const ClusterState& s, const SystemParams& p) { return emission_rates(s.s_z, s.n, s.c0, p); }

inline ClusterState derivative(const ClusterState& s, const SystemParams& p, bool correlations_on) {
  const double g2 = p.coupling_g * p.coupling_g;
  const double gamma_psi = 0.5 * (p.kappa + p.gamma + 2.0 * p.gamma_phi);
  if (!(gamma_psi > 0.0)) throw InvalidParameter("cluster derivative: kappa + gamma + 2 gamma_phi must be positive");
  const double i0 = 2.0 * g2 / gamma_psi;
  const double big_n = p.n_emitters;
  const bool pairs = correlations_on && p.n_emitters >= 2;

  const std::complex<double> c0 = pairs ? s.c0 : std::complex<double>{};
  const double q = 0.5 * (1.0 + s.s_z) + s.s_z * s.n + (big_n - 1.0) * c0.real();

  ClusterState d;
  d.s_z = -p.gamma * (1.0 + s.s_z) - 2.0 * i0 * q;
  d.n = i0 * big_n * q - p.kappa * s.n;
  if (pairs) {
    const double gamma_x = gamma_psi + p.gamma;
    const double ix = 2.0 * g2 / gamma_x;
    const std::complex<double> b =
        0.5 * (s.s_z + s.c_zz) + s.c_zz * s.n + c0 * ((big_n - 2.0) * s.s_z - (2.0 * s.n + 1.0));
    const std::complex<double> source = ix * (b - p.gamma * q / gamma_psi);
    d.c0 = -(p.gamma + 2.0 * p.gamma_phi) * c0 + source;
    d.c_zz = -2.0 * p.gamma * (s.s_z + s.c_zz) - 4.0 * source.real();
  }
  return d;
}

/// Maps an initial condition onto the cluster variables.
inline ClusterState initial_cluster_state(const InitialCondition& ic, int n_emitters, bool correlations_on = true) {
  ClusterState s;
  if (std::holds_alternative<FullyInverted>(ic)) {
    s = {1.0, 0.0, {}, 1.0};
  } else if (std::holds_alternative<HalfInvertedProduct>(ic)) {
    s = {0.0, 0.0, {}, 0.0};
  } else if (const auto* d = std::get_if<DickeState>(&ic)) {
    if (d->excitations < 0 || d->excitations > n_emitters) throw InvalidParameter("DickeState requires 0 <= k <= N");
    s.s_z = 2.0 * d->excitations / n_emitters - 1.0;
    if (n_emitters >= 2) {
      const JMLabel label{n_emitters, n_emitters, 2 * d->excitations - n_emitters};
      s.c0 = c0_of_jm(label);
      s.c_zz = czz_of_jm(label);
    }
  } else {
    throw InvalidParameter("PhotonFock initial condition is not supported by the cluster solver");
  }
  if (!correlations_on || n_emitters < 2) {
    s.c0 = {};
    s.c_zz = 0.0;
  }
  return s;
}

struct ClusterSample {
  double time = 0.0;
  ClusterState state;
  EmissionRates rates;
};

struct ClusterTrajectory {
  std::vector<ClusterSample> samples;
  OdeStats stats;
};

inline constexpr double kClusterRelTol = 1e-9;
inline constexpr double kClusterAbsTol = 1e-12;
inline constexpr double kPhotonClip = 1e-9;

inline ClusterTrajectory run(const SystemParams& params, const InitialCondition& ic, const TimeGrid& grid,
                             bool correlations_on) {
  if (params.n_emitters < 1) throw InvalidParameter("cluster run: N must be >= 1");
  using Vec = ClusterState::Vector;
  Vec y = initial_cluster_state(ic, params.n_emitters, correlations_on).to_vector();
  const std::vector<double> times = grid.times();
  DormandPrince<Vec> stepper(
      OdeOptions{std::min(grid.rel_tol, kClusterRelTol), std::min(grid.abs_tol, kClusterAbsTol)});
  ClusterTrajectory out;
  out.samples.reserve(times.size());
  auto rhs = [&](double, const Vec& v, Vec& dv) {
    dv = derivative(ClusterState::from_vector(v), params, correlations_on).to_vector();
  };
  out.stats = stepper.integrate(rhs, y, 0.0, times, [&](std::size_t, double t, const Vec& v) {
    ClusterState s = ClusterState::from_vector(v);
    if (s.n < 0.0 && s.n > -kPhotonClip) s.n = 0.0;
    out.samples.push_back({t, s, rates(s, params)});
  });
  return out;
}

inline ObservableRecord to_record(const ClusterSample& s) {
  ObservableRecord r;
  r.time = s.time;
  r.sz = s.state.s_z;
  r.n = s.state.n;
  r.c0 = s.state.c0;
  r.czz = s.state.c_zz;
  return r;
}

/// max_t [Gamma_SE + Gamma_CE] of one trajectory.
inline Extremum peak_spontaneous_rate(const ClusterTrajectory& traj) {
  std::vector<double> t, v;
  t.reserve(traj.samples.size());
  v.reserve(traj.samples.size());
  for (const auto& s : traj.samples) {
    t.push_back(s.time);
    v.push_back(s.rates.gamma_se + s.rates.gamma_ce);
  }
  return refined_maximum(t, v);
}

struct ScalingFit {
  double exponent = 0.0;
  std::vector<int> n_emitters;
  std::vector<double> peak_rates;
};

/// Least-squares slope of log max_t[Gamma_SE + Gamma_CE] against log N.
inline ScalingFit max_se_rate_scaling(std::span<const int> n_list, const SystemParams& base, const TimeGrid& grid,
                                      bool correlations_on = true, const InitialCondition& ic = FullyInverted{},
                                      int jobs = 1) {
  if (n_list.size() < 3) throw InvalidParameter("max_se_rate_scaling: need at least 3 emitter numbers");
  int lo = n_list[0], hi = n_list[0];
  for (int n : n_list) {
    if (n < 1) throw InvalidParameter("max_se_rate_scaling: N must be >= 1");
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  if (hi < 10 * lo) throw InvalidParameter("max_se_rate_scaling: N values must span at least one decade");

  ScalingFit fit;
  fit.n_emitters.assign(n_list.begin(), n_list.end());
  fit.peak_rates.assign(n_list.size(), 0.0);
  parallel_for(n_list.size(), jobs, [&](std::size_t i) {
    SystemParams p = base;
    p.n_emitters = n_list[i];
    fit.peak_rates[i] = peak_spontaneous_rate(run(p, ic, grid, correlations_on)).value;
  });

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(n_list.size());
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    if (!(fit.peak_rates[i] > 0.0)) throw NumericalError("max_se_rate_scaling: non-positive peak rate");
    const double x = std::log(static_cast<double>(n_list[i])), y = std::log(fit.peak_rates[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  fit.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return fit;
}

}  // namespace srw
