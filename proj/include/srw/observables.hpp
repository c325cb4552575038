#pragma once

// Solver-agnostic per-sample quantities. Both solvers emit ObservableRecord
// rows; purity and Dicke overlap are only available from the exact solver.

#include <complex>
#include <optional>

#include "srw/core_model.hpp"

namespace srw {

struct ObservableRecord {
  double time = 0.0;
  double sz = 0.0;                 // per-emitter inversion <sigma_z>
  double n = 0.0;                  // mean photon number
  std::complex<double> c0{0.0, 0.0};  // <sigma_i^+ sigma_j^->, i != j
  double czz = 0.0;                // <sigma_i^z sigma_j^z>, i != j
  std::optional<double> purity;         // Tr[rho_q^2]
  std::optional<double> dicke_overlap;  // <D_{N,N/2}| rho_q |D_{N,N/2}>
  std::optional<double> photon_source;  // exact i g sum <s+ a - s- a+> = dn/dt + kappa n
};

/// Photon-number rate decomposition
///   dn/dt = Gamma_SE + Gamma_StE + Gamma_CE - kappa n.
struct EmissionRates {
  double gamma_se = 0.0;
  double gamma_ste = 0.0;
  double gamma_ce = 0.0;
  double cavity_loss = 0.0;

  double total() const { return gamma_se + gamma_ste + gamma_ce; }
};

/// Gamma_SE = I0 N/2 (1+sz), Gamma_StE = I0 N n sz, Gamma_CE = I0 N(N-1) Re[C0], loss = kappa n.
inline EmissionRates emission_rates(double sz, double n, std::complex<double> c0, const SystemParams& p) {
  const double i0 = single_emitter_rate(p);
  const double big_n = p.n_emitters;
  EmissionRates r;
  r.gamma_se = i0 * 0.5 * big_n * (1.0 + sz);
  r.gamma_ste = i0 * big_n * n * sz;
  r.gamma_ce = i0 * big_n * (big_n - 1.0) * c0.real();
  r.cavity_loss = p.kappa * n;
  return r;
}

inline EmissionRates emission_rates(const ObservableRecord& rec, const SystemParams& p) {
  return emission_rates(rec.sz, rec.n, rec.c0, p);
}

}  // namespace srw
