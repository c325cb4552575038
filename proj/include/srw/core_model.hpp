#pragma once

// Physical parameters, initial conditions and time grids shared by both solvers.
// All rates are in units of the light-matter coupling g (hbar = 1).

#include <cmath>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "srw/errors.hpp"

namespace srw {

struct SystemParams {
  int n_emitters = 1;
  double coupling_g = 1.0;
  double kappa = 0.0;      // cavity photon loss
  double gamma = 0.0;      // emitter radiative decay into non-cavity modes
  double gamma_phi = 0.0;  // pure dephasing
  double detuning = 0.0;   // omega_q - omega_c
};

/// Single-emitter emission rate into the cavity, I0 = 4 g^2 / (kappa + gamma + 2 gamma_phi).
inline double single_emitter_rate(const SystemParams& p) {
  const double denom = p.kappa + p.gamma + 2.0 * p.gamma_phi;
  if (!(denom > 0.0) || !std::isfinite(denom)) {
    throw InvalidParameter("single_emitter_rate: kappa + gamma + 2 gamma_phi must be positive");
  }
  return 4.0 * p.coupling_g * p.coupling_g / denom;
}

inline constexpr double kDefaultWeakCouplingThreshold = 0.05;

/// True when g^2 / (gamma + kappa) lies below `threshold`.
inline bool weak_coupling(const SystemParams& p, double threshold = kDefaultWeakCouplingThreshold) {
  const double loss = p.gamma + p.kappa;
  if (!(loss > 0.0)) return false;
  return p.coupling_g * p.coupling_g / loss < threshold;
}

// ---------------------------------------------------------------------------
// Initial conditions

struct FullyInverted {};
/// Product of maximally mixed emitters, rho_1/2^{(x)N}, with an empty cavity.
struct HalfInvertedProduct {};
struct DickeState {
  int excitations = 0;
};
/// Emitters in the ground state, cavity in the Fock state |photons>.
struct PhotonFock {
  int photons = 0;
};

using InitialCondition = std::variant<FullyInverted, HalfInvertedProduct, DickeState, PhotonFock>;

inline std::string to_string(const InitialCondition& ic) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, FullyInverted>) {
          return "fully_inverted";
        } else if constexpr (std::is_same_v<T, HalfInvertedProduct>) {
          return "half_inverted_product";
        } else if constexpr (std::is_same_v<T, DickeState>) {
          return "dicke:" + std::to_string(v.excitations);
        } else {
          return "fock:" + std::to_string(v.photons);
        }
      },
      ic);
}

/// Parses "fully_inverted", "half_inverted_product" (alias "fshi"), "dicke:<k>", "fock:<n>",
/// and the shorthands "dicke_half" / "fock_half" (k = n = N/2).
inline InitialCondition parse_initial_condition(const std::string& text, int n_emitters) {
  auto parse_count = [&](const std::string& rest) {
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(rest, &used);
    } catch (const std::exception&) {
      throw InvalidParameter("initial_condition: bad count in '" + text + "'");
    }
    if (used != rest.size()) throw InvalidParameter("initial_condition: bad count in '" + text + "'");
    return value;
  };
  if (text == "fully_inverted" || text == "fi") return FullyInverted{};
  if (text == "half_inverted_product" || text == "fshi") return HalfInvertedProduct{};
  if (text == "dicke_half") return DickeState{n_emitters / 2};
  if (text == "fock_half") return PhotonFock{n_emitters / 2};
  if (text.rfind("dicke:", 0) == 0) return DickeState{parse_count(text.substr(6))};
  if (text.rfind("fock:", 0) == 0) return PhotonFock{parse_count(text.substr(5))};
  throw InvalidParameter("initial_condition: unknown value '" + text + "'");
}

/// Photons present in the initial state.
inline int initial_photons(const InitialCondition& ic) {
  if (const auto* f = std::get_if<PhotonFock>(&ic)) return f->photons;
  return 0;
}

// ---------------------------------------------------------------------------
// Time grid

struct TimeGrid {
  double t_end = 10.0;  // in units of 1/g
  int n_samples = 201;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;

  double time(int k) const { return t_end * static_cast<double>(k) / static_cast<double>(n_samples - 1); }

  std::vector<double> times() const {
    std::vector<double> t(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k) t[static_cast<std::size_t>(k)] = time(k);
    return t;
  }
};

enum class SolverKind { Exact, Cluster, Both };

inline std::string to_string(SolverKind s) {
  switch (s) {
    case SolverKind::Exact: return "exact";
    case SolverKind::Cluster: return "cluster";
    case SolverKind::Both: return "both";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& s) {
  if (s == "exact") return SolverKind::Exact;
  if (s == "cluster") return SolverKind::Cluster;
  if (s == "both") return SolverKind::Both;
  throw InvalidParameter("solver must be one of exact|cluster|both, got '" + s + "'");
}

inline constexpr int kMaxBothSolverEmitters = 8;

struct Configuration {
  SystemParams params;
  InitialCondition initial = FullyInverted{};
  TimeGrid grid;
  SolverKind solver = SolverKind::Cluster;
  bool correlations = true;
};

struct ValidationReport {
  Configuration config;  // rates rescaled so that g = 1
  bool weak_coupling = false;
  std::vector<std::string> warnings;
};

/// Checks a configuration and returns it normalized to g = 1. Every violated
/// precondition is collected into a single InvalidParameter.
inline ValidationReport validate(const SystemParams& params, const InitialCondition& ic, const TimeGrid& grid,
                                 SolverKind solver = SolverKind::Exact, bool correlations = true,
                                 double weak_threshold = kDefaultWeakCouplingThreshold) {
  std::vector<std::string> errors;
  auto rate_ok = [&](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) errors.push_back(std::string(name) + " must be finite and >= 0");
  };
  if (params.n_emitters < 1) errors.emplace_back("n_emitters must be >= 1");
  if (!std::isfinite(params.coupling_g) || !(params.coupling_g > 0.0)) errors.emplace_back("coupling_g must be > 0");
  rate_ok(params.kappa, "kappa");
  rate_ok(params.gamma, "gamma");
  rate_ok(params.gamma_phi, "gamma_phi");
  if (!std::isfinite(params.detuning)) errors.emplace_back("detuning must be finite");

  if (const auto* d = std::get_if<DickeState>(&ic)) {
    if (d->excitations < 0 || d->excitations > params.n_emitters) {
      errors.push_back("DickeState requires 0 <= k <= N (k=" + std::to_string(d->excitations) +
                       ", N=" + std::to_string(params.n_emitters) + ")");
    }
  }
  if (const auto* f = std::get_if<PhotonFock>(&ic)) {
    if (f->photons < 0) errors.emplace_back("PhotonFock requires n_p >= 0");
  }

  if (!std::isfinite(grid.t_end) || !(grid.t_end > 0.0)) errors.emplace_back("t_end must be > 0");
  if (grid.n_samples < 2) errors.emplace_back("n_samples must be >= 2");
  if (!(grid.rel_tol > 0.0) || !(grid.abs_tol > 0.0)) errors.emplace_back("integrator tolerances must be > 0");

  const bool uses_cluster = solver != SolverKind::Exact;
  if (uses_cluster && std::holds_alternative<PhotonFock>(ic)) {
    errors.emplace_back("PhotonFock initial condition is not supported by the cluster solver");
  }
  if (uses_cluster && params.detuning != 0.0) {
    errors.emplace_back("nonzero detuning is supported by the exact solver only");
  }
  if (uses_cluster && params.kappa + params.gamma + 2.0 * params.gamma_phi <= 0.0) {
    errors.emplace_back("cluster solver needs kappa + gamma + 2 gamma_phi > 0");
  }

  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& e : errors) msg << "\n  - " << e;
    throw InvalidParameter(msg.str());
  }

  ValidationReport report;
  Configuration& c = report.config;
  c.params = params;
  const double g = params.coupling_g;
  c.params.coupling_g = 1.0;
  c.params.kappa /= g;
  c.params.gamma /= g;
  c.params.gamma_phi /= g;
  c.params.detuning /= g;
  c.initial = ic;
  c.grid = grid;
  c.solver = solver;
  c.correlations = correlations;

  report.weak_coupling = weak_coupling(c.params, weak_threshold);
  if (uses_cluster && !report.weak_coupling) {
    std::ostringstream w;
    w << "cluster solver requested outside the weak-coupling regime (g^2/(gamma+kappa) = "
      << (c.params.gamma + c.params.kappa > 0 ? 1.0 / (c.params.gamma + c.params.kappa) : INFINITY) << ")";
    report.warnings.push_back(w.str());
  }
  return report;
}

}  // namespace srw
