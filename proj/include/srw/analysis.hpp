#pragma once

// Entanglement and state-structure analytics on either solver's output.

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srw/core_model.hpp"
#include "srw/dicke_algebra.hpp"
#include "srw/errors.hpp"
#include "srw/exact_lindblad.hpp"
#include "srw/extrema.hpp"
#include "srw/parallel.hpp"

namespace srw {

/// Structure-factor witness for permutation-symmetric states, <W> = 1 - 4 Re[C0] + Czz.
/// Negative values certify multipartite entanglement.
inline double witness(std::complex<double> c0, double czz) { return 1.0 - 4.0 * c0.real() + czz; }

/// Lowest value <W> can take for N emitters (reached by |D_{N,N/2}>).
inline double witness_lower_bound(int n_emitters) {
  if (n_emitters < 2) throw InvalidParameter("witness_lower_bound requires N >= 2");
  return -2.0 / (n_emitters - 1.0);
}

enum class Radiance { Superradiant, Subradiant, Neutral };

inline constexpr double kNeutralThreshold = 1e-12;

inline Radiance classify(const JMLabel& label) {
  const double c = c0_of_jm(label);
  if (c > kNeutralThreshold) return Radiance::Superradiant;
  if (c < -kNeutralThreshold) return Radiance::Subradiant;
  return Radiance::Neutral;
}

inline std::string to_string(Radiance r) {
  switch (r) {
    case Radiance::Superradiant: return "superradiant";
    case Radiance::Subradiant: return "subradiant";
    case Radiance::Neutral: return "neutral";
  }
  return "?";
}

struct JMComponent {
  JMLabel label;
  double weight = 0.0;  // p_jm
  std::uint64_t multiplicity = 1;
  Radiance classification = Radiance::Neutral;
};

/// Projects emitter states onto the rho_jm components, p_jm = d_jm Tr[rho_q rho_jm].
/// Build once per N and reuse; construction diagonalizes J^2.
class DickeDecomposer {
 public:
  static constexpr double kSymmetryTolerance = 1e-6;

  explicit DickeDecomposer(int n_emitters) : sectors_(n_emitters), labels_(all_labels(n_emitters)) {
    for (int i = 0; i + 1 < n_emitters; ++i) swaps_.push_back(transposition(n_emitters, i, i + 1));
  }

  int n_emitters() const { return sectors_.n_emitters(); }
  const SectorBasis& sectors() const { return sectors_; }

  std::vector<JMComponent> decompose(const ComplexMatrix& rho_q) const {
    const Eigen::Index dim = sectors_.operators().dimension();
    if (rho_q.rows() != dim || rho_q.cols() != dim) throw InvalidParameter("decompose: dimension mismatch");
    std::vector<JMComponent> out;
    out.reserve(labels_.size());
    const bool pairs = n_emitters() >= 2;
    for (const auto& label : labels_) {
      JMComponent c;
      c.label = label;
      c.weight = sectors_.weight(rho_q, label);
      c.multiplicity = multiplicity(label);
      c.classification = pairs ? classify(label) : Radiance::Neutral;
      out.push_back(c);
    }
    return out;
  }

  /// Largest deviation ||P rho P^+ - rho|| over adjacent transpositions.
  double asymmetry(const ComplexMatrix& rho_q) const {
    double worst = 0.0;
    for (const auto& p : swaps_) {
      const ComplexMatrix moved = p * rho_q * p.adjoint();
      worst = std::max(worst, (moved - rho_q).cwiseAbs().maxCoeff());
    }
    return worst;
  }

  bool is_permutation_symmetric(const ComplexMatrix& rho_q, double tol = kSymmetryTolerance) const {
    return asymmetry(rho_q) <= tol;
  }

 private:
  SectorBasis sectors_;
  std::vector<JMLabel> labels_;
  std::vector<SparseMatrix> swaps_;
};

inline std::vector<JMComponent> decompose(const ComplexMatrix& rho_q, int n_emitters) {
  return DickeDecomposer(n_emitters).decompose(rho_q);
}

inline double total_weight(std::span<const JMComponent> comps) {
  double s = 0.0;
  for (const auto& c : comps) s += c.weight;
  return s;
}

/// sum p_jm C0(j,m); equals C0 of the decomposed state.
inline double reconstructed_c0(std::span<const JMComponent> comps) {
  double s = 0.0;
  for (const auto& c : comps) s += c.weight * c0_of_jm(c.label);
  return s;
}

inline double reconstructed_czz(std::span<const JMComponent> comps) {
  double s = 0.0;
  for (const auto& c : comps) s += c.weight * czz_of_jm(c.label);
  return s;
}

/// sum p_jm^2 / d_jm, a lower bound on Tr[rho_q^2] attained by block-uniform states.
inline double purity_lower_bound(std::span<const JMComponent> comps) {
  double s = 0.0;
  for (const auto& c : comps) s += c.weight * c.weight / static_cast<double>(c.multiplicity);
  return s;
}

struct RadianceSplit {
  double superradiant = 0.0;  // >= 0
  double subradiant = 0.0;    // <= 0
  double net() const { return superradiant + subradiant; }
};

inline RadianceSplit radiance_split(std::span<const JMComponent> comps) {
  RadianceSplit s;
  for (const auto& c : comps) {
    if (c.classification == Radiance::Superradiant) {
      s.superradiant += c.weight * c0_of_jm(c.label);
    } else if (c.classification == Radiance::Subradiant) {
      s.subradiant += c.weight * c0_of_jm(c.label);
    }
  }
  return s;
}

struct WitnessTrace {
  std::vector<double> times;
  std::vector<double> values;
  bool detected = false;  // any <W> < 0
  double min_value = 0.0;
  double min_time = 0.0;
};

inline WitnessTrace make_witness_trace(std::vector<double> times, std::vector<double> values) {
  if (times.size() != values.size() || times.empty()) throw InvalidParameter("make_witness_trace: bad input");
  WitnessTrace w;
  w.times = std::move(times);
  w.values = std::move(values);
  const Extremum lo = refined_minimum(w.times, w.values);
  w.min_value = lo.value;
  w.min_time = lo.time;
  for (double v : w.values) w.detected = w.detected || v < 0.0;
  return w;
}

inline WitnessTrace witness_trace(std::span<const ObservableRecord> records) {
  std::vector<double> t, v;
  for (const auto& r : records) {
    t.push_back(r.time);
    v.push_back(witness(r.c0, r.czz));
  }
  return make_witness_trace(std::move(t), std::move(v));
}

// ---------------------------------------------------------------------------
// Decoherence threshold for Fock-state Dicke preparation

/// min_t <W>(t) of an exact run started from PhotonFock(N/2) with the given gamma.
inline double min_witness_for_gamma(const SystemParams& base, double gamma, const TimeGrid& grid) {
  SystemParams p = base;
  p.gamma = gamma;
  ExactOptions opt;
  opt.check_positivity = false;
  opt.n_max = lossless_photon_cutoff(p.n_emitters, PhotonFock{p.n_emitters / 2});
  const ExactTrajectory traj = solve_exact(p, PhotonFock{p.n_emitters / 2}, grid, opt);
  return witness_trace(traj.records).min_value;
}

struct ThresholdResult {
  int n_emitters = 0;
  std::vector<double> gamma_grid;
  std::vector<double> min_witness;
  bool monotone = true;  // min<W> non-decreasing in gamma on the grid
  double critical_gamma = 0.0;
};

inline constexpr double kThresholdResolution = 0.01;

/// Critical gamma/g where min_t<W> crosses zero, bracketed on `gamma_grid` and
/// refined by bisection to `resolution`.
inline ThresholdResult threshold_sweep(const SystemParams& base, int n_emitters, std::span<const double> gamma_grid,
                                       const TimeGrid& grid, int jobs = 1,
                                       double resolution = kThresholdResolution) {
  if (gamma_grid.size() < 2) throw InvalidParameter("threshold_sweep: need at least two gamma values");
  for (std::size_t i = 1; i < gamma_grid.size(); ++i) {
    if (!(gamma_grid[i] > gamma_grid[i - 1])) throw InvalidParameter("threshold_sweep: gamma grid must increase");
  }
  SystemParams p = base;
  p.n_emitters = n_emitters;

  ThresholdResult res;
  res.n_emitters = n_emitters;
  res.gamma_grid.assign(gamma_grid.begin(), gamma_grid.end());
  res.min_witness.assign(gamma_grid.size(), 0.0);
  parallel_for(gamma_grid.size(), jobs,
               [&](std::size_t i) { res.min_witness[i] = min_witness_for_gamma(p, gamma_grid[i], grid); });

  constexpr double kMonotoneSlack = 1e-9;
  for (std::size_t i = 1; i < res.min_witness.size(); ++i) {
    if (res.min_witness[i] < res.min_witness[i - 1] - kMonotoneSlack) res.monotone = false;
  }

  std::size_t bracket = gamma_grid.size();
  for (std::size_t i = 1; i < gamma_grid.size(); ++i) {
    if (res.min_witness[i - 1] < 0.0 && res.min_witness[i] >= 0.0) {
      bracket = i;
      break;
    }
  }
  if (bracket == gamma_grid.size()) throw InvalidParameter("threshold_sweep: no sign change of min<W> in range");

  double lo = gamma_grid[bracket - 1], hi = gamma_grid[bracket];
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    if (min_witness_for_gamma(p, mid, grid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  res.critical_gamma = 0.5 * (lo + hi);
  return res;
}

}  // namespace srw
