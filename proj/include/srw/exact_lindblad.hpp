#pragma once

// Exact open-system solver for N emitters coupled to one lossy cavity mode.
//
// Joint basis index = emitter_index * (n_max + 1) + photon_number, with the
// emitter index following the convention in dicke_algebra.hpp. The
// Hamiltonian is written in the frame rotating at the cavity frequency, so
// only the detuning omega_q - omega_c survives:
//
//   H = (Delta/2) sum_i s_i^z + g sum_i (s_i^+ a + s_i^- a^+)
//   drho/dt = -i[H, rho] + kappa D[a] + gamma sum_i D[s_i^-] + (gamma_phi/2) sum_i D[s_i^z]
//
// With this dephasing normalization the polarization decays at gamma/2 + gamma_phi.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "srw/core_model.hpp"
#include "srw/dicke_algebra.hpp"
#include "srw/errors.hpp"
#include "srw/observables.hpp"
#include "srw/ode.hpp"

namespace srw {

inline constexpr std::size_t kDefaultDimensionLimit = 4096;
inline constexpr double kCutoffPopulationLimit = 1e-6;
inline constexpr double kEigenvalueClip = 1e-8;
inline constexpr int kMaxNegativityEmitters = 8;

struct DensityMatrix {
  ComplexMatrix data;
  int n_emitters = 1;
  int n_max = 0;

  Eigen::Index photon_levels() const { return n_max + 1; }
  Eigen::Index emitter_dimension() const { return Eigen::Index{1} << n_emitters; }
  Eigen::Index dimension() const { return emitter_dimension() * photon_levels(); }
  Complex trace() const { return data.trace(); }
};

/// N + n_p + 4: total excitation never exceeds its initial value.
inline int default_photon_cutoff(int n_emitters, const InitialCondition& ic) {
  return n_emitters + initial_photons(ic) + 4;
}

/// Total excitation (emitter excitations + photons) of the initial state.
inline int initial_excitation(int n_emitters, const InitialCondition& ic) {
  if (std::holds_alternative<FullyInverted>(ic) || std::holds_alternative<HalfInvertedProduct>(ic)) return n_emitters;
  if (const auto* d = std::get_if<DickeState>(&ic)) return d->excitations;
  return initial_photons(ic);
}

/// Smallest cutoff that loses nothing: the generator never raises the total
/// excitation, so level E0+1 stays empty.
inline int lossless_photon_cutoff(int n_emitters, const InitialCondition& ic) {
  return initial_excitation(n_emitters, ic) + 1;
}

namespace detail {

inline SparseMatrix identity(Eigen::Index d) {
  SparseMatrix id(d, d);
  id.setIdentity();
  return id;
}

inline SparseMatrix photon_lowering(int n_max) {
  const Eigen::Index d = n_max + 1;
  std::vector<Eigen::Triplet<Complex>> t;
  for (Eigen::Index p = 1; p < d; ++p) t.emplace_back(p - 1, p, std::sqrt(static_cast<double>(p)));
  SparseMatrix a(d, d);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

inline SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
  SparseMatrix out = Eigen::kroneckerProduct(a, b);
  out.makeCompressed();
  return out;
}

}  // namespace detail

/// Expectation value Tr[A rho] for sparse A and dense rho.
inline Complex expectation(const SparseMatrix& op, const ComplexMatrix& rho) {
  Complex acc{0.0, 0.0};
  for (Eigen::Index c = 0; c < op.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(op, c); it; ++it) acc += it.value() * rho(it.col(), it.row());
  }
  return acc;
}

/// Lindblad generator on the joint emitter-photon space.
class Liouvillian {
 public:
  struct Jump {
    double rate = 0.0;
    SparseMatrix op;
    SparseMatrix op_dag;
    // Every jump operator used here has at most one nonzero per column:
    // op |k> = value[k] |target[k]>, target -1 for a zero column.
    std::vector<Eigen::Index> target;
    std::vector<Complex> value;
  };

  Liouvillian(const SystemParams& params, int n_max, std::size_t dimension_limit = kDefaultDimensionLimit)
      : params_(params), n_max_(n_max) {
    const int n = params.n_emitters;
    if (n < 1) throw InvalidParameter("Liouvillian: N must be >= 1");
    if (n_max < 0) throw InvalidParameter("Liouvillian: photon cutoff must be >= 0");
    if (n > 20) throw CapacityError("Liouvillian: dimension limit exceeded");
    const std::size_t dim = (std::size_t{1} << n) * static_cast<std::size_t>(n_max + 1);
    if (dim > dimension_limit) {
      throw CapacityError("Liouvillian: dimension 2^N (n_max+1) = " + std::to_string(dim) + " exceeds limit " +
                          std::to_string(dimension_limit));
    }
    require_explicit(n, "Liouvillian");
    const CollectiveOperators emitters(n);
    const SparseMatrix id_e = detail::identity(emitters.dimension());
    const SparseMatrix id_p = detail::identity(n_max + 1);

    a_ = detail::kron(id_e, detail::photon_lowering(n_max));
    a_dag_ = SparseMatrix(a_.adjoint());
    number_ = a_dag_ * a_;
    dim_ = a_.rows();

    SparseMatrix coupling(dim_, dim_), sum_z(dim_, dim_);
    for (int i = 0; i < n; ++i) {
      SparseMatrix sm = detail::kron(emitters.sigma_minus(i), id_p);
      SparseMatrix sz = detail::kron(emitters.sigma_z(i), id_p);
      SparseMatrix sp = SparseMatrix(sm.adjoint());
      SparseMatrix up = sp * a_;
      SparseMatrix down = sm * a_dag_;
      coupling += up + down;
      sum_z += sz;
      sigma_minus_.push_back(std::move(sm));
      sigma_z_.push_back(std::move(sz));
    }
    hamiltonian_ = params.coupling_g * coupling + (0.5 * params.detuning) * sum_z;

    if (params.kappa > 0.0) jumps_.push_back({params.kappa, a_, a_dag_, {}, {}});
    if (params.gamma > 0.0) {
      for (const auto& sm : sigma_minus_) jumps_.push_back({params.gamma, sm, SparseMatrix(sm.adjoint()), {}, {}});
    }
    if (params.gamma_phi > 0.0) {
      for (const auto& sz : sigma_z_) jumps_.push_back({0.5 * params.gamma_phi, sz, sz, {}, {}});
    }

    for (auto& j : jumps_) index_columns(j);

    SparseMatrix anti(dim_, dim_);
    for (const auto& j : jumps_) {
      SparseMatrix cdc = j.op_dag * j.op;
      anti += j.rate * cdc;
    }
    h_eff_ = hamiltonian_ - Complex(0.0, 0.5) * anti;
    h_eff_.prune(Complex(0.0));
    h_eff_.makeCompressed();
  }

  /// out = L(rho). `rho` must be Hermitian; the result is Hermitian by construction.
  void apply(const ComplexMatrix& rho, ComplexMatrix& out) const {
    work_.noalias() = h_eff_ * rho;
    work_ *= Complex(0.0, -1.0);
    out = work_ + work_.adjoint();
    const Eigen::Index d = dim_;
    for (const auto& j : jumps_) {
      for (Eigen::Index l = 0; l < d; ++l) {
        const Eigen::Index rl = j.target[static_cast<std::size_t>(l)];
        if (rl < 0) continue;
        const Complex cl = j.rate * std::conj(j.value[static_cast<std::size_t>(l)]);
        const Complex* src = rho.data() + l * d;
        Complex* dst = out.data() + rl * d;
        for (Eigen::Index k = 0; k < d; ++k) {
          const Eigen::Index rk = j.target[static_cast<std::size_t>(k)];
          if (rk >= 0) dst[rk] += j.value[static_cast<std::size_t>(k)] * cl * src[k];
        }
      }
    }
  }

  ComplexMatrix apply(const ComplexMatrix& rho) const {
    ComplexMatrix out(rho.rows(), rho.cols());
    apply(rho, out);
    return out;
  }

  /// Explicit superoperator acting on column-stacked vec(rho).
  SparseMatrix superoperator() const {
    const SparseMatrix id = detail::identity(dim_);
    const SparseMatrix h_conj = SparseMatrix(h_eff_.conjugate());
    SparseMatrix l = detail::kron(id, SparseMatrix(Complex(0.0, -1.0) * h_eff_)) +
                     detail::kron(SparseMatrix(Complex(0.0, 1.0) * h_conj), id);
    for (const auto& j : jumps_) {
      SparseMatrix term = detail::kron(SparseMatrix(j.op.conjugate()), j.op);
      l += j.rate * term;
    }
    l.prune(Complex(0.0));
    return l;
  }

  const SystemParams& params() const { return params_; }
  int n_emitters() const { return params_.n_emitters; }
  int n_max() const { return n_max_; }
  Eigen::Index dimension() const { return dim_; }
  const SparseMatrix& hamiltonian() const { return hamiltonian_; }
  const SparseMatrix& lowering() const { return a_; }
  const SparseMatrix& number() const { return number_; }
  const SparseMatrix& sigma_minus(int i) const { return sigma_minus_.at(static_cast<std::size_t>(i)); }
  const SparseMatrix& sigma_z(int i) const { return sigma_z_.at(static_cast<std::size_t>(i)); }
  const std::vector<Jump>& jumps() const { return jumps_; }

 private:
  void index_columns(Jump& j) const {
    j.target.assign(static_cast<std::size_t>(dim_), -1);
    j.value.assign(static_cast<std::size_t>(dim_), Complex(0.0));
    for (Eigen::Index c = 0; c < j.op.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(j.op, c); it; ++it) {
        if (it.value() == Complex(0.0)) continue;
        if (j.target[static_cast<std::size_t>(c)] >= 0) {
          throw std::logic_error("Liouvillian: jump operator with two entries in one column");
        }
        j.target[static_cast<std::size_t>(c)] = it.row();
        j.value[static_cast<std::size_t>(c)] = it.value();
      }
    }
  }

  SystemParams params_;
  int n_max_ = 0;
  Eigen::Index dim_ = 0;
  SparseMatrix a_, a_dag_, number_, hamiltonian_, h_eff_;
  std::vector<SparseMatrix> sigma_minus_, sigma_z_;
  std::vector<Jump> jumps_;
  mutable ComplexMatrix work_;
};

// ---------------------------------------------------------------------------
// States

inline DensityMatrix product_state(const ComplexMatrix& emitters, int n_emitters, int n_max, int photons) {
  if (photons < 0 || photons > n_max) throw InvalidParameter("photon number outside the cutoff");
  DensityMatrix out{ComplexMatrix::Zero(emitters.rows() * (n_max + 1), emitters.cols() * (n_max + 1)), n_emitters,
                    n_max};
  const Eigen::Index levels = n_max + 1;
  for (Eigen::Index r = 0; r < emitters.rows(); ++r) {
    for (Eigen::Index c = 0; c < emitters.cols(); ++c) {
      out.data(r * levels + photons, c * levels + photons) = emitters(r, c);
    }
  }
  return out;
}

inline DensityMatrix initial_density_matrix(const InitialCondition& ic, int n_emitters, int n_max) {
  require_explicit(n_emitters, "initial_density_matrix");
  const Eigen::Index de = Eigen::Index{1} << n_emitters;
  ComplexMatrix emitters = ComplexMatrix::Zero(de, de);
  int photons = 0;
  if (std::holds_alternative<FullyInverted>(ic)) {
    emitters(de - 1, de - 1) = 1.0;
  } else if (std::holds_alternative<HalfInvertedProduct>(ic)) {
    emitters.diagonal().setConstant(1.0 / static_cast<double>(de));
  } else if (const auto* d = std::get_if<DickeState>(&ic)) {
    const ComplexVector v = dicke_state(n_emitters, d->excitations);
    emitters = v * v.adjoint();
  } else if (const auto* f = std::get_if<PhotonFock>(&ic)) {
    emitters(0, 0) = 1.0;
    photons = f->photons;
  }
  return product_state(emitters, n_emitters, n_max, photons);
}

/// Partial trace over the cavity mode.
inline ComplexMatrix reduce_to_emitters(const DensityMatrix& rho) {
  const Eigen::Index de = rho.emitter_dimension(), levels = rho.photon_levels();
  ComplexMatrix out = ComplexMatrix::Zero(de, de);
  for (Eigen::Index c = 0; c < de; ++c) {
    for (Eigen::Index r = 0; r < de; ++r) {
      Complex acc{0.0, 0.0};
      for (Eigen::Index p = 0; p < levels; ++p) acc += rho.data(r * levels + p, c * levels + p);
      out(r, c) = acc;
    }
  }
  return out;
}

inline Eigen::VectorXd photon_distribution(const DensityMatrix& rho) {
  const Eigen::Index de = rho.emitter_dimension(), levels = rho.photon_levels();
  Eigen::VectorXd p = Eigen::VectorXd::Zero(levels);
  for (Eigen::Index e = 0; e < de; ++e) {
    for (Eigen::Index k = 0; k < levels; ++k) p(k) += rho.data(e * levels + k, e * levels + k).real();
  }
  return p;
}

inline double purity(const ComplexMatrix& rho) { return rho.cwiseAbs2().sum(); }

inline double min_eigenvalue(const ComplexMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

/// Smallest eigenvalue of a joint state. States stay block diagonal in the total
/// excitation number (emitter excitations + photons) for every supported start,
/// so blocks are diagonalized separately; any off-block weight falls back to the
/// full matrix.
inline double min_eigenvalue(const DensityMatrix& rho) {
  constexpr double kOffBlockTolerance = 1e-12;
  const Eigen::Index levels = rho.photon_levels(), dim = rho.data.rows();
  std::vector<std::vector<Eigen::Index>> blocks(static_cast<std::size_t>(rho.n_emitters + rho.n_max + 1));
  std::vector<int> block_of(static_cast<std::size_t>(dim));
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    const int exc = detail::popcount(static_cast<std::uint64_t>(idx / levels)) + static_cast<int>(idx % levels);
    block_of[static_cast<std::size_t>(idx)] = exc;
    blocks[static_cast<std::size_t>(exc)].push_back(idx);
  }
  for (Eigen::Index c = 0; c < dim; ++c) {
    for (Eigen::Index r = 0; r < dim; ++r) {
      if (block_of[static_cast<std::size_t>(r)] != block_of[static_cast<std::size_t>(c)] &&
          std::abs(rho.data(r, c)) > kOffBlockTolerance) {
        return min_eigenvalue(rho.data);
      }
    }
  }
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) {
    if (b.empty()) continue;
    ComplexMatrix sub(static_cast<Eigen::Index>(b.size()), static_cast<Eigen::Index>(b.size()));
    for (std::size_t c = 0; c < b.size(); ++c) {
      for (std::size_t r = 0; r < b.size(); ++r) sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rho.data(b[r], b[c]);
    }
    lo = std::min(lo, min_eigenvalue(sub));
  }
  return lo;
}

/// <sigma_i^+ sigma_l^-> on an emitter density matrix.
inline Complex pair_correlation(const ComplexMatrix& rho_q, int n_emitters, int i, int l) {
  const std::uint64_t bi = emitter_bit(n_emitters, i), bl = emitter_bit(n_emitters, l);
  if (i == l) throw InvalidParameter("pair_correlation needs distinct emitters");
  // <s_i^+ s_l^-> = sum_{s: bit_i=0, bit_l=1} rho(s, s') with s' = s with i raised and l lowered.
  Complex acc{0.0, 0.0};
  for (Eigen::Index s = 0; s < rho_q.rows(); ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    if (!(us & bi) && (us & bl)) {
      const auto target = static_cast<Eigen::Index>((us | bi) ^ bl);
      acc += rho_q(s, target);
    }
  }
  return acc;
}

/// <sigma_i^z sigma_l^z> on an emitter density matrix.
inline double pair_zz(const ComplexMatrix& rho_q, int n_emitters, int i, int l) {
  const std::uint64_t bi = emitter_bit(n_emitters, i), bl = emitter_bit(n_emitters, l);
  double acc = 0.0;
  for (Eigen::Index s = 0; s < rho_q.rows(); ++s) {
    const auto us = static_cast<std::uint64_t>(s);
    const double zi = (us & bi) ? 1.0 : -1.0, zl = (us & bl) ? 1.0 : -1.0;
    acc += zi * zl * rho_q(s, s).real();
  }
  return acc;
}

/// Partial transpose of the emitters listed in `subset`.
inline ComplexMatrix partial_transpose(const ComplexMatrix& rho_q, int n_emitters, const std::vector<int>& subset) {
  std::uint64_t mask = 0;
  for (int i : subset) {
    if (i < 0 || i >= n_emitters) throw InvalidParameter("partial_transpose: emitter index out of range");
    mask |= emitter_bit(n_emitters, i);
  }
  ComplexMatrix out(rho_q.rows(), rho_q.cols());
  for (Eigen::Index c = 0; c < rho_q.cols(); ++c) {
    for (Eigen::Index r = 0; r < rho_q.rows(); ++r) {
      const auto ur = static_cast<std::uint64_t>(r), uc = static_cast<std::uint64_t>(c);
      const auto r2 = static_cast<Eigen::Index>((ur & ~mask) | (uc & mask));
      const auto c2 = static_cast<Eigen::Index>((uc & ~mask) | (ur & mask));
      out(r2, c2) = rho_q(r, c);
    }
  }
  return out;
}

/// Sum of |negative eigenvalues| of the partial transpose over `subset`.
inline double negativity(const ComplexMatrix& rho_q, int n_emitters, const std::vector<int>& subset) {
  if (n_emitters > kMaxNegativityEmitters) {
    throw CapacityError("negativity: limited to N <= " + std::to_string(kMaxNegativityEmitters));
  }
  if (rho_q.rows() != (Eigen::Index{1} << n_emitters)) throw InvalidParameter("negativity: dimension mismatch");
  std::vector<int> unique = subset;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  if (unique.empty() || static_cast<int>(unique.size()) >= n_emitters) {
    throw InvalidParameter("negativity: bipartition must be a non-empty proper subset");
  }
  if (min_eigenvalue(rho_q) < -kEigenvalueClip) throw NumericalError("negativity: input state is not positive");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(partial_transpose(rho_q, n_emitters, unique),
                                                  Eigen::EigenvaluesOnly);
  double sum = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (es.eigenvalues()(k) < 0.0) sum -= es.eigenvalues()(k);
  }
  return sum;
}

/// Evaluates the per-sample observables on joint states of fixed shape.
class ObservableEvaluator {
 public:
  ObservableEvaluator(const SystemParams& params, int n_max)
      : n_(params.n_emitters), n_max_(n_max), g_(params.coupling_g), ops_(params.n_emitters) {
    jpjm_ = ops_.j_plus() * ops_.j_minus();
    two_jz_ = 2.0 * ops_.j_z();
    two_jz_sq_ = two_jz_ * two_jz_;
    dicke_ = dicke_state(n_, n_ / 2);
    levels_ = n_max + 1;
    // i g sum_i (s_i^+ a - s_i^- a^+) = 2 g sum_i Im <a^+ s_i^->, built from matrix elements directly.
    source_ = SparseMatrix(ops_.dimension() * levels_, ops_.dimension() * levels_);
    std::vector<Eigen::Triplet<Complex>> t;
    for (Eigen::Index c = 0; c < ops_.j_minus().outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(ops_.j_minus(), c); it; ++it) {
        // J^- |e> -> |e'> ; a^+ |p> -> sqrt(p+1) |p+1>
        for (Eigen::Index p = 0; p + 1 < levels_; ++p) {
          const double amp = std::sqrt(static_cast<double>(p + 1));
          const Eigen::Index col = it.col() * levels_ + p;
          const Eigen::Index row = it.row() * levels_ + p + 1;
          t.emplace_back(row, col, Complex(0.0, -g_ * amp) * it.value());  // -i g J^- a^+
          t.emplace_back(col, row, Complex(0.0, g_ * amp) * std::conj(it.value()));  // +i g J^+ a
        }
      }
    }
    source_.setFromTriplets(t.begin(), t.end());
  }

  ObservableRecord operator()(double time, const DensityMatrix& rho) const {
    const ComplexMatrix rho_q = reduce_to_emitters(rho);
    ObservableRecord rec = emitter_part(time, rho_q);
    const Eigen::VectorXd pn = photon_distribution(rho);
    double n = 0.0;
    for (Eigen::Index k = 0; k < pn.size(); ++k) n += static_cast<double>(k) * pn(k);
    rec.n = n;
    rec.photon_source = expectation(source_, rho.data).real();
    return rec;
  }

  /// Emitter-only observables; rec.n is left at zero.
  ObservableRecord emitter_part(double time, const ComplexMatrix& rho_q) const {
    ObservableRecord rec;
    rec.time = time;
    const double tr = rho_q.trace().real();
    const double mean_2jz = expectation(two_jz_, rho_q).real() / tr;
    rec.sz = mean_2jz / n_;
    if (n_ >= 2) {
      const double pairs = static_cast<double>(n_) * (n_ - 1);
      const double jpjm = expectation(jpjm_, rho_q).real() / tr;
      rec.c0 = (jpjm - 0.5 * n_ * (1.0 + rec.sz)) / pairs;
      rec.czz = (expectation(two_jz_sq_, rho_q).real() / tr - n_) / pairs;
    }
    rec.purity = purity(rho_q);
    rec.dicke_overlap = (dicke_.adjoint() * rho_q * dicke_).value().real();
    return rec;
  }

  double j_squared(const ComplexMatrix& rho_q) const { return expectation(ops_.j_squared(), rho_q).real(); }
  const CollectiveOperators& collective() const { return ops_; }
  const SparseMatrix& source_operator() const { return source_; }

 private:
  int n_;
  int n_max_;
  double g_;
  Eigen::Index levels_ = 1;
  CollectiveOperators ops_;
  SparseMatrix jpjm_, two_jz_, two_jz_sq_, source_;
  ComplexVector dicke_;
};

// ---------------------------------------------------------------------------
// Integration

/// Integrates drho/dt = L(rho) and calls `observe(sample_index, t, rho)` at every grid time.
template <class Observer>
OdeStats integrate(const Liouvillian& l, DensityMatrix rho0, const TimeGrid& grid, Observer&& observe) {
  if (rho0.data.rows() != l.dimension() || rho0.data.cols() != l.dimension()) {
    throw InvalidParameter("integrate: generator and state dimensions differ");
  }
  const std::vector<double> times = grid.times();
  DormandPrince<ComplexMatrix> stepper(OdeOptions{grid.rel_tol, grid.abs_tol});
  DensityMatrix view = rho0;
  auto rhs = [&](double, const ComplexMatrix& y, ComplexMatrix& dy) { l.apply(y, dy); };
  return stepper.integrate(rhs, rho0.data, 0.0, times, [&](std::size_t k, double t, const ComplexMatrix& y) {
    view.data = y;
    observe(k, t, static_cast<const DensityMatrix&>(view));
  });
}

inline std::vector<DensityMatrix> integrate(const Liouvillian& l, const DensityMatrix& rho0, const TimeGrid& grid) {
  std::vector<DensityMatrix> out;
  out.reserve(static_cast<std::size_t>(grid.n_samples));
  integrate(l, rho0, grid, [&](std::size_t, double, const DensityMatrix& rho) { out.push_back(rho); });
  return out;
}

struct ExactOptions {
  int n_max = -1;  // -1: default_photon_cutoff, auto-extended if inadequate
  std::size_t dimension_limit = kDefaultDimensionLimit;
  bool keep_emitter_states = false;
  bool check_positivity = true;  // full-state eigenvalue check at every sample
};

struct ExactTrajectory {
  std::vector<ObservableRecord> records;
  std::vector<ComplexMatrix> emitter_states;  // filled when keep_emitter_states
  int n_max = 0;
  bool cutoff_adequate = true;
  double max_top_level_population = 0.0;
  double max_trace_drift = 0.0;
  double min_eigenvalue = 0.0;
  bool positivity_ok = true;
  OdeStats stats;

  bool quality_ok() const { return cutoff_adequate && positivity_ok && max_trace_drift <= 1e-8; }
};

/// Runs the exact solver on a validated configuration.
inline ExactTrajectory solve_exact(const SystemParams& params, const InitialCondition& ic, const TimeGrid& grid,
                                   const ExactOptions& options = {}) {
  const bool auto_cutoff = options.n_max < 0;
  int n_max = auto_cutoff ? default_photon_cutoff(params.n_emitters, ic) : options.n_max;
  if (initial_photons(ic) > n_max) throw InvalidParameter("solve_exact: photon cutoff below initial photon number");

  for (;;) {
    const Liouvillian l(params, n_max, options.dimension_limit);
    const ObservableEvaluator eval(params, n_max);
    ExactTrajectory out;
    out.n_max = n_max;
    out.min_eigenvalue = 1.0;
    out.records.reserve(static_cast<std::size_t>(grid.n_samples));
    out.stats = integrate(l, initial_density_matrix(ic, params.n_emitters, n_max), grid,
                          [&](std::size_t, double t, const DensityMatrix& rho) {
                            out.records.push_back(eval(t, rho));
                            const Eigen::VectorXd pn = photon_distribution(rho);
                            out.max_top_level_population = std::max(out.max_top_level_population, pn(n_max));
                            out.max_trace_drift = std::max(out.max_trace_drift, std::abs(rho.trace() - 1.0));
                            double lo = 0.0;
                            if (options.check_positivity) {
                              lo = min_eigenvalue(rho);
                            } else {
                              lo = std::min(min_eigenvalue(reduce_to_emitters(rho)), pn.minCoeff());
                            }
                            out.min_eigenvalue = std::min(out.min_eigenvalue, lo);
                            if (options.keep_emitter_states) out.emitter_states.push_back(reduce_to_emitters(rho));
                          });
    out.positivity_ok = out.min_eigenvalue >= -kEigenvalueClip;
    out.cutoff_adequate = out.max_top_level_population < kCutoffPopulationLimit;
    if (out.cutoff_adequate || !auto_cutoff) return out;
    const int next = n_max + std::max(4, n_max / 2);
    const std::size_t next_dim = (std::size_t{1} << params.n_emitters) * static_cast<std::size_t>(next + 1);
    if (next_dim > options.dimension_limit) return out;
    n_max = next;
  }
}

}  // namespace srw
