#pragma once

// Collective angular-momentum structure of N pseudo-spins: (j, m) sectors,
// multiplicities, Dicke states, sector projectors and the closed-form pair
// correlations of each sector.
//
// Basis convention for explicit 2^N representations: emitter 0 is the most
// significant bit of the basis index, and a set bit means "excited".

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "srw/errors.hpp"

namespace srw {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

inline constexpr int kMaxExplicitEmitters = 12;

/// (j, m) label stored as doubled integers so half-integers stay exact.
struct JMLabel {
  int n = 0;
  int two_j = 0;
  int two_m = 0;

  double j() const { return 0.5 * two_j; }
  double m() const { return 0.5 * two_m; }

  static bool is_valid(int n, int two_j, int two_m) {
    if (n < 1 || two_j < 0 || two_j > n) return false;
    if ((n - two_j) % 2 != 0) return false;  // j in {N/2, N/2-1, ...}
    if (two_m < -two_j || two_m > two_j) return false;
    return (two_j - two_m) % 2 == 0;
  }

  static JMLabel make(int n, int two_j, int two_m) {
    if (!is_valid(n, two_j, two_m)) {
      throw InvalidParameter("invalid (j,m) label: N=" + std::to_string(n) + " 2j=" + std::to_string(two_j) +
                             " 2m=" + std::to_string(two_m));
    }
    return {n, two_j, two_m};
  }

  /// Number of excitations of every basis state inside this sector.
  int excitations() const { return (two_m + n) / 2; }

  friend bool operator==(const JMLabel&, const JMLabel&) = default;
  friend auto operator<=>(const JMLabel&, const JMLabel&) = default;
};

inline std::string to_string(const JMLabel& l) {
  auto half = [](int twice) {
    if (twice % 2 == 0) return std::to_string(twice / 2);
    return std::to_string(twice) + "/2";
  };
  return "(" + half(l.two_j) + "," + half(l.two_m) + ")";
}

/// Allowed 2j values, from N down to 0 (even N) or 1 (odd N).
inline std::vector<int> allowed_two_j(int n) {
  std::vector<int> out;
  for (int tj = n; tj >= 0; tj -= 2) out.push_back(tj);
  return out;
}

/// All (j, m) labels, j descending then m descending.
inline std::vector<JMLabel> all_labels(int n) {
  std::vector<JMLabel> out;
  for (int tj : allowed_two_j(n)) {
    for (int tm = tj; tm >= -tj; tm -= 2) out.push_back({n, tj, tm});
  }
  return out;
}

namespace detail {

inline unsigned __int128 binomial128(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
  }
  return r;
}

inline int popcount(std::uint64_t x) { return __builtin_popcountll(x); }

}  // namespace detail

/// Degeneracy d_j = (2j+1)/(N+1) * binom(N+1, N/2 - j); independent of m.
inline std::uint64_t multiplicity(int two_j, int n) {
  if (!JMLabel::is_valid(n, two_j, two_j)) {
    throw InvalidParameter("multiplicity: invalid (2j=" + std::to_string(two_j) + ", N=" + std::to_string(n) + ")");
  }
  if (n > 120) throw CapacityError("multiplicity: N too large for 64-bit arithmetic");
  const int k = (n - two_j) / 2;
  const unsigned __int128 num = static_cast<unsigned __int128>(two_j + 1) * detail::binomial128(n + 1, k);
  const unsigned __int128 d = num / static_cast<unsigned __int128>(n + 1);
  if (d > static_cast<unsigned __int128>(UINT64_MAX)) throw CapacityError("multiplicity overflows 64 bits");
  return static_cast<std::uint64_t>(d);
}

inline std::uint64_t multiplicity(const JMLabel& l) { return multiplicity(l.two_j, l.n); }

/// C0(j,m) = <s_i^+ s_j^-> of rho_jm = (j(j+1) - m^2 - N/2) / (N(N-1)).
inline double c0_of_jm(const JMLabel& l) {
  if (l.n < 2) throw InvalidParameter("c0_of_jm requires N >= 2");
  const double num = static_cast<double>(l.two_j) * (l.two_j + 2) - static_cast<double>(l.two_m) * l.two_m -
                     2.0 * l.n;
  return num / (4.0 * l.n * (l.n - 1.0));
}

/// Czz(j,m) = <s_i^z s_j^z> of rho_jm = (4 m^2 - N) / (N(N-1)).
inline double czz_of_jm(const JMLabel& l) {
  if (l.n < 2) throw InvalidParameter("czz_of_jm requires N >= 2");
  return (static_cast<double>(l.two_m) * l.two_m - l.n) / (l.n * (l.n - 1.0));
}

struct DickeRates {
  double gamma_se = 0.0;
  double gamma_ce = 0.0;
};

/// Emission rates of |D_{N,k}>: Gamma_SE = I0 k, Gamma_CE = I0 (N-k) k.
inline DickeRates dicke_emission_rates(int n, int k, double single_rate) {
  if (n < 1 || k < 0 || k > n) throw InvalidParameter("dicke_emission_rates requires 0 <= k <= N");
  return {single_rate * k, single_rate * static_cast<double>(n - k) * k};
}

inline void require_explicit(int n, const char* what) {
  if (n < 1) throw InvalidParameter(std::string(what) + ": N must be >= 1");
  if (n > kMaxExplicitEmitters) {
    throw CapacityError(std::string(what) + ": explicit 2^N representation limited to N <= " +
                        std::to_string(kMaxExplicitEmitters));
  }
}

/// Bit of emitter `i` in a basis index.
inline std::uint64_t emitter_bit(int n, int i) { return std::uint64_t{1} << (n - 1 - i); }

/// Normalized |D_{N,k}>: equal-amplitude superposition of all basis states with k excitations.
inline ComplexVector dicke_state(int n, int k) {
  require_explicit(n, "dicke_state");
  if (k < 0 || k > n) throw InvalidParameter("dicke_state requires 0 <= k <= N");
  const std::uint64_t dim = std::uint64_t{1} << n;
  ComplexVector v = ComplexVector::Zero(static_cast<Eigen::Index>(dim));
  const double amp = 1.0 / std::sqrt(static_cast<double>(detail::binomial128(n, k)));
  for (std::uint64_t s = 0; s < dim; ++s) {
    if (detail::popcount(s) == k) v(static_cast<Eigen::Index>(s)) = amp;
  }
  return v;
}

/// Sparse single-emitter and collective spin operators on the 2^N emitter space.
class CollectiveOperators {
 public:
  explicit CollectiveOperators(int n) : n_(n) {
    require_explicit(n, "CollectiveOperators");
    dim_ = Eigen::Index{1} << n;
    sigma_minus_.reserve(static_cast<std::size_t>(n));
    sigma_z_.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const std::uint64_t bit = emitter_bit(n, i);
      std::vector<Eigen::Triplet<Complex>> lower, z;
      lower.reserve(static_cast<std::size_t>(dim_ / 2));
      z.reserve(static_cast<std::size_t>(dim_));
      for (Eigen::Index s = 0; s < dim_; ++s) {
        const auto us = static_cast<std::uint64_t>(s);
        if (us & bit) {
          lower.emplace_back(static_cast<Eigen::Index>(us ^ bit), s, 1.0);
          z.emplace_back(s, s, 1.0);
        } else {
          z.emplace_back(s, s, -1.0);
        }
      }
      SparseMatrix sm(dim_, dim_), sz(dim_, dim_);
      sm.setFromTriplets(lower.begin(), lower.end());
      sz.setFromTriplets(z.begin(), z.end());
      sigma_minus_.push_back(std::move(sm));
      sigma_z_.push_back(std::move(sz));
    }
    j_minus_ = SparseMatrix(dim_, dim_);
    SparseMatrix sum_z(dim_, dim_);
    for (int i = 0; i < n; ++i) {
      j_minus_ += sigma_minus_[static_cast<std::size_t>(i)];
      sum_z += sigma_z_[static_cast<std::size_t>(i)];
    }
    j_z_ = 0.5 * sum_z;
    j_plus_ = SparseMatrix(j_minus_.adjoint());
    SparseMatrix jz2 = j_z_ * j_z_;
    SparseMatrix pm = j_plus_ * j_minus_;
    SparseMatrix mp = j_minus_ * j_plus_;
    j_squared_ = jz2 + 0.5 * (pm + mp);
    j_squared_.prune(Complex(0.0));
  }

  int n_emitters() const { return n_; }
  Eigen::Index dimension() const { return dim_; }

  const SparseMatrix& sigma_minus(int i) const { return sigma_minus_.at(static_cast<std::size_t>(i)); }
  SparseMatrix sigma_plus(int i) const { return SparseMatrix(sigma_minus(i).adjoint()); }
  const SparseMatrix& sigma_z(int i) const { return sigma_z_.at(static_cast<std::size_t>(i)); }
  const SparseMatrix& j_z() const { return j_z_; }
  const SparseMatrix& j_plus() const { return j_plus_; }
  const SparseMatrix& j_minus() const { return j_minus_; }
  const SparseMatrix& j_squared() const { return j_squared_; }

 private:
  int n_ = 0;
  Eigen::Index dim_ = 0;
  std::vector<SparseMatrix> sigma_minus_;
  std::vector<SparseMatrix> sigma_z_;
  SparseMatrix j_z_, j_plus_, j_minus_, j_squared_;
};

/// Permutation operator exchanging emitters a and b on the 2^N space.
inline SparseMatrix transposition(int n, int a, int b) {
  require_explicit(n, "transposition");
  const Eigen::Index dim = Eigen::Index{1} << n;
  const std::uint64_t ba = emitter_bit(n, a), bb = emitter_bit(n, b);
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(static_cast<std::size_t>(dim));
  for (Eigen::Index s = 0; s < dim; ++s) {
    auto us = static_cast<std::uint64_t>(s);
    const bool xa = us & ba, xb = us & bb;
    if (xa != xb) us ^= (ba | bb);
    t.emplace_back(static_cast<Eigen::Index>(us), s, 1.0);
  }
  SparseMatrix p(dim, dim);
  p.setFromTriplets(t.begin(), t.end());
  return p;
}

/// Orthonormal bases of every (j, m) eigenspace, obtained by diagonalizing J^2
/// inside each J_z eigenspace (J_z is diagonal in the computational basis).
class SectorBasis {
 public:
  static constexpr double kEigenTolerance = 1e-9;

  explicit SectorBasis(int n) : ops_(n) {
    const Eigen::Index dim = ops_.dimension();
    std::vector<std::vector<Eigen::Index>> by_excitation(static_cast<std::size_t>(n + 1));
    for (Eigen::Index s = 0; s < dim; ++s) {
      by_excitation[static_cast<std::size_t>(detail::popcount(static_cast<std::uint64_t>(s)))].push_back(s);
    }
    std::vector<Eigen::Index> local(static_cast<std::size_t>(dim));
    std::vector<ComplexMatrix> blocks(static_cast<std::size_t>(n + 1));
    for (int k = 0; k <= n; ++k) {
      const auto& idx = by_excitation[static_cast<std::size_t>(k)];
      for (std::size_t r = 0; r < idx.size(); ++r) local[static_cast<std::size_t>(idx[r])] = static_cast<Eigen::Index>(r);
      const auto bd = static_cast<Eigen::Index>(idx.size());
      blocks[static_cast<std::size_t>(k)] = ComplexMatrix::Zero(bd, bd);
    }
    const SparseMatrix& j2 = ops_.j_squared();
    for (Eigen::Index c = 0; c < j2.outerSize(); ++c) {
      for (SparseMatrix::InnerIterator it(j2, c); it; ++it) {
        const int k = detail::popcount(static_cast<std::uint64_t>(it.row()));
        // J^2 commutes with J_z, so it never connects different excitation numbers.
        if (k != detail::popcount(static_cast<std::uint64_t>(it.col()))) continue;
        blocks[static_cast<std::size_t>(k)](local[static_cast<std::size_t>(it.row())],
                                            local[static_cast<std::size_t>(it.col())]) = it.value();
      }
    }
    for (int k = 0; k <= n; ++k) {
      const auto& idx = by_excitation[static_cast<std::size_t>(k)];
      const auto block_dim = static_cast<Eigen::Index>(idx.size());
      const ComplexMatrix& block = blocks[static_cast<std::size_t>(k)];
      Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(block);
      const int two_m = 2 * k - n;
      std::map<int, std::vector<Eigen::Index>> columns;
      for (Eigen::Index e = 0; e < block_dim; ++e) {
        const double lambda = es.eigenvalues()(e);
        const int two_j = static_cast<int>(std::lround(std::sqrt(4.0 * lambda + 1.0) - 1.0));
        const double expected = 0.25 * two_j * (two_j + 2);
        if (std::abs(lambda - expected) > kEigenTolerance || !JMLabel::is_valid(n, two_j, two_m)) {
          throw NumericalError("SectorBasis: J^2 eigenvalue " + std::to_string(lambda) + " is not j(j+1)");
        }
        columns[two_j].push_back(e);
      }
      for (const auto& [two_j, cols] : columns) {
        const JMLabel label{n, two_j, two_m};
        if (cols.size() != multiplicity(label)) {
          throw NumericalError("SectorBasis: eigenspace " + to_string(label) + " has dimension " +
                               std::to_string(cols.size()) + ", expected " + std::to_string(multiplicity(label)));
        }
        ComplexMatrix basis = ComplexMatrix::Zero(dim, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
          for (Eigen::Index r = 0; r < block_dim; ++r) {
            basis(idx[r], static_cast<Eigen::Index>(c)) = es.eigenvectors()(r, cols[c]);
          }
        }
        bases_.emplace(label, std::move(basis));
      }
    }
  }

  int n_emitters() const { return ops_.n_emitters(); }
  const CollectiveOperators& operators() const { return ops_; }

  /// Columns form an orthonormal basis of the (j,m) eigenspace.
  const ComplexMatrix& basis(const JMLabel& label) const {
    const auto it = bases_.find(label);
    if (it == bases_.end()) throw InvalidParameter("SectorBasis: unknown label " + to_string(label));
    return it->second;
  }

  ComplexMatrix projector(const JMLabel& label) const {
    const ComplexMatrix& v = basis(label);
    return v * v.adjoint();
  }

  /// rho_jm = P_jm / d_jm.
  ComplexMatrix rho(const JMLabel& label) const {
    return projector(label) / static_cast<double>(basis(label).cols());
  }

  /// Tr[rho P_jm].
  double weight(const ComplexMatrix& rho, const JMLabel& label) const {
    const ComplexMatrix& v = basis(label);
    return (v.adjoint() * rho * v).trace().real();
  }

 private:
  CollectiveOperators ops_;
  std::map<JMLabel, ComplexMatrix> bases_;
};

/// rho_jm on the 2^N emitter space.
inline ComplexMatrix rho_jm(const JMLabel& label) {
  if (!JMLabel::is_valid(label.n, label.two_j, label.two_m)) {
    throw InvalidParameter("rho_jm: invalid label " + to_string(label));
  }
  return SectorBasis(label.n).rho(label);
}

}  // namespace srw
