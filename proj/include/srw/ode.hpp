#pragma once

// Adaptive Dormand-Prince 5(4) integrator for Eigen dense states (real or
// complex, vector or matrix). Step sizes follow the error control only; sample
// times inside a step are filled from the method's 4th-order continuous
// extension, and the last sample time is hit exactly.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "srw/errors.hpp"

namespace srw {

struct OdeOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double initial_step = 0.0;  // 0: automatic
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evaluations = 0;
};

namespace detail {

// Dormand & Prince (1980) coefficients.
struct DP45 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  // b - b_hat
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  // Continuous extension (Hairer, Norsett & Wanner, dense output of DOPRI5).
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

}  // namespace detail

/// `State` is any Eigen dense matrix/vector type. The right-hand side is called
/// as `rhs(t, y, dydt)`; the observer as `observe(sample_index, t, y)`.
template <class State>
class DormandPrince {
 public:
  explicit DormandPrince(OdeOptions options = {}) : opt_(options) {}

  template <class Rhs, class Observer>
  OdeStats integrate(Rhs&& rhs, State& y, double t0, std::span<const double> sample_times, Observer&& observe) {
    using detail::DP45;
    OdeStats stats;
    if (sample_times.empty()) return stats;
    if (sample_times.front() < t0) throw InvalidParameter("DormandPrince: first sample before t0");
    for (std::size_t i = 1; i < sample_times.size(); ++i) {
      if (!(sample_times[i] > sample_times[i - 1])) {
        throw InvalidParameter("DormandPrince: sample times must be strictly increasing");
      }
    }

    double t = t0;
    std::size_t next = 0;
    while (next < sample_times.size() && sample_times[next] <= t) {
      observe(next, sample_times[next], static_cast<const State&>(y));
      ++next;
    }
    if (next == sample_times.size()) return stats;

    k1_.resizeLike(y);
    k2_.resizeLike(y);
    k3_.resizeLike(y);
    k4_.resizeLike(y);
    k5_.resizeLike(y);
    k6_.resizeLike(y);
    k7_.resizeLike(y);
    tmp_.resizeLike(y);
    y_new_.resizeLike(y);

    rhs(t, static_cast<const State&>(y), k1_);
    ++stats.rhs_evaluations;

    double h = opt_.initial_step > 0.0 ? opt_.initial_step : initial_step(y, k1_, sample_times.back() - t0);
    constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 5.0;

    const double t_final = sample_times.back();
    while (next < sample_times.size()) {
      if (stats.accepted + stats.rejected >= opt_.max_steps) {
        throw NumericalError("DormandPrince: step budget exhausted at t=" + std::to_string(t));
      }
      h = std::min({h, opt_.max_step, t_final - t});
      const bool hits_end = (t + h >= t_final) || (t_final - t - h) <= 1e-12 * std::max(1.0, std::abs(t_final));
      if (hits_end) h = t_final - t;
      if (h <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
        throw NumericalError("DormandPrince: step size underflow at t=" + std::to_string(t));
      }

      tmp_ = y + h * DP45::a21 * k1_;
      rhs(t + DP45::c2 * h, static_cast<const State&>(tmp_), k2_);
      tmp_ = y + h * (DP45::a31 * k1_ + DP45::a32 * k2_);
      rhs(t + DP45::c3 * h, static_cast<const State&>(tmp_), k3_);
      tmp_ = y + h * (DP45::a41 * k1_ + DP45::a42 * k2_ + DP45::a43 * k3_);
      rhs(t + DP45::c4 * h, static_cast<const State&>(tmp_), k4_);
      tmp_ = y + h * (DP45::a51 * k1_ + DP45::a52 * k2_ + DP45::a53 * k3_ + DP45::a54 * k4_);
      rhs(t + DP45::c5 * h, static_cast<const State&>(tmp_), k5_);
      tmp_ = y + h * (DP45::a61 * k1_ + DP45::a62 * k2_ + DP45::a63 * k3_ + DP45::a64 * k4_ + DP45::a65 * k5_);
      rhs(t + h, static_cast<const State&>(tmp_), k6_);
      y_new_ = y + h * (DP45::b1 * k1_ + DP45::b3 * k3_ + DP45::b4 * k4_ + DP45::b5 * k5_ + DP45::b6 * k6_);
      rhs(t + h, static_cast<const State&>(y_new_), k7_);
      stats.rhs_evaluations += 6;

      tmp_ = h * (DP45::e1 * k1_ + DP45::e3 * k3_ + DP45::e4 * k4_ + DP45::e5 * k5_ + DP45::e6 * k6_ +
                  DP45::e7 * k7_);
      const double err =
          (tmp_.array().abs() /
           (opt_.abs_tol + opt_.rel_tol * y.array().abs().max(y_new_.array().abs())))
              .maxCoeff();
      if (!std::isfinite(err)) throw NumericalError("DormandPrince: non-finite error estimate");

      if (err <= 1.0) {
        const double t_new = hits_end ? t_final : t + h;
        if (next < sample_times.size() && sample_times[next] < t_new) emit_interior(t, h, t_new, sample_times, next,
                                                                                    observe, y);
        t = t_new;
        y.swap(y_new_);
        k1_.swap(k7_);  // FSAL
        ++stats.accepted;
        while (next < sample_times.size() && sample_times[next] <= t) {
          observe(next, sample_times[next], static_cast<const State&>(y));
          ++next;
        }
        const double factor = err == 0.0 ? kMaxFactor : std::clamp(kSafety * std::pow(err, -0.2), kMinFactor, kMaxFactor);
        h *= factor;
      } else {
        ++stats.rejected;
        h *= std::clamp(kSafety * std::pow(err, -0.2), kMinFactor, 1.0);
      }
    }
    return stats;
  }

 private:
  // Observes every sample in (t, t_new) from the continuous extension of the
  // step just accepted; y_new_ and k7_ still hold the end-of-step values.
  template <class Observer>
  void emit_interior(double t, double h, double t_new, std::span<const double> sample_times, std::size_t& next,
                     Observer& observe, const State& y) {
    using detail::DP45;
    const State ydiff = y_new_ - y;
    const State bspl = h * k1_ - ydiff;
    const State r4 = ydiff - h * k7_ - bspl;
    const State r5 = h * (DP45::d1 * k1_ + DP45::d3 * k3_ + DP45::d4 * k4_ + DP45::d5 * k5_ + DP45::d6 * k6_ +
                          DP45::d7 * k7_);
    while (next < sample_times.size() && sample_times[next] < t_new) {
      const double theta = (sample_times[next] - t) / h;
      const double th1 = 1.0 - theta;
      tmp_ = y + theta * (ydiff + th1 * (bspl + theta * (r4 + th1 * r5)));
      observe(next, sample_times[next], static_cast<const State&>(tmp_));
      ++next;
    }
  }

  double initial_step(const State& y, const State& f, double span) const {
    const double scale_y = (y.array().abs() / (opt_.abs_tol + opt_.rel_tol * y.array().abs())).maxCoeff();
    const double scale_f = (f.array().abs() / (opt_.abs_tol + opt_.rel_tol * y.array().abs())).maxCoeff();
    double h = (scale_y < 1e-5 || scale_f < 1e-5) ? 1e-6 : 0.01 * scale_y / scale_f;
    return std::min(h, span);
  }

  OdeOptions opt_;
  State k1_, k2_, k3_, k4_, k5_, k6_, k7_, tmp_, y_new_;
};

}  // namespace srw
