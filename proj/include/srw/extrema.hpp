#pragma once

#include <algorithm>
#include <cstddef>
#include <span>

#include "srw/errors.hpp"

namespace srw {

struct Extremum {
  double time = 0.0;
  double value = 0.0;
  std::size_t index = 0;  // sample closest to the extremum
};

namespace detail {

// Vertex of the parabola through three neighbouring samples, kept inside the bracket.
inline Extremum refine(std::span<const double> t, std::span<const double> v, std::size_t i) {
  Extremum e{t[i], v[i], i};
  if (i == 0 || i + 1 >= t.size()) return e;
  const double t0 = t[i - 1], t1 = t[i], t2 = t[i + 1];
  const double v0 = v[i - 1], v1 = v[i], v2 = v[i + 1];
  const double d01 = (v1 - v0) / (t1 - t0), d12 = (v2 - v1) / (t2 - t1);
  const double curvature = (d12 - d01) / (t2 - t0);
  if (curvature == 0.0) return e;
  const double tv = 0.5 * (t0 + t1) - d01 / (2.0 * curvature);
  if (tv <= t0 || tv >= t2) return e;
  e.time = tv;
  e.value = v1 + d01 * (tv - t1) + curvature * (tv - t0) * (tv - t1);
  return e;
}

}  // namespace detail

/// Minimum of a sampled curve with local quadratic refinement.
inline Extremum refined_minimum(std::span<const double> t, std::span<const double> v) {
  if (t.empty() || t.size() != v.size()) throw InvalidParameter("refined_minimum: bad input");
  const auto i = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  Extremum e = detail::refine(t, v, i);
  if (e.value > v[i]) e.value = v[i];
  return e;
}

/// Maximum of a sampled curve with local quadratic refinement.
inline Extremum refined_maximum(std::span<const double> t, std::span<const double> v) {
  if (t.empty() || t.size() != v.size()) throw InvalidParameter("refined_maximum: bad input");
  const auto i = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  Extremum e = detail::refine(t, v, i);
  if (e.value < v[i]) e.value = v[i];
  return e;
}

}  // namespace srw
