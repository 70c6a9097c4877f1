#pragma once

// Sampling reference for continuous collision: scan the coplanarity polynomial for sign changes
// on a dense time grid, bisect each bracket and test whether the primitives overlap at the root.

#include "types.hpp"

#include <array>
#include <optional>

namespace oracle {

using hoipc::Vec3;

inline std::array<Vec3, 4> lerp(const std::array<Vec3, 4>& a, const std::array<Vec3, 4>& b, double t) {
  std::array<Vec3, 4> r;
  for (int k = 0; k < 4; ++k) r[k] = a[k] + t * (b[k] - a[k]);
  return r;
}

inline double coplanarity(const std::array<Vec3, 4>& x) {
  return (x[1] - x[0]).cross(x[2] - x[0]).dot(x[3] - x[0]);
}

// Point x[0] against triangle x[1..3], assumed coplanar.
inline bool point_in_triangle(const std::array<Vec3, 4>& x, double tol) {
  const Vec3 n = (x[2] - x[1]).cross(x[3] - x[1]);
  const double area2 = n.squaredNorm();
  if (area2 == 0.0) return false;
  const double a = (x[2] - x[0]).cross(x[3] - x[0]).dot(n) / area2;
  const double b = (x[3] - x[0]).cross(x[1] - x[0]).dot(n) / area2;
  const double c = 1.0 - a - b;
  return a >= -tol && b >= -tol && c >= -tol;
}

// Edges x[0]x[1] and x[2]x[3], assumed coplanar.
inline bool edges_cross(const std::array<Vec3, 4>& x, double tol) {
  const Vec3 a = x[1] - x[0], b = x[3] - x[2], w = x[2] - x[0];
  const Vec3 n = a.cross(b);
  const double n2 = n.squaredNorm();
  if (n2 == 0.0) return false;
  const double s = w.cross(b).dot(n) / n2;
  const double t = w.cross(a).dot(n) / n2;
  return s >= -tol && s <= 1 + tol && t >= -tol && t <= 1 + tol;
}

/// Earliest sampled contact time, or nullopt when no sign change leads to an overlap.
inline std::optional<double> first_contact(const std::array<Vec3, 4>& s, const std::array<Vec3, 4>& e, bool point_triangle,
                                           int samples = 10000) {
  double prev_t = 0.0, prev_v = coplanarity(lerp(s, e, 0.0));
  for (int i = 1; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    const double v = coplanarity(lerp(s, e, t));
    if ((prev_v <= 0.0 && v >= 0.0) || (prev_v >= 0.0 && v <= 0.0)) {
      double lo = prev_t, hi = t, vlo = prev_v;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double vm = coplanarity(lerp(s, e, mid));
        if ((vlo <= 0.0 && vm <= 0.0) || (vlo >= 0.0 && vm >= 0.0)) {
          lo = mid;
          vlo = vm;
        } else {
          hi = mid;
        }
      }
      const auto x = lerp(s, e, 0.5 * (lo + hi));
      if (point_triangle ? point_in_triangle(x, -1e-6) : edges_cross(x, -1e-6)) return lo;
    }
    prev_t = t;
    prev_v = v;
  }
  return std::nullopt;
}

}  // namespace oracle
