#pragma once

#include "types.hpp"

namespace hoipc {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

/// Closest-feature pair realising a distance: point-point, point-edge, point-plane, line-line.
enum class DistanceType { kPointPoint, kPointEdge, kPointTriangle, kEdgeEdge };

/// Squared distance over four points (p, t0, t1, t2) or (ea0, ea1, eb0, eb1). `active` lists the
/// local points used by the closest-feature formula; derivatives are with respect to all 12 coords.
struct DistanceResult {
  double d2 = 0.0;
  DistanceType type = DistanceType::kPointPoint;
  std::array<int, 4> active{-1, -1, -1, -1};
  Vec12 grad = Vec12::Zero();
  Mat12 hess = Mat12::Zero();
};

/// Throws on a zero-area triangle.
DistanceResult point_triangle_distance_sq(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2,
                                          bool with_derivatives = true);
/// Throws on a zero-length edge.
DistanceResult edge_edge_distance_sq(const Vec3& ea0, const Vec3& ea1, const Vec3& eb0, const Vec3& eb1,
                                     bool with_derivatives = true);

/// Mollifier threshold from rest edge vectors: 1e-3 |ea|^2 |eb|^2.
double mollifier_threshold(const Vec3& ea0, const Vec3& ea1, const Vec3& eb0, const Vec3& eb1);

struct MollifierResult {
  double value = 1.0;
  Vec12 grad = Vec12::Zero();
  Mat12 hess = Mat12::Zero();
};

/// m(c) = (2 - c/eps) c/eps for c = |ea x eb|^2 < eps, 1 otherwise.
MollifierResult edge_edge_mollifier(const Vec3& ea0, const Vec3& ea1, const Vec3& eb0, const Vec3& eb1, double eps_x);

}  // namespace hoipc
