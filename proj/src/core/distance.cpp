#include "distance.hpp"

#include "hyper.hpp"

#include <limits>

namespace hoipc {

namespace {

using H12 = Hyper<12>;

template <class T>
V3<T> point(const std::array<V3<T>, 4>& x, int i) { return x[static_cast<std::size_t>(i)]; }

template <class T>
T pp_d2(const V3<T>& a, const V3<T>& b) {
  const V3<T> d = a - b;
  return dot(d, d);
}

template <class T>
T pe_d2(const V3<T>& p, const V3<T>& e0, const V3<T>& e1) {
  const V3<T> e = e1 - e0;
  const V3<T> c = cross(e0 - p, e1 - p);
  return dot(c, c) / dot(e, e);
}

template <class T>
T plane_d2(const V3<T>& p, const V3<T>& t0, const V3<T>& t1, const V3<T>& t2) {
  const V3<T> n = cross(t1 - t0, t2 - t0);
  const T h = dot(p - t0, n);
  return h * h / dot(n, n);
}

template <class T>
T line_line_d2(const V3<T>& a0, const V3<T>& a1, const V3<T>& b0, const V3<T>& b1) {
  const V3<T> n = cross(a1 - a0, b1 - b0);
  const T h = dot(b0 - a0, n);
  return h * h / dot(n, n);
}

template <class T>
T eval_d2(const std::array<V3<T>, 4>& x, DistanceType type, const std::array<int, 4>& a) {
  switch (type) {
    case DistanceType::kPointPoint: return pp_d2(point(x, a[0]), point(x, a[1]));
    case DistanceType::kPointEdge: return pe_d2(point(x, a[0]), point(x, a[1]), point(x, a[2]));
    case DistanceType::kPointTriangle: return plane_d2(point(x, a[0]), point(x, a[1]), point(x, a[2]), point(x, a[3]));
    case DistanceType::kEdgeEdge: return line_line_d2(point(x, a[0]), point(x, a[1]), point(x, a[2]), point(x, a[3]));
  }
  return T(0.0);
}

std::array<V3<double>, 4> to_v3(const std::array<Vec3, 4>& x) {
  std::array<V3<double>, 4> r;
  for (int i = 0; i < 4; ++i) r[i] = {x[i][0], x[i][1], x[i][2]};
  return r;
}

std::array<V3<H12>, 4> to_hyper(const std::array<Vec3, 4>& x) {
  std::array<V3<H12>, 4> r;
  for (int i = 0; i < 4; ++i)
    r[i] = {H12::variable(x[i][0], 3 * i), H12::variable(x[i][1], 3 * i + 1), H12::variable(x[i][2], 3 * i + 2)};
  return r;
}

struct Classified {
  DistanceType type;
  std::array<int, 4> active;
  double d2;
};

Classified classify_point_edge(const std::array<Vec3, 4>& x, int p, int e0, int e1) {
  const Vec3 e = x[e1] - x[e0];
  const double t = (x[p] - x[e0]).dot(e) / e.squaredNorm();
  if (t <= 0.0) return {DistanceType::kPointPoint, {p, e0, -1, -1}, (x[p] - x[e0]).squaredNorm()};
  if (t >= 1.0) return {DistanceType::kPointPoint, {p, e1, -1, -1}, (x[p] - x[e1]).squaredNorm()};
  const std::array<int, 4> a{p, e0, e1, -1};
  return {DistanceType::kPointEdge, a, eval_d2(to_v3(x), DistanceType::kPointEdge, a)};
}

DistanceResult finish(const std::array<Vec3, 4>& x, const Classified& c, bool derivs) {
  DistanceResult r;
  r.type = c.type;
  r.active = c.active;
  if (!derivs) {
    r.d2 = c.d2;
    return r;
  }
  const H12 d = eval_d2(to_hyper(x), c.type, c.active);
  r.d2 = d.v;
  r.grad = d.g;
  r.hess = d.H;
  return r;
}

}  // namespace

DistanceResult point_triangle_distance_sq(const Vec3& p, const Vec3& t0, const Vec3& t1, const Vec3& t2, bool derivs) {
  const std::array<Vec3, 4> x{p, t0, t1, t2};
  const Vec3 e1 = t1 - t0, e2 = t2 - t0;
  const double scale = std::max({e1.squaredNorm(), e2.squaredNorm(), (t2 - t1).squaredNorm()});
  if (!(e1.cross(e2).squaredNorm() > 1e-30 * scale * scale))
    throw Error(ErrorCode::kInvalidArgument, "point_triangle_distance_sq: degenerate triangle");
  Eigen::Matrix2d A;
  A << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
  const Eigen::Vector2d b(e1.dot(p - t0), e2.dot(p - t0));
  const Eigen::Vector2d beta = A.ldlt().solve(b);
  if (beta[0] >= 0.0 && beta[1] >= 0.0 && beta[0] + beta[1] <= 1.0) {
    const std::array<int, 4> a{0, 1, 2, 3};
    return finish(x, {DistanceType::kPointTriangle, a, eval_d2(to_v3(x), DistanceType::kPointTriangle, a)}, derivs);
  }
  Classified best{DistanceType::kPointPoint, {}, std::numeric_limits<double>::infinity()};
  for (const auto& [a, b2] : {std::pair{1, 2}, std::pair{2, 3}, std::pair{3, 1}}) {
    const auto c = classify_point_edge(x, 0, a, b2);
    if (c.d2 < best.d2) best = c;
  }
  return finish(x, best, derivs);
}

DistanceResult edge_edge_distance_sq(const Vec3& ea0, const Vec3& ea1, const Vec3& eb0, const Vec3& eb1, bool derivs) {
  const std::array<Vec3, 4> x{ea0, ea1, eb0, eb1};
  const Vec3 a = ea1 - ea0, b = eb1 - eb0, w = ea0 - eb0;
  const double A = a.dot(a), B = a.dot(b), C = b.dot(b), D = a.dot(w), E = b.dot(w);
  if (!(A > 0.0) || !(C > 0.0)) throw Error(ErrorCode::kInvalidArgument, "edge_edge_distance_sq: degenerate edge");
  const double den = A * C - B * B;
  if (den > 1e-10 * A * C) {
    const double s = (B * E - C * D) / den, t = (A * E - B * D) / den;
    if (s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0) {
      const std::array<int, 4> act{0, 1, 2, 3};
      return finish(x, {DistanceType::kEdgeEdge, act, eval_d2(to_v3(x), DistanceType::kEdgeEdge, act)}, derivs);
    }
  }
  Classified best{DistanceType::kPointPoint, {}, std::numeric_limits<double>::infinity()};
  const std::array<std::array<int, 3>, 4> combos{{{0, 2, 3}, {1, 2, 3}, {2, 0, 1}, {3, 0, 1}}};
  for (const auto& c : combos) {
    const auto r = classify_point_edge(x, c[0], c[1], c[2]);
    if (r.d2 < best.d2) best = r;
  }
  return finish(x, best, derivs);
}

double mollifier_threshold(const Vec3& ea0, const Vec3& ea1, const Vec3& eb0, const Vec3& eb1) {
  return 1e-3 * (ea1 - ea0).squaredNorm() * (eb1 - eb0).squaredNorm();
}

MollifierResult edge_edge_mollifier(const Vec3& ea0, const Vec3& ea1, const Vec3& eb0, const Vec3& eb1, double eps_x) {
  if (!(eps_x > 0.0)) throw Error(ErrorCode::kInvalidArgument, "edge_edge_mollifier: threshold must be positive");
  MollifierResult r;
  const auto x = to_hyper({ea0, ea1, eb0, eb1});
  const V3<H12> n = cross(x[1] - x[0], x[3] - x[2]);
  const H12 c = dot(n, n);
  if (c.v >= eps_x) return r;
  const double s = c.v / eps_x;
  const H12 m = chain(c, (2.0 - s) * s, (2.0 - 2.0 * s) / eps_x, -2.0 / (eps_x * eps_x));
  r.value = m.v;
  r.grad = m.g;
  r.hess = m.H;
  return r;
}

}  // namespace hoipc
