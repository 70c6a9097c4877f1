#include "ccd.hpp"

#include "broadphase.hpp"
#include "parallel.hpp"

#include <gmpxx.h>

#include <array>
#include <cfloat>
#include <cmath>
#include <limits>
#include <queue>

namespace hoipc {

namespace {

struct Interval {
  double lo, hi;
};

struct Box {
  Interval t, u, v;
};

// F is multilinear in (t, u, v), so its range over a box is spanned by the 8 corner values.
template <class F>
std::array<Interval, 3> inclusion(const F& f, const Box& b) {
  std::array<Interval, 3> r;
  for (auto& i : r) i = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double t : {b.t.lo, b.t.hi})
    for (double u : {b.u.lo, b.u.hi})
      for (double v : {b.v.lo, b.v.hi}) {
        const Vec3 x = f(t, u, v);
        for (int d = 0; d < 3; ++d) {
          r[d].lo = std::min(r[d].lo, x[d]);
          r[d].hi = std::max(r[d].hi, x[d]);
        }
      }
  return r;
}

template <class F>
std::optional<double> solve(const F& f, bool triangle, double coord_scale, const CcdOptions& opts) {
  const double delta = opts.min_separation + 32.0 * DBL_EPSILON * coord_scale;
  auto cmp = [](const Box& a, const Box& b) { return a.t.lo > b.t.lo; };
  std::priority_queue<Box, std::vector<Box>, decltype(cmp)> queue(cmp);
  queue.push({{0, 1}, {0, 1}, {0, 1}});
  long processed = 0;
  while (!queue.empty()) {
    const Box b = queue.top();
    queue.pop();
    if (triangle && b.u.lo + b.v.lo > 1.0) continue;
    const auto r = inclusion(f, b);
    bool contains = true;
    double width = 0.0;
    for (const auto& i : r) {
      if (i.lo > delta || i.hi < -delta) contains = false;
      width = std::max(width, i.hi - i.lo);
    }
    if (!contains) continue;
    if (width <= opts.tolerance || ++processed >= opts.max_boxes) return b.t.lo;
    // Split the variable whose variation moves F the most.
    const Vec3 c = f(b.t.lo, b.u.lo, b.v.lo);
    const double wt = (f(b.t.hi, b.u.lo, b.v.lo) - c).norm();
    const double wu = (f(b.t.lo, b.u.hi, b.v.lo) - c).norm() + (f(b.t.hi, b.u.hi, b.v.lo) - f(b.t.hi, b.u.lo, b.v.lo)).norm();
    const double wv = (f(b.t.lo, b.u.lo, b.v.hi) - c).norm() + (f(b.t.hi, b.u.lo, b.v.hi) - f(b.t.hi, b.u.lo, b.v.lo)).norm();
    Box a = b, z = b;
    if (wt >= 0.5 * std::max(wu, wv) && b.t.hi - b.t.lo > 1e-16) {
      const double m = 0.5 * (b.t.lo + b.t.hi);
      a.t.hi = m;
      z.t.lo = m;
    } else if (wu >= wv) {
      const double m = 0.5 * (b.u.lo + b.u.hi);
      a.u.hi = m;
      z.u.lo = m;
    } else {
      const double m = 0.5 * (b.v.lo + b.v.hi);
      a.v.hi = m;
      z.v.lo = m;
    }
    queue.push(a);
    queue.push(z);
  }
  return std::nullopt;
}

double max_abs(const std::array<Vec3, 4>& a, const std::array<Vec3, 4>& b) {
  double m = 0.0;
  for (int k = 0; k < 4; ++k) m = std::max({m, a[k].cwiseAbs().maxCoeff(), b[k].cwiseAbs().maxCoeff()});
  return m;
}

bool zero_motion(const std::array<Vec3, 4>& a, const std::array<Vec3, 4>& b) {
  for (int k = 0; k < 4; ++k)
    if (a[k] != b[k]) return false;
  return true;
}

/// Exact sign of det[b - a, c - a, d - a]: a floating-point filter with a rational fallback.
int orient(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 u = b - a, v = c - a, w = d - a;
  const double det = u.cross(v).dot(w);
  const double permanent = std::abs(u.x()) * (std::abs(v.y() * w.z()) + std::abs(v.z() * w.y())) +
                           std::abs(u.y()) * (std::abs(v.z() * w.x()) + std::abs(v.x() * w.z())) +
                           std::abs(u.z()) * (std::abs(v.x() * w.y()) + std::abs(v.y() * w.x()));
  constexpr double eps = std::numeric_limits<double>::epsilon() / 2;
  if (std::abs(det) > (7.0 + 56.0 * eps) * eps * permanent) return det > 0 ? 1 : -1;
  std::array<mpq_class, 3> U, V, W;
  for (int k = 0; k < 3; ++k) {
    U[k] = mpq_class(b[k]) - mpq_class(a[k]);
    V[k] = mpq_class(c[k]) - mpq_class(a[k]);
    W[k] = mpq_class(d[k]) - mpq_class(a[k]);
  }
  const mpq_class e = U[0] * (V[1] * W[2] - V[2] * W[1]) + U[1] * (V[2] * W[0] - V[0] * W[2]) +
                      U[2] * (V[0] * W[1] - V[1] * W[0]);
  return sgn(e);
}

bool segment_hits_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  const int sp = orient(a, b, c, p), sq = orient(a, b, c, q);
  if (sp * sq > 0) return false;
  if (sp == 0 && sq == 0) return false;  // coplanar: handled by the neighbouring tests
  const int s1 = orient(p, q, a, b), s2 = orient(p, q, b, c), s3 = orient(p, q, c, a);
  return (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
}

}  // namespace

std::optional<double> point_triangle_ccd(const std::array<Vec3, 4>& s, const std::array<Vec3, 4>& e, const CcdOptions& opts) {
  if (zero_motion(s, e) && point_triangle_distance_sq(s[0], s[1], s[2], s[3], false).d2 >
                               opts.min_separation * opts.min_separation)
    return std::nullopt;
  auto f = [&](double t, double u, double v) -> Vec3 {
    const Vec3 p = s[0] + t * (e[0] - s[0]);
    const Vec3 a = s[1] + t * (e[1] - s[1]);
    const Vec3 b = s[2] + t * (e[2] - s[2]);
    const Vec3 c = s[3] + t * (e[3] - s[3]);
    return p - a - u * (b - a) - v * (c - a);
  };
  return solve(f, true, max_abs(s, e), opts);
}

std::optional<double> edge_edge_ccd(const std::array<Vec3, 4>& s, const std::array<Vec3, 4>& e, const CcdOptions& opts) {
  if (zero_motion(s, e) && edge_edge_distance_sq(s[0], s[1], s[2], s[3], false).d2 >
                               opts.min_separation * opts.min_separation)
    return std::nullopt;
  auto f = [&](double t, double u, double v) -> Vec3 {
    const Vec3 a0 = s[0] + t * (e[0] - s[0]);
    const Vec3 a1 = s[1] + t * (e[1] - s[1]);
    const Vec3 b0 = s[2] + t * (e[2] - s[2]);
    const Vec3 b1 = s[3] + t * (e[3] - s[3]);
    return a0 + u * (a1 - a0) - b0 - v * (b1 - b0);
  };
  return solve(f, false, max_abs(s, e), opts);
}

double max_step(const ContactTopology& t, const VecX& x0, const VecX& p, const MaxStepOptions& opts) {
  if (x0.size() != 3 * t.num_vertices || p.size() != x0.size())
    throw Error(ErrorCode::kInvalidArgument, "max_step: size mismatch");
  const VecX x1 = x0 + p;
  auto vtx = [](const VecX& x, int i) -> Vec3 { return x.segment<3>(3 * i); };
  auto swept = [&](std::initializer_list<int> ids) {
    Box3 b;
    for (int i : ids) {
      b.extend(vtx(x0, i));
      b.extend(vtx(x1, i));
    }
    return b;
  };
  Box3 scene;
  for (int i = 0; i < t.num_vertices; ++i) scene.extend(vtx(x0, i));
  const double diag = std::max(scene.diagonal().norm(), 1e-300);
  std::vector<Box3> vb, tb, eb;
  for (int i = 0; i < t.num_vertices; ++i) vb.push_back(swept({i}));
  for (const auto& tri : t.triangles) tb.push_back(swept({tri[0], tri[1], tri[2]}));
  double total_len = 0.0;
  for (const auto& e : t.edges) {
    eb.push_back(swept({e[0], e[1]}));
    total_len += (vtx(x0, e[0]) - vtx(x0, e[1])).norm();
  }
  const double cell = t.edges.empty() ? diag : std::max(total_len / t.edges.size(), 1e-12 * diag);

  std::vector<ContactStencil> cand;
  for (const auto& [v, tri] : overlapping_pairs(vb, tb, cell)) {
    const auto& f = t.triangles[tri];
    if (v == f[0] || v == f[1] || v == f[2]) continue;
    cand.push_back({StencilKind::kPointTriangle, {v, f[0], f[1], f[2]}, 0.0});
  }
  for (const auto& [a, b] : overlapping_pairs(eb, eb, cell, true)) {
    const auto& ea = t.edges[a];
    const auto& e2 = t.edges[b];
    if (ea[0] == e2[0] || ea[0] == e2[1] || ea[1] == e2[0] || ea[1] == e2[1]) continue;
    cand.push_back({StencilKind::kEdgeEdge, {ea[0], ea[1], e2[0], e2[1]}, 0.0});
  }
  CcdOptions co;
  co.tolerance = opts.tolerance_rel * diag;
  std::vector<double> toi(cand.size(), 2.0);
  parallel_for(cand.size(), [&](std::size_t i) {
    const auto& s = cand[i];
    bool kin = !t.kinematic.empty();
    for (int v : s.v) kin = kin && t.kinematic[v];
    if (kin) return;
    const auto a = stencil_points(s, x0), b = stencil_points(s, x1);
    if (stencil_distance(s, x0).d2 <= 0.0)
      throw Error(ErrorCode::kIntersecting, "max_step: start configuration has touching primitives");
    const auto r = s.kind == StencilKind::kPointTriangle ? point_triangle_ccd(a, b, co) : edge_edge_ccd(a, b, co);
    if (r) toi[i] = *r;
  });
  double m = 2.0;
  for (double x : toi) m = std::min(m, x);
  return m > 1.0 ? 1.0 : opts.scale * m;
}

bool has_intersections(const ContactTopology& t, const VecX& x) {
  std::vector<Box3> eb, tb;
  for (const auto& e : t.edges) {
    Box3 b;
    b.extend(Vec3(x.segment<3>(3 * e[0])));
    b.extend(Vec3(x.segment<3>(3 * e[1])));
    eb.push_back(b);
  }
  double total = 0.0;
  for (const auto& tri : t.triangles) {
    Box3 b;
    for (int v : tri) b.extend(Vec3(x.segment<3>(3 * v)));
    tb.push_back(b);
    total += b.diagonal().norm();
  }
  if (tb.empty()) return false;
  const double cell = std::max(total / tb.size(), 1e-12);
  for (const auto& [ei, ti] : overlapping_pairs(eb, tb, cell)) {
    const auto& e = t.edges[ei];
    const auto& f = t.triangles[ti];
    if (e[0] == f[0] || e[0] == f[1] || e[0] == f[2] || e[1] == f[0] || e[1] == f[1] || e[1] == f[2]) continue;
    if (segment_hits_triangle(x.segment<3>(3 * e[0]), x.segment<3>(3 * e[1]), x.segment<3>(3 * f[0]),
                              x.segment<3>(3 * f[1]), x.segment<3>(3 * f[2])))
      return true;
  }
  return false;
}

}  // namespace hoipc
