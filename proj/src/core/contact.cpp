#include "contact.hpp"

#include "broadphase.hpp"
#include "elasticity.hpp"
#include "hyper.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <limits>

namespace hoipc {

namespace {

Vec3 vtx(const VecX& x, int i) { return x.segment<3>(3 * i); }

bool shares_vertex(const std::array<int, 4>& v, int na, int nb) {
  for (int i = 0; i < na; ++i)
    for (int j = na; j < na + nb; ++j)
      if (v[i] == v[j]) return true;
  return false;
}

bool all_kinematic(const ContactTopology& t, const std::array<int, 4>& v) {
  if (t.kinematic.empty()) return false;
  for (int i : v)
    if (!t.kinematic[i]) return false;
  return true;
}

ContactStencil make_pt(int p, const std::array<int, 3>& tri) {
  return {StencilKind::kPointTriangle, {p, tri[0], tri[1], tri[2]}, 0.0};
}

ContactStencil make_ee(const ContactTopology& t, int a, int b) {
  const auto& ea = t.edges[a];
  const auto& eb = t.edges[b];
  return {StencilKind::kEdgeEdge, {ea[0], ea[1], eb[0], eb[1]}, 1e-3 * t.edge_rest_len2[a] * t.edge_rest_len2[b]};
}

bool admissible(const ContactTopology& t, const ContactStencil& s) {
  const bool pt = s.kind == StencilKind::kPointTriangle;
  return !shares_vertex(s.v, pt ? 1 : 2, pt ? 3 : 2) && !all_kinematic(t, s.v);
}

double median_edge_length(const ContactTopology& t, const VecX& x) {
  if (t.edges.empty()) return 0.0;
  std::vector<double> len;
  len.reserve(t.edges.size());
  for (const auto& e : t.edges) len.push_back((vtx(x, e[0]) - vtx(x, e[1])).norm());
  std::nth_element(len.begin(), len.begin() + len.size() / 2, len.end());
  return len[len.size() / 2];
}

}  // namespace

BarrierValue barrier(double d2, double dhat) {
  if (!(d2 > 0.0)) throw Error(ErrorCode::kIntersecting, "barrier evaluated at non-positive distance");
  const double X = dhat * dhat;
  if (d2 >= X) return {};
  const double x = d2, diff = x - X, lg = std::log(x / X);
  return {-diff * diff * lg, -2.0 * diff * lg - diff * diff / x, -2.0 * lg - 4.0 * diff / x + diff * diff / (x * x)};
}

ContactTopology::ContactTopology(const VecX& rest, std::vector<std::array<int, 3>> tris, std::vector<char> mask)
    : triangles(std::move(tris)), kinematic(std::move(mask)), num_vertices(static_cast<int>(rest.size() / 3)) {
  if (!kinematic.empty() && static_cast<int>(kinematic.size()) != num_vertices)
    throw Error(ErrorCode::kInvalidArgument, "kinematic mask size mismatch");
  for (const auto& t : triangles)
    for (int v : t)
      if (v < 0 || v >= num_vertices) throw Error(ErrorCode::kInvalidArgument, "triangle references a missing vertex");
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) edges.push_back({std::min(t[k], t[(k + 1) % 3]), std::max(t[k], t[(k + 1) % 3])});
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& e : edges) edge_rest_len2.push_back((vtx(rest, e[0]) - vtx(rest, e[1])).squaredNorm());
}

std::array<Vec3, 4> stencil_points(const ContactStencil& s, const VecX& x) {
  return {vtx(x, s.v[0]), vtx(x, s.v[1]), vtx(x, s.v[2]), vtx(x, s.v[3])};
}

DistanceResult stencil_distance(const ContactStencil& s, const VecX& x, bool derivs) {
  const auto p = stencil_points(s, x);
  return s.kind == StencilKind::kPointTriangle ? point_triangle_distance_sq(p[0], p[1], p[2], p[3], derivs)
                                               : edge_edge_distance_sq(p[0], p[1], p[2], p[3], derivs);
}

std::vector<ContactStencil> build_constraint_set(const ContactTopology& t, const VecX& x, double dhat) {
  if (!(dhat > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dhat must be positive");
  const double cell = std::max(dhat, median_edge_length(t, x));
  const double d2max = dhat * dhat;
  std::vector<Box3> vboxes(static_cast<std::size_t>(t.num_vertices)), tboxes, eboxes;
  for (int i = 0; i < t.num_vertices; ++i) {
    vboxes[i].extend(vtx(x, i));
    vboxes[i].min().array() -= dhat;
    vboxes[i].max().array() += dhat;
  }
  for (const auto& tri : t.triangles) {
    Box3 b;
    for (int v : tri) b.extend(vtx(x, v));
    tboxes.push_back(b);
  }
  for (const auto& e : t.edges) {
    Box3 b;
    b.extend(vtx(x, e[0]));
    b.extend(vtx(x, e[1]));
    b.min().array() -= dhat;
    b.max().array() += dhat;
    eboxes.push_back(b);
  }
  std::vector<ContactStencil> cand;
  for (const auto& [v, tri] : overlapping_pairs(vboxes, tboxes, cell)) cand.push_back(make_pt(v, t.triangles[tri]));
  // Edge boxes are inflated on both sides, which covers a gap of up to 2 dhat; the exact test trims.
  for (const auto& [a, b] : overlapping_pairs(eboxes, eboxes, cell, true)) cand.push_back(make_ee(t, a, b));
  std::vector<char> keep(cand.size(), 0);
  parallel_for(cand.size(), [&](std::size_t i) {
    keep[i] = admissible(t, cand[i]) && stencil_distance(cand[i], x).d2 < d2max;
  });
  std::vector<ContactStencil> out;
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (keep[i]) out.push_back(cand[i]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ContactStencil> build_constraint_set_brute_force(const ContactTopology& t, const VecX& x, double dhat) {
  std::vector<ContactStencil> out;
  const double d2max = dhat * dhat;
  for (int v = 0; v < t.num_vertices; ++v)
    for (const auto& tri : t.triangles) {
      const auto s = make_pt(v, tri);
      if (admissible(t, s) && stencil_distance(s, x).d2 < d2max) out.push_back(s);
    }
  for (int a = 0; a < static_cast<int>(t.edges.size()); ++a)
    for (int b = a + 1; b < static_cast<int>(t.edges.size()); ++b) {
      const auto s = make_ee(t, a, b);
      if (admissible(t, s) && stencil_distance(s, x).d2 < d2max) out.push_back(s);
    }
  std::sort(out.begin(), out.end());
  return out;
}

double min_distance_sq(const std::vector<ContactStencil>& stencils, const VecX& x) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& s : stencils) m = std::min(m, stencil_distance(s, x).d2);
  return m;
}

double min_surface_distance_sq(const ContactTopology& t, const VecX& x) {
  std::vector<double> per(static_cast<std::size_t>(t.num_vertices) + t.edges.size(),
                          std::numeric_limits<double>::infinity());
  parallel_for(per.size(), [&](std::size_t i) {
    double m = std::numeric_limits<double>::infinity();
    if (i < static_cast<std::size_t>(t.num_vertices)) {
      for (const auto& tri : t.triangles) {
        const auto s = make_pt(static_cast<int>(i), tri);
        if (admissible(t, s)) m = std::min(m, stencil_distance(s, x).d2);
      }
    } else {
      const int a = static_cast<int>(i) - t.num_vertices;
      for (int b = a + 1; b < static_cast<int>(t.edges.size()); ++b) {
        const auto s = make_ee(t, a, b);
        if (admissible(t, s)) m = std::min(m, stencil_distance(s, x).d2);
      }
    }
    per[i] = m;
  });
  return *std::min_element(per.begin(), per.end());
}

StencilEval stencil_barrier(const ContactStencil& s, const VecX& x, double dhat, int order) {
  StencilEval out;
  const auto d = stencil_distance(s, x, order > 0);
  const auto b = barrier(d.d2, dhat);
  if (b.b == 0.0 && b.db == 0.0) return out;
  double m = 1.0;
  MollifierResult mol;
  if (s.kind == StencilKind::kEdgeEdge) {
    const auto p = stencil_points(s, x);
    mol = edge_edge_mollifier(p[0], p[1], p[2], p[3], s.eps_x);
    m = mol.value;
  }
  out.value = m * b.b;
  if (order == 0) return out;
  const Vec12 gb = b.db * d.grad;
  out.grad = m * gb + b.b * mol.grad;
  if (order >= 2) {
    const Mat12 hb = b.db * d.hess + b.d2b * d.grad * d.grad.transpose();
    out.hess = m * hb + b.b * mol.hess + mol.grad * gb.transpose() + gb * mol.grad.transpose();
  }
  return out;
}

PotentialEval barrier_potential(const ContactTopology& t, const std::vector<ContactStencil>& stencils, const VecX& x,
                                double dhat, double kappa, int order, bool project) {
  if (x.size() != 3 * t.num_vertices) throw Error(ErrorCode::kInvalidArgument, "surface position size mismatch");
  std::vector<StencilEval> per(stencils.size());
  parallel_for(stencils.size(), [&](std::size_t i) {
    per[i] = stencil_barrier(stencils[i], x, dhat, order);
    if (order >= 2 && project) per[i].hess = project_psd(per[i].hess);
  });
  PotentialEval out;
  for (const auto& e : per) out.value += kappa * e.value;
  if (order >= 1) {
    out.grad = VecX::Zero(x.size());
    for (std::size_t i = 0; i < stencils.size(); ++i)
      for (int k = 0; k < 4; ++k) out.grad.segment<3>(3 * stencils[i].v[k]) += kappa * per[i].grad.segment<3>(3 * k);
  }
  if (order >= 2) {
    std::vector<Triplet> trip;
    trip.reserve(stencils.size() * 144);
    for (std::size_t i = 0; i < stencils.size(); ++i)
      for (int a = 0; a < 12; ++a)
        for (int b = 0; b < 12; ++b)
          if (per[i].hess(a, b) != 0.0)
            trip.emplace_back(3 * stencils[i].v[a / 3] + a % 3, 3 * stencils[i].v[b / 3] + b % 3, kappa * per[i].hess(a, b));
    out.hess.resize(x.size(), x.size());
    out.hess.setFromTriplets(trip.begin(), trip.end());
  }
  return out;
}

BarrierStiffness initial_barrier_stiffness(double bbox, double dhat, double avg_mass, const VecX& grad_e,
                                           const VecX& grad_b, const StiffnessParams& p) {
  if (!(bbox > 0.0) || !(dhat > 0.0) || !(avg_mass > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "barrier stiffness needs positive scales");
  double d0 = 1e-8 * bbox;
  d0 *= d0;
  if (d0 >= dhat * dhat) d0 = 0.5 * dhat * dhat;
  BarrierStiffness k;
  k.kappa_min = p.min_scale * avg_mass / (4.0 * d0 * barrier(d0, dhat).d2b);
  k.kappa_max = p.max_ratio * k.kappa_min;
  const double nb = grad_b.squaredNorm();
  double kappa = nb > 0.0 ? -grad_b.dot(grad_e) / nb : 0.0;
  if (!std::isfinite(kappa)) kappa = 0.0;
  k.kappa = std::clamp(kappa, k.kappa_min, k.kappa_max);
  return k;
}

double update_barrier_stiffness(double prev_min_distance, double min_distance, const BarrierStiffness& k, double dhat,
                                const StiffnessParams& p) {
  const double tol = p.update_fraction * dhat;
  if (prev_min_distance < tol && min_distance < tol && k.kappa < k.kappa_max) return std::min(k.kappa_max, 2.0 * k.kappa);
  return k.kappa;
}

}  // namespace hoipc
