#include "transfer.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <limits>

namespace hoipc {

namespace {

using RowMat3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

void check_size(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": expected " + std::to_string(want) +
                                                 " entries, got " + std::to_string(got));
}

RefPoint clamp_to_reference(const RefPoint& p) {
  auto l = p.barycentric();
  double sum = 0.0;
  for (double& x : l) sum += (x = std::max(0.0, x));
  for (double& x : l) x /= sum;
  return RefPoint::from_barycentric(l);
}

}  // namespace

TransferOperator make_transfer(SparseMat W) {
  TransferOperator T;
  W.prune(0.0);
  W.makeCompressed();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(W.nonZeros()) * 3);
  for (int k = 0; k < W.outerSize(); ++k)
    for (SparseMat::InnerIterator it(W, k); it; ++it)
      for (int d = 0; d < 3; ++d) trip.emplace_back(3 * it.row() + d, 3 * it.col() + d, it.value());
  T.W3.resize(3 * W.rows(), 3 * W.cols());
  T.W3.setFromTriplets(trip.begin(), trip.end());
  T.W = std::move(W);
  return T;
}

TransferOperator build_transfer(const HighOrderTetMesh& mesh, const FeSpace& space, const CollisionSurface& surface) {
  const int m = surface.num_vertices();
  if (static_cast<int>(surface.preimages.size()) != m)
    throw Error(ErrorCode::kInvalidArgument, "collision surface is missing pre-images");
  const double tol = kEmbedRelTol * mesh.bbox_diagonal();
  const int npe = space.dofs_per_element();
  std::vector<VecX> rows(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t j) {
    const auto& pre = surface.preimages[j];
    if (pre.element < 0 || pre.element >= mesh.num_elements())
      throw Error(ErrorCode::kInvalidArgument, "surface vertex " + std::to_string(j) + " has no pre-image");
    const double res = (geometric_map(mesh, pre.element, pre.point) - surface.vertices[j]).norm();
    if (!(res <= tol))
      throw Error(ErrorCode::kInvalidArgument, "surface vertex " + std::to_string(j) +
                                                   " pre-image residual " + std::to_string(res) + " exceeds tolerance");
    eval_basis_all(space.order, pre.point, rows[j]);
  });
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(m) * npe);
  for (int j = 0; j < m; ++j) {
    const auto dofs = space.element(surface.preimages[j].element);
    for (int i = 0; i < npe; ++i)
      if (rows[j][i] != 0.0) trip.emplace_back(j, dofs[i], rows[j][i]);
  }
  SparseMat W(m, space.num_nodes);
  W.setFromTriplets(trip.begin(), trip.end());
  return make_transfer(std::move(W));
}

VecX apply_transfer(const TransferOperator& T, const VecX& u) {
  check_size(u.size(), 3 * T.W.cols(), "apply_transfer");
  VecX out(3 * T.W.rows());
  Eigen::Map<RowMat3>(out.data(), T.W.rows(), 3) = T.W * Eigen::Map<const RowMat3>(u.data(), T.W.cols(), 3);
  return out;
}

VecX pullback_gradient(const TransferOperator& T, const VecX& g) {
  check_size(g.size(), 3 * T.W.rows(), "pullback_gradient");
  VecX out(3 * T.W.cols());
  Eigen::Map<RowMat3>(out.data(), T.W.cols(), 3) =
      T.W.transpose() * Eigen::Map<const RowMat3>(g.data(), T.W.rows(), 3);
  return out;
}

SparseMat pullback_hessian(const TransferOperator& T, const SparseMat& H) {
  check_size(H.rows(), T.W3.rows(), "pullback_hessian rows");
  check_size(H.cols(), T.W3.rows(), "pullback_hessian cols");
  const SparseMat asym = SparseMat(H.transpose()) - H;
  if (asym.norm() > 1e-12 * std::max(1.0, H.norm()))
    throw Error(ErrorCode::kInvalidArgument, "pullback_hessian: surface Hessian is not symmetric");
  SparseMat out = SparseMat(T.W3.transpose()) * (H * T.W3);
  // Symmetrise rounding differences so downstream factorisations see an exactly symmetric matrix.
  out = 0.5 * (out + SparseMat(out.transpose()));
  return out;
}

InverseMapResult invert_geometric_map(const HighOrderTetMesh& mesh, int elem, const Vec3& x,
                                      const RefPoint& initial_guess, double tol, int max_iters) {
  if (!initial_guess.vec().allFinite()) throw Error(ErrorCode::kInvalidArgument, "initial guess is not finite");
  if (tol < 0.0) tol = kEmbedRelTol * mesh.bbox_diagonal();
  InverseMapResult res;
  Vec3 p = initial_guess.vec();
  Vec3 r = geometric_map(mesh, elem, RefPoint(p)) - x;
  double f = r.squaredNorm();
  int it = 0;
  // Iterate past `tol` while Newton still makes progress; the extra steps are cheap near the root.
  for (; it < max_iters && std::sqrt(f) >= 1e-6 * tol; ++it) {
    const Mat3 J = geometric_map_jacobian(mesh, elem, RefPoint(p));
    Vec3 dir = J.fullPivLu().solve(-r);
    if (!dir.allFinite() || dir.dot(J.transpose() * r) >= 0.0) dir = -J.transpose() * r;
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      const Vec3 q = p + alpha * dir;
      const Vec3 rq = geometric_map(mesh, elem, RefPoint(q)) - x;
      if (rq.squaredNorm() < f) {
        p = q;
        r = rq;
        f = rq.squaredNorm();
        accepted = true;
        break;
      }
    }
    if (!accepted || (alpha * dir).norm() < 1e-14) break;
  }
  res.point = RefPoint(p);
  res.residual = std::sqrt(f);
  res.converged = res.residual < tol;
  res.iterations = it;
  return res;
}

CollisionSurface embed_proxy(const HighOrderTetMesh& mesh, const std::vector<Vec3>& vertices,
                             const std::vector<std::array<int, 3>>& triangles, const EmbedOptions& opts) {
  for (const auto& t : triangles)
    for (int v : t)
      if (v < 0 || v >= static_cast<int>(vertices.size()))
        throw Error(ErrorCode::kInvalidArgument, "proxy triangle references a missing vertex");
  const int ne = mesh.num_elements();
  const double diag = mesh.bbox_diagonal();
  const double tol = kEmbedRelTol * diag;
  const double cap = opts.distance_cap * diag;

  // Linearisation: four sub-tets per element, each a boundary face coned to the mapped centroid.
  struct SubTet {
    std::array<Vec3, 4> x;
    std::array<Vec3, 4> ref;
  };
  const RefPoint centre(0.25, 0.25, 0.25);
  const auto corners_ref = reference_nodes(1);
  std::vector<std::array<SubTet, 4>> subs(static_cast<std::size_t>(ne));
  std::vector<Eigen::AlignedBox3d> boxes(static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    const auto nodes = mesh.element(e);
    for (int n : nodes) boxes[e].extend(mesh.nodes[n]);
    const Vec3 c = geometric_map(mesh, e, centre);
    boxes[e].extend(c);
    for (int f = 0; f < 4; ++f) {
      int slot = 0;
      for (int k = 0; k < 4; ++k) {
        if (k == f) continue;
        subs[e][f].x[slot] = mesh.nodes[nodes[k]];
        subs[e][f].ref[slot] = corners_ref[k].vec();
        ++slot;
      }
      subs[e][f].x[3] = c;
      subs[e][f].ref[3] = centre.vec();
    }
  }

  auto linear_guess = [&](int e, const Vec3& x) {
    RefPoint best(0.25, 0.25, 0.25);
    double best_l1 = std::numeric_limits<double>::infinity();
    for (const auto& st : subs[e]) {
      Mat3 A;
      for (int k = 0; k < 3; ++k) A.col(k) = st.x[k] - st.x[3];
      const Vec3 w = A.fullPivLu().solve(x - st.x[3]);
      if (!w.allFinite()) continue;
      const double l1 = std::abs(w[0]) + std::abs(w[1]) + std::abs(w[2]) + std::abs(1.0 - w.sum());
      if (l1 < best_l1) {
        best_l1 = l1;
        best = RefPoint(st.ref[3] + w[0] * (st.ref[0] - st.ref[3]) + w[1] * (st.ref[1] - st.ref[3]) +
                        w[2] * (st.ref[2] - st.ref[3]));
      }
    }
    return best;
  };

  const int nv = static_cast<int>(vertices.size());
  const int want = std::min(opts.min_candidates, ne);
  std::vector<SurfacePreimage> pre(static_cast<std::size_t>(nv));
  parallel_for(static_cast<std::size_t>(nv), [&](std::size_t j) {
    const Vec3& x = vertices[j];
    std::vector<int> cand;
    for (double inflate = 1e-3 * diag;; inflate *= 2.0) {
      cand.clear();
      for (int e = 0; e < ne; ++e)
        if (boxes[e].exteriorDistance(x) <= inflate) cand.push_back(e);
      if (static_cast<int>(cand.size()) >= want || inflate > 4.0 * diag) break;
    }
    int best_e = -1;
    RefPoint best_p;
    double best_l1 = std::numeric_limits<double>::infinity();
    for (int e : cand) {
      const auto inv = invert_geometric_map(mesh, e, x, linear_guess(e, x), tol);
      if (!inv.converged) continue;
      const double l1 = inv.point.l1_barycentric();
      if (l1 < best_l1 - 1e-12) {
        best_l1 = l1;
        best_e = e;
        best_p = inv.point;
      }
    }
    if (best_e < 0)
      throw Error(ErrorCode::kInvalidArgument, "proxy vertex " + std::to_string(j) + " could not be embedded");
    const double dist = (geometric_map(mesh, best_e, clamp_to_reference(best_p)) - x).norm();
    if (dist > cap)
      throw Error(ErrorCode::kInvalidArgument, "proxy vertex " + std::to_string(j) + " lies " + std::to_string(dist) +
                                                   " away from the volume");
    pre[j] = {best_e, best_p};
  });

  CollisionSurface s;
  s.vertices = vertices;
  s.triangles = triangles;
  s.preimages = std::move(pre);
  return s;
}

}  // namespace hoipc
