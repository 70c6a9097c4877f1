#include "doctest.h"

#include "meshgen.hpp"
#include "transfer.hpp"

#include <random>

using namespace hoipc;

namespace {

VecX random_vec(std::mt19937& rng, Eigen::Index n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VecX v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("P1 level-0 transfer is a selection matrix") {
  const auto box = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), {2, 2, 1});
  const auto space = build_space(box, 1);
  const auto surf = upsample_surface(box, 0);
  const auto T = build_transfer(box, space, surf);
  CHECK(T.rows() == surf.num_vertices());
  CHECK(T.cols() == space.num_nodes);
  for (int j = 0; j < T.rows(); ++j) {
    int ones = 0, others = 0;
    for (int k = 0; k < T.W.outerSize(); ++k)
      for (SparseMat::InnerIterator it(T.W, k); it; ++it)
        if (it.row() == j) (it.value() == 1.0 ? ones : others)++;
    CHECK(ones == 1);
    CHECK(others == 0);
  }
  // Scatter of the gradient onto the selected nodes.
  std::mt19937 rng(1);
  const VecX g = random_vec(rng, 3 * T.rows());
  const VecX pg = pullback_gradient(T, g);
  for (int j = 0; j < T.rows(); ++j) {
    int node = -1;
    for (int k = 0; k < T.W.outerSize(); ++k)
      for (SparseMat::InnerIterator it(T.W, k); it; ++it)
        if (it.row() == j) node = static_cast<int>(it.col());
    CHECK((pg.segment<3>(3 * node) - g.segment<3>(3 * j)).norm() == 0.0);
  }
}

TEST_CASE("P2 edge midpoint vertex selects the edge node") {
  HighOrderTetMesh m;
  m.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  m.connectivity = {0, 1, 2, 3};
  m.element_tags = {0};
  const auto space = build_space(m, 2);
  const auto surf = upsample_surface(m, 1);
  const auto T = build_transfer(m, space, surf);
  const SparseMat Wt = T.W.transpose();
  for (int j = 0; j < surf.num_vertices(); ++j) {
    // P2 basis at a lattice point of the order-2 lattice is a Kronecker delta.
    int count = 0;
    for (SparseMat::InnerIterator it(Wt, j); it; ++it) {
      CHECK(std::abs(it.value() - 1.0) < 1e-15);
      CHECK((space.rest_positions[it.row()] - surf.vertices[j]).norm() < 1e-15);
      ++count;
    }
    CHECK(count == 1);
  }
}

TEST_CASE("transfer invariants on curved quartic elements") {
  const auto ball = make_ball(1.0, 0, 4);
  std::mt19937 rng(4);
  for (int k = 1; k <= 4; ++k) {
    const auto space = build_space(ball, k);
    const auto surf = upsample_surface(ball, 2);
    const auto T = build_transfer(ball, space, surf);
    // Partition of unity and row sparsity.
    const SparseMat Wt = T.W.transpose();
    for (int j = 0; j < T.rows(); ++j) {
      double sum = 0.0;
      int nnz = 0;
      for (SparseMat::InnerIterator it(Wt, j); it; ++it) {
        sum += it.value();
        ++nnz;
      }
      CHECK(std::abs(sum - 1.0) < 1e-10);
      CHECK(nnz <= space.dofs_per_element());
    }
    // Rigid translation and linearity.
    VecX t(3 * space.num_nodes);
    for (int i = 0; i < space.num_nodes; ++i) t.segment<3>(3 * i) = Vec3(0.3, -1.2, 2.0);
    const VecX st = apply_transfer(T, t);
    for (int j = 0; j < T.rows(); ++j) CHECK((st.segment<3>(3 * j) - Vec3(0.3, -1.2, 2.0)).norm() < 1e-10);
    CHECK(apply_transfer(T, VecX::Zero(3 * space.num_nodes)).norm() == 0.0);
    const VecX u1 = random_vec(rng, 3 * space.num_nodes), u2 = random_vec(rng, 3 * space.num_nodes);
    CHECK((apply_transfer(T, 2.0 * u1 - 0.5 * u2) - (2.0 * apply_transfer(T, u1) - 0.5 * apply_transfer(T, u2))).norm() <
          1e-12 * u1.norm() * T.rows());
    // Adjoint identity.
    const VecX g = random_vec(rng, 3 * T.rows());
    const double lhs = pullback_gradient(T, g).dot(u1), rhs = g.dot(apply_transfer(T, u1));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)) * 10);
    CHECK(pullback_gradient(T, VecX::Zero(3 * T.rows())).norm() == 0.0);
    // Gram matrix is symmetric PSD.
    SparseMat I(3 * T.rows(), 3 * T.rows());
    I.setIdentity();
    const SparseMat G = pullback_hessian(T, I);
    CHECK(SparseMat(G - SparseMat(G.transpose())).norm() == 0.0);
    for (int trial = 0; trial < 5; ++trial) {
      const VecX x = random_vec(rng, G.rows());
      CHECK(x.dot(G * x) >= -1e-12);
    }
    // W depends only on the rest geometry.
    const auto T2 = build_transfer(ball, space, surf);
    CHECK(SparseMat(T2.W - T.W).norm() == 0.0);
  }
}

TEST_CASE("pulled-back Hessian matches differences of the pulled-back gradient") {
  const auto ball = make_ball(1.0, 0, 2);
  const auto space = build_space(ball, 2);
  const auto surf = upsample_surface(ball, 1);
  const auto T = build_transfer(ball, space, surf);
  // Surface energy: sum_j |x_j|^4 / 4, gradient |x|^2 x, Hessian |x|^2 I + 2 x x^T.
  auto surface_grad = [&](const VecX& x) {
    VecX g(x.size());
    for (Eigen::Index j = 0; j < x.size() / 3; ++j) g.segment<3>(3 * j) = x.segment<3>(3 * j).squaredNorm() * x.segment<3>(3 * j);
    return g;
  };
  std::mt19937 rng(8);
  const VecX u = 0.1 * random_vec(rng, 3 * space.num_nodes);
  const VecX x = apply_transfer(T, u);
  std::vector<Triplet> trip;
  for (Eigen::Index j = 0; j < x.size() / 3; ++j) {
    const Vec3 xj = x.segment<3>(3 * j);
    const Mat3 Hj = xj.squaredNorm() * Mat3::Identity() + 2.0 * xj * xj.transpose();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(3 * j + a, 3 * j + b, Hj(a, b));
  }
  SparseMat Hs(x.size(), x.size());
  Hs.setFromTriplets(trip.begin(), trip.end());
  const SparseMat H = pullback_hessian(T, Hs);
  const VecX dir = random_vec(rng, u.size());
  const double h = 1e-6;
  const VecX fd = (pullback_gradient(T, surface_grad(apply_transfer(T, u + h * dir))) -
                   pullback_gradient(T, surface_grad(apply_transfer(T, u - h * dir)))) / (2 * h);
  CHECK((H * dir - fd).norm() <= 1e-5 * fd.norm());

  SparseMat asym(x.size(), x.size());
  asym.insert(0, 1) = 1.0;
  CHECK_THROWS_AS(pullback_hessian(T, asym), Error);
  CHECK_THROWS_AS(apply_transfer(T, VecX::Zero(5)), Error);
  CHECK_THROWS_AS(pullback_gradient(T, VecX::Zero(5)), Error);
}

TEST_CASE("inverse geometric map") {
  // Linear tet: closed-form barycentric solve.
  HighOrderTetMesh lin;
  lin.nodes = {Vec3(0.1, 0.2, -0.3), Vec3(1.5, 0.1, 0.2), Vec3(0.2, 1.1, 0.0), Vec3(-0.1, 0.3, 0.9)};
  lin.connectivity = {0, 1, 2, 3};
  lin.element_tags = {0};
  std::mt19937 rng(12);
  std::uniform_real_distribution<double> u(0.0, 0.33);
  Mat3 A;
  for (int k = 0; k < 3; ++k) A.col(k) = lin.nodes[k + 1] - lin.nodes[0];
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 x = lin.nodes[0] + A * Vec3(u(rng), u(rng), u(rng));
    const Vec3 closed = A.inverse() * (x - lin.nodes[0]);
    const auto inv = invert_geometric_map(lin, 0, x, RefPoint(0.25, 0.25, 0.25));
    CHECK(inv.converged);
    CHECK((inv.point.vec() - closed).norm() < 1e-12);
  }
  // Round trip on curved elements.
  const auto ball = make_ball(1.0, 0, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int e = trial % ball.num_elements();
    const RefPoint p(u(rng), u(rng), u(rng));
    const Vec3 guess = p.vec() + Vec3(0.02, -0.02, 0.01);
    const auto inv = invert_geometric_map(ball, e, geometric_map(ball, e, p), RefPoint(guess));
    CHECK(inv.converged);
    CHECK((inv.point.vec() - p.vec()).norm() < 1e-8);
  }
  // Corners.
  const auto refs = reference_nodes(1);
  for (int k = 0; k < 4; ++k) {
    const auto inv = invert_geometric_map(ball, 3, ball.nodes[ball.element(3)[k]], RefPoint(0.25, 0.25, 0.25));
    CHECK((inv.point.vec() - refs[k].vec()).norm() < 1e-8);
  }
  CHECK_THROWS_AS(invert_geometric_map(ball, 0, Vec3::Zero(), RefPoint(NAN, 0, 0)), Error);
}

TEST_CASE("proxy embedding") {
  // Reference-shaped tet: centroid maps to (1/4, 1/4, 1/4).
  HighOrderTetMesh tet;
  tet.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  tet.connectivity = {0, 1, 2, 3};
  tet.element_tags = {0};
  const auto s = embed_proxy(tet, {Vec3(0.25, 0.25, 0.25)}, {});
  CHECK((s.preimages[0].point.vec() - Vec3(0.25, 0.25, 0.25)).norm() < 1e-12);

  // Proxy equal to the level-1 upsampled boundary of a curved mesh.
  const auto ball = make_ball(1.0, 0, 3);
  const auto up = upsample_surface(ball, 1);
  const auto emb = embed_proxy(ball, up.vertices, up.triangles);
  const auto space = build_space(ball, 2);
  const auto T_up = build_transfer(ball, space, up);
  const auto T_emb = build_transfer(ball, space, emb);
  for (int j = 0; j < up.num_vertices(); ++j) {
    const auto& a = emb.preimages[j];
    CHECK((geometric_map(ball, a.element, a.point) - up.vertices[j]).norm() < 1e-8);
    CHECK(a.point.inside(1e-8));
  }
  // Vertices shared by several elements may pick a different element, but the transfer agrees.
  std::mt19937 rng(3);
  const VecX u = random_vec(rng, 3 * space.num_nodes);
  CHECK((apply_transfer(T_up, u) - apply_transfer(T_emb, u)).cwiseAbs().maxCoeff() < 1e-7);

  // A mesh vertex: residual zero at that corner.
  const auto corner = embed_proxy(ball, {ball.nodes[5]}, {});
  CHECK((geometric_map(ball, corner.preimages[0].element, corner.preimages[0].point) - ball.nodes[5]).norm() < 1e-12);

  // Ties at shared faces go to the lowest element index.
  const auto box = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  const auto tie = embed_proxy(box, {Vec3(0.5, 0.5, 0.5)}, {});
  CHECK(tie.preimages[0].element == 0);

  CHECK_THROWS_AS(embed_proxy(ball, {Vec3(10, 0, 0)}, {}), Error);
  CHECK_THROWS_AS(embed_proxy(ball, {Vec3(0, 0, 0)}, {{0, 1, 2}}), Error);
}
