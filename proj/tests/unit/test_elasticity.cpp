#include "doctest.h"

#include "elasticity.hpp"
#include "meshgen.hpp"

#include <Eigen/Eigenvalues>

#include <random>

using namespace hoipc;

namespace {

Mat3 random_F(std::mt19937& rng, double min_det) {
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  while (true) {
    Mat3 F = Mat3::Identity();
    for (int i = 0; i < 9; ++i) F.data()[i] += u(rng);
    if (F.determinant() > min_det) return F;
  }
}

VecX random_vec(std::mt19937& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VecX v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

HighOrderTetMesh reference_tet() {
  HighOrderTetMesh m;
  m.nodes = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};
  m.connectivity = {0, 1, 2, 3};
  m.element_tags = {0};
  return m;
}

}  // namespace

TEST_CASE("material parameters") {
  Material m{1000.0, 1e7, 0.4};
  // Lame parameters: mu = E / (2(1+nu)), lambda = E nu / ((1+nu)(1-2nu))
  CHECK(std::abs(m.mu() - 1e7 / 2.8) < 1e-6);
  CHECK(std::abs(m.lambda() - 4e6 / (1.4 * 0.2)) < 1e-6);
  CHECK_NOTHROW(m.validate());
  CHECK_THROWS_AS((Material{-1.0, 1e7, 0.4}.validate()), Error);
  CHECK_THROWS_AS((Material{1.0, 0.0, 0.4}.validate()), Error);
  CHECK_THROWS_AS((Material{1.0, 1e7, 0.5}.validate()), Error);
}

TEST_CASE("Neo-Hookean density at rest and under rotation") {
  const auto rest = neo_hookean_density(Mat3::Identity(), 2.0, 3.0);
  CHECK(rest.psi == 0.0);
  CHECK(rest.P.norm() < 1e-15);
  const Mat3 R = Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized()).toRotationMatrix();
  const auto rot = neo_hookean_density(R, 2.0, 3.0);
  CHECK(std::abs(rot.psi) < 1e-14);
  CHECK(rot.P.norm() < 1e-13);
  Mat3 bad = Mat3::Identity();
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(neo_hookean_density(bad, 1.0, 1.0), Error);
}

TEST_CASE("Neo-Hookean derivatives match finite differences") {
  std::mt19937 rng(21);
  const double mu = 1.3, lambda = 4.1, h = 1e-6;
  for (int trial = 0; trial < 50; ++trial) {
    const Mat3 F = random_F(rng, 0.2);
    const auto ev = neo_hookean_density(F, mu, lambda);
    Mat3 fdP;
    Mat9 fdH;
    for (int k = 0; k < 9; ++k) {
      Mat3 Fp = F, Fm = F;
      Fp.data()[k] += h;
      Fm.data()[k] -= h;
      const auto ep = neo_hookean_density(Fp, mu, lambda), em = neo_hookean_density(Fm, mu, lambda);
      fdP.data()[k] = (ep.psi - em.psi) / (2 * h);
      const Mat3 dP = (ep.P - em.P) / (2 * h);
      for (int r = 0; r < 9; ++r) fdH(r, k) = dP.data()[r];
    }
    CHECK((ev.P - fdP).norm() <= 1e-5 * std::max(1.0, ev.P.norm()));
    CHECK((ev.dPdF - fdH).norm() <= 1e-5 * std::max(1.0, ev.dPdF.norm()));
    CHECK((ev.dPdF - ev.dPdF.transpose()).norm() < 1e-10 * ev.dPdF.norm());
  }
}

TEST_CASE("PSD projection") {
  Eigen::Matrix3d A;
  A << 2, 0, 0, 0, -1, 0, 0, 0, 3;
  const MatX P = project_psd(A);
  CHECK(std::abs(P(1, 1)) < 1e-15);
  CHECK(std::abs(P(0, 0) - 2) < 1e-14);
  Eigen::SelfAdjointEigenSolver<MatX> es(project_psd(MatX::Random(12, 12)));
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("deformation gradient") {
  const auto tet = reference_tet();
  const auto s1 = build_space(tet, 1);
  const RefPoint p(0.2, 0.3, 0.1);
  CHECK((deformation_gradient(tet, s1, VecX::Zero(12), 0, p) - Mat3::Identity()).norm() == 0.0);
  VecX t(12);
  for (int i = 0; i < 4; ++i) t.segment<3>(3 * i) = Vec3(1, 2, 3);
  CHECK((deformation_gradient(tet, s1, t, 0, p) - Mat3::Identity()).norm() < 1e-15);
  Mat3 A;
  A << 0.1, 0.2, -0.1, 0.0, 0.3, 0.05, -0.2, 0.1, 0.0;
  // Affine fields are reproduced exactly at every order, also on curved geometry.
  const auto ball = make_ball(1.0, 0, 3);
  for (int k = 1; k <= 3; ++k) {
    const auto s = build_space(k == 1 ? tet : ball, k);
    const auto& mesh = k == 1 ? tet : ball;
    if (k > 1 && mesh.geometry_order > k) continue;
    VecX u(3 * s.num_nodes);
    for (int i = 0; i < s.num_nodes; ++i) u.segment<3>(3 * i) = A * s.rest_positions[i];
    CHECK((deformation_gradient(mesh, s, u, 0, p) - (Mat3::Identity() + A)).norm() < 1e-12);
  }
  const auto s3 = build_space(ball, 3);
  VecX u(3 * s3.num_nodes);
  for (int i = 0; i < s3.num_nodes; ++i) u.segment<3>(3 * i) = A * s3.rest_positions[i];
  for (int e = 0; e < ball.num_elements(); ++e)
    CHECK((deformation_gradient(ball, s3, u, e, p) - (Mat3::Identity() + A)).norm() < 1e-11);
}

TEST_CASE("elastic energy, gradient and Hessian") {
  const auto box = make_box(Vec3(0, 0, 0), Vec3(1, 0.5, 0.5), {2, 1, 1});
  const Material mat{1000.0, 1e4, 0.3};
  std::mt19937 rng(5);
  for (int k = 1; k <= 3; ++k) {
    const auto s = build_space(box, k);
    const ElasticBody body(box, s, mat);
    CHECK(std::abs(body.volume() - 0.25) < 1e-13);
    const VecX zero = VecX::Zero(body.num_dofs());
    CHECK(body.energy(zero) == 0.0);
    CHECK(body.gradient(zero).norm() < 1e-10);
    const SparseMat H0 = body.hessian(zero, false);
    CHECK(SparseMat(H0 - SparseMat(H0.transpose())).norm() < 1e-9 * H0.norm());

    const VecX u = random_vec(rng, body.num_dofs(), 0.02);
    // Translation invariance.
    VecX shifted = u;
    for (int i = 0; i < s.num_nodes; ++i) shifted.segment<3>(3 * i) += Vec3(0.3, -0.2, 1.0);
    CHECK(std::abs(body.energy(shifted) - body.energy(u)) < 1e-10 * std::max(1.0, body.energy(u)));

    // Gradient and Hessian against central differences along random directions.
    const VecX g = body.gradient(u);
    const SparseMat H = body.hessian(u, false);
    const double h = 1e-7;
    for (int trial = 0; trial < 3; ++trial) {
      const VecX d = random_vec(rng, body.num_dofs(), 1.0);
      const double fd = (body.energy(u + h * d) - body.energy(u - h * d)) / (2 * h);
      CHECK(std::abs(fd - g.dot(d)) <= 1e-5 * std::max(1.0, std::abs(fd)));
      const VecX fdg = (body.gradient(u + h * d) - body.gradient(u - h * d)) / (2 * h);
      CHECK((fdg - H * d).norm() <= 1e-5 * std::max(1.0, fdg.norm()));
    }
    // The projected Hessian is PSD.
    const SparseMat Hp = body.hessian(u, true);
    for (int trial = 0; trial < 3; ++trial) {
      const VecX x = random_vec(rng, body.num_dofs(), 1.0);
      CHECK(x.dot(Hp * x) >= -1e-9 * Hp.norm());
    }
  }
}

TEST_CASE("uniform stretch energy equals density times volume") {
  const auto cube = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  const auto s = build_space(cube, 1);
  const Material mat{1000.0, 2e5, 0.35};
  const ElasticBody body(cube, s, mat);
  const Mat3 F = Vec3(1.1, 0.95, 1.02).asDiagonal();
  VecX u(3 * s.num_nodes);
  for (int i = 0; i < s.num_nodes; ++i) u.segment<3>(3 * i) = (F - Mat3::Identity()) * s.rest_positions[i];
  // Closed form for diagonal F = diag(a, b, c).
  const double J = 1.1 * 0.95 * 1.02, lnJ = std::log(J);
  const double psi = 0.5 * mat.mu() * (1.21 + 0.9025 + 1.0404 - 3.0) - mat.mu() * lnJ + 0.5 * mat.lambda() * lnJ * lnJ;
  CHECK(std::abs(body.energy(u) - psi) < 1e-9 * psi);
  // Inverted state has infinite energy.
  VecX flip(3 * s.num_nodes);
  for (int i = 0; i < s.num_nodes; ++i) flip.segment<3>(3 * i) = Vec3(0, 0, -2.0 * s.rest_positions[i][2]);
  CHECK(std::isinf(body.energy(flip)));
}

TEST_CASE("consistent mass matrix") {
  const auto cube = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), {2, 2, 2});
  std::mt19937 rng(2);
  for (int k = 1; k <= 4; ++k) {
    const auto s = build_space(cube, k);
    const ElasticBody body(cube, s, Material{1000.0, 1e6, 0.3});
    CHECK(std::abs(body.mass().sum() - 1000.0) < 1e-10 * 1000.0);
    CHECK(std::abs(body.mass3().sum() - 3000.0) < 1e-10 * 3000.0);
    for (int trial = 0; trial < 5; ++trial) {
      const VecX x = random_vec(rng, s.num_nodes, 1.0);
      CHECK(x.dot(body.mass() * x) > 0.0);
    }
  }
  // Curved ball: total mass approaches rho * 4/3 pi r^3.
  const auto ball = make_ball(0.1, 1, 4);
  const ElasticBody bb(ball, build_space(ball, 1), Material{700.0, 5.91e5, 0.45});
  CHECK(std::abs(bb.mass().sum() - 700.0 * 4.0 / 3.0 * M_PI * 1e-3) < 1e-3 * 700.0 * 4.0 / 3.0 * M_PI * 1e-3);
  CHECK(std::abs(bb.mass().sum() - 700.0 * bb.volume()) < 1e-12);

  // Per-tag density override.
  auto tagged = cube;
  for (int e = 0; e < tagged.num_elements() / 2; ++e) tagged.element_tags[e] = 2;
  const ElasticBody tb(tagged, build_space(tagged, 1), Material{1000.0, 1e6, 0.3}, {{2, 3000.0}});
  CHECK(std::abs(tb.mass().sum() - 2000.0) < 1e-9);
  CHECK_THROWS_AS(ElasticBody(tagged, build_space(tagged, 1), Material{1000.0, 1e6, 0.3}, {{2, -1.0}}), Error);
}

TEST_CASE("incremental potential") {
  const auto cube = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1), {1, 1, 1});
  const auto s = build_space(cube, 2);
  const ElasticBody body(cube, s, Material{1000.0, 1e5, 0.3});
  IncrementalState st;
  st.h = 0.01;
  st.acceleration = Vec3(0, 0, -9.81);
  st.u_prev = VecX::Zero(body.num_dofs());
  st.v_prev = VecX::Zero(body.num_dofs());
  for (int i = 0; i < s.num_nodes; ++i) st.v_prev.segment<3>(3 * i) = Vec3(1, 0, 2);
  // Rigid predictor: zero gradient, so one implicit-Euler step is u0 + h v0 + h^2 g.
  const VecX ut = st.predictor();
  for (int i = 0; i < s.num_nodes; ++i)
    CHECK((ut.segment<3>(3 * i) - (0.01 * Vec3(1, 0, 2) + 1e-4 * Vec3(0, 0, -9.81))).norm() < 1e-15);
  CHECK(incremental_gradient(body, st, ut).norm() < 1e-9);
  CHECK(std::abs(incremental_potential(body, st, ut)) < 1e-12);

  std::mt19937 rng(3);
  const VecX u = ut + random_vec(rng, body.num_dofs(), 0.01);
  const VecX d = random_vec(rng, body.num_dofs(), 1.0);
  const double h = 1e-7;
  const double fd = (incremental_potential(body, st, u + h * d) - incremental_potential(body, st, u - h * d)) / (2 * h);
  CHECK(std::abs(fd - incremental_gradient(body, st, u).dot(d)) < 1e-5 * std::max(1.0, std::abs(fd)));
  const VecX fdg = (incremental_gradient(body, st, u + h * d) - incremental_gradient(body, st, u - h * d)) / (2 * h);
  CHECK((fdg - incremental_hessian(body, st, u, false) * d).norm() < 1e-5 * fdg.norm());
}
