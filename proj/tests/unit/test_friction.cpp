#include "doctest.h"

#include "friction.hpp"

#include <random>

using namespace hoipc;

namespace {

VecX pack(const std::vector<Vec3>& v) {
  VecX x(3 * v.size());
  for (std::size_t i = 0; i < v.size(); ++i) x.segment<3>(3 * i) = v[i];
  return x;
}

struct Scene {
  VecX x0;
  std::vector<ContactStencil> contacts;
};

// A vertex resting over a triangle and a crossing edge pair, both closer than dhat.
Scene make_scene(double dhat) {
  std::vector<Vec3> v = {Vec3(0.2, 0.3, 0.3 * dhat), Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0),
                         Vec3(2, 0, 0), Vec3(3, 0.2, 0.0), Vec3(2.5, -0.5, 0.6 * dhat), Vec3(2.4, 0.6, 0.5 * dhat)};
  Scene s;
  s.x0 = pack(v);
  const ContactTopology topo(s.x0, {{1, 2, 3}});
  s.contacts = {{StencilKind::kPointTriangle, {0, 1, 2, 3}, 0.0},
                {StencilKind::kEdgeEdge, {4, 5, 6, 7}, mollifier_threshold(v[4], v[5], v[6], v[7])}};
  return s;
}

}  // namespace

TEST_CASE("smoothed friction profile") {
  const double e = 0.01;
  CHECK(friction_f0(0.0, e) == 0.0);
  CHECK(friction_f1(0.0, e) == 0.0);
  CHECK(friction_f1(e, e) == doctest::Approx(1.0));
  CHECK(friction_f1(10 * e, e) == 1.0);
  // C1 across the threshold.
  CHECK(friction_f0(e * (1 - 1e-12), e) == doctest::Approx(friction_f0(e * (1 + 1e-12), e)));
  for (double y : {0.001, 0.005, 0.02}) {
    const double h = 1e-8;
    CHECK((friction_f0(y + h, e) - friction_f0(y - h, e)) / (2 * h) == doctest::Approx(friction_f1(y, e)).epsilon(1e-6));
  }
}

TEST_CASE("friction set construction") {
  const double dhat = 1e-2;
  const auto sc = make_scene(dhat);
  CHECK(build_friction_set(sc.x0, {}, 1.0, dhat, 0.5).empty());
  const auto set = build_friction_set(sc.x0, sc.contacts, 100.0, dhat, 0.5);
  REQUIRE(set.size() == 2);
  for (const auto& f : set) {
    CHECK(f.lambda > 0.0);
    // Orthonormal tangent frame orthogonal to the normal.
    CHECK((f.basis.transpose() * f.basis - Eigen::Matrix2d::Identity()).norm() < 1e-14);
  }
  // Point above the xy-plane triangle: tangents span the plane, lambda = kappa |b'(d^2) 2 d|.
  CHECK(std::abs(set[0].basis.col(0).z()) < 1e-14);
  CHECK(std::abs(set[0].basis.col(1).z()) < 1e-14);
  const double d = 0.3 * dhat;
  CHECK(set[0].lambda == doctest::Approx(100.0 * std::abs(barrier(d * d, dhat).db * 2 * d)));

  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p(u(rng) * 0.5, u(rng) * 0.5, u(rng) * dhat);
    VecX x = sc.x0;
    x.segment<3>(0) = p;
    CHECK(build_friction_set(x, {sc.contacts[0]}, 10.0, dhat, 0.3)[0].lambda >= 0.0);
  }
}

TEST_CASE("friction potential") {
  const double dhat = 1e-2, eps_v = 1e-3, h = 0.01;
  const auto sc = make_scene(dhat);
  const auto set = build_friction_set(sc.x0, sc.contacts, 50.0, dhat, 0.4);
  // No relative tangential motion.
  const auto rest = friction_potential(set, sc.x0, sc.x0, eps_v, h, 2);
  CHECK(rest.value == 0.0);
  CHECK(rest.grad.norm() == 0.0);
  // Rigid translation of everything: still zero.
  VecX shifted = sc.x0;
  for (int i = 0; i < 8; ++i) shifted.segment<3>(3 * i) += Vec3(0.01, -0.02, 0.0);
  CHECK(std::abs(friction_potential(set, shifted, sc.x0, eps_v, h, 0).value) < 1e-18);
  // mu = 0 gives nothing.
  const auto frictionless = build_friction_set(sc.x0, sc.contacts, 50.0, dhat, 0.0);
  VecX moved = sc.x0;
  moved.segment<3>(0) += Vec3(0.001, 0.002, 0.0);
  CHECK(friction_potential(frictionless, moved, sc.x0, eps_v, h, 1).value == 0.0);

  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 40; ++trial) {
    // Slip magnitudes on both sides of the threshold eps_v * h = 1e-5.
    const double mag = trial % 2 ? 3e-6 : 1e-4;
    VecX x = sc.x0;
    for (auto& c : x) c += mag * u(rng);
    const auto f = friction_potential(set, x, sc.x0, eps_v, h, 2);
    CHECK(f.value >= 0.0);
    VecX d(x.size());
    for (auto& c : d) c = u(rng);
    const double step = 1e-9 * (trial % 2 ? 0.1 : 1.0);
    const auto fp = friction_potential(set, x + step * d, sc.x0, eps_v, h, 1);
    const auto fm = friction_potential(set, x - step * d, sc.x0, eps_v, h, 1);
    const double fd = (fp.value - fm.value) / (2 * step);
    CHECK(std::abs(fd - f.grad.dot(d)) <= 1e-5 * std::max(1e-6, std::abs(fd)));
    const VecX fdg = (fp.grad - fm.grad) / (2 * step);
    CHECK((fdg - f.hess * d).norm() <= 1e-5 * std::max(1e-6, fdg.norm()));
    // Dissipative: the force opposes relative tangential motion.
    VecX dx = x - sc.x0;
    CHECK(f.grad.dot(dx) >= 0.0);
    for (int t = 0; t < 5; ++t) {
      VecX z(x.size());
      for (auto& c : z) c = u(rng);
      CHECK(z.dot(f.hess * z) >= -1e-9 * std::max(1.0, SparseMat(f.hess).norm()));
    }
  }
}

TEST_CASE("dynamic Coulomb limit") {
  const double dhat = 1e-2, eps_v = 1e-3, h = 0.01;
  const auto sc = make_scene(dhat);
  const auto set = build_friction_set(sc.x0, {sc.contacts[0]}, 50.0, dhat, 0.4);
  VecX x = sc.x0;
  // Tangential slip of the point far above eps_v * h.
  x.segment<3>(0) += Vec3(1e-2, 5e-3, 0.0);
  const auto f = friction_potential(set, x, sc.x0, eps_v, h, 1);
  const double expected = set[0].mu * set[0].lambda;
  CHECK(std::abs(f.grad.segment<3>(0).norm() - expected) <= 0.01 * expected);
}
