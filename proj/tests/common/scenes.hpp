#pragma once

#include "meshgen.hpp"
#include "world.hpp"

#include <memory>

namespace scenes {

using namespace hoipc;

inline BodySetup cube_body(const Vec3& lo, double side, int cells, int basis, double E = 1e5) {
  BodySetup b;
  b.mesh = make_box(lo, lo + Vec3::Constant(side), {cells, cells, cells});
  b.basis_order = basis;
  b.material.density = 1000.0;
  b.material.youngs_modulus = E;
  b.material.poisson_ratio = 0.3;
  return b;
}

inline WorldParams base_params(double h = 0.01) {
  WorldParams p;
  p.h = h;
  p.gravity = Vec3(0, 0, -9.81);
  p.contact.dhat = 1e-3;
  p.solver.newton_tolerance = 1e-8;
  return p;
}

/// Unit cube half a millimetre above a plane.
inline std::unique_ptr<World> resting_cube(int basis, const WorldParams& params, double E = 1e7) {
  std::vector<BodySetup> bodies{cube_body(Vec3(0, 0, 0.5e-3), 1.0, 1, basis, E)};
  std::vector<ColliderSetup> colliders{make_plane(Vec3(0.7, 0.4, 0.0), Vec3::UnitZ(), 3.0)};
  return std::make_unique<World>(std::move(bodies), std::move(colliders), params);
}

/// Upper cube falling onto a lower cube that rests on a plane.
inline std::unique_ptr<World> two_cubes(int basis, const WorldParams& params, bool direct = false) {
  std::vector<BodySetup> bodies{cube_body(Vec3(0, 0, 0.5e-3), 0.5, 1, basis),
                                cube_body(Vec3(0.1, 0.05, 0.5 + 2e-3), 0.5, 1, basis)};
  bodies[1].initial_velocity = Vec3(0, 0, -0.2);
  std::vector<ColliderSetup> colliders{make_plane(Vec3(0.4, 0.2, 0.0), Vec3::UnitZ(), 2.0)};
  return std::make_unique<World>(std::move(bodies), std::move(colliders), params, direct);
}

inline Vec3 barycenter(const World& w, const VecX& U, int body = 0) {
  const auto& b = w.bodies()[body];
  const VecX& m = b.elastic->lumped_mass();
  Vec3 c = Vec3::Zero();
  for (int n = 0; n < b.space.num_nodes; ++n)
    c += m[n] * (b.space.rest_positions[n] + U.segment<3>(3 * (b.node_offset + n)));
  return c / m.sum();
}

inline double max_body_speed(const World& w, const VecX& V) {
  double s = 0.0;
  for (const auto& b : w.bodies())
    for (int n = 0; n < b.space.num_nodes; ++n) s = std::max(s, V.segment<3>(3 * (b.node_offset + n)).norm());
  return s;
}

}  // namespace scenes
