#pragma once

#include "solver.hpp"

#include <map>
#include <optional>

namespace hoipc {

struct RigidKeyframe {
  double time = 0.0;
  Vec3 translation = Vec3::Zero();
  Vec3 rotation = Vec3::Zero();   // rotation vector about the pivot
};

/// Piecewise-linear rigid motion; before the first and after the last key the end keys hold.
/// An empty path is the identity.
struct RigidPath {
  Vec3 pivot = Vec3::Zero();
  std::vector<RigidKeyframe> keys;

  Vec3 apply(const Vec3& x, double t) const;
};

/// Displacement nodes whose rest position lies in [lo, hi] follow `path`.
struct DirichletRegion {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  RigidPath path;
};

struct ProxySurface {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

struct BodySetup {
  HighOrderTetMesh mesh;
  int basis_order = 1;
  Material material;
  std::map<int, double> tag_density;
  Vec3 initial_velocity = Vec3::Zero();
  int upsample_level = 0;
  std::optional<ProxySurface> proxy;
  std::vector<DirichletRegion> dirichlet;
};

struct ColliderSetup {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  RigidPath path;
};

struct WorldParams {
  Vec3 gravity = Vec3::Zero();
  double h = 0.01;
  ContactParams contact;
  FrictionParams friction;
  SolverParams solver;
};

/// Owns the discretisation of every body and collider and the assembled Problem.
/// With `direct_coupling` the surface is attached by vertex selection instead of through W
/// (P1 bases, level-0 surfaces only).
class World {
 public:
  World(std::vector<BodySetup> bodies, std::vector<ColliderSetup> colliders, const WorldParams& params,
        bool direct_coupling = false);
  World(const World&) = delete;
  World& operator=(const World&) = delete;

  struct Body {
    BodySetup setup;
    FeSpace space;
    std::unique_ptr<ElasticBody> elastic;
    CollisionSurface surface;
    TransferOperator transfer;
    int node_offset = 0;
    int vertex_offset = 0;
  };
  struct Collider {
    ColliderSetup setup;
    int node_offset = 0;
    int vertex_offset = 0;
  };

  const Problem& problem() const { return problem_; }
  Problem& problem() { return problem_; }
  const std::vector<Body>& bodies() const { return bodies_; }
  const std::vector<Collider>& colliders() const { return colliders_; }

  SimState initial_state() const;
  /// Prescribed values of the constrained DOFs at time t (other entries zero).
  VecX targets(double t) const;
  /// Global transfer matrix (3m x 3N) including identity rows for collider vertices.
  const SparseMat& global_transfer() const { return W3_; }

 private:
  std::vector<Body> bodies_;
  std::vector<Collider> colliders_;
  SparseMat W3_;
  Problem problem_;
  std::vector<std::pair<int, const RigidPath*>> node_paths_;   // constrained node -> path
  std::vector<Vec3> node_rest_;                                 // rest position per global node
};

/// Axis-aligned square of side `size` centred at `center` with outward normal `normal`.
ColliderSetup make_plane(const Vec3& center, const Vec3& normal, double size, int divisions = 1);

}  // namespace hoipc
