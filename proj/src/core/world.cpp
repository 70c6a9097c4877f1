#include "world.hpp"

#include "ccd.hpp"

#include <Eigen/Geometry>

#include <algorithm>

namespace hoipc {

Vec3 RigidPath::apply(const Vec3& x, double t) const {
  if (keys.empty()) return x;
  Vec3 tr = keys.front().translation, rot = keys.front().rotation;
  if (t >= keys.back().time) {
    tr = keys.back().translation;
    rot = keys.back().rotation;
  } else if (t > keys.front().time) {
    auto hi = std::upper_bound(keys.begin(), keys.end(), t,
                               [](double v, const RigidKeyframe& k) { return v < k.time; });
    auto lo = hi - 1;
    const double s = (t - lo->time) / (hi->time - lo->time);
    tr = (1 - s) * lo->translation + s * hi->translation;
    rot = (1 - s) * lo->rotation + s * hi->rotation;
  }
  const double angle = rot.norm();
  const Vec3 local = x - pivot;
  const Vec3 rotated = angle > 0.0 ? Vec3(Eigen::AngleAxisd(angle, rot / angle) * local) : local;
  return rotated + pivot + tr;
}

namespace {

void validate_path(const RigidPath& p) {
  for (std::size_t i = 1; i < p.keys.size(); ++i)
    if (!(p.keys[i].time > p.keys[i - 1].time))
      throw Error(ErrorCode::kInvalidArgument, "rigid path keyframe times must increase");
}

// Vertex -> displacement node for a P1 level-0 surface, read off the pre-image corners.
std::vector<int> corner_selection(const HighOrderTetMesh& mesh, const FeSpace& space, const CollisionSurface& s) {
  std::vector<int> out;
  for (const auto& pre : s.preimages) {
    const auto b = pre.point.barycentric();
    int corner = -1;
    for (int k = 0; k < 4; ++k)
      if (b[k] == 1.0) corner = k;
    if (corner < 0) throw Error(ErrorCode::kInvalidArgument, "direct coupling needs surface vertices at element corners");
    out.push_back(space.geometry_node_dof[mesh.element(pre.element)[corner]]);
  }
  return out;
}

}  // namespace

World::World(std::vector<BodySetup> bodies, std::vector<ColliderSetup> colliders, const WorldParams& params,
             bool direct_coupling) {
  if (!(params.h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "time step must be positive");
  if (params.contact.enabled && !(params.contact.dhat > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dhat must be positive");
  if (bodies.empty()) throw Error(ErrorCode::kInvalidArgument, "scene has no deformable body");

  int nodes = 0, vertices = 0;
  std::vector<Triplet> wtrips;
  std::vector<int> selection;
  std::vector<Vec3> surface_rest;
  std::vector<std::array<int, 3>> tris;
  std::vector<char> kinematic;
  double mass_sum = 0.0;
  Eigen::AlignedBox3d box;

  for (auto& setup : bodies) {
    setup.material.validate();
    for (const auto& r : setup.dirichlet) validate_path(r.path);
    Body b;
    b.space = build_space(setup.mesh, setup.basis_order);
    b.elastic = std::make_unique<ElasticBody>(setup.mesh, b.space, setup.material, setup.tag_density);
    if (setup.proxy) {
      if (direct_coupling) throw Error(ErrorCode::kInvalidArgument, "direct coupling does not support proxies");
      b.surface = embed_proxy(setup.mesh, setup.proxy->vertices, setup.proxy->triangles);
    } else {
      b.surface = upsample_surface(setup.mesh, setup.upsample_level);
    }
    b.node_offset = nodes;
    b.vertex_offset = vertices;
    if (direct_coupling) {
      if (setup.basis_order != 1 || setup.upsample_level != 0)
        throw Error(ErrorCode::kInvalidArgument, "direct coupling needs P1 bases and level-0 surfaces");
      for (int n : corner_selection(setup.mesh, b.space, b.surface)) selection.push_back(nodes + n);
    } else {
      b.transfer = build_transfer(setup.mesh, b.space, b.surface);
      for (int k = 0; k < b.transfer.W3.outerSize(); ++k)
        for (SparseMat::InnerIterator it(b.transfer.W3, k); it; ++it)
          wtrips.emplace_back(3 * vertices + it.row(), 3 * nodes + it.col(), it.value());
    }
    for (const auto& v : b.surface.vertices) {
      surface_rest.push_back(v);
      box.extend(v);
      kinematic.push_back(0);
    }
    for (const auto& t : b.surface.triangles) tris.push_back({t[0] + vertices, t[1] + vertices, t[2] + vertices});
    for (int n = 0; n < b.space.num_nodes; ++n) node_rest_.push_back(b.space.rest_positions[n]);
    mass_sum += b.elastic->lumped_mass().sum();
    nodes += b.space.num_nodes;
    vertices += b.surface.num_vertices();
    b.setup = std::move(setup);
    bodies_.push_back(std::move(b));
  }
  const int body_nodes = nodes;

  for (auto& setup : colliders) {
    validate_path(setup.path);
    Collider c;
    c.node_offset = nodes;
    c.vertex_offset = vertices;
    const int nv = static_cast<int>(setup.vertices.size());
    for (int i = 0; i < nv; ++i) {
      for (int a = 0; a < 3; ++a) wtrips.emplace_back(3 * (vertices + i) + a, 3 * (nodes + i) + a, 1.0);
      selection.push_back(nodes + i);
      surface_rest.push_back(setup.vertices[i]);
      node_rest_.push_back(setup.vertices[i]);
      kinematic.push_back(1);
    }
    for (const auto& t : setup.triangles) {
      for (int k : t)
        if (k < 0 || k >= nv) throw Error(ErrorCode::kInvalidArgument, "collider triangle index out of range");
      tris.push_back({t[0] + vertices, t[1] + vertices, t[2] + vertices});
    }
    nodes += nv;
    vertices += nv;
    c.setup = std::move(setup);
    colliders_.push_back(std::move(c));
  }

  W3_.resize(3 * vertices, 3 * nodes);
  W3_.setFromTriplets(wtrips.begin(), wtrips.end());

  Problem& p = problem_;
  p.num_nodes = nodes;
  p.surface_rest.resize(3 * vertices);
  for (int i = 0; i < vertices; ++i) p.surface_rest.segment<3>(3 * i) = surface_rest[i];
  p.coupling = direct_coupling ? Coupling::selection(selection, nodes) : Coupling::from_matrix(W3_);
  p.topology = ContactTopology(p.surface_rest, tris, kinematic);
  p.constrained.assign(3 * nodes, 0);
  for (const Body& b : bodies_) {
    BodyBlock blk;
    blk.mesh = &b.setup.mesh;
    blk.space = &b.space;
    blk.elastic = b.elastic.get();
    blk.node_offset = b.node_offset;
    p.bodies.push_back(blk);
    for (const auto& r : b.setup.dirichlet)
      for (int n = 0; n < b.space.num_nodes; ++n) {
        const Vec3& x = b.space.rest_positions[n];
        if ((x.array() >= r.lo.array()).all() && (x.array() <= r.hi.array()).all()) {
          const int g = b.node_offset + n;
          if (p.constrained[3 * g]) continue;
          for (int a = 0; a < 3; ++a) p.constrained[3 * g + a] = 1;
          node_paths_.emplace_back(g, &r.path);
        }
      }
  }
  for (const Collider& c : colliders_)
    for (int i = 0; i < static_cast<int>(c.setup.vertices.size()); ++i) {
      const int g = c.node_offset + i;
      for (int a = 0; a < 3; ++a) p.constrained[3 * g + a] = 1;
      node_paths_.emplace_back(g, &c.setup.path);
    }

  p.gravity = params.gravity;
  p.h = params.h;
  p.contact = params.contact;
  p.friction = params.friction;
  p.solver = params.solver;
  p.bbox_diagonal = box.isEmpty() ? 1.0 : box.diagonal().norm();
  p.average_mass = mass_sum / std::max(1, body_nodes);
  if (p.contact.enabled && has_intersections(p.topology, p.surface_rest))
    throw Error(ErrorCode::kIntersecting, "rest configuration is intersecting");
}

SimState World::initial_state() const {
  SimState s;
  s.U = VecX::Zero(problem_.num_dofs());
  s.V = VecX::Zero(problem_.num_dofs());
  for (const Body& b : bodies_)
    for (int n = 0; n < b.space.num_nodes; ++n) s.V.segment<3>(3 * (b.node_offset + n)) = b.setup.initial_velocity;
  const VecX t0 = targets(0.0);
  for (int i = 0; i < problem_.num_dofs(); ++i)
    if (problem_.constrained[i]) {
      s.U[i] = t0[i];
      s.V[i] = 0.0;
    }
  return s;
}

VecX World::targets(double t) const {
  VecX out = VecX::Zero(problem_.num_dofs());
  for (const auto& [node, path] : node_paths_) out.segment<3>(3 * node) = path->apply(node_rest_[node], t) - node_rest_[node];
  return out;
}

ColliderSetup make_plane(const Vec3& center, const Vec3& normal, double size, int divisions) {
  if (!(size > 0.0) || divisions < 1 || !(normal.norm() > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "invalid plane");
  const Vec3 n = normal.normalized();
  Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  a = (a - a.dot(n) * n).normalized();
  const Vec3 b = n.cross(a);
  ColliderSetup c;
  const int m = divisions + 1;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      c.vertices.push_back(center + size * ((double(i) / divisions - 0.5) * a + (double(j) / divisions - 0.5) * b));
  for (int j = 0; j < divisions; ++j)
    for (int i = 0; i < divisions; ++i) {
      const int v0 = j * m + i, v1 = v0 + 1, v2 = v0 + m, v3 = v2 + 1;
      c.triangles.push_back({v0, v1, v3});
      c.triangles.push_back({v0, v3, v2});
    }
  return c;
}

}  // namespace hoipc
