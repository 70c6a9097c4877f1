#pragma once

#include "basis.hpp"
#include "types.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hoipc {

/// Curved tetrahedral mesh. Element node lists follow the lattice order of `lattice(order)`.
struct HighOrderTetMesh {
  std::vector<Vec3> nodes;
  std::vector<int> connectivity;   // stride node_count(geometry_order)
  std::vector<int> element_tags;   // physical group per element (0 when absent)
  int geometry_order = 1;

  int nodes_per_element() const { return node_count(geometry_order); }
  int num_elements() const { return static_cast<int>(connectivity.size()) / nodes_per_element(); }
  std::span<const int> element(int e) const {
    return {connectivity.data() + static_cast<std::size_t>(e) * nodes_per_element(),
            static_cast<std::size_t>(nodes_per_element())};
  }
  double bbox_diagonal() const;
};

/// Parses a Gmsh MSH 2.2 ASCII document. Tetrahedra of types 4/11/29/30 are read; other element
/// types are ignored. Throws on malformed input, mixed orders, or a non-positive Jacobian.
HighOrderTetMesh load_mesh(std::string_view bytes);
HighOrderTetMesh load_mesh_file(const std::filesystem::path& path);
std::string write_msh(const HighOrderTetMesh& mesh);

Vec3 geometric_map(const HighOrderTetMesh& mesh, int elem, const RefPoint& p);
Mat3 geometric_map_jacobian(const HighOrderTetMesh& mesh, int elem, const RefPoint& p);

/// Continuous Lagrange displacement space of a given order over a mesh. Lattice points shared
/// by neighbouring elements are identified through their corner vertices.
struct FeSpace {
  int order = 1;
  int num_nodes = 0;
  std::vector<int> element_dofs;         // stride node_count(order)
  std::vector<Vec3> rest_positions;      // g(node) per displacement node
  std::vector<int> geometry_node_dof;    // per mesh node: displacement node or -1 (geometry-only)

  int dofs_per_element() const { return node_count(order); }
  std::span<const int> element(int e) const {
    return {element_dofs.data() + static_cast<std::size_t>(e) * dofs_per_element(),
            static_cast<std::size_t>(dofs_per_element())};
  }
};

FeSpace build_space(const HighOrderTetMesh& mesh, int basis_order);

struct PositivityResult {
  bool ok = true;
  int element = -1;
  int quad_point = -1;
  double det = 0.0;
};

/// Checks det of the deformed map Jacobian at every quadrature point. `displacement` holds
/// 3 * space.num_nodes entries. `exactness` < 0 selects 2 * max(basis, geometry) order.
PositivityResult check_positivity(const HighOrderTetMesh& mesh, const FeSpace& space,
                                  const VecX& displacement, int exactness = -1);

struct BoundaryFace {
  int element = -1;
  int local_face = -1;           // index of the opposite local vertex
  std::array<int, 3> corners{};  // local corner indices, outward orientation
};

/// Faces owned by exactly one element, oriented away from the element centroid.
std::vector<BoundaryFace> extract_boundary(const HighOrderTetMesh& mesh);

struct SurfacePreimage {
  int element = -1;
  RefPoint point;
};

/// Piecewise-linear triangle surface used for contact. Each vertex carries its pre-image.
struct CollisionSurface {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<SurfacePreimage> preimages;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
};

/// Uniform 4-way subdivision of every boundary face applied `level` times in the face reference
/// domain, with vertex positions through the geometric map and shared vertices merged.
CollisionSurface upsample_surface(const HighOrderTetMesh& mesh, int level);

/// Unique undirected edges of a triangle list, sorted.
std::vector<std::array<int, 2>> surface_edges(const std::vector<std::array<int, 3>>& triangles);

}  // namespace hoipc
