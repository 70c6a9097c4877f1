#pragma once

#include "mesh.hpp"

#include <functional>

namespace hoipc {

/// Maps an element index and barycentric coordinates in a linear mesh to a physical point.
using ElementMap = std::function<Vec3(int elem, const std::array<double, 4>& bary)>;

/// Raises a linear tetrahedral mesh to `order`, placing each new lattice node at map(e, bary).
/// Lattice nodes shared between elements are created once.
HighOrderTetMesh elevate_geometry(const HighOrderTetMesh& linear, int order, const ElementMap& map = {});

/// Axis-aligned box split into cells[0] x cells[1] x cells[2] hexahedra, six tetrahedra each.
HighOrderTetMesh make_box(const Vec3& lo, const Vec3& hi, const std::array<int, 3>& cells, int geometry_order = 1);

/// Ball centred at the origin: a subdivided icosahedron coned to a centre node. For
/// geometry_order > 1 the nodes follow the radial projection onto the sphere.
HighOrderTetMesh make_ball(double radius, int refinement, int geometry_order);

}  // namespace hoipc
