#include "mesh.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace hoipc {

namespace {

int msh_type_to_order(int type) {
  switch (type) {
    case 4: return 1;
    case 11: return 2;
    case 29: return 3;
    case 30: return 4;
    default: return 0;
  }
}

int order_to_msh_type(int order) {
  constexpr int types[] = {0, 4, 11, 29, 30};
  return types[order];
}

[[noreturn]] void parse_error(const std::string& msg) { throw Error(ErrorCode::kParse, "mesh parse error: " + msg); }

// Local faces: face i is opposite local vertex i.
constexpr int kLocalFaces[4][3] = {{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}};

using LatticeKey = std::vector<std::pair<int, int>>;

// Identifies a lattice point through the global corner ids with non-zero weight.
LatticeKey lattice_key(std::span<const int> corners, const LatticeIndex& a) {
  LatticeKey key;
  for (int m = 0; m < 4; ++m)
    if (a[m] > 0) key.emplace_back(corners[m], a[m]);
  std::sort(key.begin(), key.end());
  return key;
}

}  // namespace

double HighOrderTetMesh::bbox_diagonal() const {
  if (nodes.empty()) return 0.0;
  Vec3 lo = nodes.front(), hi = nodes.front();
  for (const auto& x : nodes) {
    lo = lo.cwiseMin(x);
    hi = hi.cwiseMax(x);
  }
  return (hi - lo).norm();
}

HighOrderTetMesh load_mesh(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  std::string token;
  HighOrderTetMesh mesh;
  std::map<long, int> node_index;
  bool have_format = false, have_nodes = false, have_elements = false;
  int order = 0;
  std::vector<std::vector<long>> raw_elements;

  while (in >> token) {
    if (token == "$MeshFormat") {
      double version;
      int file_type, data_size;
      if (!(in >> version >> file_type >> data_size)) parse_error("bad $MeshFormat header");
      if (version < 2.0 || version >= 3.0) parse_error("only MSH 2.x is supported");
      if (file_type != 0) parse_error("only ASCII files are supported");
      in >> token;
      if (token != "$EndMeshFormat") parse_error("missing $EndMeshFormat");
      have_format = true;
    } else if (token == "$Nodes") {
      long count;
      if (!(in >> count) || count < 0) parse_error("bad node count");
      mesh.nodes.reserve(static_cast<std::size_t>(count));
      for (long i = 0; i < count; ++i) {
        long id;
        Vec3 x;
        if (!(in >> id >> x[0] >> x[1] >> x[2])) parse_error("truncated $Nodes section");
        if (!node_index.emplace(id, static_cast<int>(mesh.nodes.size())).second)
          parse_error("duplicate node id " + std::to_string(id));
        mesh.nodes.push_back(x);
      }
      in >> token;
      if (token != "$EndNodes") parse_error("missing $EndNodes");
      have_nodes = true;
    } else if (token == "$Elements") {
      long count;
      if (!(in >> count) || count < 0) parse_error("bad element count");
      for (long i = 0; i < count; ++i) {
        long id;
        int type, ntags;
        if (!(in >> id >> type >> ntags) || ntags < 0) parse_error("truncated $Elements section");
        std::vector<long> tags(static_cast<std::size_t>(ntags));
        for (auto& t : tags)
          if (!(in >> t)) parse_error("truncated element tags");
        const int el_order = msh_type_to_order(type);
        int nn = 0;
        if (el_order > 0) {
          nn = node_count(el_order);
        } else {
          // Skip non-tetrahedral elements; node counts of common Gmsh types.
          static const std::map<int, int> other = {{1, 2}, {2, 3}, {3, 4}, {5, 8}, {6, 6}, {7, 5},
                                                   {8, 3}, {9, 6}, {15, 1}, {21, 10}, {23, 15}, {26, 4},
                                                   {27, 5}, {20, 9}, {22, 12}};
          auto it = other.find(type);
          if (it == other.end()) parse_error("unsupported element type " + std::to_string(type));
          nn = it->second;
        }
        std::vector<long> ids(static_cast<std::size_t>(nn));
        for (auto& n : ids)
          if (!(in >> n)) parse_error("truncated element node list");
        if (el_order == 0) continue;
        if (order == 0) order = el_order;
        if (order != el_order) parse_error("mixed tetrahedron orders in one mesh");
        ids.push_back(tags.empty() ? 0 : tags.front());
        raw_elements.push_back(std::move(ids));
      }
      in >> token;
      if (token != "$EndElements") parse_error("missing $EndElements");
      have_elements = true;
    } else if (!token.empty() && token[0] == '$' && token.rfind("$End", 0) != 0) {
      // Unknown section: skip to its end marker.
      const std::string end = "$End" + token.substr(1);
      while (in >> token && token != end) {}
    }
  }
  if (!have_format || !have_nodes || !have_elements) parse_error("missing $MeshFormat, $Nodes or $Elements");
  if (raw_elements.empty()) parse_error("no tetrahedra found");

  mesh.geometry_order = order;
  const int npe = node_count(order);
  for (const auto& el : raw_elements) {
    for (int k = 0; k < npe; ++k) {
      auto it = node_index.find(el[k]);
      if (it == node_index.end()) parse_error("element references unknown node " + std::to_string(el[k]));
      mesh.connectivity.push_back(it->second);
    }
    mesh.element_tags.push_back(static_cast<int>(el[npe]));
  }

  const FeSpace space = build_space(mesh, 1);
  const auto check = check_positivity(mesh, space, VecX::Zero(3 * space.num_nodes), 2 * order);
  if (!check.ok)
    throw Error(ErrorCode::kInvalidMesh, "element " + std::to_string(check.element) +
                                             " has a non-positive Jacobian (det = " +
                                             std::to_string(check.det) + ")");
  return mesh;
}

HighOrderTetMesh load_mesh_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open mesh file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return load_mesh(ss.str());
}

std::string write_msh(const HighOrderTetMesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << mesh.nodes.size() << "\n";
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    out << i + 1 << " " << mesh.nodes[i][0] << " " << mesh.nodes[i][1] << " " << mesh.nodes[i][2] << "\n";
  out << "$EndNodes\n$Elements\n" << mesh.num_elements() << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int tag = e < static_cast<int>(mesh.element_tags.size()) ? mesh.element_tags[e] : 0;
    out << e + 1 << " " << order_to_msh_type(mesh.geometry_order) << " 2 " << tag << " " << tag;
    for (int n : mesh.element(e)) out << " " << n + 1;
    out << "\n";
  }
  out << "$EndElements\n";
  return out.str();
}

Vec3 geometric_map(const HighOrderTetMesh& mesh, int elem, const RefPoint& p) {
  if (elem < 0 || elem >= mesh.num_elements())
    throw Error(ErrorCode::kInvalidArgument, "element index out of range");
  VecX phi;
  eval_basis_all(mesh.geometry_order, p, phi);
  Vec3 x = Vec3::Zero();
  const auto nodes = mesh.element(elem);
  for (std::size_t k = 0; k < nodes.size(); ++k) x += phi[k] * mesh.nodes[nodes[k]];
  return x;
}

Mat3 geometric_map_jacobian(const HighOrderTetMesh& mesh, int elem, const RefPoint& p) {
  if (elem < 0 || elem >= mesh.num_elements())
    throw Error(ErrorCode::kInvalidArgument, "element index out of range");
  Eigen::Matrix<double, Eigen::Dynamic, 3> grads;
  eval_basis_grad_all(mesh.geometry_order, p, grads);
  Mat3 J = Mat3::Zero();
  const auto nodes = mesh.element(elem);
  for (std::size_t k = 0; k < nodes.size(); ++k) J += mesh.nodes[nodes[k]] * grads.row(k);
  return J;
}

FeSpace build_space(const HighOrderTetMesh& mesh, int basis_order) {
  if (basis_order < 1 || basis_order > kMaxOrder)
    throw Error(ErrorCode::kInvalidArgument, "unsupported basis order " + std::to_string(basis_order));
  FeSpace space;
  space.order = basis_order;
  const auto& lat = lattice(basis_order);
  const auto refs = reference_nodes(basis_order);
  std::map<LatticeKey, int> ids;
  space.element_dofs.reserve(static_cast<std::size_t>(mesh.num_elements()) * lat.size());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto corners = mesh.element(e).first(4);
    for (std::size_t i = 0; i < lat.size(); ++i) {
      auto [it, inserted] = ids.emplace(lattice_key(corners, lat[i]), space.num_nodes);
      if (inserted) {
        space.rest_positions.push_back(geometric_map(mesh, e, refs[i]));
        ++space.num_nodes;
      }
      space.element_dofs.push_back(it->second);
    }
  }

  // A geometry node holds a displacement DOF when its lattice point exists in both lattices.
  space.geometry_node_dof.assign(mesh.nodes.size(), -1);
  const int g = mesh.geometry_order;
  const auto& glat = lattice(g);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto gnodes = mesh.element(e);
    const auto dofs = space.element(e);
    for (std::size_t a = 0; a < glat.size(); ++a) {
      LatticeIndex b{};
      bool representable = true;
      for (int m = 0; m < 4; ++m) {
        if ((glat[a][m] * basis_order) % g != 0) representable = false;
        b[m] = glat[a][m] * basis_order / g;
      }
      if (!representable) continue;
      const auto it = std::find(lat.begin(), lat.end(), b);
      space.geometry_node_dof[gnodes[a]] = dofs[static_cast<std::size_t>(it - lat.begin())];
    }
  }
  return space;
}

PositivityResult check_positivity(const HighOrderTetMesh& mesh, const FeSpace& space,
                                  const VecX& displacement, int exactness) {
  if (displacement.size() != 3 * space.num_nodes)
    throw Error(ErrorCode::kInvalidArgument, "displacement size does not match the displacement space");
  if (exactness < 0) exactness = std::min(10, 2 * std::max(space.order, mesh.geometry_order));
  const auto& rule = quadrature(exactness);
  const BasisTable geo(mesh.geometry_order, rule);
  const BasisTable disp(space.order, rule);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto gnodes = mesh.element(e);
    const auto dofs = space.element(e);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Mat3 J = Mat3::Zero();
      for (std::size_t k = 0; k < gnodes.size(); ++k) J += mesh.nodes[gnodes[k]] * geo.grads[q].row(k);
      for (std::size_t i = 0; i < dofs.size(); ++i)
        J += displacement.segment<3>(3 * dofs[i]) * disp.grads[q].row(i);
      const double det = J.determinant();
      if (!(det > 0.0)) return {false, e, static_cast<int>(q), det};
    }
  }
  return {};
}

std::vector<BoundaryFace> extract_boundary(const HighOrderTetMesh& mesh) {
  std::map<std::array<int, 3>, std::vector<std::pair<int, int>>> incidence;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto nodes = mesh.element(e);
    for (int f = 0; f < 4; ++f) {
      std::array<int, 3> key{nodes[kLocalFaces[f][0]], nodes[kLocalFaces[f][1]], nodes[kLocalFaces[f][2]]};
      std::sort(key.begin(), key.end());
      incidence[key].emplace_back(e, f);
    }
  }
  std::vector<BoundaryFace> faces;
  for (const auto& [key, owners] : incidence) {
    if (owners.size() > 2)
      throw Error(ErrorCode::kInvalidMesh, "non-manifold face shared by " + std::to_string(owners.size()) +
                                               " elements (element " + std::to_string(owners[0].first) + ")");
    if (owners.size() == 2) continue;
    const auto [e, f] = owners.front();
    const auto nodes = mesh.element(e);
    BoundaryFace bf{e, f, {kLocalFaces[f][0], kLocalFaces[f][1], kLocalFaces[f][2]}};
    const Vec3& a = mesh.nodes[nodes[bf.corners[0]]];
    const Vec3& b = mesh.nodes[nodes[bf.corners[1]]];
    const Vec3& c = mesh.nodes[nodes[bf.corners[2]]];
    Vec3 centroid = Vec3::Zero();
    for (int k = 0; k < 4; ++k) centroid += 0.25 * mesh.nodes[nodes[k]];
    const Vec3 face_center = (a + b + c) / 3.0;
    if ((b - a).cross(c - a).dot(face_center - centroid) < 0.0) std::swap(bf.corners[1], bf.corners[2]);
    faces.push_back(bf);
  }
  // Deterministic order: by element, then local face.
  std::sort(faces.begin(), faces.end(), [](const BoundaryFace& x, const BoundaryFace& y) {
    return std::tie(x.element, x.local_face) < std::tie(y.element, y.local_face);
  });
  return faces;
}

CollisionSurface upsample_surface(const HighOrderTetMesh& mesh, int level) {
  if (level < 0 || level > 8) throw Error(ErrorCode::kInvalidArgument, "upsampling level must be in [0, 8]");
  const int n = 1 << level;
  CollisionSurface surf;
  std::map<LatticeKey, int> ids;
  const auto faces = extract_boundary(mesh);
  std::vector<int> local((n + 1) * (n + 1));
  auto at = [n](int j, int k) { return j * (n + 1) + k; };

  for (const auto& face : faces) {
    const auto nodes = mesh.element(face.element);
    for (int j = 0; j <= n; ++j)
      for (int k = 0; j + k <= n; ++k) {
        const int i = n - j - k;
        LatticeIndex a{0, 0, 0, 0};
        a[face.corners[0]] = i;
        a[face.corners[1]] = j;
        a[face.corners[2]] = k;
        auto [it, inserted] = ids.emplace(lattice_key(nodes.first(4), a), surf.num_vertices());
        if (inserted) {
          const RefPoint p(double(a[1]) / n, double(a[2]) / n, double(a[3]) / n);
          surf.vertices.push_back(geometric_map(mesh, face.element, p));
          surf.preimages.push_back({face.element, p});
        }
        local[at(j, k)] = it->second;
      }
    for (int j = 0; j < n; ++j)
      for (int k = 0; j + k < n; ++k) {
        surf.triangles.push_back({local[at(j, k)], local[at(j + 1, k)], local[at(j, k + 1)]});
        if (j + k + 2 <= n) surf.triangles.push_back({local[at(j + 1, k)], local[at(j + 1, k + 1)], local[at(j, k + 1)]});
      }
  }
  return surf;
}

std::vector<std::array<int, 2>> surface_edges(const std::vector<std::array<int, 3>>& triangles) {
  std::vector<std::array<int, 2>> edges;
  edges.reserve(triangles.size() * 3);
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      edges.push_back({a, b});
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace hoipc
