#include "meshgen.hpp"

#include <algorithm>
#include <map>

namespace hoipc {

HighOrderTetMesh elevate_geometry(const HighOrderTetMesh& linear, int order, const ElementMap& map) {
  if (linear.geometry_order != 1) throw Error(ErrorCode::kInvalidArgument, "elevate_geometry expects a linear mesh");
  if (order < 1 || order > kMaxOrder) throw Error(ErrorCode::kInvalidArgument, "unsupported geometry order");
  HighOrderTetMesh out;
  out.geometry_order = order;
  out.element_tags = linear.element_tags;
  out.nodes = linear.nodes;
  const auto& lat = lattice(order);
  std::map<std::vector<std::pair<int, int>>, int> ids;
  for (int e = 0; e < linear.num_elements(); ++e) {
    const auto corners = linear.element(e);
    for (const auto& a : lat) {
      int nonzero = 0, only = -1;
      std::vector<std::pair<int, int>> key;
      for (int m = 0; m < 4; ++m)
        if (a[m] > 0) {
          key.emplace_back(corners[m], a[m]);
          ++nonzero;
          only = m;
        }
      if (nonzero == 1) {
        out.connectivity.push_back(corners[only]);
        continue;
      }
      std::sort(key.begin(), key.end());
      auto [it, inserted] = ids.emplace(key, static_cast<int>(out.nodes.size()));
      if (inserted) {
        std::array<double, 4> bary;
        Vec3 x = Vec3::Zero();
        for (int m = 0; m < 4; ++m) {
          bary[m] = double(a[m]) / order;
          x += bary[m] * linear.nodes[corners[m]];
        }
        out.nodes.push_back(map ? map(e, bary) : x);
      }
      out.connectivity.push_back(it->second);
    }
  }
  return out;
}

HighOrderTetMesh make_box(const Vec3& lo, const Vec3& hi, const std::array<int, 3>& cells, int geometry_order) {
  for (int c : cells)
    if (c < 1) throw Error(ErrorCode::kInvalidArgument, "box needs at least one cell per axis");
  if (!((hi - lo).minCoeff() > 0.0)) throw Error(ErrorCode::kInvalidArgument, "box extent must be positive");
  HighOrderTetMesh m;
  const int nx = cells[0], ny = cells[1], nz = cells[2];
  auto vid = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        m.nodes.push_back(lo + (hi - lo).cwiseProduct(Vec3(double(i) / nx, double(j) / ny, double(k) / nz)));

  // Kuhn subdivision: every tetrahedron follows one monotone path from the cell's low to high corner.
  constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        for (const auto& p : perms) {
          std::array<int, 3> c{i, j, k};
          std::array<int, 4> tet;
          tet[0] = vid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[p[s]];
            tet[s + 1] = vid(c[0], c[1], c[2]);
          }
          const Vec3& x0 = m.nodes[tet[0]];
          if ((m.nodes[tet[1]] - x0).cross(m.nodes[tet[2]] - x0).dot(m.nodes[tet[3]] - x0) < 0.0)
            std::swap(tet[2], tet[3]);
          m.connectivity.insert(m.connectivity.end(), tet.begin(), tet.end());
          m.element_tags.push_back(0);
        }
  return geometry_order == 1 ? m : elevate_geometry(m, geometry_order);
}

HighOrderTetMesh make_ball(double radius, int refinement, int geometry_order) {
  if (!(radius > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ball radius must be positive");
  if (refinement < 0 || refinement > 4) throw Error(ErrorCode::kInvalidArgument, "ball refinement must be in [0, 4]");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                         {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (auto& x : v) x *= radius / x.norm();
  for (int level = 0; level < refinement; ++level) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized() * radius);
      return mid[key] = static_cast<int>(v.size()) - 1;
    };
    std::vector<std::array<int, 3>> next;
    for (const auto& t : f) {
      const int a = midpoint(t[0], t[1]), b = midpoint(t[1], t[2]), c = midpoint(t[2], t[0]);
      next.push_back({t[0], a, c});
      next.push_back({t[1], b, a});
      next.push_back({t[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  HighOrderTetMesh m;
  m.nodes.push_back(Vec3::Zero());
  for (const auto& x : v) m.nodes.push_back(x);
  for (const auto& t : f) {
    std::array<int, 4> tet{0, t[0] + 1, t[1] + 1, t[2] + 1};
    const Vec3& a = m.nodes[tet[1]];
    if (a.cross(m.nodes[tet[2]]).dot(m.nodes[tet[3]]) < 0.0) std::swap(tet[2], tet[3]);
    m.connectivity.insert(m.connectivity.end(), tet.begin(), tet.end());
    m.element_tags.push_back(0);
  }
  if (geometry_order == 1) return m;
  const ElementMap radial = [&m, radius](int e, const std::array<double, 4>& l) {
    const auto c = m.element(e);
    const double sigma = l[1] + l[2] + l[3];
    if (sigma <= 0.0) return Vec3(Vec3::Zero());
    const Vec3 y = (l[1] * m.nodes[c[1]] + l[2] * m.nodes[c[2]] + l[3] * m.nodes[c[3]]) / sigma;
    return Vec3(sigma * radius * y.normalized());
  };
  return elevate_geometry(m, geometry_order, radial);
}

}  // namespace hoipc
