#pragma once

#include "types.hpp"

#include <vector>

namespace hoipc {

inline constexpr int kMaxOrder = 4;

/// Number of Lagrange nodes of a tetrahedron of the given order.
constexpr int node_count(int order) { return (order + 1) * (order + 2) * (order + 3) / 6; }

/// Integer barycentric lattice index of a node; entries sum to the order.
using LatticeIndex = std::array<int, 4>;

/// Equispaced node lattice in file order:
///   corners 0..3,
///   edges (0,1) (1,2) (2,0) (3,0) (3,2) (3,1), nodes running from the first to the second vertex,
///   faces (0,2,1) (0,1,3) (0,3,2) (3,1,2), interior face nodes ordered nearest-first-vertex first,
///   cell interior.
const std::vector<LatticeIndex>& lattice(int order);

std::vector<RefPoint> reference_nodes(int order);

double eval_basis(int order, int node_index, const RefPoint& p);
Vec3 eval_basis_grad(int order, int node_index, const RefPoint& p);

/// All basis values / reference gradients at one point (sized node_count(order)).
void eval_basis_all(int order, const RefPoint& p, VecX& values);
void eval_basis_grad_all(int order, const RefPoint& p, Eigen::Matrix<double, Eigen::Dynamic, 3>& grads);

struct QuadratureRule {
  std::vector<RefPoint> points;
  std::vector<double> weights;
  int exactness = 0;

  std::size_t size() const { return points.size(); }
};

/// Positive-weight rule on the reference tetrahedron exact for polynomials of total degree
/// <= min_exactness (supported up to 10). Degrees 1 and 2 use the symmetric 1- and 4-point
/// rules; higher degrees use collapsed Gauss-Jacobi product rules.
const QuadratureRule& quadrature(int min_exactness);

/// Basis values and reference gradients tabulated at the points of a rule.
struct BasisTable {
  int order = 1;
  std::vector<VecX> values;                                      // [q] -> (n)
  std::vector<Eigen::Matrix<double, Eigen::Dynamic, 3>> grads;   // [q] -> (n x 3)

  BasisTable() = default;
  BasisTable(int order_, const QuadratureRule& rule);
};

}  // namespace hoipc
