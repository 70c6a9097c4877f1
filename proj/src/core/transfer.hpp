#pragma once

#include "mesh.hpp"

namespace hoipc {

/// Linear map from volumetric displacement nodes to collision-surface vertices.
struct TransferOperator {
  SparseMat W;    // m x n scalar weights
  SparseMat W3;   // 3m x 3n, W applied per coordinate

  int rows() const { return static_cast<int>(W.rows()); }
  int cols() const { return static_cast<int>(W.cols()); }
};

/// Pre-image residual tolerance relative to the mesh bounding-box diagonal.
inline constexpr double kEmbedRelTol = 1e-8;

TransferOperator make_transfer(SparseMat W);
TransferOperator build_transfer(const HighOrderTetMesh& mesh, const FeSpace& space, const CollisionSurface& surface);

/// Surface displacement (3m) from nodal displacement (3n).
VecX apply_transfer(const TransferOperator& T, const VecX& u);
VecX pullback_gradient(const TransferOperator& T, const VecX& surface_grad);
SparseMat pullback_hessian(const TransferOperator& T, const SparseMat& surface_hess);

struct InverseMapResult {
  RefPoint point;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Minimises |g(p) - x|^2 over p with damped Gauss-Newton, falling back to gradient steps.
/// `tol` < 0 uses kEmbedRelTol times the bounding-box diagonal.
InverseMapResult invert_geometric_map(const HighOrderTetMesh& mesh, int elem, const Vec3& x,
                                      const RefPoint& initial_guess, double tol = -1.0, int max_iters = 100);

struct EmbedOptions {
  int min_candidates = 3;
  double distance_cap = 0.05;  // relative to the bounding-box diagonal
};

/// Attaches an arbitrary triangle mesh to the volume: each vertex gets the pre-image with the
/// smallest barycentric L1 norm among nearby elements (ties go to the lower element index).
CollisionSurface embed_proxy(const HighOrderTetMesh& mesh, const std::vector<Vec3>& vertices,
                             const std::vector<std::array<int, 3>>& triangles, const EmbedOptions& opts = {});

}  // namespace hoipc
