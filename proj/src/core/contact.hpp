#pragma once

#include "distance.hpp"

#include <vector>

namespace hoipc {

struct BarrierValue {
  double b = 0.0;
  double db = 0.0;    // d b / d(d^2)
  double d2b = 0.0;   // d^2 b / d(d^2)^2
};

/// b(x) = -(x - X)^2 ln(x / X) for x = d^2 < X = dhat^2, else 0. Throws for d^2 <= 0.
BarrierValue barrier(double d2, double dhat);

/// Surface connectivity and rest data shared by contact, friction and CCD.
struct ContactTopology {
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 2>> edges;
  std::vector<double> edge_rest_len2;
  std::vector<char> kinematic;   // per vertex: prescribed motion (colliders)
  int num_vertices = 0;

  ContactTopology() = default;
  /// `rest` holds 3m coordinates; an empty kinematic mask means no kinematic vertices.
  ContactTopology(const VecX& rest, std::vector<std::array<int, 3>> tris, std::vector<char> kinematic_mask = {});
};

enum class StencilKind { kPointTriangle, kEdgeEdge };

/// Point-triangle (p, t0, t1, t2) or edge-edge (ea0, ea1, eb0, eb1) surface vertex indices.
struct ContactStencil {
  StencilKind kind = StencilKind::kPointTriangle;
  std::array<int, 4> v{};
  double eps_x = 0.0;   // mollifier threshold, edge-edge only

  bool operator==(const ContactStencil& o) const { return kind == o.kind && v == o.v; }
  bool operator<(const ContactStencil& o) const { return std::tie(kind, v) < std::tie(o.kind, o.v); }
};

std::array<Vec3, 4> stencil_points(const ContactStencil& s, const VecX& x);
DistanceResult stencil_distance(const ContactStencil& s, const VecX& x, bool with_derivatives = false);

/// Pairs closer than dhat, excluding pairs that share a vertex or consist only of kinematic
/// vertices. Sorted by (kind, vertices).
std::vector<ContactStencil> build_constraint_set(const ContactTopology& topo, const VecX& x, double dhat);
/// O(n^2) reference implementation of build_constraint_set.
std::vector<ContactStencil> build_constraint_set_brute_force(const ContactTopology& topo, const VecX& x, double dhat);

/// Smallest squared distance over the stencils, +inf when empty.
double min_distance_sq(const std::vector<ContactStencil>& stencils, const VecX& x);
/// Smallest squared distance over all non-adjacent primitive pairs (exhaustive).
double min_surface_distance_sq(const ContactTopology& topo, const VecX& x);

struct StencilEval {
  double value = 0.0;
  Vec12 grad = Vec12::Zero();
  Mat12 hess = Mat12::Zero();
};

/// Mollified barrier of one stencil (unit stiffness).
StencilEval stencil_barrier(const ContactStencil& s, const VecX& x, double dhat, int order);

struct PotentialEval {
  double value = 0.0;
  VecX grad;        // 3m, empty if not requested
  SparseMat hess;   // 3m x 3m, empty if not requested
};

/// kappa * sum of mollified barriers; order 0 value, 1 adds gradient, 2 adds Hessian. Stencil
/// Hessians are projected to PSD when `project` is set.
PotentialEval barrier_potential(const ContactTopology& topo, const std::vector<ContactStencil>& stencils, const VecX& x,
                                double dhat, double kappa, int order, bool project = true);

struct StiffnessParams {
  double min_scale = 1e11;        // numerator scale of the minimum stiffness
  double max_ratio = 100.0;       // kappa_max / kappa_min
  double update_fraction = 1e-3;  // stiffness doubles while the minimum distance stays below this * dhat
};

struct BarrierStiffness {
  double kappa = 0.0;
  double kappa_min = 0.0;
  double kappa_max = 0.0;
};

/// kappa_min = s * avg_mass / (4 d0^2 b''(d0^2)), d0 = 1e-8 bbox (capped below dhat); the initial
/// value balances the energy and barrier gradients and is clamped to [kappa_min, 100 kappa_min].
BarrierStiffness initial_barrier_stiffness(double bbox_diagonal, double dhat, double avg_mass, const VecX& grad_energy,
                                           const VecX& grad_barrier, const StiffnessParams& params = {});

/// Doubles kappa (up to kappa_max) when both the previous and current minimum distances are
/// below update_fraction * dhat; otherwise returns kappa unchanged.
double update_barrier_stiffness(double prev_min_distance, double min_distance, const BarrierStiffness& k, double dhat,
                                const StiffnessParams& params = {});

}  // namespace hoipc
