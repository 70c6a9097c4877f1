#pragma once

#include "elasticity.hpp"
#include "friction.hpp"
#include "transfer.hpp"

#include <memory>

namespace hoipc {

/// Linear map from the global displacement vector U to surface vertex displacements.
/// Either a sparse operator (W, blockwise) or a plain vertex-to-node selection.
class Coupling {
 public:
  static Coupling from_matrix(SparseMat W3);
  static Coupling selection(std::vector<int> vertex_node, int num_nodes);

  int num_vertices() const { return num_vertices_; }
  int num_nodes() const { return num_nodes_; }
  VecX apply(const VecX& U) const;
  VecX pullback(const VecX& g) const;
  SparseMat pullback(const SparseMat& H) const;

 private:
  bool selection_ = false;
  int num_vertices_ = 0;
  int num_nodes_ = 0;
  SparseMat W3_, W3t_;
  std::vector<int> vertex_node_;
};

/// One deformable body inside the global unknown vector.
struct BodyBlock {
  const HighOrderTetMesh* mesh = nullptr;
  const FeSpace* space = nullptr;
  const ElasticBody* elastic = nullptr;
  int node_offset = 0;   // first node of this body in U (3 scalars per node)
};

struct ContactParams {
  double dhat = 1e-3;
  bool enabled = true;
  StiffnessParams stiffness;
};

struct FrictionParams {
  double mu = 0.0;
  double eps_v = 1e-3;
  int iterations = 1;
};

struct SolverParams {
  double newton_tolerance = 1e-5;   // infinity norm of the Newton increment, meters
  int max_iterations = 500;         // per friction lag pass
  bool project_hessian = true;
  double min_step = 1e-12;
};

/// Everything the time stepper needs. Kinematic collider vertices are nodes without mass whose
/// DOFs are always constrained.
struct Problem {
  std::vector<BodyBlock> bodies;
  int num_nodes = 0;
  Coupling coupling;
  VecX surface_rest;                // 3m rest positions of all surface vertices
  ContactTopology topology;
  std::vector<char> constrained;    // per scalar DOF of U
  Vec3 gravity = Vec3::Zero();
  double h = 0.01;
  double bbox_diagonal = 1.0;       // deformable bodies only
  double average_mass = 1.0;
  ContactParams contact;
  FrictionParams friction;
  SolverParams solver;

  int num_dofs() const { return 3 * num_nodes; }
  VecX surface_positions(const VecX& U) const { return surface_rest + coupling.apply(U); }
};

/// Incremental potential of all bodies plus barrier and lagged friction through the coupling.
class Objective {
 public:
  Objective(const Problem& problem, VecX u_prev, VecX v_prev);

  double kappa() const { return kappa_; }
  void set_kappa(double k) { kappa_ = k; }
  void set_friction(std::vector<FrictionStencil> set) { friction_ = std::move(set); }
  const std::vector<FrictionStencil>& friction() const { return friction_; }
  const VecX& u_prev() const { return u_prev_; }
  const VecX& surface_start() const { return x_start_; }

  struct Terms {
    double inertia_elastic = 0.0;
    double barrier = 0.0;
    double friction = 0.0;
    double total() const { return inertia_elastic + barrier + friction; }
  };
  struct Eval {
    Terms terms;
    double value = 0.0;
    VecX grad;
    SparseMat hess;
    std::vector<ContactStencil> stencils;
  };

  /// order 0: value; 1: + gradient; 2: + Hessian. Infinite when an element inverts.
  Eval evaluate(const VecX& U, int order) const;
  double value(const VecX& U) const { return evaluate(U, 0).value; }

  /// Barrier gradient with unit stiffness, in U space.
  VecX unit_barrier_gradient(const VecX& U) const;
  VecX elastic_gradient(const VecX& U) const;

 private:
  const Problem& p_;
  VecX u_prev_, v_prev_, predictor_, x_start_;
  double kappa_ = 0.0;
  std::vector<FrictionStencil> friction_;
};

enum class NewtonPath { kNewton, kRegularized, kGradient };

struct NewtonDirection {
  VecX d;              // full-size; constrained entries hold target - U
  double decrement = 0.0;
  NewtonPath path = NewtonPath::kNewton;
};

/// Solves H_ff d_f = -g_f - H_fc d_c; regularises with tau I (tau doubling from 1e-8 times the
/// mean diagonal) when the factorization is not positive definite, then falls back to -g_f.
NewtonDirection newton_step(const SparseMat& H, const VecX& g, const std::vector<char>& constrained, const VecX& dc);

struct LineSearchResult {
  double alpha = 0.0;
  double alpha_ccd = 1.0;
  double value = 0.0;
  bool ok = false;
  int positivity_rejections = 0;
};

/// alpha starts at the CCD bound and halves until the state is positive at every quadrature point
/// and, unless `require_decrease` is false, the objective does not increase beyond rounding
/// (64 machine epsilons of |value0|).
LineSearchResult line_search(const Problem& p, const Objective& obj, const VecX& U, const VecX& d, double value0,
                             bool require_decrease = true);

struct SimState {
  double time = 0.0;
  int step = 0;
  VecX U;
  VecX V;
  double kappa = 0.0;
};

struct StepReport {
  std::vector<int> newton_iterations;    // per lag pass
  int regularized_steps = 0;
  int gradient_steps = 0;
  int roundoff_terminations = 0;        // passes ended by a backtracked step shorter than the tolerance
  bool converged = true;
  bool stagnated = false;
  double min_distance = std::numeric_limits<double>::infinity();
  double kappa = 0.0;
  int contacts = 0;
  Objective::Terms terms;
  std::vector<double> iterate_values;    // objective after each accepted Newton iterate
};

/// Advances one implicit-Euler step. `targets` holds the prescribed values of constrained DOFs at
/// the end of the step (other entries are ignored).
SimState solve_step(const Problem& p, const SimState& s, const VecX& targets, StepReport* report = nullptr);

}  // namespace hoipc
