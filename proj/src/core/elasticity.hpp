#pragma once

#include "mesh.hpp"

#include <map>

namespace hoipc {

struct Material {
  double density = 1000.0;        // kg/m^3
  double youngs_modulus = 1e6;    // Pa
  double poisson_ratio = 0.3;

  double mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
  double lambda() const {
    return youngs_modulus * poisson_ratio / ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
  }
  void validate() const;
};

using Mat9 = Eigen::Matrix<double, 9, 9>;

struct NeoHookeanEval {
  double psi = 0.0;
  Mat3 P = Mat3::Zero();      // dPsi/dF
  Mat9 dPdF = Mat9::Zero();   // column-major vec(F) ordering: F(i,j) -> i + 3j
};

/// Psi = mu/2 (tr F^T F - 3) - mu ln J + lambda/2 (ln J)^2. Throws when det F <= 0.
NeoHookeanEval neo_hookean_density(const Mat3& F, double mu, double lambda, bool with_hessian = true);

/// Deformation gradient I + (sum_i u_i grad_ref phi_i^T) J_g^{-1} at a reference point.
Mat3 deformation_gradient(const HighOrderTetMesh& mesh, const FeSpace& space, const VecX& u, int elem, const RefPoint& p);

/// Symmetric eigenvalue clamp to the positive semidefinite cone.
MatX project_psd(const MatX& A);

/// Discretised elastic body: Neo-Hookean energy and consistent mass over one mesh and space.
class ElasticBody {
 public:
  /// `tag_density` overrides the material density per element tag. `exactness` < 0 uses
  /// 2 * max(basis, geometry) capped at 10.
  ElasticBody(const HighOrderTetMesh& mesh, const FeSpace& space, const Material& material,
              const std::map<int, double>& tag_density = {}, int exactness = -1);

  int num_nodes() const { return num_nodes_; }
  int num_dofs() const { return 3 * num_nodes_; }
  double volume() const { return volume_; }

  /// Returns +infinity if the deformation inverts any quadrature point.
  double energy(const VecX& u) const;
  VecX gradient(const VecX& u) const;
  /// Hessian with each 9x9 material tangent projected to PSD when `project` is set.
  SparseMat hessian(const VecX& u, bool project = true) const;

  /// Scalar consistent mass matrix (n x n) and its blockwise 3n x 3n version.
  const SparseMat& mass() const { return mass_; }
  const SparseMat& mass3() const { return mass3_; }
  /// Per-node lumped mass (row sums of the consistent matrix).
  const VecX& lumped_mass() const { return lumped_; }

 private:
  struct QuadData {
    double weight;                                        // quadrature weight * |det J_g|
    Eigen::Matrix<double, Eigen::Dynamic, 3> grad;        // physical basis gradients
  };
  struct ElementEval {
    double energy = 0.0;
    VecX grad;
    MatX hess;
    bool valid = true;
  };
  ElementEval eval_element(int e, const VecX& u, int what, bool project) const;

  int num_nodes_ = 0;
  int npe_ = 0;
  double volume_ = 0.0;
  std::vector<int> dofs_;
  std::vector<std::vector<QuadData>> quad_;
  std::vector<double> mu_, lambda_;
  SparseMat mass_, mass3_;
  VecX lumped_;
};

/// Implicit-Euler step data for one body.
struct IncrementalState {
  VecX u_prev;       // u^t
  VecX v_prev;       // v^t
  double h = 0.01;
  Vec3 acceleration = Vec3::Zero();

  /// Predictor u~ = u^t + h v^t + h^2 a.
  VecX predictor() const;
};

/// E(u) = 1/2 (u - u~)^T M (u - u~) + h^2 Psi(u).
double incremental_potential(const ElasticBody& body, const IncrementalState& s, const VecX& u);
VecX incremental_gradient(const ElasticBody& body, const IncrementalState& s, const VecX& u);
SparseMat incremental_hessian(const ElasticBody& body, const IncrementalState& s, const VecX& u, bool project = true);

}  // namespace hoipc
