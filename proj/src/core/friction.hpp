#pragma once

#include "contact.hpp"

namespace hoipc {

/// Contact frozen at the lagged positions: normal force magnitude, closest-point weights and a
/// tangent frame.
struct FrictionStencil {
  ContactStencil contact;
  double lambda = 0.0;
  double mu = 0.0;
  std::array<double, 4> weights{};                 // relative position = sum_k weights[k] x_k
  Eigen::Matrix<double, 3, 2> basis = Eigen::Matrix<double, 3, 2>::Zero();
};

/// lambda = kappa |b'(d^2) 2 d| (times the mollifier for edge pairs) at the lagged positions.
std::vector<FrictionStencil> build_friction_set(const VecX& lagged_x, const std::vector<ContactStencil>& contacts,
                                                double kappa, double dhat, double mu);

/// Smoothed Coulomb profile with threshold e = eps_v h: f0 is the potential, f1 = f0'.
double friction_f0(double y, double e);
double friction_f1(double y, double e);

/// D = sum mu lambda f0(|T^T Gamma (x - x_start)|). Order as in barrier_potential. The per-stencil
/// Hessians are positive semidefinite by construction.
PotentialEval friction_potential(const std::vector<FrictionStencil>& set, const VecX& x, const VecX& x_start,
                                 double eps_v, double h, int order);

/// Tangential relative displacement of one stencil.
Eigen::Vector2d tangential_displacement(const FrictionStencil& s, const VecX& x, const VecX& x_start);

}  // namespace hoipc
