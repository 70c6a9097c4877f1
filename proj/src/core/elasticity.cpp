#include "elasticity.hpp"

#include "parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <limits>

namespace hoipc {

void Material::validate() const {
  if (!(density > 0.0)) throw Error(ErrorCode::kInvalidArgument, "material density must be positive");
  if (!(youngs_modulus > 0.0)) throw Error(ErrorCode::kInvalidArgument, "Young's modulus must be positive");
  if (!(poisson_ratio > 0.0 && poisson_ratio < 0.5))
    throw Error(ErrorCode::kInvalidArgument, "Poisson ratio must lie in (0, 0.5)");
}

NeoHookeanEval neo_hookean_density(const Mat3& F, double mu, double lambda, bool with_hessian) {
  const double J = F.determinant();
  if (!(J > 0.0)) throw Error(ErrorCode::kInvalidArgument, "neo_hookean_density: det F must be positive");
  const double lnJ = std::log(J);
  const Mat3 FinvT = F.inverse().transpose();
  NeoHookeanEval out;
  out.psi = 0.5 * mu * ((F.transpose() * F).trace() - 3.0) - mu * lnJ + 0.5 * lambda * lnJ * lnJ;
  out.P = mu * (F - FinvT) + lambda * lnJ * FinvT;
  if (!with_hessian) return out;
  // d(F^{-T})_{ij}/dF_{kl} = -F^{-T}_{il} F^{-T}_{kj}
  const double c = mu - lambda * lnJ;
  for (int l = 0; l < 3; ++l)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
          out.dPdF(i + 3 * j, k + 3 * l) = (i == k && j == l ? mu : 0.0) + c * FinvT(i, l) * FinvT(k, j) +
                                           lambda * FinvT(i, j) * FinvT(k, l);
  return out;
}

Mat3 deformation_gradient(const HighOrderTetMesh& mesh, const FeSpace& space, const VecX& u, int elem, const RefPoint& p) {
  if (u.size() != 3 * space.num_nodes) throw Error(ErrorCode::kInvalidArgument, "displacement size mismatch");
  const Mat3 Jg = geometric_map_jacobian(mesh, elem, p);
  const double det = Jg.determinant();
  if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::kInvalidMesh, "singular geometric Jacobian");
  Eigen::Matrix<double, Eigen::Dynamic, 3> grads;
  eval_basis_grad_all(space.order, p, grads);
  Mat3 G = Mat3::Zero();
  const auto dofs = space.element(elem);
  for (std::size_t i = 0; i < dofs.size(); ++i) G += u.segment<3>(3 * dofs[i]) * grads.row(i);
  return Mat3::Identity() + G * Jg.inverse();
}

MatX project_psd(const MatX& A) {
  Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (A + A.transpose()));
  VecX ev = es.eigenvalues();
  if (ev.minCoeff() >= 0.0) return 0.5 * (A + A.transpose());
  for (auto& x : ev) x = std::max(x, 0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

ElasticBody::ElasticBody(const HighOrderTetMesh& mesh, const FeSpace& space, const Material& material,
                         const std::map<int, double>& tag_density, int exactness) {
  material.validate();
  for (const auto& [tag, rho] : tag_density)
    if (!(rho > 0.0)) throw Error(ErrorCode::kInvalidArgument, "density of tag " + std::to_string(tag) + " must be positive");
  if (exactness < 0) exactness = std::min(10, 2 * std::max(space.order, mesh.geometry_order));
  const auto& rule = quadrature(exactness);
  const BasisTable geo(mesh.geometry_order, rule);
  const BasisTable disp(space.order, rule);
  num_nodes_ = space.num_nodes;
  npe_ = space.dofs_per_element();
  dofs_ = space.element_dofs;
  const int ne = mesh.num_elements();
  quad_.resize(static_cast<std::size_t>(ne));
  mu_.assign(static_cast<std::size_t>(ne), material.mu());
  lambda_.assign(static_cast<std::size_t>(ne), material.lambda());

  std::vector<Triplet> mtrip;
  mtrip.reserve(static_cast<std::size_t>(ne) * npe_ * npe_);
  for (int e = 0; e < ne; ++e) {
    const auto gnodes = mesh.element(e);
    double rho = material.density;
    if (auto it = tag_density.find(mesh.element_tags[e]); it != tag_density.end()) rho = it->second;
    MatX Me = MatX::Zero(npe_, npe_);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      Mat3 Jg = Mat3::Zero();
      for (std::size_t k = 0; k < gnodes.size(); ++k) Jg += mesh.nodes[gnodes[k]] * geo.grads[q].row(k);
      const double det = Jg.determinant();
      if (!(det > 0.0))
        throw Error(ErrorCode::kInvalidMesh, "element " + std::to_string(e) + " has a non-positive Jacobian");
      QuadData qd;
      qd.weight = rule.weights[q] * det;
      qd.grad = disp.grads[q] * Jg.inverse();
      volume_ += qd.weight;
      Me += qd.weight * rho * disp.values[q] * disp.values[q].transpose();
      quad_[e].push_back(std::move(qd));
    }
    for (int a = 0; a < npe_; ++a)
      for (int b = 0; b < npe_; ++b) mtrip.emplace_back(dofs_[e * npe_ + a], dofs_[e * npe_ + b], Me(a, b));
  }
  mass_.resize(num_nodes_, num_nodes_);
  mass_.setFromTriplets(mtrip.begin(), mtrip.end());
  std::vector<Triplet> m3;
  m3.reserve(static_cast<std::size_t>(mass_.nonZeros()) * 3);
  for (int k = 0; k < mass_.outerSize(); ++k)
    for (SparseMat::InnerIterator it(mass_, k); it; ++it)
      for (int d = 0; d < 3; ++d) m3.emplace_back(3 * it.row() + d, 3 * it.col() + d, it.value());
  mass3_.resize(3 * num_nodes_, 3 * num_nodes_);
  mass3_.setFromTriplets(m3.begin(), m3.end());
  lumped_ = mass_ * VecX::Ones(num_nodes_);
}

// what: 0 energy, 1 energy + gradient, 2 energy + gradient + Hessian
ElasticBody::ElementEval ElasticBody::eval_element(int e, const VecX& u, int what, bool project) const {
  ElementEval out;
  const int* dofs = dofs_.data() + static_cast<std::size_t>(e) * npe_;
  Eigen::Matrix<double, 3, Eigen::Dynamic> ue(3, npe_);
  for (int i = 0; i < npe_; ++i) ue.col(i) = u.segment<3>(3 * dofs[i]);
  if (what >= 1) out.grad = VecX::Zero(3 * npe_);
  if (what >= 2) out.hess = MatX::Zero(3 * npe_, 3 * npe_);
  for (const auto& qd : quad_[e]) {
    const Mat3 F = Mat3::Identity() + ue * qd.grad;
    if (!(F.determinant() > 0.0)) {
      out.valid = false;
      return out;
    }
    const auto nh = neo_hookean_density(F, mu_[e], lambda_[e], what >= 2);
    out.energy += qd.weight * nh.psi;
    if (what >= 1) {
      const Eigen::Matrix<double, Eigen::Dynamic, 3> PG = qd.grad * nh.P.transpose();  // row i = (P g_i)^T
      for (int i = 0; i < npe_; ++i) out.grad.segment<3>(3 * i) += qd.weight * PG.row(i).transpose();
    }
    if (what >= 2) {
      Mat9 C = nh.dPdF;
      if (project) C = project_psd(C);
      // B maps local dofs (i, a) to vec(F) entries a + 3b with coefficient g_{i,b}.
      Eigen::Matrix<double, 9, Eigen::Dynamic> B = Eigen::Matrix<double, 9, Eigen::Dynamic>::Zero(9, 3 * npe_);
      for (int i = 0; i < npe_; ++i)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) B(a + 3 * b, 3 * i + a) = qd.grad(i, b);
      out.hess.noalias() += qd.weight * B.transpose() * C * B;
    }
  }
  return out;
}

double ElasticBody::energy(const VecX& u) const {
  if (u.size() != num_dofs()) throw Error(ErrorCode::kInvalidArgument, "displacement size mismatch");
  const std::size_t ne = quad_.size();
  std::vector<double> per(ne);
  parallel_for(ne, [&](std::size_t e) {
    const auto r = eval_element(static_cast<int>(e), u, 0, false);
    per[e] = r.valid ? r.energy : std::numeric_limits<double>::infinity();
  });
  double total = 0.0;
  for (double x : per) total += x;
  return total;
}

VecX ElasticBody::gradient(const VecX& u) const {
  if (u.size() != num_dofs()) throw Error(ErrorCode::kInvalidArgument, "displacement size mismatch");
  const std::size_t ne = quad_.size();
  std::vector<ElementEval> per(ne);
  parallel_for(ne, [&](std::size_t e) { per[e] = eval_element(static_cast<int>(e), u, 1, false); });
  VecX g = VecX::Zero(num_dofs());
  for (std::size_t e = 0; e < ne; ++e) {
    if (!per[e].valid) throw Error(ErrorCode::kInvalidArgument, "elastic gradient requested at an inverted state");
    for (int i = 0; i < npe_; ++i) g.segment<3>(3 * dofs_[e * npe_ + i]) += per[e].grad.segment<3>(3 * i);
  }
  return g;
}

SparseMat ElasticBody::hessian(const VecX& u, bool project) const {
  if (u.size() != num_dofs()) throw Error(ErrorCode::kInvalidArgument, "displacement size mismatch");
  const std::size_t ne = quad_.size();
  std::vector<ElementEval> per(ne);
  parallel_for(ne, [&](std::size_t e) { per[e] = eval_element(static_cast<int>(e), u, 2, project); });
  std::vector<Triplet> trip;
  trip.reserve(ne * 9 * npe_ * npe_);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!per[e].valid) throw Error(ErrorCode::kInvalidArgument, "elastic Hessian requested at an inverted state");
    const int* dofs = dofs_.data() + e * npe_;
    for (int i = 0; i < npe_; ++i)
      for (int j = 0; j < npe_; ++j)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b)
            trip.emplace_back(3 * dofs[i] + a, 3 * dofs[j] + b, per[e].hess(3 * i + a, 3 * j + b));
  }
  SparseMat H(num_dofs(), num_dofs());
  H.setFromTriplets(trip.begin(), trip.end());
  return H;
}

VecX IncrementalState::predictor() const {
  VecX ut = u_prev + h * v_prev;
  for (Eigen::Index i = 0; i < ut.size() / 3; ++i) ut.segment<3>(3 * i) += h * h * acceleration;
  return ut;
}

double incremental_potential(const ElasticBody& body, const IncrementalState& s, const VecX& u) {
  const VecX d = u - s.predictor();
  const double psi = body.energy(u);
  return 0.5 * d.dot(body.mass3() * d) + s.h * s.h * psi;
}

VecX incremental_gradient(const ElasticBody& body, const IncrementalState& s, const VecX& u) {
  return body.mass3() * (u - s.predictor()) + s.h * s.h * body.gradient(u);
}

SparseMat incremental_hessian(const ElasticBody& body, const IncrementalState& s, const VecX& u, bool project) {
  return body.mass3() + s.h * s.h * body.hessian(u, project);
}

}  // namespace hoipc
