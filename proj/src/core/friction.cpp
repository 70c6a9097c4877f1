#include "friction.hpp"

#include "parallel.hpp"

namespace hoipc {

namespace {

struct ClosestPoints {
  std::array<double, 4> w{};
  Vec3 normal;
};

ClosestPoints closest_points(const DistanceResult& d, const std::array<Vec3, 4>& x) {
  ClosestPoints c;
  const auto& a = d.active;
  switch (d.type) {
    case DistanceType::kPointPoint:
      c.w[a[0]] = 1.0;
      c.w[a[1]] = -1.0;
      break;
    case DistanceType::kPointEdge: {
      const Vec3 e = x[a[2]] - x[a[1]];
      const double t = (x[a[0]] - x[a[1]]).dot(e) / e.squaredNorm();
      c.w[a[0]] = 1.0;
      c.w[a[1]] = -(1.0 - t);
      c.w[a[2]] = -t;
      break;
    }
    case DistanceType::kPointTriangle: {
      const Vec3 e1 = x[2] - x[1], e2 = x[3] - x[1];
      Eigen::Matrix2d A;
      A << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
      const Eigen::Vector2d b = A.ldlt().solve(Eigen::Vector2d(e1.dot(x[0] - x[1]), e2.dot(x[0] - x[1])));
      c.w = {1.0, -(1.0 - b[0] - b[1]), -b[0], -b[1]};
      break;
    }
    case DistanceType::kEdgeEdge: {
      const Vec3 ea = x[1] - x[0], eb = x[3] - x[2], w = x[0] - x[2];
      const double A = ea.dot(ea), B = ea.dot(eb), C = eb.dot(eb), D = ea.dot(w), E = eb.dot(w);
      const double den = A * C - B * B;
      const double sa = (B * E - C * D) / den, tb = (A * E - B * D) / den;
      c.w = {1.0 - sa, sa, -(1.0 - tb), -tb};
      break;
    }
  }
  Vec3 r = Vec3::Zero();
  for (int k = 0; k < 4; ++k) r += c.w[k] * x[k];
  if (d.type == DistanceType::kPointTriangle) {
    r = (x[2] - x[1]).cross(x[3] - x[1]);
    if (r.dot(x[0] - x[1]) < 0.0) r = -r;
  }
  c.normal = r.normalized();
  return c;
}

Eigen::Matrix<double, 3, 2> tangent_basis(const Vec3& n) {
  const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 t0 = n.cross(helper).normalized();
  Eigen::Matrix<double, 3, 2> T;
  T.col(0) = t0;
  T.col(1) = n.cross(t0);
  return T;
}

}  // namespace

std::vector<FrictionStencil> build_friction_set(const VecX& x, const std::vector<ContactStencil>& contacts,
                                                double kappa, double dhat, double mu) {
  if (mu < 0.0) throw Error(ErrorCode::kInvalidArgument, "friction coefficient must be non-negative");
  std::vector<FrictionStencil> out(contacts.size());
  parallel_for(contacts.size(), [&](std::size_t i) {
    const auto& s = contacts[i];
    const auto p = stencil_points(s, x);
    const auto d = stencil_distance(s, x);
    const auto b = barrier(d.d2, dhat);
    double lambda = kappa * std::abs(b.db * 2.0 * std::sqrt(d.d2));
    if (s.kind == StencilKind::kEdgeEdge) lambda *= edge_edge_mollifier(p[0], p[1], p[2], p[3], s.eps_x).value;
    const auto cp = closest_points(d, p);
    out[i] = {s, lambda, mu, cp.w, tangent_basis(cp.normal)};
  });
  return out;
}

double friction_f0(double y, double e) { return y < e ? -y * y * y / (3.0 * e * e) + y * y / e : y - e / 3.0; }

double friction_f1(double y, double e) { return y < e ? -y * y / (e * e) + 2.0 * y / e : 1.0; }

Eigen::Vector2d tangential_displacement(const FrictionStencil& s, const VecX& x, const VecX& x0) {
  Vec3 rel = Vec3::Zero();
  for (int k = 0; k < 4; ++k) rel += s.weights[k] * (x.segment<3>(3 * s.contact.v[k]) - x0.segment<3>(3 * s.contact.v[k]));
  return s.basis.transpose() * rel;
}

PotentialEval friction_potential(const std::vector<FrictionStencil>& set, const VecX& x, const VecX& x0, double eps_v,
                                 double h, int order) {
  if (x.size() != x0.size()) throw Error(ErrorCode::kInvalidArgument, "friction_potential: size mismatch");
  PotentialEval out;
  if (order >= 1) out.grad = VecX::Zero(x.size());
  if (order >= 2) out.hess.resize(x.size(), x.size());
  if (set.empty()) return out;
  if (!(eps_v > 0.0) || !(h > 0.0)) throw Error(ErrorCode::kInvalidArgument, "friction needs eps_v > 0 and h > 0");
  const double e = eps_v * h;
  struct Local {
    double value = 0.0;
    Vec12 grad = Vec12::Zero();
    Mat12 hess = Mat12::Zero();
  };
  std::vector<Local> per(set.size());
  parallel_for(set.size(), [&](std::size_t i) {
    const auto& s = set[i];
    const double scale = s.mu * s.lambda;
    if (scale == 0.0) return;
    const Eigen::Vector2d u = tangential_displacement(s, x, x0);
    const double y = u.norm();
    per[i].value = scale * friction_f0(y, e);
    if (order == 0) return;
    // G maps the 12 stencil coordinates to the tangential displacement: G = T^T Gamma.
    Eigen::Matrix<double, 2, 12> G;
    for (int k = 0; k < 4; ++k) G.block<2, 3>(0, 3 * k) = s.weights[k] * s.basis.transpose();
    const double f1_over_y = y < e ? -y / (e * e) + 2.0 / e : 1.0 / y;
    per[i].grad = scale * f1_over_y * G.transpose() * u;
    if (order < 2) return;
    Eigen::Matrix2d H2;
    if (y < e) {
      H2 = f1_over_y * Eigen::Matrix2d::Identity();
      if (y > 0.0) H2 -= u * u.transpose() / (e * e * y);
    } else {
      H2 = Eigen::Matrix2d::Identity() / y - u * u.transpose() / (y * y * y);
    }
    per[i].hess = scale * G.transpose() * H2 * G;
  });
  for (const auto& l : per) out.value += l.value;
  if (order >= 1)
    for (std::size_t i = 0; i < set.size(); ++i)
      for (int k = 0; k < 4; ++k) out.grad.segment<3>(3 * set[i].contact.v[k]) += per[i].grad.segment<3>(3 * k);
  if (order >= 2) {
    std::vector<Triplet> trip;
    trip.reserve(set.size() * 144);
    for (std::size_t i = 0; i < set.size(); ++i)
      for (int a = 0; a < 12; ++a)
        for (int b = 0; b < 12; ++b)
          if (per[i].hess(a, b) != 0.0)
            trip.emplace_back(3 * set[i].contact.v[a / 3] + a % 3, 3 * set[i].contact.v[b / 3] + b % 3, per[i].hess(a, b));
    out.hess.setFromTriplets(trip.begin(), trip.end());
  }
  return out;
}

}  // namespace hoipc
