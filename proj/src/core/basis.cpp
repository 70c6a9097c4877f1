#include "basis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>

namespace hoipc {

namespace {

constexpr int kEdges[6][2] = {{0, 1}, {1, 2}, {2, 0}, {3, 0}, {3, 2}, {3, 1}};
constexpr int kFaces[4][3] = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {3, 1, 2}};

std::vector<LatticeIndex> build_lattice(int p) {
  std::vector<LatticeIndex> nodes;
  for (int v = 0; v < 4; ++v) {
    LatticeIndex a{0, 0, 0, 0};
    a[v] = p;
    nodes.push_back(a);
  }
  for (const auto& e : kEdges) {
    for (int k = 1; k < p; ++k) {
      LatticeIndex a{0, 0, 0, 0};
      a[e[0]] = p - k;
      a[e[1]] = k;
      nodes.push_back(a);
    }
  }
  // Interior face lattice points (all three face weights >= 1).
  std::vector<std::array<int, 3>> face_pts;
  if (p == 3) face_pts = {{1, 1, 1}};
  if (p == 4) face_pts = {{2, 1, 1}, {1, 2, 1}, {1, 1, 2}};
  for (const auto& f : kFaces) {
    for (const auto& w : face_pts) {
      LatticeIndex a{0, 0, 0, 0};
      for (int k = 0; k < 3; ++k) a[f[k]] = w[k];
      nodes.push_back(a);
    }
  }
  if (p == 4) nodes.push_back({1, 1, 1, 1});
  return nodes;
}

void check_order(int order) {
  if (order < 1 || order > kMaxOrder)
    throw Error(ErrorCode::kInvalidArgument, "unsupported basis order " + std::to_string(order));
}

void check_index(int order, int node_index) {
  check_order(order);
  if (node_index < 0 || node_index >= node_count(order))
    throw Error(ErrorCode::kInvalidArgument, "basis node index " + std::to_string(node_index) +
                                                 " out of range for order " + std::to_string(order));
}

// Silvester factor l_a(x) = prod_{q<a} (p x - q) / (q + 1) and its derivative in x.
inline void silvester(int p, int a, double x, double& value, double& deriv) {
  value = 1.0;
  deriv = 0.0;
  for (int q = 0; q < a; ++q) {
    const double f = (p * x - q) / (q + 1);
    const double df = static_cast<double>(p) / (q + 1);
    deriv = deriv * f + value * df;
    value *= f;
  }
}

double eval_lattice(int p, const LatticeIndex& a, const std::array<double, 4>& lam) {
  double v = 1.0;
  for (int m = 0; m < 4; ++m) {
    double f, df;
    silvester(p, a[m], lam[m], f, df);
    v *= f;
  }
  return v;
}

Vec3 eval_lattice_grad(int p, const LatticeIndex& a, const std::array<double, 4>& lam) {
  std::array<double, 4> f{}, df{};
  for (int m = 0; m < 4; ++m) silvester(p, a[m], lam[m], f[m], df[m]);
  // d phi / d lambda_m
  std::array<double, 4> dl{};
  for (int m = 0; m < 4; ++m) {
    double prod = df[m];
    for (int k = 0; k < 4; ++k)
      if (k != m) prod *= f[k];
    dl[m] = prod;
  }
  // lambda_0 = 1 - r - s - t
  return {dl[1] - dl[0], dl[2] - dl[0], dl[3] - dl[0]};
}

// Gauss-Jacobi nodes/weights on [0,1] for weight (1-x)^alpha, n points (Golub-Welsch).
void gauss_jacobi01(int n, int alpha, std::vector<double>& x, std::vector<double>& w) {
  const double a = alpha, b = 0.0;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + a + b;
    J(k, k) = (k == 0) ? (b - a) / (a + b + 2.0) : (b * b - a * a) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double k1 = k + 1;
      const double s1 = 2.0 * k1 + a + b;
      const double num = 4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b);
      const double den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
      J(k, k + 1) = J(k + 1, k) = std::sqrt(num / den);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  // mu0 = int_{-1}^{1} (1-x)^a dx = 2^{a+1} / (a+1)
  const double mu0 = std::pow(2.0, a + 1.0) / (a + 1.0);
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    const double xi = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    x[i] = 0.5 * (1.0 + xi);
    w[i] = mu0 * v0 * v0 / std::pow(2.0, a + 1.0);
  }
}

QuadratureRule build_rule(int degree) {
  QuadratureRule rule;
  if (degree <= 1) {
    rule.points = {RefPoint(0.25, 0.25, 0.25)};
    rule.weights = {1.0 / 6.0};
    rule.exactness = 1;
    return rule;
  }
  if (degree == 2) {
    const double a = 0.1381966011250105151795413165634;
    const double b = 0.5854101966249684544613760503097;
    rule.points = {RefPoint(a, a, a), RefPoint(b, a, a), RefPoint(a, b, a), RefPoint(a, a, b)};
    rule.weights.assign(4, 1.0 / 24.0);
    rule.exactness = 2;
    return rule;
  }
  const int n = (degree + 2) / 2;  // 2n - 1 >= degree
  std::vector<double> xa, wa, xb, wb, xc, wc;
  gauss_jacobi01(n, 2, xa, wa);
  gauss_jacobi01(n, 1, xb, wb);
  gauss_jacobi01(n, 0, xc, wc);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double r = xa[i];
        const double s = (1.0 - xa[i]) * xb[j];
        const double t = (1.0 - xa[i]) * (1.0 - xb[j]) * xc[k];
        rule.points.emplace_back(r, s, t);
        rule.weights.push_back(wa[i] * wb[j] * wc[k]);
      }
  rule.exactness = 2 * n - 1;
  return rule;
}

}  // namespace

const std::vector<LatticeIndex>& lattice(int order) {
  check_order(order);
  static const std::array<std::vector<LatticeIndex>, kMaxOrder + 1> tables = [] {
    std::array<std::vector<LatticeIndex>, kMaxOrder + 1> t;
    for (int p = 1; p <= kMaxOrder; ++p) t[p] = build_lattice(p);
    return t;
  }();
  return tables[order];
}

std::vector<RefPoint> reference_nodes(int order) {
  const auto& lat = lattice(order);
  std::vector<RefPoint> pts;
  pts.reserve(lat.size());
  for (const auto& a : lat)
    pts.emplace_back(double(a[1]) / order, double(a[2]) / order, double(a[3]) / order);
  return pts;
}

double eval_basis(int order, int node_index, const RefPoint& p) {
  check_index(order, node_index);
  return eval_lattice(order, lattice(order)[node_index], p.barycentric());
}

Vec3 eval_basis_grad(int order, int node_index, const RefPoint& p) {
  check_index(order, node_index);
  return eval_lattice_grad(order, lattice(order)[node_index], p.barycentric());
}

void eval_basis_all(int order, const RefPoint& p, VecX& values) {
  const auto& lat = lattice(order);
  const auto lam = p.barycentric();
  values.resize(static_cast<Eigen::Index>(lat.size()));
  for (std::size_t i = 0; i < lat.size(); ++i) values[i] = eval_lattice(order, lat[i], lam);
}

void eval_basis_grad_all(int order, const RefPoint& p, Eigen::Matrix<double, Eigen::Dynamic, 3>& grads) {
  const auto& lat = lattice(order);
  const auto lam = p.barycentric();
  grads.resize(static_cast<Eigen::Index>(lat.size()), 3);
  for (std::size_t i = 0; i < lat.size(); ++i) grads.row(i) = eval_lattice_grad(order, lat[i], lam).transpose();
}

const QuadratureRule& quadrature(int min_exactness) {
  if (min_exactness > 10 || min_exactness < 0)
    throw Error(ErrorCode::kInvalidArgument,
                "unsupported quadrature exactness " + std::to_string(min_exactness));
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  const int key = std::max(min_exactness, 1);
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, build_rule(key)).first;
  return it->second;
}

BasisTable::BasisTable(int order_, const QuadratureRule& rule) : order(order_) {
  values.resize(rule.size());
  grads.resize(rule.size());
  for (std::size_t q = 0; q < rule.size(); ++q) {
    eval_basis_all(order, rule.points[q], values[q]);
    eval_basis_grad_all(order, rule.points[q], grads[q]);
  }
}

}  // namespace hoipc
