#include "solver.hpp"

#include "ccd.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace hoipc {

Coupling Coupling::from_matrix(SparseMat W3) {
  if (W3.rows() % 3 != 0 || W3.cols() % 3 != 0) throw Error(ErrorCode::kInvalidArgument, "coupling matrix must be blockwise 3x3");
  Coupling c;
  c.num_vertices_ = static_cast<int>(W3.rows() / 3);
  c.num_nodes_ = static_cast<int>(W3.cols() / 3);
  c.W3t_ = W3.transpose();
  c.W3_ = std::move(W3);
  return c;
}

Coupling Coupling::selection(std::vector<int> vertex_node, int num_nodes) {
  for (int n : vertex_node)
    if (n < 0 || n >= num_nodes) throw Error(ErrorCode::kInvalidArgument, "selection index out of range");
  Coupling c;
  c.selection_ = true;
  c.num_vertices_ = static_cast<int>(vertex_node.size());
  c.num_nodes_ = num_nodes;
  c.vertex_node_ = std::move(vertex_node);
  return c;
}

VecX Coupling::apply(const VecX& U) const {
  if (!selection_) return W3_ * U;
  VecX x(3 * num_vertices_);
  for (int j = 0; j < num_vertices_; ++j) x.segment<3>(3 * j) = U.segment<3>(3 * vertex_node_[j]);
  return x;
}

VecX Coupling::pullback(const VecX& g) const {
  if (!selection_) return W3t_ * g;
  VecX out = VecX::Zero(3 * num_nodes_);
  for (int j = 0; j < num_vertices_; ++j) out.segment<3>(3 * vertex_node_[j]) += g.segment<3>(3 * j);
  return out;
}

SparseMat Coupling::pullback(const SparseMat& H) const {
  if (!selection_) {
    SparseMat out = (W3t_ * H * W3_).pruned();
    return out;
  }
  std::vector<Triplet> trips;
  trips.reserve(H.nonZeros());
  auto map = [&](Eigen::Index i) { return 3 * vertex_node_[i / 3] + static_cast<int>(i % 3); };
  for (int k = 0; k < H.outerSize(); ++k)
    for (SparseMat::InnerIterator it(H, k); it; ++it) trips.emplace_back(map(it.row()), map(it.col()), it.value());
  SparseMat out(3 * num_nodes_, 3 * num_nodes_);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

namespace {

bool is_intersecting(const Error& e) { return e.code() == ErrorCode::kIntersecting; }

IncrementalState body_state(const Problem& p, const BodyBlock& b, const VecX& u_prev, const VecX& v_prev) {
  IncrementalState s;
  const int n = b.elastic->num_dofs();
  s.u_prev = u_prev.segment(3 * b.node_offset, n);
  s.v_prev = v_prev.segment(3 * b.node_offset, n);
  s.h = p.h;
  s.acceleration = p.gravity;
  return s;
}

void append_block(std::vector<Triplet>& trips, const SparseMat& H, int offset) {
  for (int k = 0; k < H.outerSize(); ++k)
    for (SparseMat::InnerIterator it(H, k); it; ++it)
      trips.emplace_back(offset + it.row(), offset + it.col(), it.value());
}

}  // namespace

Objective::Objective(const Problem& problem, VecX u_prev, VecX v_prev)
    : p_(problem), u_prev_(std::move(u_prev)), v_prev_(std::move(v_prev)) {
  if (u_prev_.size() != p_.num_dofs() || v_prev_.size() != p_.num_dofs())
    throw Error(ErrorCode::kInvalidArgument, "state size does not match the problem");
  x_start_ = p_.surface_positions(u_prev_);
}

Objective::Eval Objective::evaluate(const VecX& U, int order) const {
  Eval out;
  const int N = p_.num_dofs();
  if (order >= 1) out.grad = VecX::Zero(N);
  std::vector<Triplet> trips;

  for (const BodyBlock& b : p_.bodies) {
    const IncrementalState s = body_state(p_, b, u_prev_, v_prev_);
    const int off = 3 * b.node_offset;
    const VecX u = U.segment(off, b.elastic->num_dofs());
    const double e = incremental_potential(*b.elastic, s, u);
    out.terms.inertia_elastic += e;
    if (!std::isfinite(e)) {
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
    if (order >= 1) out.grad.segment(off, u.size()) += incremental_gradient(*b.elastic, s, u);
    if (order >= 2) append_block(trips, incremental_hessian(*b.elastic, s, u, p_.solver.project_hessian), off);
  }

  const VecX x = p_.surface_positions(U);
  VecX gs;
  SparseMat hs;
  if (p_.contact.enabled) {
    out.stencils = build_constraint_set(p_.topology, x, p_.contact.dhat);
    try {
      PotentialEval b = barrier_potential(p_.topology, out.stencils, x, p_.contact.dhat, kappa_, order,
                                          p_.solver.project_hessian);
      out.terms.barrier = b.value;
      if (order >= 1) gs = std::move(b.grad);
      if (order >= 2) hs = std::move(b.hess);
    } catch (const Error& e) {
      if (!is_intersecting(e)) throw;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
  }
  if (!friction_.empty()) {
    PotentialEval d = friction_potential(friction_, x, x_start_, p_.friction.eps_v, p_.h, order);
    out.terms.friction = d.value;
    if (order >= 1) gs = gs.size() ? VecX(gs + d.grad) : d.grad;
    if (order >= 2) hs = hs.size() ? SparseMat(hs + d.hess) : d.hess;
  }
  out.value = out.terms.total();
  if (order >= 1 && gs.size()) out.grad += p_.coupling.pullback(gs);
  if (order >= 2) {
    SparseMat H(N, N);
    H.setFromTriplets(trips.begin(), trips.end());
    if (hs.size()) H += p_.coupling.pullback(hs);
    out.hess = std::move(H);
  }
  return out;
}

VecX Objective::unit_barrier_gradient(const VecX& U) const {
  if (!p_.contact.enabled) return VecX::Zero(p_.num_dofs());
  const VecX x = p_.surface_positions(U);
  const auto stencils = build_constraint_set(p_.topology, x, p_.contact.dhat);
  if (stencils.empty()) return VecX::Zero(p_.num_dofs());
  return p_.coupling.pullback(barrier_potential(p_.topology, stencils, x, p_.contact.dhat, 1.0, 1).grad);
}

VecX Objective::elastic_gradient(const VecX& U) const {
  VecX g = VecX::Zero(p_.num_dofs());
  for (const BodyBlock& b : p_.bodies) {
    const int off = 3 * b.node_offset;
    const int n = b.elastic->num_dofs();
    g.segment(off, n) = incremental_gradient(*b.elastic, body_state(p_, b, u_prev_, v_prev_), U.segment(off, n));
  }
  return g;
}

NewtonDirection newton_step(const SparseMat& H, const VecX& g, const std::vector<char>& constrained, const VecX& dc) {
  const int N = static_cast<int>(g.size());
  if (H.rows() != N || H.cols() != N || static_cast<int>(constrained.size()) != N || dc.size() != N)
    throw Error(ErrorCode::kInvalidArgument, "newton_step: size mismatch");

  std::vector<int> free_index(N, -1), free_dofs;
  for (int i = 0; i < N; ++i)
    if (!constrained[i]) {
      free_index[i] = static_cast<int>(free_dofs.size());
      free_dofs.push_back(i);
    }
  const int nf = static_cast<int>(free_dofs.size());

  NewtonDirection out;
  out.d = VecX::Zero(N);
  for (int i = 0; i < N; ++i)
    if (constrained[i]) out.d[i] = dc[i];
  if (nf == 0) {
    out.decrement = out.d.lpNorm<Eigen::Infinity>();
    return out;
  }

  VecX dc_full = VecX::Zero(N);
  bool moving = false;
  for (int i = 0; i < N; ++i)
    if (constrained[i] && dc[i] != 0.0) {
      dc_full[i] = dc[i];
      moving = true;
    }
  const VecX coupling = moving ? VecX(H * dc_full) : VecX::Zero(N);

  std::vector<Triplet> trips;
  trips.reserve(H.nonZeros());
  VecX rhs(nf), gf(nf);
  for (int k = 0; k < H.outerSize(); ++k)
    for (SparseMat::InnerIterator it(H, k); it; ++it) {
      const int r = free_index[it.row()], c = free_index[it.col()];
      if (r >= 0 && c >= 0) trips.emplace_back(r, c, it.value());
    }
  for (int i = 0; i < nf; ++i) {
    gf[i] = g[free_dofs[i]];
    rhs[i] = -gf[i] - coupling[free_dofs[i]];
  }
  SparseMat Hf(nf, nf);
  Hf.setFromTriplets(trips.begin(), trips.end());

  double mean_diag = Hf.diagonal().cwiseAbs().mean();
  if (!(mean_diag > 0.0)) mean_diag = 1.0;

  VecX df;
  bool solved = false;
  Eigen::SimplicialLDLT<SparseMat> ldlt;
  ldlt.analyzePattern(Hf);
  double tau = 0.0;
  for (int attempt = 0; attempt <= 12 && !solved; ++attempt) {
    SparseMat A = Hf;
    if (attempt > 0) {
      tau = attempt == 1 ? 1e-8 * mean_diag : tau * 10.0;
      for (int i = 0; i < nf; ++i) A.coeffRef(i, i) += tau;
    }
    ldlt.factorize(A);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) continue;
    df = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !df.allFinite()) continue;
    if (!moving && gf.dot(df) >= 0.0 && gf.squaredNorm() > 0.0) continue;
    solved = true;
    out.path = attempt == 0 ? NewtonPath::kNewton : NewtonPath::kRegularized;
  }
  if (!solved) {
    df = rhs;
    out.path = NewtonPath::kGradient;
  }
  for (int i = 0; i < nf; ++i) out.d[free_dofs[i]] = df[i];
  out.decrement = out.d.lpNorm<Eigen::Infinity>();
  return out;
}

LineSearchResult line_search(const Problem& p, const Objective& obj, const VecX& U, const VecX& d, double value0,
                             bool require_decrease) {
  LineSearchResult r;
  double alpha = 1.0;
  if (p.contact.enabled) {
    const VecX x0 = p.surface_positions(U);
    r.alpha_ccd = max_step(p.topology, x0, p.coupling.apply(d));
    alpha = std::min(1.0, r.alpha_ccd);
  }
  // Changes below this are indistinguishable from rounding in the energy sum.
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(value0);
  while (alpha >= p.solver.min_step) {
    const VecX U1 = U + alpha * d;
    bool positive = true;
    for (const BodyBlock& b : p.bodies) {
      const VecX u = U1.segment(3 * b.node_offset, b.elastic->num_dofs());
      if (!check_positivity(*b.mesh, *b.space, u).ok) {
        positive = false;
        break;
      }
    }
    if (!positive) {
      ++r.positivity_rejections;
      alpha *= 0.5;
      continue;
    }
    const double v = obj.value(U1);
    if (std::isfinite(v) && (!require_decrease || v <= value0 + slack)) {
      r.alpha = alpha;
      r.value = v;
      r.ok = true;
      return r;
    }
    alpha *= 0.5;
  }
  r.value = value0;
  return r;
}

SimState solve_step(const Problem& p, const SimState& s, const VecX& targets, StepReport* report) {
  const int N = p.num_dofs();
  if (s.U.size() != N || s.V.size() != N || targets.size() != N)
    throw Error(ErrorCode::kInvalidArgument, "solve_step: state size mismatch");
  StepReport local;
  StepReport& rep = report ? *report : local;
  rep = StepReport{};

  Objective obj(p, s.U, s.V);
  VecX U = s.U;

  BarrierStiffness stiff;
  if (p.contact.enabled) {
    stiff = initial_barrier_stiffness(p.bbox_diagonal, p.contact.dhat, p.average_mass, obj.elastic_gradient(U),
                                      obj.unit_barrier_gradient(U), p.contact.stiffness);
    stiff.kappa = std::min(stiff.kappa_max, std::max(stiff.kappa, s.kappa));
    obj.set_kappa(stiff.kappa);
  }

  auto current_min_distance = [&](const VecX& Ux) {
    if (!p.contact.enabled) return std::numeric_limits<double>::infinity();
    const VecX x = p.surface_positions(Ux);
    return std::sqrt(min_distance_sq(build_constraint_set(p.topology, x, p.contact.dhat), x));
  };

  const bool friction_on = p.contact.enabled && p.friction.mu > 0.0;
  const int passes = friction_on ? std::max(1, p.friction.iterations) : 1;
  VecX lagged = obj.surface_start();

  for (int pass = 0; pass < passes; ++pass) {
    if (friction_on) {
      const auto contacts = build_constraint_set(p.topology, lagged, p.contact.dhat);
      obj.set_friction(build_friction_set(lagged, contacts, stiff.kappa, p.contact.dhat, p.friction.mu));
    }
    double prev_min_d = current_min_distance(U);
    int it = 0;
    bool converged = false;
    for (; it < p.solver.max_iterations; ++it) {
      const Objective::Eval ev = obj.evaluate(U, 2);
      if (!std::isfinite(ev.value)) throw Error(ErrorCode::kInternal, "solver iterate left the feasible set");
      VecX dc = VecX::Zero(N);
      bool moving = false;
      for (int i = 0; i < N; ++i)
        if (p.constrained[i]) {
          dc[i] = targets[i] - U[i];
          moving = moving || dc[i] != 0.0;
        }
      const NewtonDirection dir = newton_step(ev.hess, ev.grad, p.constrained, dc);
      if (dir.decrement < p.solver.newton_tolerance) {
        for (int i = 0; i < N; ++i)
          if (p.constrained[i]) U[i] = targets[i];
        converged = true;
        break;
      }
      if (dir.path == NewtonPath::kRegularized) ++rep.regularized_steps;
      if (dir.path == NewtonPath::kGradient) ++rep.gradient_steps;
      const LineSearchResult ls = line_search(p, obj, U, dir.d, ev.value, !moving);
      if (!ls.ok) {
        rep.stagnated = true;
        break;
      }
      U += ls.alpha * dir.d;
      if (moving && ls.alpha == 1.0)
        for (int i = 0; i < N; ++i)
          if (p.constrained[i]) U[i] = targets[i];
      rep.iterate_values.push_back(ls.value);
      // Backtracked far below the CCD bound and moved less than the tolerance: the direction is
      // at the rounding floor of the gradient.
      if (!moving && ls.alpha < std::min(1.0, ls.alpha_ccd) && ls.alpha * dir.decrement < p.solver.newton_tolerance) {
        ++rep.roundoff_terminations;
        ++it;
        converged = true;
        break;
      }
      if (p.contact.enabled) {
        const double min_d = current_min_distance(U);
        const double k = update_barrier_stiffness(prev_min_d, min_d, stiff, p.contact.dhat, p.contact.stiffness);
        if (k != stiff.kappa) {
          stiff.kappa = k;
          obj.set_kappa(k);
        }
        prev_min_d = min_d;
      }
    }
    rep.newton_iterations.push_back(it);
    if (!converged && !rep.stagnated) rep.converged = false;
    lagged = p.surface_positions(U);
  }

  SimState out;
  out.time = s.time + p.h;
  out.step = s.step + 1;
  out.V = (U - s.U) / p.h;
  out.U = std::move(U);
  out.kappa = stiff.kappa;

  const Objective::Eval fin = obj.evaluate(out.U, 0);
  rep.terms = fin.terms;
  rep.contacts = static_cast<int>(fin.stencils.size());
  rep.min_distance = current_min_distance(out.U);
  rep.kappa = stiff.kappa;
  return out;
}

}  // namespace hoipc
