// Acceptance checks. Prints one PASS/FAIL line per check and exits non-zero on any failure.

#include "ccd.hpp"
#include "ccd_oracle.hpp"
#include "meshgen.hpp"
#include "scene.hpp"
#include "scenes.hpp"
#include "transfer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

using namespace hoipc;

namespace {

const std::filesystem::path kScenes = HOIPC_SCENE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

VecX random_vec(std::mt19937& rng, Eigen::Index n, double s) {
  std::uniform_real_distribution<double> u(-s, s);
  VecX v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

double exact_min_distance(const Problem& p, const VecX& surface) {
  return std::sqrt(min_surface_distance_sq(p.topology, surface));
}

// 1 ------------------------------------------------------------------------------------------
Outcome derivative_consistency() {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int states = 0, skipped = 0;
  for (int trial = 0; states < 50 && trial < 200; ++trial) {
    const int basis = trial % 3 + 1;
    WorldParams params = scenes::base_params();
    params.friction.mu = 0.2 + 0.5 * unit(rng);
    params.friction.eps_v = 1e-3;
    std::vector<BodySetup> bodies{scenes::cube_body(Vec3(0, 0, 0.5e-3), 1.0, 1, basis, 1e6)};
    bodies[0].upsample_level = trial % 2;
    World w(std::move(bodies), {make_plane(Vec3(0.7, 0.4, 0.0), Vec3::UnitZ(), 3.0)}, params);
    const Problem& p = w.problem();
    const SimState s = w.initial_state();
    Objective obj(p, s.U, random_vec(rng, s.U.size(), 0.05));
    obj.set_kappa(std::pow(10.0, 3.0 + 3.0 * unit(rng)));
    VecX U = s.U;
    const VecX r = random_vec(rng, U.size(), 2e-4);
    for (int i = 0; i < U.size(); ++i)
      if (!p.constrained[i]) U[i] += r[i];
    const VecX lagged = p.surface_positions(U);
    const auto contacts = build_constraint_set(p.topology, lagged, p.contact.dhat);
    obj.set_friction(build_friction_set(lagged, contacts, obj.kappa(), p.contact.dhat, params.friction.mu));
    const int nodes = w.bodies()[0].space.num_nodes;
    const Vec3 slide(unit(rng) - 0.5, unit(rng) - 0.5, 0.0);
    for (int n = 0; n < nodes; ++n) U.segment<3>(3 * n) += 1e-5 * unit(rng) * slide;
    const auto ev = obj.evaluate(U, 1);
    if (!(ev.terms.barrier > 0.0 && ev.terms.friction > 0.0)) {
      ++skipped;
      continue;
    }
    const double step = 1e-8;
    double err = 0.0;
    for (int i = 0; i < U.size(); ++i) {
      if (p.constrained[i]) continue;
      VecX a = U, b = U;
      a[i] += step;
      b[i] -= step;
      err = std::max(err, std::abs((obj.value(a) - obj.value(b)) / (2 * step) - ev.grad[i]));
    }
    double scale = 0.0;
    for (int i = 0; i < U.size(); ++i)
      if (!p.constrained[i]) scale = std::max(scale, std::abs(ev.grad[i]));
    worst = std::max(worst, err / scale);
    ++states;
  }
  return {states == 50 && worst <= 1e-4,
          fmt("%d states (P1-P3, contact and friction active), worst relative gradient error %.2e", states, worst)};
}

// 2 ------------------------------------------------------------------------------------------
Outcome ipc_reduction() {
  WorldParams params = scenes::base_params(0.01);
  params.friction.mu = 0.3;
  params.friction.eps_v = 1e-3;
  auto wt = scenes::two_cubes(1, params, false);
  auto wd = scenes::two_cubes(1, params, true);
  SimState st = wt->initial_state(), sd = wd->initial_state();
  double worst = 0.0;
  long iterates = 0;
  int contact_steps = 0;
  bool same_count = true;
  for (int k = 0; k < 40; ++k) {
    StepReport rt, rd;
    st = solve_step(wt->problem(), st, wt->targets(st.time + params.h), &rt);
    sd = solve_step(wd->problem(), sd, wd->targets(sd.time + params.h), &rd);
    if (rt.iterate_values.size() != rd.iterate_values.size()) {
      same_count = false;
      break;
    }
    for (std::size_t i = 0; i < rt.iterate_values.size(); ++i) {
      const double a = rt.iterate_values[i], b = rd.iterate_values[i];
      worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
      ++iterates;
    }
    if (rt.contacts > 0) ++contact_steps;
  }
  return {same_count && worst <= 1e-12 && contact_steps > 0,
          fmt("%ld iterates over 40 steps (%d with contacts), worst relative difference %.2e%s", iterates, contact_steps,
              worst, same_count ? "" : ", iterate counts differ")};
}

// 3 ------------------------------------------------------------------------------------------
Outcome non_penetration() {
  const char* names[] = {"falling_cube", "resting_cube", "two_body_impact", "twist_strip", "proxy_sphere"};
  std::string detail;
  bool pass = true;
  for (const char* name : names) {
    Simulation sim(load_scene_file(kScenes / (std::string(name) + ".json")));
    const Problem& p = sim.world().problem();
    double dmin = exact_min_distance(p, sim.frame().surface);
    bool ok = dmin > 0.0;
    int contact_frames = 0, crossings = 0;
    const int steps = sim.config().num_steps();
    for (int k = 0; k < steps; ++k) {
      const FrameRecord f = sim.step();
      const double d = exact_min_distance(p, f.surface);
      if (has_intersections(p.topology, f.surface)) ++crossings;
      ok = ok && d > 0.0;
      dmin = std::min(dmin, d);
      if (f.diagnostics.contacts > 0) ++contact_frames;
    }
    pass = pass && ok && crossings == 0 && contact_frames > 0;
    detail += fmt("%s%s %d frames (%d in contact, %d crossing) min %.2e", detail.empty() ? "" : "; ", name, steps + 1,
                  contact_frames, crossings, dmin);
  }
  return {pass, detail};
}

// 4 ------------------------------------------------------------------------------------------
Outcome transfer_invariants() {
  const auto ball = make_ball(1.0, 1, 4);
  const double diag = ball.bbox_diagonal();
  std::mt19937 rng(5);
  double pu = 0.0, adj = 0.0, rigid = 0.0, trip = 0.0;
  for (int k = 1; k <= 4; ++k) {
    const auto space = build_space(ball, k);
    const auto surf = upsample_surface(ball, 2);
    const auto T = build_transfer(ball, space, surf);
    const SparseMat Wt = T.W.transpose();
    for (int j = 0; j < T.rows(); ++j) {
      double sum = 0.0;
      for (SparseMat::InnerIterator it(Wt, j); it; ++it) sum += it.value();
      pu = std::max(pu, std::abs(sum - 1.0));
    }
    const Vec3 shift(0.3, -1.2, 2.0);
    VecX t(3 * space.num_nodes);
    for (int i = 0; i < space.num_nodes; ++i) t.segment<3>(3 * i) = shift;
    const VecX st = apply_transfer(T, t);
    for (int j = 0; j < T.rows(); ++j) rigid = std::max(rigid, (st.segment<3>(3 * j) - shift).norm() / shift.norm());
    for (int trial = 0; trial < 20; ++trial) {
      const VecX u = random_vec(rng, 3 * space.num_nodes, 1.0), g = random_vec(rng, 3 * T.rows(), 1.0);
      const double lhs = pullback_gradient(T, g).dot(u), rhs = g.dot(apply_transfer(T, u));
      adj = std::max(adj, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
  }
  // Points drawn in reference space, mapped forward and recovered by embedding.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> pts;
  for (int trial = 0; trial < 200; ++trial) {
    const int e = trial % ball.num_elements();
    double a = unit(rng), b = unit(rng), c = unit(rng);
    if (a + b + c > 1.0) { a *= 0.5; b *= 0.5; c *= 0.5; }
    if (a + b + c > 1.0) continue;
    pts.push_back(geometric_map(ball, e, RefPoint(a, b, c)));
  }
  const auto emb = embed_proxy(ball, pts, {});
  for (std::size_t i = 0; i < pts.size(); ++i)
    trip = std::max(trip, (geometric_map(ball, emb.preimages[i].element, emb.preimages[i].point) - pts[i]).norm() / diag);
  const bool pass = pu <= 1e-10 && adj <= 1e-12 && rigid <= 1e-10 && trip <= 1e-8;
  return {pass, fmt("quartic ball, P1-P4: partition of unity %.1e, adjoint %.1e, translation %.1e, round trip %.1e", pu, adj,
                    rigid, trip)};
}

// 5 ------------------------------------------------------------------------------------------
struct BeamRun {
  double sag = 0.0;
  int tets = 0;
};

BeamRun beam_sag(const SceneConfig& base, std::array<int, 3> cells, int basis, int level) {
  SceneConfig c = base;
  c.mu = 0.0;
  c.friction_iterations = 1;
  c.newton_tolerance = 1e-8;
  c.bodies[0].generate->cells = cells;
  c.bodies[0].basis_order = basis;
  c.bodies[0].collision.level = level;
  Simulation sim(c);
  const auto& body = sim.world().bodies()[0];
  const MeshGenerator& g = *c.bodies[0].generate;
  const double ym = 0.5 * (g.lo.y() + g.hi.y()), zm = 0.5 * (g.lo.z() + g.hi.z());
  const auto probes = embed_proxy(body.setup.mesh, {Vec3(0.25, ym, zm), Vec3(0.5, ym, zm), Vec3(0.75, ym, zm)}, {});
  const auto T = build_transfer(body.setup.mesh, body.space, probes);
  for (int k = 0; k < c.num_steps(); ++k) sim.step();
  const VecX u = apply_transfer(T, sim.state().U.head(body.elastic->num_dofs()));
  return {0.5 * (u[2] + u[8]) - u[5], body.setup.mesh.num_elements()};
}

Outcome beam_locking() {
  const SceneConfig base = load_scene_file(kScenes / "bending_beam.json");
  const auto p1 = beam_sag(base, {4, 1, 1}, 1, 2);
  const auto p2 = beam_sag(base, {4, 1, 1}, 2, 2);
  const auto p3 = beam_sag(base, {4, 1, 1}, 3, 2);
  const auto fine = beam_sag(base, {50, 10, 10}, 1, 0);
  const double rel = std::abs(p3.sag - fine.sag) / fine.sag;
  const bool pass = p1.sag < p2.sag && p2.sag < p3.sag && fine.tets >= 20 * p1.tets && rel <= 0.10;
  return {pass, fmt("mid-span sag P1 %.4f mm, P2 %.4f mm, P3 %.4f mm; P1 with %dx elements %.4f mm (P3 off by %.1f%%)",
                    1e3 * p1.sag, 1e3 * p2.sag, 1e3 * p3.sag, fine.tets / p1.tets, 1e3 * fine.sag, 100 * rel)};
}

// 6 ------------------------------------------------------------------------------------------
double ball_drift(SceneConfig c, int level) {
  c.bodies[0].collision.level = level;
  Simulation sim(c);
  const Vec3 c0 = sim.barycenters()[0];
  for (int k = 0; k < c.num_steps(); ++k) sim.step();
  return (sim.barycenters()[0] - c0).head<2>().norm();
}

Outcome bouncing_ball() {
  const SceneConfig c = load_scene_file(kScenes / "bouncing_ball.json");
  const double R = 0.1;
  const double coarse = ball_drift(c, 0) / R, fine = ball_drift(c, 2) / R;
  const bool pass = coarse > 0.1 && fine <= 0.5 * coarse;
  return {pass, fmt("lateral drift %.3f radii with the coarse surface, %.3f radii upsampled (%.0f%% less)", coarse, fine,
                    100 * (1 - fine / coarse))};
}

// 7 ------------------------------------------------------------------------------------------
Outcome ccd_soundness() {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int collisions = 0, missed = 0, unsafe = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::array<Vec3, 4> s, e;
    for (int k = 0; k < 4; ++k) {
      s[k] = Vec3(u(rng), u(rng), u(rng));
      e[k] = s[k] + 1.5 * Vec3(u(rng), u(rng), u(rng));
    }
    const bool pt = trial % 2 == 0;
    const auto ref = oracle::first_contact(s, e, pt, 2000);
    const auto got = pt ? point_triangle_ccd(s, e) : edge_edge_ccd(s, e);
    if (ref) ++collisions;
    if (ref && (!got || *got > *ref + 1e-6)) ++missed;
    // The returned step must itself be free of contact up to rounding at its end.
    const double t = got ? *got : 1.0;
    const auto stop = oracle::lerp(s, e, t);
    const auto inner = oracle::first_contact(s, stop, pt, 2000);
    if (inner && *inner < 1.0 - 1e-6) ++unsafe;
  }
  // Whole-surface steps on random triangle soups.
  int scenes_checked = 0;
  std::uniform_real_distribution<double> pos(0.0, 3.0);
  for (int scene = 0; scene < 50; ++scene) {
    std::vector<Vec3> pts;
    std::vector<std::array<int, 3>> ts;
    for (int t = 0; t < 30; ++t) {
      const Vec3 c(pos(rng), pos(rng), pos(rng));
      const int b = static_cast<int>(pts.size());
      for (int k = 0; k < 3; ++k) pts.push_back(c + 0.2 * Vec3(u(rng), u(rng), u(rng)));
      ts.push_back({b, b + 1, b + 2});
    }
    VecX xs(3 * pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) xs.segment<3>(3 * i) = pts[i];
    const ContactTopology topo(xs, ts);
    if (has_intersections(topo, xs) || min_surface_distance_sq(topo, xs) == 0.0) continue;
    const VecX dir = random_vec(rng, xs.size(), 1.0);
    const VecX x1 = xs + max_step(topo, xs, dir) * dir;
    if (has_intersections(topo, x1) || min_surface_distance_sq(topo, x1) <= 0.0) ++unsafe;
    ++scenes_checked;
  }
  return {missed == 0 && unsafe == 0 && collisions > 500,
          fmt("10000 trajectories (%d colliding): %d missed; %d unsafe steps incl. %d whole-surface steps", collisions, missed,
              unsafe, scenes_checked)};
}

// 8 ------------------------------------------------------------------------------------------
Outcome free_flight() {
  SceneConfig c = load_scene_file(kScenes / "free_fall.json");
  Simulation sim(c);
  const Vec3 v0 = c.bodies[0].initial_velocity;
  Vec3 u = Vec3::Zero(), v = v0;
  double worst = 0.0;
  const int nodes = sim.world().bodies()[0].space.num_nodes;
  for (int k = 0; k < 100; ++k) {
    sim.step();
    v += c.h * c.gravity;
    u += c.h * v;
    for (int n = 0; n < nodes; ++n) {
      worst = std::max(worst, (sim.state().U.segment<3>(3 * n) - u).norm() / u.norm());
      worst = std::max(worst, (sim.state().V.segment<3>(3 * n) - v).norm() / v.norm());
    }
  }
  return {worst <= 1e-10, fmt("100 steps, worst relative deviation from the closed form %.2e", worst)};
}

// 9 ------------------------------------------------------------------------------------------
// Largest per-step tangential displacement of the mean of the nodes on the contact face.
double max_slip_per_step(const SceneConfig& c) {
  Simulation sim(c);
  const auto& space = sim.world().bodies()[0].space;
  const double bottom = c.bodies[0].generate->lo.z();
  std::vector<int> face;
  for (int n = 0; n < space.num_nodes; ++n)
    if (space.rest_positions[n].z() <= bottom + 1e-12) face.push_back(n);
  auto mean = [&] {
    Eigen::Vector2d m = Eigen::Vector2d::Zero();
    for (int n : face) m += sim.state().U.segment<2>(3 * n);
    return Eigen::Vector2d(m / face.size());
  };
  double worst = 0.0;
  for (int k = 0; k < c.num_steps(); ++k) {
    const Eigen::Vector2d before = mean();
    sim.step();
    worst = std::max(worst, (mean() - before).norm());
  }
  return worst;
}

Outcome static_friction() {
  SceneConfig c = load_scene_file(kScenes / "incline_block.json");
  const double bound = *c.eps_v * c.h;
  const double stick = max_slip_per_step(c);
  SceneConfig slick = c;
  slick.mu = 0.0;
  slick.duration = 0.2;
  const double slide = max_slip_per_step(slick);
  return {stick < bound && slide > bound,
          fmt("10 degree incline, mu 0.5, %d lag passes: max slip %.3e m/step vs bound %.1e (frictionless control %.3e)",
              c.friction_iterations, stick, bound, slide)};
}

// 10 -----------------------------------------------------------------------------------------
Outcome positivity_filter() {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int trials = 0, rejected = 0;
  for (int basis = 1; basis <= 3; ++basis) {
    WorldParams params = scenes::base_params();
    params.contact.enabled = false;
    World w({scenes::cube_body(Vec3(0, 0, 0), 1.0, 2, basis)}, {}, params);
    const Problem& p = w.problem();
    const auto& body = w.bodies()[0];
    const SimState s = w.initial_state();
    Objective obj(p, s.U, s.V);
    for (int trial = 0; trial < 40; ++trial) {
      // Drag one node of a random element through the centroid of that element and beyond.
      const int e = static_cast<int>(unit(rng) * body.setup.mesh.num_elements());
      const auto dofs = body.space.element(e);
      const int node = dofs[static_cast<int>(unit(rng) * dofs.size())];
      Vec3 centroid = Vec3::Zero();
      for (int c = 0; c < 4; ++c) centroid += body.space.rest_positions[dofs[c]] / 4.0;
      VecX d = VecX::Zero(p.num_dofs());
      d.segment<3>(3 * node) = (2.0 + 2.0 * unit(rng)) * (centroid - body.space.rest_positions[node]);
      if (check_positivity(body.setup.mesh, body.space, s.U + d).ok) continue;
      ++trials;
      const LineSearchResult r = line_search(p, obj, s.U, d, obj.value(s.U), false);
      if (r.positivity_rejections > 0 && r.alpha < 1.0 && check_positivity(body.setup.mesh, body.space, s.U + r.alpha * d).ok)
        ++rejected;
    }
  }
  return {trials >= 60 && rejected == trials,
          fmt("%d inverting directions on P1-P3 cubes, %d rejected and backtracked to a positive state", trials, rejected)};
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"derivative consistency", derivative_consistency},
      {"reduction to linear IPC", ipc_reduction},
      {"non-penetration", non_penetration},
      {"transfer invariants", transfer_invariants},
      {"bending beam locking", beam_locking},
      {"bouncing ball geometry", bouncing_ball},
      {"CCD soundness", ccd_soundness},
      {"free flight", free_flight},
      {"static friction", static_friction},
      {"positivity filter", positivity_filter},
  };
  int failures = 0, index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    if (!only.empty() && std::find(only.begin(), only.end(), index) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s [%d] %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
