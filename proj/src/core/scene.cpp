#include "scene.hpp"

#include "ccd.hpp"
#include "meshgen.hpp"
#include "svg.hpp"

#include <Eigen/Geometry>
#include <json.hpp>
#include <unsupported/Eigen/SparseExtra>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hoipc {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kParse, path + ": " + msg);
}

/// Read-only view of one JSON object that rejects unknown keys.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }
  ~Node() = default;

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(child(it.key()), "unknown field");
  }
  bool has(const std::string& k) const {
    seen_.insert(k);
    return j_.contains(k);
  }
  std::string child(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  const json& raw(const std::string& k) const {
    seen_.insert(k);
    return j_.at(k);
  }

  double num(const std::string& k, double def) const { return has(k) ? num(k) : def; }
  double num(const std::string& k) const {
    if (!has(k)) fail(child(k), "missing required field");
    const json& v = raw(k);
    if (!v.is_number()) fail(child(k), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(child(k), "must be finite");
    return d;
  }
  int integer(const std::string& k, int def) const {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_number_integer()) fail(child(k), "expected an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_boolean()) fail(child(k), "expected true or false");
    return v.get<bool>();
  }
  std::string str(const std::string& k, const std::string& def) const {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_string()) fail(child(k), "expected a string");
    return v.get<std::string>();
  }
  Vec3 vec3(const std::string& k, const Vec3& def) const {
    if (!has(k)) return def;
    const json& v = raw(k);
    if (!v.is_array() || v.size() != 3) fail(child(k), "expected an array of 3 numbers");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) fail(child(k), "expected an array of 3 numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }
  template <class F>
  void array(const std::string& k, F&& each) const {
    if (!has(k)) return;
    const json& v = raw(k);
    if (!v.is_array()) fail(child(k), "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) each(v[i], child(k) + "[" + std::to_string(i) + "]");
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& msg) {
  if (!ok) fail(path, msg);
}

RigidPath parse_path(const json& j, const std::string& path) {
  Node n(j, path);
  RigidPath p;
  p.pivot = n.vec3("pivot", Vec3::Zero());
  n.array("keys", [&](const json& k, const std::string& kp) {
    Node kn(k, kp);
    RigidKeyframe key;
    key.time = kn.num("time");
    key.translation = kn.vec3("translation", Vec3::Zero());
    key.rotation = kn.vec3("rotation", Vec3::Zero());
    kn.finish();
    if (!p.keys.empty()) require(key.time > p.keys.back().time, kp + ".time", "keyframe times must increase");
    p.keys.push_back(key);
  });
  n.finish();
  return p;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json path_json(const RigidPath& p) {
  json keys = json::array();
  for (const auto& k : p.keys)
    keys.push_back({{"time", k.time}, {"translation", vec_json(k.translation)}, {"rotation", vec_json(k.rotation)}});
  return {{"pivot", vec_json(p.pivot)}, {"keys", keys}};
}

BodyConfig parse_body(const json& j, const std::string& path) {
  Node n(j, path);
  BodyConfig b;
  b.mesh = n.str("mesh", "");
  if (n.has("generate")) {
    Node g(n.raw("generate"), n.child("generate"));
    MeshGenerator gen;
    gen.type = g.str("type", "box");
    require(gen.type == "box" || gen.type == "ball", g.child("type"), "must be \"box\" or \"ball\"");
    gen.lo = g.vec3("lo", gen.lo);
    gen.hi = g.vec3("hi", gen.hi);
    if (g.has("cells")) {
      const json& c = g.raw("cells");
      require(c.is_array() && c.size() == 3, g.child("cells"), "expected an array of 3 integers");
      for (int i = 0; i < 3; ++i) {
        require(c[i].is_number_integer() && c[i].get<int>() >= 1, g.child("cells"), "cell counts must be >= 1");
        gen.cells[i] = c[i].get<int>();
      }
    }
    gen.radius = g.num("radius", gen.radius);
    gen.refinement = g.integer("refinement", gen.refinement);
    g.finish();
    if (gen.type == "box") require((gen.hi.array() > gen.lo.array()).all(), g.child("hi"), "must exceed lo");
    if (gen.type == "ball") {
      require(gen.radius > 0.0, g.child("radius"), "must be positive");
      require(gen.refinement >= 0 && gen.refinement <= 4, g.child("refinement"), "must be in [0, 4]");
    }
    b.generate = gen;
  }
  require(b.mesh.empty() != !b.generate.has_value(), path, "exactly one of \"mesh\" and \"generate\" is required");
  b.geometry_order = n.integer("geometry_order", 0);
  require(b.geometry_order >= 0 && b.geometry_order <= 4, n.child("geometry_order"), "must be in [0, 4] (0 = from mesh)");
  b.rotation = n.vec3("rotation", Vec3::Zero());
  b.translation = n.vec3("translation", Vec3::Zero());
  b.basis_order = n.integer("basis_order", 1);
  require(b.basis_order >= 1 && b.basis_order <= 4, n.child("basis_order"), "must be in [1, 4]");
  b.material.density = n.num("density");
  require(b.material.density > 0.0, n.child("density"), "must be positive");
  b.material.youngs_modulus = n.num("youngs_modulus");
  require(b.material.youngs_modulus > 0.0, n.child("youngs_modulus"), "must be positive");
  b.material.poisson_ratio = n.num("poisson_ratio");
  require(b.material.poisson_ratio > 0.0 && b.material.poisson_ratio < 0.5, n.child("poisson_ratio"),
          "must be in (0, 0.5)");
  if (n.has("group_density")) {
    const json& g = n.raw("group_density");
    require(g.is_object(), n.child("group_density"), "expected an object of tag -> density");
    for (auto it = g.begin(); it != g.end(); ++it) {
      const std::string p = n.child("group_density") + "." + it.key();
      int tag = 0;
      try {
        std::size_t used = 0;
        tag = std::stoi(it.key(), &used);
        require(used == it.key().size(), p, "tag must be an integer");
      } catch (const std::logic_error&) {
        fail(p, "tag must be an integer");
      }
      require(it.value().is_number() && it.value().get<double>() > 0.0, p, "density must be positive");
      b.group_density[tag] = it.value().get<double>();
    }
  }
  b.initial_velocity = n.vec3("initial_velocity", Vec3::Zero());
  if (n.has("collision")) {
    Node c(n.raw("collision"), n.child("collision"));
    b.collision.mode = c.str("mode", "upsample");
    require(b.collision.mode == "upsample" || b.collision.mode == "proxy", c.child("mode"),
            "must be \"upsample\" or \"proxy\"");
    b.collision.level = c.integer("level", 0);
    require(b.collision.level >= 0 && b.collision.level <= 8, c.child("level"), "must be in [0, 8]");
    b.collision.proxy_mesh = c.str("proxy", "");
    if (b.collision.mode == "proxy") require(!b.collision.proxy_mesh.empty(), c.child("proxy"), "proxy mode needs a mesh path");
    c.finish();
  }
  n.array("dirichlet", [&](const json& d, const std::string& dp) {
    Node dn(d, dp);
    DirichletConfig dc;
    dc.box_min = dn.vec3("box_min", Vec3::Zero());
    dc.box_max = dn.vec3("box_max", Vec3::Zero());
    require((dc.box_max.array() >= dc.box_min.array()).all(), dn.child("box_max"), "must not be below box_min");
    if (dn.has("path")) dc.path = parse_path(dn.raw("path"), dn.child("path"));
    dn.finish();
    b.dirichlet.push_back(dc);
  });
  n.finish();
  return b;
}

ColliderConfig parse_collider(const json& j, const std::string& path) {
  Node n(j, path);
  ColliderConfig c;
  c.type = n.str("type", "plane");
  require(c.type == "plane" || c.type == "mesh", n.child("type"), "must be \"plane\" or \"mesh\"");
  c.center = n.vec3("center", Vec3::Zero());
  c.normal = n.vec3("normal", Vec3::UnitZ());
  c.size = n.num("size", 1.0);
  c.divisions = n.integer("divisions", 1);
  c.mesh = n.str("mesh", "");
  if (n.has("path")) c.path = parse_path(n.raw("path"), n.child("path"));
  n.finish();
  if (c.type == "plane") {
    require(c.normal.norm() > 0.0, n.child("normal"), "must be non-zero");
    require(c.size > 0.0, n.child("size"), "must be positive");
    require(c.divisions >= 1, n.child("divisions"), "must be >= 1");
  } else {
    require(!c.mesh.empty(), n.child("mesh"), "mesh colliders need a mesh path");
  }
  return c;
}

std::filesystem::path resolve(const SceneConfig& c, const std::string& p) {
  const std::filesystem::path fp(p);
  return fp.is_absolute() || c.base_dir.empty() ? fp : c.base_dir / fp;
}

}  // namespace

int SceneConfig::num_steps() const { return static_cast<int>(std::llround(duration / h)); }

SceneConfig load_scene(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, std::string("scene is not valid JSON: ") + e.what());
  }
  Node n(j, "");
  SceneConfig c;
  c.base_dir = base_dir;
  c.name = n.str("name", c.name);
  c.h = n.num("time_step");
  require(c.h > 0.0, "time_step", "must be positive");
  c.duration = n.num("duration", c.duration);
  require(c.duration >= 0.0, "duration", "must not be negative");
  c.gravity = n.vec3("gravity", c.gravity);
  c.contact = n.boolean("contact", c.contact);
  c.dhat = n.num("dhat", c.dhat);
  require(c.dhat > 0.0, "dhat", "must be positive");
  c.mu = n.num("mu", 0.0);
  require(c.mu >= 0.0, "mu", "must not be negative");
  if (n.has("eps_v")) {
    c.eps_v = n.num("eps_v");
    require(*c.eps_v > 0.0, "eps_v", "must be positive");
  }
  if (c.mu > 0.0) require(c.eps_v.has_value(), "eps_v", "required when mu > 0");
  c.friction_iterations = n.integer("friction_iterations", 1);
  require(c.friction_iterations >= 1, "friction_iterations", "must be >= 1");
  c.newton_tolerance = n.num("newton_tolerance", c.newton_tolerance);
  require(c.newton_tolerance > 0.0, "newton_tolerance", "must be positive");
  c.max_iterations = n.integer("max_iterations", c.max_iterations);
  require(c.max_iterations >= 1, "max_iterations", "must be >= 1");
  c.project_hessian = n.boolean("project_hessian", c.project_hessian);
  n.array("bodies", [&](const json& b, const std::string& p) { c.bodies.push_back(parse_body(b, p)); });
  require(!c.bodies.empty(), "bodies", "at least one body is required");
  n.array("colliders", [&](const json& b, const std::string& p) { c.colliders.push_back(parse_collider(b, p)); });
  if (n.has("output")) {
    Node o(n.raw("output"), "output");
    c.output.frame_stride = o.integer("frame_stride", 1);
    require(c.output.frame_stride >= 1, "output.frame_stride", "must be >= 1");
    c.output.obj = o.boolean("obj", true);
    c.output.vtu = o.boolean("vtu", true);
    c.output.dump_contacts = o.boolean("dump_contacts", false);
    c.output.dump_transfer = o.boolean("dump_transfer", false);
    o.finish();
  }
  n.finish();
  return c;
}

SceneConfig load_scene_file(const std::filesystem::path& path) {
  return load_scene(read_text_file(path), path.parent_path());
}

std::string serialize_scene(const SceneConfig& c) {
  json j;
  j["name"] = c.name;
  j["time_step"] = c.h;
  j["duration"] = c.duration;
  j["gravity"] = vec_json(c.gravity);
  j["contact"] = c.contact;
  j["dhat"] = c.dhat;
  j["mu"] = c.mu;
  if (c.eps_v) j["eps_v"] = *c.eps_v;
  j["friction_iterations"] = c.friction_iterations;
  j["newton_tolerance"] = c.newton_tolerance;
  j["max_iterations"] = c.max_iterations;
  j["project_hessian"] = c.project_hessian;
  json bodies = json::array();
  for (const auto& b : c.bodies) {
    json jb;
    if (b.generate) {
      const auto& g = *b.generate;
      jb["generate"] = {{"type", g.type},         {"lo", vec_json(g.lo)},
                        {"hi", vec_json(g.hi)},   {"cells", {g.cells[0], g.cells[1], g.cells[2]}},
                        {"radius", g.radius},     {"refinement", g.refinement}};
    } else {
      jb["mesh"] = b.mesh;
    }
    jb["geometry_order"] = b.geometry_order;
    jb["rotation"] = vec_json(b.rotation);
    jb["translation"] = vec_json(b.translation);
    jb["basis_order"] = b.basis_order;
    jb["density"] = b.material.density;
    jb["youngs_modulus"] = b.material.youngs_modulus;
    jb["poisson_ratio"] = b.material.poisson_ratio;
    if (!b.group_density.empty()) {
      json g = json::object();
      for (const auto& [tag, rho] : b.group_density) g[std::to_string(tag)] = rho;
      jb["group_density"] = g;
    }
    jb["initial_velocity"] = vec_json(b.initial_velocity);
    jb["collision"] = {{"mode", b.collision.mode}, {"level", b.collision.level}};
    if (!b.collision.proxy_mesh.empty()) jb["collision"]["proxy"] = b.collision.proxy_mesh;
    json dir = json::array();
    for (const auto& d : b.dirichlet)
      dir.push_back({{"box_min", vec_json(d.box_min)}, {"box_max", vec_json(d.box_max)}, {"path", path_json(d.path)}});
    if (!dir.empty()) jb["dirichlet"] = dir;
    bodies.push_back(jb);
  }
  j["bodies"] = bodies;
  json colliders = json::array();
  for (const auto& col : c.colliders) {
    json jc{{"type", col.type}};
    if (col.type == "plane") {
      jc["center"] = vec_json(col.center);
      jc["normal"] = vec_json(col.normal);
      jc["size"] = col.size;
      jc["divisions"] = col.divisions;
    } else {
      jc["mesh"] = col.mesh;
    }
    jc["path"] = path_json(col.path);
    colliders.push_back(jc);
  }
  j["colliders"] = colliders;
  j["output"] = {{"frame_stride", c.output.frame_stride},
                 {"obj", c.output.obj},
                 {"vtu", c.output.vtu},
                 {"dump_contacts", c.output.dump_contacts},
                 {"dump_transfer", c.output.dump_transfer}};
  return j.dump(2) + "\n";
}

bool scenes_equal(const SceneConfig& a, const SceneConfig& b) { return serialize_scene(a) == serialize_scene(b); }

namespace {

Mat3 rotation_matrix(const Vec3& r) {
  const double a = r.norm();
  return a > 0.0 ? Mat3(Eigen::AngleAxisd(a, r / a)) : Mat3::Identity();
}

}  // namespace

std::unique_ptr<World> build_world(const SceneConfig& c, bool direct_coupling) {
  std::vector<BodySetup> bodies;
  for (std::size_t i = 0; i < c.bodies.size(); ++i) {
    const BodyConfig& bc = c.bodies[i];
    BodySetup b;
    if (bc.generate) {
      const int g = std::max(1, bc.geometry_order);
      b.mesh = bc.generate->type == "box" ? make_box(bc.generate->lo, bc.generate->hi, bc.generate->cells, g)
                                          : make_ball(bc.generate->radius, bc.generate->refinement, g);
    } else {
      b.mesh = load_mesh_file(resolve(c, bc.mesh));
      if (bc.geometry_order != 0 && bc.geometry_order != b.mesh.geometry_order)
        throw Error(ErrorCode::kInvalidMesh, "bodies[" + std::to_string(i) + "]: mesh geometry order " +
                                                 std::to_string(b.mesh.geometry_order) + " differs from geometry_order " +
                                                 std::to_string(bc.geometry_order));
    }
    const Mat3 R = rotation_matrix(bc.rotation);
    for (auto& x : b.mesh.nodes) x = R * x + bc.translation;
    b.basis_order = bc.basis_order;
    b.material = bc.material;
    b.tag_density = bc.group_density;
    b.initial_velocity = bc.initial_velocity;
    b.upsample_level = bc.collision.level;
    if (bc.collision.mode == "proxy") {
      TriangleMesh proxy = read_obj(resolve(c, bc.collision.proxy_mesh));
      for (auto& x : proxy.vertices) x = R * x + bc.translation;
      b.proxy = ProxySurface{proxy.vertices, proxy.triangles};
    }
    for (const auto& d : bc.dirichlet) b.dirichlet.push_back({d.box_min, d.box_max, d.path});
    bodies.push_back(std::move(b));
  }
  std::vector<ColliderSetup> colliders;
  for (const auto& cc : c.colliders) {
    ColliderSetup s;
    if (cc.type == "plane") {
      s = make_plane(cc.center, cc.normal, cc.size, cc.divisions);
    } else {
      TriangleMesh m = read_obj(resolve(c, cc.mesh));
      s.vertices = m.vertices;
      s.triangles = m.triangles;
    }
    s.path = cc.path;
    colliders.push_back(std::move(s));
  }
  WorldParams p;
  p.h = c.h;
  p.gravity = c.gravity;
  p.contact.enabled = c.contact;
  p.contact.dhat = c.dhat;
  p.friction.mu = c.mu;
  p.friction.eps_v = c.eps_v.value_or(1e-3);
  p.friction.iterations = c.friction_iterations;
  p.solver.newton_tolerance = c.newton_tolerance;
  p.solver.max_iterations = c.max_iterations;
  p.solver.project_hessian = c.project_hessian;
  return std::make_unique<World>(std::move(bodies), std::move(colliders), p, direct_coupling);
}

Simulation::Simulation(const SceneConfig& config, bool direct_coupling)
    : config_(config), world_(build_world(config, direct_coupling)), state_(world_->initial_state()) {}

FrameRecord Simulation::frame() const {
  FrameRecord f;
  f.step = state_.step;
  f.time = state_.time;
  f.u = state_.U;
  f.v = state_.V;
  f.surface = world_->problem().surface_positions(state_.U);
  f.diagnostics = last_;
  f.flagged = !last_.converged || last_.stagnated;
  return f;
}

FrameRecord Simulation::step() {
  const Problem& p = world_->problem();
  state_ = solve_step(p, state_, world_->targets(state_.time + p.h), &last_);
  return frame();
}

std::vector<Vec3> Simulation::barycenters() const {
  std::vector<Vec3> out;
  for (const auto& b : world_->bodies()) {
    const VecX& m = b.elastic->lumped_mass();
    Vec3 c = Vec3::Zero();
    for (int n = 0; n < b.space.num_nodes; ++n)
      c += m[n] * (b.space.rest_positions[n] + state_.U.segment<3>(3 * (b.node_offset + n)));
    out.push_back(c / m.sum());
  }
  return out;
}

std::vector<double> Simulation::kinetic_energies() const {
  std::vector<double> out;
  for (const auto& b : world_->bodies()) {
    const VecX v = state_.V.segment(3 * b.node_offset, b.elastic->num_dofs());
    out.push_back(0.5 * v.dot(b.elastic->mass3() * v));
  }
  return out;
}

namespace {

std::string frame_name(const char* stem, int step, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05d.%s", stem, step, ext);
  return buf;
}

void write_frame_files(const Simulation& sim, const FrameRecord& f, const std::filesystem::path& dir) {
  const World& w = sim.world();
  const Problem& p = w.problem();
  const OutputConfig& out = sim.config().output;
  if (out.obj) {
    std::vector<Vec3> verts(p.topology.num_vertices);
    for (int i = 0; i < p.topology.num_vertices; ++i) verts[i] = f.surface.segment<3>(3 * i);
    write_text_file(dir / "frames" / frame_name("surface", f.step, "obj"), write_obj(verts, p.topology.triangles));
  }
  if (out.vtu) {
    std::vector<Vec3> pts, disp, vel;
    std::vector<std::array<int, 4>> tets;
    for (const auto& b : w.bodies()) {
      const auto& mesh = b.setup.mesh;
      std::map<int, int> local;
      for (int e = 0; e < mesh.num_elements(); ++e) {
        std::array<int, 4> t{};
        for (int k = 0; k < 4; ++k) {
          const int node = mesh.element(e)[k];
          auto [it, inserted] = local.emplace(node, static_cast<int>(pts.size()));
          if (inserted) {
            const int dof = b.node_offset + b.space.geometry_node_dof[node];
            const Vec3 u = f.u.segment<3>(3 * dof);
            pts.push_back(mesh.nodes[node] + u);
            disp.push_back(u);
            vel.push_back(f.v.segment<3>(3 * dof));
          }
          t[k] = it->second;
        }
        tets.push_back(t);
      }
    }
    write_text_file(dir / "frames" / frame_name("volume", f.step, "vtu"),
                    write_vtu(pts, tets, {{"displacement", disp}, {"velocity", vel}}));
  }
  if (out.dump_contacts) {
    std::ostringstream c;
    c << "kind,v0,v1,v2,v3,distance\n";
    if (p.contact.enabled)
      for (const auto& s : build_constraint_set(p.topology, f.surface, p.contact.dhat))
        c << (s.kind == StencilKind::kPointTriangle ? "PT" : "EE") << ',' << s.v[0] << ',' << s.v[1] << ',' << s.v[2]
          << ',' << s.v[3] << ',' << format_double(std::sqrt(stencil_distance(s, f.surface).d2)) << '\n';
    write_text_file(dir / "contacts" / frame_name("contacts", f.step, "csv"), c.str());
  }
}

}  // namespace

void run(const SceneConfig& config, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "frames", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  if (config.output.dump_contacts) std::filesystem::create_directories(out_dir / "contacts", ec);

  Simulation sim(config);
  const World& w = sim.world();
  write_text_file(out_dir / "scene.json", serialize_scene(config));
  if (config.output.dump_transfer)
    for (std::size_t i = 0; i < w.bodies().size(); ++i) {
      const auto path = out_dir / ("transfer_body" + std::to_string(i) + ".mtx");
      if (!Eigen::saveMarket(w.bodies()[i].transfer.W, path.string()))
        throw Error(ErrorCode::kIo, "cannot write " + path.string());
    }

  std::ostringstream frames, bodies;
  frames << "step,time,newton_iterations,lag_passes,min_distance,kappa,contacts,inertia_elastic,barrier,friction,"
            "kinetic,flagged,intersection_free\n";
  bodies << "step,time,body,cx,cy,cz,kinetic\n";

  auto record = [&](const FrameRecord& f) {
    const auto& d = f.diagnostics;
    int iters = 0;
    for (int k : d.newton_iterations) iters += k;
    const auto ke = sim.kinetic_energies();
    double ke_sum = 0.0;
    for (double k : ke) ke_sum += k;
    const bool clear = !sim.world().problem().contact.enabled ||
                       !has_intersections(sim.world().problem().topology, f.surface);
    frames << f.step << ',' << format_double(f.time) << ',' << iters << ',' << d.newton_iterations.size() << ','
           << format_double(d.min_distance) << ',' << format_double(d.kappa) << ',' << d.contacts << ','
           << format_double(d.terms.inertia_elastic) << ',' << format_double(d.terms.barrier) << ','
           << format_double(d.terms.friction) << ',' << format_double(ke_sum) << ',' << (f.flagged ? 1 : 0) << ','
           << (clear ? 1 : 0) << '\n';
    const auto bc = sim.barycenters();
    for (std::size_t i = 0; i < bc.size(); ++i)
      bodies << f.step << ',' << format_double(f.time) << ',' << i << ',' << format_double(bc[i].x()) << ','
             << format_double(bc[i].y()) << ',' << format_double(bc[i].z()) << ',' << format_double(ke[i]) << '\n';
    if (f.step % config.output.frame_stride == 0) write_frame_files(sim, f, out_dir);
  };

  record(sim.frame());
  const int steps = config.num_steps();
  for (int s = 0; s < steps; ++s) record(sim.step());
  write_text_file(out_dir / "frames.csv", frames.str());
  write_text_file(out_dir / "bodies.csv", bodies.str());
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int col(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw Error(ErrorCode::kParse, "missing column " + name);
  }
  std::vector<double> column(const std::string& name) const {
    const int c = col(name);
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
  }
};

Table read_csv(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kIo, "missing frames: " + path.string() + " not found");
  std::istringstream in(read_text_file(path));
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, path.string() + " is empty");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ls, cell, ',');) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != t.header.size()) throw Error(ErrorCode::kParse, path.string() + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  if (t.rows.empty()) throw Error(ErrorCode::kParse, "missing frames: " + path.string() + " has no rows");
  return t;
}

}  // namespace

ReportSummary report(const std::filesystem::path& dir, bool plots) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  const Table frames = read_csv(dir / "frames.csv");
  const Table bodies = read_csv(dir / "bodies.csv");
  const SceneConfig scene = load_scene(read_text_file(dir / "scene.json"), dir);

  ReportSummary s;
  s.frames = static_cast<int>(frames.rows.size());
  const auto flagged = frames.column("flagged");
  const auto mind = frames.column("min_distance");
  const auto iters = frames.column("newton_iterations");
  const auto kin = frames.column("kinetic");
  const auto time = frames.column("time");
  for (double f : flagged) s.flagged_frames += f != 0.0;
  s.min_distance = *std::min_element(mind.begin(), mind.end());
  s.max_newton_iterations = *std::max_element(iters.begin(), iters.end());
  s.initial_kinetic = kin.front();
  s.final_kinetic = kin.back();

  // Barycenter series per body and the implicit-Euler ballistic reference for body 0.
  const int nb = static_cast<int>(scene.bodies.size());
  std::vector<std::vector<double>> bt(nb), bx(nb), by(nb), bz(nb);
  const int cb = bodies.col("body"), ct = bodies.col("time");
  for (const auto& r : bodies.rows) {
    const int b = static_cast<int>(r[cb]);
    if (b < 0 || b >= nb) throw Error(ErrorCode::kParse, "bodies.csv: body index out of range");
    bt[b].push_back(r[ct]);
    bx[b].push_back(r[bodies.col("cx")]);
    by[b].push_back(r[bodies.col("cy")]);
    bz[b].push_back(r[bodies.col("cz")]);
  }
  std::vector<double> ballistic;
  {
    const double h = scene.h, g = scene.gravity.z(), v0 = scene.bodies[0].initial_velocity.z();
    for (std::size_t n = 0; n < bz[0].size(); ++n) {
      const double k = static_cast<double>(n);
      ballistic.push_back(bz[0][0] + k * h * v0 + h * h * g * k * (k + 1) / 2);
      s.free_fall_deviation = std::max(s.free_fall_deviation, std::abs(ballistic.back() - bz[0][n]));
    }
  }

  std::ostringstream txt;
  txt << "scene: " << scene.name << "\nframes: " << s.frames << "\nflagged frames: " << s.flagged_frames
      << "\nminimum distance: " << format_double(s.min_distance)
      << "\nmax Newton iterations per step: " << s.max_newton_iterations
      << "\nkinetic energy: initial " << format_double(s.initial_kinetic) << ", final " << format_double(s.final_kinetic)
      << "\nbody 0 deviation from ballistic implicit Euler: " << format_double(s.free_fall_deviation) << "\n";
  for (int b = 0; b < nb; ++b)
    txt << "body " << b << " barycenter: start (" << format_double(bx[b].front()) << ", " << format_double(by[b].front())
        << ", " << format_double(bz[b].front()) << ") end (" << format_double(bx[b].back()) << ", "
        << format_double(by[b].back()) << ", " << format_double(bz[b].back()) << ")\n";
  write_text_file(dir / "summary.txt", txt.str());
  s.files.push_back("summary.txt");

  if (plots) {
    svg::LinePlot bary("Barycenter height", "time (s)", "z (m)");
    for (int b = 0; b < nb; ++b) bary.add("body " + std::to_string(b), bt[b], bz[b]);
    bary.add("ballistic reference", bt[0], ballistic, true);
    write_text_file(dir / "barycenter.svg", bary.render());

    svg::LinePlot lateral("Barycenter lateral position", "time (s)", "m");
    for (int b = 0; b < nb; ++b) {
      lateral.add("body " + std::to_string(b) + " x", bt[b], bx[b]);
      lateral.add("body " + std::to_string(b) + " y", bt[b], by[b]);
    }
    write_text_file(dir / "barycenter_lateral.svg", lateral.render());

    svg::LinePlot energy("Energy", "time (s)", "J");
    energy.add("kinetic", time, kin);
    energy.add("incremental potential", time, frames.column("inertia_elastic"));
    energy.add("barrier", time, frames.column("barrier"));
    energy.add("friction", time, frames.column("friction"));
    write_text_file(dir / "energy.svg", energy.render());

    std::vector<double> per_step(iters.begin() + 1, iters.end());
    write_text_file(dir / "newton_histogram.svg",
                    svg::histogram("Newton iterations per step", "iterations", per_step.empty() ? iters : per_step));
    s.files.insert(s.files.end(), {"barycenter.svg", "barycenter_lateral.svg", "energy.svg", "newton_histogram.svg"});
  }
  return s;
}

}  // namespace hoipc
