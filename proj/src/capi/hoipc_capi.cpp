#include "hoipc/hoipc.h"

#include "meshgen.hpp"
#include "parallel.hpp"
#include "scene.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

struct hoipc_scene {
  hoipc::SceneConfig config;
};

struct hoipc_sim {
  std::unique_ptr<hoipc::Simulation> sim;
};

namespace {

thread_local std::string g_error;

template <class F>
hoipc_status guarded(F&& f) {
  try {
    f();
    g_error.clear();
    return HOIPC_OK;
  } catch (const hoipc::Error& e) {
    g_error = e.what();
    return static_cast<hoipc_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return HOIPC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return HOIPC_ERR_INTERNAL;
  }
}

void need(bool ok, const char* msg) {
  if (!ok) throw hoipc::Error(hoipc::ErrorCode::kInvalidArgument, msg);
}

}  // namespace

extern "C" {

const char* hoipc_last_error(void) { return g_error.c_str(); }
const char* hoipc_version(void) { return "0.1.0"; }

hoipc_status hoipc_set_num_threads(int n) {
  return guarded([&] {
    need(n >= 0, "thread count must not be negative");
    hoipc::set_num_threads(n);
  });
}

hoipc_status hoipc_scene_load_file(const char* path, hoipc_scene** out) {
  return guarded([&] {
    need(path && out, "null argument");
    *out = new hoipc_scene{hoipc::load_scene_file(path)};
  });
}

hoipc_status hoipc_scene_load_string(const char* text, const char* base_dir, hoipc_scene** out) {
  return guarded([&] {
    need(text && out, "null argument");
    *out = new hoipc_scene{hoipc::load_scene(text, base_dir ? base_dir : "")};
  });
}

void hoipc_scene_free(hoipc_scene* scene) { delete scene; }

hoipc_status hoipc_scene_serialize(const hoipc_scene* scene, char** out) {
  return guarded([&] {
    need(scene && out, "null argument");
    const std::string s = hoipc::serialize_scene(scene->config);
    char* buf = static_cast<char*>(std::malloc(s.size() + 1));
    if (!buf) throw std::bad_alloc();
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

void hoipc_string_free(char* s) { std::free(s); }

hoipc_status hoipc_scene_set_basis_order(hoipc_scene* scene, int order) {
  return guarded([&] {
    need(scene, "null scene");
    need(order >= 1 && order <= 4, "basis order must be in [1, 4]");
    for (auto& b : scene->config.bodies) b.basis_order = order;
  });
}

hoipc_status hoipc_scene_set_upsample_level(hoipc_scene* scene, int level) {
  return guarded([&] {
    need(scene, "null scene");
    need(level >= 0 && level <= 8, "upsample level must be in [0, 8]");
    for (auto& b : scene->config.bodies)
      if (b.collision.mode == "upsample") b.collision.level = level;
  });
}

hoipc_status hoipc_scene_set_duration(hoipc_scene* scene, double duration) {
  return guarded([&] {
    need(scene, "null scene");
    need(duration >= 0.0, "duration must not be negative");
    scene->config.duration = duration;
  });
}

hoipc_status hoipc_scene_set_dump(hoipc_scene* scene, int contacts, int transfer) {
  return guarded([&] {
    need(scene, "null scene");
    scene->config.output.dump_contacts = contacts != 0;
    scene->config.output.dump_transfer = transfer != 0;
  });
}

hoipc_status hoipc_run(const hoipc_scene* scene, const char* out_dir) {
  return guarded([&] {
    need(scene && out_dir, "null argument");
    hoipc::run(scene->config, out_dir);
  });
}

hoipc_status hoipc_report(const char* dir, int plots) {
  return guarded([&] {
    need(dir, "null directory");
    hoipc::report(dir, plots != 0);
  });
}

hoipc_status hoipc_sim_create(const hoipc_scene* scene, hoipc_sim** out) {
  return guarded([&] {
    need(scene && out, "null argument");
    *out = new hoipc_sim{std::make_unique<hoipc::Simulation>(scene->config)};
  });
}

void hoipc_sim_free(hoipc_sim* sim) { delete sim; }

hoipc_status hoipc_sim_step(hoipc_sim* sim, hoipc_step_info* info) {
  return guarded([&] {
    need(sim, "null simulation");
    const hoipc::FrameRecord f = sim->sim->step();
    if (info) {
      info->step = f.step;
      info->time = f.time;
      info->newton_iterations = 0;
      for (int k : f.diagnostics.newton_iterations) info->newton_iterations += k;
      info->contacts = f.diagnostics.contacts;
      info->min_distance = f.diagnostics.min_distance;
      info->kappa = f.diagnostics.kappa;
      info->flagged = f.flagged ? 1 : 0;
    }
  });
}

size_t hoipc_sim_num_dofs(const hoipc_sim* sim) {
  return sim ? static_cast<size_t>(sim->sim->world().problem().num_dofs()) : 0;
}

size_t hoipc_sim_num_surface_coords(const hoipc_sim* sim) {
  return sim ? static_cast<size_t>(sim->sim->world().problem().surface_rest.size()) : 0;
}

hoipc_status hoipc_sim_displacement(const hoipc_sim* sim, double* out, size_t n) {
  return guarded([&] {
    need(sim && out, "null argument");
    const hoipc::VecX& u = sim->sim->state().U;
    need(n == static_cast<size_t>(u.size()), "buffer size does not match hoipc_sim_num_dofs");
    std::memcpy(out, u.data(), n * sizeof(double));
  });
}

hoipc_status hoipc_sim_surface(const hoipc_sim* sim, double* out, size_t n) {
  return guarded([&] {
    need(sim && out, "null argument");
    const hoipc::VecX x = sim->sim->world().problem().surface_positions(sim->sim->state().U);
    need(n == static_cast<size_t>(x.size()), "buffer size does not match hoipc_sim_num_surface_coords");
    std::memcpy(out, x.data(), n * sizeof(double));
  });
}

hoipc_status hoipc_sim_barycenter(const hoipc_sim* sim, int body, double out[3]) {
  return guarded([&] {
    need(sim && out, "null argument");
    const auto b = sim->sim->barycenters();
    need(body >= 0 && body < static_cast<int>(b.size()), "body index out of range");
    for (int i = 0; i < 3; ++i) out[i] = b[body][i];
  });
}

hoipc_status hoipc_generate_box(const double lo[3], const double hi[3], const int cells[3], int geometry_order,
                                const char* path) {
  return guarded([&] {
    need(lo && hi && cells && path, "null argument");
    const auto mesh = hoipc::make_box(hoipc::Vec3(lo[0], lo[1], lo[2]), hoipc::Vec3(hi[0], hi[1], hi[2]),
                                      {cells[0], cells[1], cells[2]}, geometry_order);
    hoipc::write_text_file(path, hoipc::write_msh(mesh));
  });
}

hoipc_status hoipc_generate_ball(double radius, int refinement, int geometry_order, const char* path) {
  return guarded([&] {
    need(path, "null path");
    hoipc::write_text_file(path, hoipc::write_msh(hoipc::make_ball(radius, refinement, geometry_order)));
  });
}

hoipc_status hoipc_generate_sphere_surface(double radius, int refinement, const char* path) {
  return guarded([&] {
    need(path, "null path");
    const auto surface = hoipc::upsample_surface(hoipc::make_ball(radius, refinement, 1), 0);
    hoipc::write_text_file(path, hoipc::write_obj(surface.vertices, surface.triangles));
  });
}

}  // extern "C"
