#include <CLI11.hpp>

#include "hoipc/hoipc.h"

#include <array>
#include <cstdio>
#include <string>

namespace {

int report_error(const char* what, hoipc_status s) {
  std::fprintf(stderr, "hoipc: %s failed (code %d): %s\n", what, static_cast<int>(s), hoipc_last_error());
  return static_cast<int>(s);
}

struct SceneHandle {
  hoipc_scene* p = nullptr;
  ~SceneHandle() { hoipc_scene_free(p); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order incremental potential contact simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hoipc_version()));

  std::string scene_path, out_dir;
  int threads = 1, upsample = -1, basis = -1;
  double duration = -1.0;
  bool dump_contacts = false, dump_transfer = false;
  auto* sim = app.add_subcommand("simulate", "Run a scene and write frames");
  sim->add_option("scene", scene_path, "Scene file (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  sim->add_option("--upsample", upsample, "Collision surface upsampling level for every body")->check(CLI::Range(0, 8));
  sim->add_option("--basis-order", basis, "Displacement basis order for every body")->check(CLI::Range(1, 4));
  sim->add_option("--duration", duration, "Override the scene duration (s)")->check(CLI::NonNegativeNumber);
  sim->add_flag("--dump-contacts", dump_contacts, "Write the active contact set per frame");
  sim->add_flag("--dump-transfer", dump_transfer, "Write each body's transfer matrix (Matrix Market)");

  std::string report_dir;
  bool plots = false;
  auto* rep = app.add_subcommand("report", "Summarise a run directory");
  rep->add_option("dir", report_dir, "Run directory")->required();
  rep->add_flag("--plots", plots, "Write SVG plots");

  auto* gen = app.add_subcommand("generate", "Write a procedural high-order mesh (MSH 2.2)");
  gen->require_subcommand(1);
  std::string mesh_out;
  int order = 1;
  std::array<double, 3> lo{0, 0, 0}, hi{1, 1, 1};
  std::array<int, 3> cells{1, 1, 1};
  auto* box = gen->add_subcommand("box", "Axis-aligned box of tetrahedra");
  box->add_option("--lo", lo, "Lower corner")->expected(3);
  box->add_option("--hi", hi, "Upper corner")->expected(3);
  box->add_option("--cells", cells, "Hexahedral cells per axis")->expected(3);
  box->add_option("--order", order, "Geometry order")->check(CLI::Range(1, 4));
  box->add_option("-o,--output", mesh_out, "Output path")->required();
  double radius = 1.0;
  int refinement = 0;
  auto* ball = gen->add_subcommand("ball", "Icosahedral ball, curved for order > 1");
  ball->add_option("--radius", radius, "Radius")->check(CLI::PositiveNumber);
  ball->add_option("--refinement", refinement, "Icosahedron subdivisions")->check(CLI::Range(0, 4));
  ball->add_option("--order", order, "Geometry order")->check(CLI::Range(1, 4));
  ball->add_option("-o,--output", mesh_out, "Output path")->required();

  auto* sphere = gen->add_subcommand("sphere-surface", "Triangulated sphere (OBJ) for collision proxies");
  sphere->add_option("--radius", radius, "Radius")->check(CLI::PositiveNumber);
  sphere->add_option("--refinement", refinement, "Icosahedron subdivisions")->check(CLI::Range(0, 4));
  sphere->add_option("-o,--output", mesh_out, "Output path")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    hoipc_status s = hoipc_set_num_threads(threads);
    if (s != HOIPC_OK) return report_error("thread setup", s);
    SceneHandle scene;
    if ((s = hoipc_scene_load_file(scene_path.c_str(), &scene.p)) != HOIPC_OK) return report_error("loading scene", s);
    if (upsample >= 0 && (s = hoipc_scene_set_upsample_level(scene.p, upsample)) != HOIPC_OK)
      return report_error("--upsample", s);
    if (basis >= 0 && (s = hoipc_scene_set_basis_order(scene.p, basis)) != HOIPC_OK) return report_error("--basis-order", s);
    if (duration >= 0 && (s = hoipc_scene_set_duration(scene.p, duration)) != HOIPC_OK) return report_error("--duration", s);
    if ((s = hoipc_scene_set_dump(scene.p, dump_contacts, dump_transfer)) != HOIPC_OK) return report_error("dump flags", s);
    if ((s = hoipc_run(scene.p, out_dir.c_str())) != HOIPC_OK) return report_error("simulation", s);
    std::printf("wrote %s\n", out_dir.c_str());
  } else if (rep->parsed()) {
    const hoipc_status s = hoipc_report(report_dir.c_str(), plots);
    if (s != HOIPC_OK) return report_error("report", s);
    std::printf("wrote %s/summary.txt%s\n", report_dir.c_str(), plots ? " and plots" : "");
  } else if (box->parsed()) {
    const hoipc_status s = hoipc_generate_box(lo.data(), hi.data(), cells.data(), order, mesh_out.c_str());
    if (s != HOIPC_OK) return report_error("generate box", s);
  } else if (ball->parsed()) {
    const hoipc_status s = hoipc_generate_ball(radius, refinement, order, mesh_out.c_str());
    if (s != HOIPC_OK) return report_error("generate ball", s);
  } else if (sphere->parsed()) {
    const hoipc_status s = hoipc_generate_sphere_surface(radius, refinement, mesh_out.c_str());
    if (s != HOIPC_OK) return report_error("generate sphere-surface", s);
  }
  return 0;
}
