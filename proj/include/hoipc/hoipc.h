#ifndef HOIPC_HOIPC_H
#define HOIPC_HOIPC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define HOIPC_API __declspec(dllexport)
#else
#define HOIPC_API __attribute__((visibility("default")))
#endif

typedef enum hoipc_status {
  HOIPC_OK = 0,
  HOIPC_ERR_INVALID_ARGUMENT = 1,
  HOIPC_ERR_PARSE = 2,
  HOIPC_ERR_INVALID_MESH = 3,
  HOIPC_ERR_NOT_CONVERGED = 4,
  HOIPC_ERR_IO = 5,
  HOIPC_ERR_INTERSECTING = 6,
  HOIPC_ERR_INTERNAL = 7
} hoipc_status;

typedef struct hoipc_scene hoipc_scene;
typedef struct hoipc_sim hoipc_sim;

/* Message of the last failed call on this thread; never NULL. */
HOIPC_API const char* hoipc_last_error(void);
HOIPC_API const char* hoipc_version(void);

/* 0 selects the hardware concurrency. */
HOIPC_API hoipc_status hoipc_set_num_threads(int n);

/* Scenes. Relative mesh paths resolve against the scene file's directory (or base_dir). */
HOIPC_API hoipc_status hoipc_scene_load_file(const char* path, hoipc_scene** out);
HOIPC_API hoipc_status hoipc_scene_load_string(const char* text, const char* base_dir, hoipc_scene** out);
HOIPC_API void hoipc_scene_free(hoipc_scene* scene);
/* Serialized JSON; release with hoipc_string_free. */
HOIPC_API hoipc_status hoipc_scene_serialize(const hoipc_scene* scene, char** out);
HOIPC_API void hoipc_string_free(char* s);
/* Overrides applied to every body. */
HOIPC_API hoipc_status hoipc_scene_set_basis_order(hoipc_scene* scene, int order);
HOIPC_API hoipc_status hoipc_scene_set_upsample_level(hoipc_scene* scene, int level);
HOIPC_API hoipc_status hoipc_scene_set_duration(hoipc_scene* scene, double duration);
HOIPC_API hoipc_status hoipc_scene_set_dump(hoipc_scene* scene, int contacts, int transfer);

/* Runs the scene to completion, writing frames into out_dir. */
HOIPC_API hoipc_status hoipc_run(const hoipc_scene* scene, const char* out_dir);
/* Summary and (when plots != 0) SVG figures for a finished run directory. */
HOIPC_API hoipc_status hoipc_report(const char* dir, int plots);

/* Stepping. */
typedef struct hoipc_step_info {
  int step;
  double time;
  int newton_iterations;
  int contacts;
  double min_distance;
  double kappa;
  int flagged;
} hoipc_step_info;

HOIPC_API hoipc_status hoipc_sim_create(const hoipc_scene* scene, hoipc_sim** out);
HOIPC_API void hoipc_sim_free(hoipc_sim* sim);
HOIPC_API hoipc_status hoipc_sim_step(hoipc_sim* sim, hoipc_step_info* info);
/* Number of scalar displacement unknowns and surface coordinates (3 per vertex). */
HOIPC_API size_t hoipc_sim_num_dofs(const hoipc_sim* sim);
HOIPC_API size_t hoipc_sim_num_surface_coords(const hoipc_sim* sim);
HOIPC_API hoipc_status hoipc_sim_displacement(const hoipc_sim* sim, double* out, size_t n);
HOIPC_API hoipc_status hoipc_sim_surface(const hoipc_sim* sim, double* out, size_t n);
HOIPC_API hoipc_status hoipc_sim_barycenter(const hoipc_sim* sim, int body, double out[3]);

/* Procedural meshes written as MSH 2.2. */
HOIPC_API hoipc_status hoipc_generate_box(const double lo[3], const double hi[3], const int cells[3], int geometry_order,
                                          const char* path);
HOIPC_API hoipc_status hoipc_generate_ball(double radius, int refinement, int geometry_order, const char* path);
/* Triangulated sphere (subdivided icosahedron) written as OBJ, for collision proxies. */
HOIPC_API hoipc_status hoipc_generate_sphere_surface(double radius, int refinement, const char* path);

#ifdef __cplusplus
}
#endif

#endif
