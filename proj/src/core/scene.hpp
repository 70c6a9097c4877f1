#pragma once

#include "io.hpp"
#include "world.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace hoipc {

/// Procedural mesh source used instead of a mesh file.
struct MeshGenerator {
  std::string type = "box";            // "box" or "ball"
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  std::array<int, 3> cells{1, 1, 1};
  double radius = 1.0;
  int refinement = 0;

  bool operator==(const MeshGenerator&) const = default;
};

struct CollisionConfig {
  std::string mode = "upsample";        // "upsample" or "proxy"
  int level = 0;
  std::string proxy_mesh;

  bool operator==(const CollisionConfig&) const = default;
};

struct DirichletConfig {
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Zero();
  RigidPath path;
};

struct BodyConfig {
  std::string mesh;                     // MSH path (relative to the scene file) or empty
  std::optional<MeshGenerator> generate;
  int geometry_order = 0;               // 0: taken from the mesh
  Vec3 rotation = Vec3::Zero();        // rotation vector about the origin, applied before translation
  Vec3 translation = Vec3::Zero();
  int basis_order = 1;
  Material material;
  std::map<int, double> group_density;
  Vec3 initial_velocity = Vec3::Zero();
  CollisionConfig collision;
  std::vector<DirichletConfig> dirichlet;
};

struct ColliderConfig {
  std::string type = "plane";           // "plane" or "mesh"
  Vec3 center = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double size = 1.0;
  int divisions = 1;
  std::string mesh;
  RigidPath path;
};

struct OutputConfig {
  int frame_stride = 1;
  bool obj = true;
  bool vtu = true;
  bool dump_contacts = false;
  bool dump_transfer = false;
};

struct SceneConfig {
  std::string name = "scene";
  double h = 0.01;
  double duration = 1.0;
  Vec3 gravity = Vec3(0, 0, -9.81);
  double dhat = 1e-3;
  bool contact = true;
  double mu = 0.0;
  std::optional<double> eps_v;
  int friction_iterations = 1;
  double newton_tolerance = 1e-5;
  int max_iterations = 500;
  bool project_hessian = true;
  std::vector<BodyConfig> bodies;
  std::vector<ColliderConfig> colliders;
  OutputConfig output;
  std::filesystem::path base_dir;       // resolves relative mesh paths; not serialized

  int num_steps() const;
};

/// Parses and validates a JSON scene. Errors name the offending field path.
SceneConfig load_scene(std::string_view text, const std::filesystem::path& base_dir = {});
SceneConfig load_scene_file(const std::filesystem::path& path);
std::string serialize_scene(const SceneConfig& config);
bool scenes_equal(const SceneConfig& a, const SceneConfig& b);

/// Builds the World for a scene (meshes loaded or generated, translated, colliders placed).
std::unique_ptr<World> build_world(const SceneConfig& config, bool direct_coupling = false);

struct FrameRecord {
  int step = 0;
  double time = 0.0;
  VecX u;
  VecX v;
  VecX surface;
  StepReport diagnostics;
  bool flagged = false;
};

/// Time loop over a World with per-frame records.
class Simulation {
 public:
  explicit Simulation(const SceneConfig& config, bool direct_coupling = false);

  const SceneConfig& config() const { return config_; }
  const World& world() const { return *world_; }
  const SimState& state() const { return state_; }
  FrameRecord frame() const;
  /// Advances one step and returns the new frame.
  FrameRecord step();

  std::vector<Vec3> barycenters() const;
  std::vector<double> kinetic_energies() const;

 private:
  SceneConfig config_;
  std::unique_ptr<World> world_;
  SimState state_;
  StepReport last_;
};

/// Runs the whole scene and writes frames.csv, bodies.csv, scene.json and per-frame OBJ/VTU.
void run(const SceneConfig& config, const std::filesystem::path& out_dir);

struct ReportSummary {
  int frames = 0;
  int flagged_frames = 0;
  double min_distance = 0.0;
  double max_newton_iterations = 0.0;
  double initial_kinetic = 0.0;
  double final_kinetic = 0.0;
  double free_fall_deviation = 0.0;   // max |barycenter z - implicit-Euler ballistic z| for body 0
  std::vector<std::string> files;
};

/// Reads a run directory and writes summary.txt plus, with `plots`, SVG figures.
ReportSummary report(const std::filesystem::path& dir, bool plots);

}  // namespace hoipc
