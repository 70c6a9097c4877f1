#pragma once

#include "mesh.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace hoipc {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
};

/// Reads `v` and `f` records; polygons are fan-triangulated, negative indices resolved.
TriangleMesh parse_obj(std::string_view text);
TriangleMesh read_obj(const std::filesystem::path& path);
std::string write_obj(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles);

/// Linear-tetrahedron VTU of the element corners with per-point vector fields.
struct VtuField {
  std::string name;
  std::vector<Vec3> values;
};
std::string write_vtu(const std::vector<Vec3>& points, const std::vector<std::array<int, 4>>& tets,
                      const std::vector<VtuField>& fields);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace hoipc
