#include "io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace hoipc {

TriangleMesh parse_obj(std::string_view text) {
  TriangleMesh m;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw Error(ErrorCode::kParse, "obj line " + std::to_string(lineno) + ": bad vertex");
      m.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        int i = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), i);
        if (res.ec != std::errc() || i == 0)
          throw Error(ErrorCode::kParse, "obj line " + std::to_string(lineno) + ": bad face index");
        idx.push_back(i > 0 ? i - 1 : static_cast<int>(m.vertices.size()) + i);
      }
      if (idx.size() < 3) throw Error(ErrorCode::kParse, "obj line " + std::to_string(lineno) + ": face needs 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) m.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  for (const auto& t : m.triangles)
    for (int i : t)
      if (i < 0 || i >= static_cast<int>(m.vertices.size())) throw Error(ErrorCode::kParse, "obj face index out of range");
  return m;
}

TriangleMesh read_obj(const std::filesystem::path& path) { return parse_obj(read_text_file(path)); }

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string write_obj(const std::vector<Vec3>& vertices, const std::vector<std::array<int, 3>>& triangles) {
  std::string out;
  out.reserve(vertices.size() * 60 + triangles.size() * 24);
  for (const auto& v : vertices)
    out += "v " + format_double(v.x()) + ' ' + format_double(v.y()) + ' ' + format_double(v.z()) + '\n';
  for (const auto& t : triangles)
    out += "f " + std::to_string(t[0] + 1) + ' ' + std::to_string(t[1] + 1) + ' ' + std::to_string(t[2] + 1) + '\n';
  return out;
}

std::string write_vtu(const std::vector<Vec3>& points, const std::vector<std::array<int, 4>>& tets,
                      const std::vector<VtuField>& fields) {
  std::ostringstream o;
  auto vec = [&](const std::vector<Vec3>& vs) {
    for (const auto& v : vs) o << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
  };
  o << "<?xml version=\"1.0\"?>\n<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n"
    << "<UnstructuredGrid>\n<Piece NumberOfPoints=\"" << points.size() << "\" NumberOfCells=\"" << tets.size() << "\">\n";
  o << "<PointData>\n";
  for (const auto& f : fields) {
    if (f.values.size() != points.size()) throw Error(ErrorCode::kInvalidArgument, "vtu field size mismatch: " + f.name);
    o << "<DataArray type=\"Float64\" Name=\"" << f.name << "\" NumberOfComponents=\"3\" format=\"ascii\">\n";
    vec(f.values);
    o << "</DataArray>\n";
  }
  o << "</PointData>\n<Points>\n<DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n";
  vec(points);
  o << "</DataArray>\n</Points>\n<Cells>\n<DataArray type=\"Int32\" Name=\"connectivity\" format=\"ascii\">\n";
  for (const auto& t : tets) o << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  o << "</DataArray>\n<DataArray type=\"Int32\" Name=\"offsets\" format=\"ascii\">\n";
  for (std::size_t i = 0; i < tets.size(); ++i) o << 4 * (i + 1) << '\n';
  o << "</DataArray>\n<DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n";
  for (std::size_t i = 0; i < tets.size(); ++i) o << "10\n";
  o << "</DataArray>\n</Cells>\n</Piece>\n</UnstructuredGrid>\n</VTKFile>\n";
  return o.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

}  // namespace hoipc
