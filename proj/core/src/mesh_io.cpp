#include "morphkit/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "morphkit/errors.hpp"

namespace morphkit {

namespace {

using json = nlohmann::json;

std::string fmt_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

bool parse_double(const std::string& token, double& out) {
  try {
    size_t pos = 0;
    out = std::stod(token, &pos);
    return pos == token.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string t;
  while (ss >> t) tokens.push_back(t);
  return tokens;
}

// ---------------------------------------------------------------- OBJ

struct ObjData {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<Face> faces;
  std::vector<long> face_lines;
};

ObjData read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  ObjData data;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = split_ws(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    const std::string& tag = tokens[0];
    if (tag == "v" || tag == "vn") {
      if (tokens.size() < 4)
        throw FormatError(path.string(), lineno, "expected 3 coordinates after '" + tag + "'");
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tokens[k + 1], p[k]))
          throw FormatError(path.string(), lineno, "bad coordinate '" + tokens[k + 1] + "'");
      }
      if (!p.allFinite())
        throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                              ": non-finite coordinate");
      (tag == "v" ? data.vertices : data.normals).push_back(p);
    } else if (tag == "f") {
      if (tokens.size() < 4)
        throw FormatError(path.string(), lineno, "face needs at least 3 indices");
      std::vector<int> idx;
      for (size_t k = 1; k < tokens.size(); ++k) {
        // accept i, i/t, i//n, i/t/n; only the vertex index is used
        const std::string ref = tokens[k].substr(0, tokens[k].find('/'));
        int i = 0;
        try {
          size_t pos = 0;
          i = std::stoi(ref, &pos);
          if (pos != ref.size()) throw std::invalid_argument(ref);
        } catch (const std::exception&) {
          throw FormatError(path.string(), lineno, "bad face index '" + tokens[k] + "'");
        }
        if (i < 0) i = static_cast<int>(data.vertices.size()) + 1 + i;
        idx.push_back(i - 1);  // to 0-based
      }
      for (size_t k = 2; k < idx.size(); ++k) {  // fan-triangulate polygons
        data.faces.push_back({idx[0], idx[static_cast<int>(k) - 1], idx[k]});
        data.face_lines.push_back(lineno);
      }
    }
    // other records (vt, o, g, s, usemtl, ...) are ignored
  }
  return data;
}

TriMesh obj_to_mesh(const std::filesystem::path& path, ObjData&& data) {
  TriMesh mesh;
  mesh.vertices = std::move(data.vertices);
  mesh.faces = std::move(data.faces);
  const int n = mesh.vertex_count();
  for (size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int i = mesh.faces[f][k];
      if (i < 0 || i >= n)
        throw FormatError(path.string(), data.face_lines[f],
                          "face index " + std::to_string(i + 1) + " out of range [1, " +
                              std::to_string(n) + "]");
    }
  }
  // normals are kept only when they align positionally with vertices
  if (!data.normals.empty() && data.normals.size() == mesh.vertices.size())
    mesh.normals = std::move(data.normals);
  validate(mesh);
  return mesh;
}

void write_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const Vec3& v : mesh.vertices)
    out << "v " << fmt_coord(v.x()) << ' ' << fmt_coord(v.y()) << ' '
        << fmt_coord(v.z()) << '\n';
  for (const Vec3& n : mesh.normals)
    out << "vn " << fmt_coord(n.x()) << ' ' << fmt_coord(n.y()) << ' '
        << fmt_coord(n.z()) << '\n';
  const bool with_normals = mesh.has_normals();
  for (const Face& f : mesh.faces) {
    if (with_normals)
      out << "f " << f[0] + 1 << "//" << f[0] + 1 << ' ' << f[1] + 1 << "//"
          << f[1] + 1 << ' ' << f[2] + 1 << "//" << f[2] + 1 << '\n';
    else
      out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw IoError("short write to " + path.string());
}

// ---------------------------------------------------------------- PLY

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8: return 1;
    case PlyType::i16:
    case PlyType::u16: return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32: return 4;
    case PlyType::f64: return 8;
  }
  return 0;
}

PlyType ply_type_from_name(const std::string& name, const std::filesystem::path& path,
                           long lineno) {
  if (name == "char" || name == "int8") return PlyType::i8;
  if (name == "uchar" || name == "uint8") return PlyType::u8;
  if (name == "short" || name == "int16") return PlyType::i16;
  if (name == "ushort" || name == "uint16") return PlyType::u16;
  if (name == "int" || name == "int32") return PlyType::i32;
  if (name == "uint" || name == "uint32") return PlyType::u32;
  if (name == "float" || name == "float32") return PlyType::f32;
  if (name == "double" || name == "float64") return PlyType::f64;
  throw FormatError(path.string(), lineno, "unknown ply type '" + name + "'");
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f32;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
};

struct PlyElement {
  std::string name;
  long count = 0;
  std::vector<PlyProperty> properties;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
  long header_lines = 0;
};

PlyHeader read_ply_header(std::istream& in, const std::filesystem::path& path) {
  PlyHeader header;
  std::string line;
  long lineno = 0;

  if (!std::getline(in, line)) throw FormatError(path.string(), 1, "empty file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "ply") throw FormatError(path.string(), 1, "missing 'ply' magic");

  bool format_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "format") {
      if (tokens.size() < 2)
        throw FormatError(path.string(), lineno, "bad format line");
      if (tokens[1] == "ascii")
        header.binary = false;
      else if (tokens[1] == "binary_little_endian")
        header.binary = true;
      else
        throw FormatError(path.string(), lineno,
                          "unsupported ply format '" + tokens[1] + "'");
      format_seen = true;
    } else if (tokens[0] == "element") {
      if (tokens.size() != 3)
        throw FormatError(path.string(), lineno, "bad element line");
      PlyElement elem;
      elem.name = tokens[1];
      try {
        elem.count = std::stol(tokens[2]);
      } catch (const std::exception&) {
        throw FormatError(path.string(), lineno, "bad element count '" + tokens[2] + "'");
      }
      header.elements.push_back(elem);
    } else if (tokens[0] == "property") {
      if (header.elements.empty())
        throw FormatError(path.string(), lineno, "property before element");
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        prop.is_list = true;
        prop.count_type = ply_type_from_name(tokens[2], path, lineno);
        prop.type = ply_type_from_name(tokens[3], path, lineno);
        prop.name = tokens[4];
      } else if (tokens.size() == 3) {
        prop.type = ply_type_from_name(tokens[1], path, lineno);
        prop.name = tokens[2];
      } else {
        throw FormatError(path.string(), lineno, "bad property line");
      }
      header.elements.back().properties.push_back(prop);
    } else if (tokens[0] == "end_header") {
      if (!format_seen)
        throw FormatError(path.string(), lineno, "missing format line");
      header.header_lines = lineno;
      return header;
    } else {
      throw FormatError(path.string(), lineno, "unexpected header token '" + tokens[0] + "'");
    }
  }
  throw FormatError(path.string(), lineno, "unterminated ply header");
}

double read_binary_scalar(std::istream& in, PlyType type,
                          const std::filesystem::path& path) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), ply_type_size(type)))
    throw FormatError(path.string(), 0, "truncated binary payload");
  switch (type) {
    case PlyType::i8: return static_cast<std::int8_t>(buf[0]);
    case PlyType::u8: return buf[0];
    case PlyType::i16: {
      std::int16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PlyType::u16: {
      std::uint16_t v;
      std::memcpy(&v, buf, 2);
      return v;
    }
    case PlyType::i32: {
      std::int32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::u32: {
      std::uint32_t v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::f32: {
      float v;
      std::memcpy(&v, buf, 4);
      return v;
    }
    case PlyType::f64: {
      double v;
      std::memcpy(&v, buf, 8);
      return v;
    }
  }
  return 0;
}

double read_ascii_scalar(std::istream& in, const std::filesystem::path& path,
                         long lineno) {
  std::string token;
  if (!(in >> token))
    throw FormatError(path.string(), lineno, "truncated ascii payload");
  double v;
  if (!parse_double(token, v))
    throw FormatError(path.string(), lineno, "bad value '" + token + "'");
  return v;
}

struct PlyContents {
  std::vector<Vec3> vertices;
  std::vector<Vec3> normals;
  std::vector<ViewTag> view_tags;
  std::vector<Face> faces;
  bool has_normals = false;
  bool has_view_tags = false;
};

PlyContents read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const PlyHeader header = read_ply_header(in, path);

  PlyContents contents;
  const long payload_line = header.header_lines + 1;
  auto next_scalar = [&](PlyType type) {
    return header.binary ? read_binary_scalar(in, type, path)
                         : read_ascii_scalar(in, path, payload_line);
  };

  for (const PlyElement& elem : header.elements) {
    if (elem.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, itag = -1;
      for (size_t k = 0; k < elem.properties.size(); ++k) {
        const std::string& n = elem.properties[k].name;
        if (n == "x") ix = static_cast<int>(k);
        else if (n == "y") iy = static_cast<int>(k);
        else if (n == "z") iz = static_cast<int>(k);
        else if (n == "nx") inx = static_cast<int>(k);
        else if (n == "ny") iny = static_cast<int>(k);
        else if (n == "nz") inz = static_cast<int>(k);
        else if (n == "view_tag") itag = static_cast<int>(k);
      }
      if (ix < 0 || iy < 0 || iz < 0)
        throw FormatError(path.string(), header.header_lines,
                          "vertex element lacks x/y/z properties");
      contents.has_normals = inx >= 0 && iny >= 0 && inz >= 0;
      contents.has_view_tags = itag >= 0;
      std::vector<double> row(elem.properties.size());
      for (long i = 0; i < elem.count; ++i) {
        for (size_t k = 0; k < elem.properties.size(); ++k) {
          const PlyProperty& prop = elem.properties[k];
          if (prop.is_list) {
            const long len = static_cast<long>(next_scalar(prop.count_type));
            for (long j = 0; j < len; ++j) next_scalar(prop.type);
            row[k] = 0;
          } else {
            row[k] = next_scalar(prop.type);
          }
        }
        const Vec3 p(row[ix], row[iy], row[iz]);
        if (!p.allFinite())
          throw ValidationError(path.string() + ": non-finite vertex coordinate");
        contents.vertices.push_back(p);
        if (contents.has_normals)
          contents.normals.emplace_back(row[inx], row[iny], row[inz]);
        if (contents.has_view_tags)
          contents.view_tags.push_back(static_cast<ViewTag>(
              std::clamp<long>(static_cast<long>(row[itag]), 0, 2)));
      }
    } else if (elem.name == "face") {
      for (long i = 0; i < elem.count; ++i) {
        for (const PlyProperty& prop : elem.properties) {
          if (prop.is_list) {
            const long len = static_cast<long>(next_scalar(prop.count_type));
            std::vector<int> idx(len);
            for (long j = 0; j < len; ++j)
              idx[j] = static_cast<int>(next_scalar(prop.type));
            if (prop.name == "vertex_indices" || prop.name == "vertex_index") {
              if (len < 3)
                throw FormatError(path.string(), payload_line,
                                  "face with fewer than 3 indices");
              for (long j = 2; j < len; ++j)
                contents.faces.push_back({idx[0], idx[j - 1], idx[j]});
            }
          } else {
            next_scalar(prop.type);
          }
        }
      }
    } else {
      // skip unknown elements
      for (long i = 0; i < elem.count; ++i) {
        for (const PlyProperty& prop : elem.properties) {
          if (prop.is_list) {
            const long len = static_cast<long>(next_scalar(prop.count_type));
            for (long j = 0; j < len; ++j) next_scalar(prop.type);
          } else {
            next_scalar(prop.type);
          }
        }
      }
    }
  }
  return contents;
}

void write_binary_scalar(std::ostream& out, PlyType type, double value) {
  switch (type) {
    case PlyType::u8: {
      const std::uint8_t v = static_cast<std::uint8_t>(value);
      out.write(reinterpret_cast<const char*>(&v), 1);
      return;
    }
    case PlyType::i32: {
      const std::int32_t v = static_cast<std::int32_t>(value);
      out.write(reinterpret_cast<const char*>(&v), 4);
      return;
    }
    case PlyType::f64: {
      out.write(reinterpret_cast<const char*>(&value), 8);
      return;
    }
    default: break;
  }
  throw IoError("unsupported ply write type");
}

void write_ply(const std::vector<Vec3>& vertices, const std::vector<Vec3>& normals,
               const std::vector<ViewTag>& tags, const std::vector<Face>& faces,
               const std::filesystem::path& path, bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());

  out << "ply\n"
      << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
      << "element vertex " << vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (!normals.empty())
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (!tags.empty()) out << "property uchar view_tag\n";
  out << "element face " << faces.size() << "\n"
      << "property list uchar int vertex_indices\n"
      << "end_header\n";

  for (size_t i = 0; i < vertices.size(); ++i) {
    if (binary) {
      for (int k = 0; k < 3; ++k)
        write_binary_scalar(out, PlyType::f64, vertices[i][k]);
      if (!normals.empty())
        for (int k = 0; k < 3; ++k)
          write_binary_scalar(out, PlyType::f64, normals[i][k]);
      if (!tags.empty())
        write_binary_scalar(out, PlyType::u8, static_cast<double>(tags[i]));
    } else {
      out << fmt_coord(vertices[i].x()) << ' ' << fmt_coord(vertices[i].y()) << ' '
          << fmt_coord(vertices[i].z());
      if (!normals.empty())
        out << ' ' << fmt_coord(normals[i].x()) << ' ' << fmt_coord(normals[i].y())
            << ' ' << fmt_coord(normals[i].z());
      if (!tags.empty()) out << ' ' << static_cast<int>(tags[i]);
      out << '\n';
    }
  }
  for (const Face& f : faces) {
    if (binary) {
      write_binary_scalar(out, PlyType::u8, 3);
      for (int k = 0; k < 3; ++k)
        write_binary_scalar(out, PlyType::i32, f[k]);
    } else {
      out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    }
  }
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

MeshFormat mesh_format_from_name(const std::string& name) {
  if (name == "obj") return MeshFormat::obj;
  if (name == "ply") return MeshFormat::ply;
  throw ParameterError("unknown mesh format '" + name + "'");
}

MeshFormat mesh_format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (ext == ".obj") return MeshFormat::obj;
  if (ext == ".ply") return MeshFormat::ply;
  throw ParameterError("cannot deduce mesh format from '" + path.string() + "'");
}

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
  if (format == MeshFormat::obj) return obj_to_mesh(path, read_obj(path));

  PlyContents contents = read_ply(path);
  TriMesh mesh;
  mesh.vertices = std::move(contents.vertices);
  mesh.faces = std::move(contents.faces);
  if (contents.has_normals) mesh.normals = std::move(contents.normals);
  validate(mesh);
  return mesh;
}

void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               MeshFormat format, const SaveOptions& options) {
  validate(mesh);
  if (format == MeshFormat::obj)
    write_obj(mesh, path);
  else
    write_ply(mesh.vertices, mesh.normals, {}, mesh.faces, path, options.ply_binary);
}

PointCloud load_point_cloud(const std::filesystem::path& path, MeshFormat format) {
  PointCloud cloud;
  if (format == MeshFormat::obj) {
    ObjData data = read_obj(path);
    cloud.points = std::move(data.vertices);
  } else {
    PlyContents contents = read_ply(path);
    cloud.points = std::move(contents.vertices);
    if (contents.has_view_tags) cloud.view_tags = std::move(contents.view_tags);
  }
  validate(cloud);
  return cloud;
}

void save_point_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                      MeshFormat format, const SaveOptions& options) {
  validate(cloud);
  if (format == MeshFormat::obj) {
    TriMesh as_mesh;
    as_mesh.vertices = cloud.points;
    write_obj(as_mesh, path);
  } else {
    write_ply(cloud.points, {}, cloud.view_tags, {}, path, options.ply_binary);
  }
}

LandmarkSet load_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw FormatError(path.string(), 0, e.what());
  }
  LandmarkSet set;
  try {
    set.scheme.id = j.at("scheme").at("id").get<std::string>();
    set.scheme.left_eye = j.at("scheme").at("left_eye").get<int>();
    set.scheme.right_eye = j.at("scheme").at("right_eye").get<int>();
    set.scheme.nose_tip = j.at("scheme").at("nose_tip").get<int>();
    set.dim = j.at("dim").get<int>() == 2 ? LandmarkDim::two_d : LandmarkDim::three_d;
    for (const auto& e : j.at("landmarks")) {
      Landmark lm;
      lm.id = e.at("id").get<int>();
      const auto& p = e.at("p");
      lm.position = Vec3(p.at(0).get<double>(), p.at(1).get<double>(),
                         set.dim == LandmarkDim::two_d ? 0.0 : p.at(2).get<double>());
      set.landmarks.push_back(lm);
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string(), 0, e.what());
  }
  validate(set);
  return set;
}

void save_landmarks(const LandmarkSet& set, const std::filesystem::path& path) {
  validate(set);
  json j;
  j["scheme"] = {{"id", set.scheme.id},
                 {"left_eye", set.scheme.left_eye},
                 {"right_eye", set.scheme.right_eye},
                 {"nose_tip", set.scheme.nose_tip}};
  j["dim"] = set.dim == LandmarkDim::two_d ? 2 : 3;
  json lms = json::array();
  for (const Landmark& lm : set.landmarks) {
    json e;
    e["id"] = lm.id;
    if (set.dim == LandmarkDim::two_d)
      e["p"] = {lm.position.x(), lm.position.y()};
    else
      e["p"] = {lm.position.x(), lm.position.y(), lm.position.z()};
    lms.push_back(e);
  }
  j["landmarks"] = lms;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace morphkit
