#pragma once

#include <filesystem>
#include <string>

#include "morphkit/geometry.hpp"
#include "morphkit/landmarks.hpp"

namespace morphkit {

enum class MeshFormat { obj, ply };

// "obj" / "ply", or deduced from a path extension.
MeshFormat mesh_format_from_name(const std::string& name);
MeshFormat mesh_format_from_path(const std::filesystem::path& path);

struct SaveOptions {
  bool ply_binary = true;  // OBJ is always ASCII
};

// OBJ: `v x y z`, `vn x y z`, `f i j k` (1-based; i/t/n references are
// accepted on load, only the vertex index is used). PLY: ASCII or
// binary little-endian, vertex properties x y z [nx ny nz], face
// property list. Vertex order is preserved.
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
void save_mesh(const TriMesh& mesh, const std::filesystem::path& path,
               MeshFormat format, const SaveOptions& options = {});

// Point clouds travel as vertex-only meshes; PLY carries an optional
// `view_tag` uchar property.
PointCloud load_point_cloud(const std::filesystem::path& path,
                            MeshFormat format);
void save_point_cloud(const PointCloud& cloud,
                      const std::filesystem::path& path, MeshFormat format,
                      const SaveOptions& options = {});

// Landmark JSON:
//   {"scheme": {"id": ..., "left_eye": ..., "right_eye": ..., "nose_tip": ...},
//    "dim": 2|3,
//    "landmarks": [{"id": n, "p": [x, y, z]}, ...]}
LandmarkSet load_landmarks(const std::filesystem::path& path);
void save_landmarks(const LandmarkSet& set, const std::filesystem::path& path);

}  // namespace morphkit
