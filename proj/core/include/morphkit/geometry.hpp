#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace morphkit {

using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

// Indexed triangle surface. Normals are optional; when present there is
// exactly one unit vector per vertex.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> normals;

  bool has_normals() const { return !normals.empty(); }
  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
};

// Throws ValidationError on out-of-range face indices, repeated face
// vertices, non-finite coordinates, or non-unit normals (1e-6).
void validate(const TriMesh& mesh);

enum class ViewTag : std::uint8_t { left = 0, middle = 1, right = 2 };

// Unstructured points, optionally tagged with the scanner view that
// produced them (one tag per point when present).
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<ViewTag> view_tags;

  bool has_view_tags() const { return !view_tags.empty(); }
  int size() const { return static_cast<int>(points.size()); }
};

void validate(const PointCloud& cloud);

struct Aabb {
  Vec3 lo{0, 0, 0};
  Vec3 hi{0, 0, 0};

  double diagonal() const { return (hi - lo).norm(); }
  Vec3 extent() const { return hi - lo; }
  void expand(const Vec3& p);
  double distance_sq(const Vec3& p) const;
};

Aabb bounding_box(const std::vector<Vec3>& points);

// Area-weighted per-vertex normals, normalized. Zero-area stars get a
// zero vector.
std::vector<Vec3> vertex_normals(const TriMesh& mesh);

}  // namespace morphkit
