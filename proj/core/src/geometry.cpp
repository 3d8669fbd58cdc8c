#include "morphkit/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "morphkit/errors.hpp"

namespace morphkit {

void validate(const TriMesh& mesh) {
  const int n = mesh.vertex_count();
  for (int i = 0; i < n; ++i) {
    if (!mesh.vertices[i].allFinite())
      throw ValidationError("vertex " + std::to_string(i) +
                            " has non-finite coordinates");
  }
  for (int f = 0; f < mesh.face_count(); ++f) {
    const Face& face = mesh.faces[f];
    for (int k = 0; k < 3; ++k) {
      if (face[k] < 0 || face[k] >= n)
        throw ValidationError("face " + std::to_string(f) + " references vertex " +
                              std::to_string(face[k]) + " outside [0, " +
                              std::to_string(n) + ")");
    }
    if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2])
      throw ValidationError("face " + std::to_string(f) +
                            " references the same vertex twice");
  }
  if (mesh.has_normals()) {
    if (static_cast<int>(mesh.normals.size()) != n)
      throw ValidationError("normal count " + std::to_string(mesh.normals.size()) +
                            " does not match vertex count " + std::to_string(n));
    for (int i = 0; i < n; ++i) {
      if (!mesh.normals[i].allFinite() ||
          std::abs(mesh.normals[i].norm() - 1.0) > 1e-6)
        throw ValidationError("normal " + std::to_string(i) + " is not unit length");
    }
  }
}

void validate(const PointCloud& cloud) {
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    if (!cloud.points[i].allFinite())
      throw ValidationError("point " + std::to_string(i) +
                            " has non-finite coordinates");
  }
  if (cloud.has_view_tags() && cloud.view_tags.size() != cloud.points.size())
    throw ValidationError("view tag count does not match point count");
}

void Aabb::expand(const Vec3& p) {
  lo = lo.cwiseMin(p);
  hi = hi.cwiseMax(p);
}

double Aabb::distance_sq(const Vec3& p) const {
  const Vec3 d = (lo - p).cwiseMax(0.0).cwiseMax(p - hi);
  return d.squaredNorm();
}

Aabb bounding_box(const std::vector<Vec3>& points) {
  Aabb box;
  if (points.empty()) return box;
  box.lo = box.hi = points[0];
  for (const Vec3& p : points) box.expand(p);
  return box;
}

std::vector<Vec3> vertex_normals(const TriMesh& mesh) {
  std::vector<Vec3> normals(mesh.vertices.size(), Vec3::Zero());
  for (const Face& f : mesh.faces) {
    const Vec3 n = (mesh.vertices[f[1]] - mesh.vertices[f[0]])
                       .cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
    normals[f[0]] += n;  // cross product length carries the area weight
    normals[f[1]] += n;
    normals[f[2]] += n;
  }
  for (Vec3& n : normals) {
    const double len = n.norm();
    if (len > 0) n /= len;
  }
  return normals;
}

}  // namespace morphkit
