#pragma once

#include <vector>

#include "morphkit/geometry.hpp"

namespace morphkit {

// Exact closest point on triangle abc to p (interior, edge, or vertex).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c);

struct SurfaceHit {
  double distance = 0;
  Vec3 point{0, 0, 0};
  int face = -1;  // index into the face list the query ran against
};

// AABB tree over a mesh's triangles (optionally a subset) answering
// exact closest-surface-point queries.
class ClosestSurfacePoint {
public:
  ClosestSurfacePoint() = default;
  explicit ClosestSurfacePoint(const TriMesh& mesh);
  ClosestSurfacePoint(const TriMesh& mesh, const std::vector<int>& face_subset);

  bool empty() const { return tris_.empty(); }
  // Throws DegenerateInputError when empty().
  SurfaceHit query(const Vec3& p) const;

private:
  struct Tri {
    Vec3 a, b, c;
    int face;
  };
  struct Node {
    Aabb box;
    int left = -1;
    int right = -1;
    int begin = 0;
    int end = 0;
  };

  void build_from(const TriMesh& mesh, const std::vector<int>& faces);
  int build(int begin, int end);

  std::vector<Tri> tris_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Minimum Euclidean distance from p to any triangle of the mesh.
// Throws DegenerateInputError when the mesh has no faces.
double point_to_mesh_distance(const Vec3& p, const TriMesh& mesh);

}  // namespace morphkit
