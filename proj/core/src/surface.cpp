#include "morphkit/surface.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "morphkit/errors.hpp"

namespace morphkit {

// Ericson, Real-Time Collision Detection, 5.1.5.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

ClosestSurfacePoint::ClosestSurfacePoint(const TriMesh& mesh) {
  std::vector<int> all(mesh.faces.size());
  std::iota(all.begin(), all.end(), 0);
  build_from(mesh, all);
}

ClosestSurfacePoint::ClosestSurfacePoint(const TriMesh& mesh,
                                         const std::vector<int>& face_subset) {
  build_from(mesh, face_subset);
}

void ClosestSurfacePoint::build_from(const TriMesh& mesh,
                                     const std::vector<int>& faces) {
  tris_.reserve(faces.size());
  for (int f : faces) {
    const Face& face = mesh.faces[f];
    tris_.push_back({mesh.vertices[face[0]], mesh.vertices[face[1]],
                     mesh.vertices[face[2]], f});
  }
  if (tris_.empty()) return;
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0);
  root_ = build(0, static_cast<int>(tris_.size()));
}

int ClosestSurfacePoint::build(int begin, int end) {
  Node node;
  node.box.lo = node.box.hi = tris_[order_[begin]].a;
  for (int i = begin; i < end; ++i) {
    const Tri& t = tris_[order_[i]];
    node.box.expand(t.a);
    node.box.expand(t.b);
    node.box.expand(t.c);
  }

  if (end - begin <= 4) {
    node.begin = begin;
    node.end = end;
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int axis;
  node.box.extent().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int ia, int ib) {
                     const Tri& ta = tris_[ia];
                     const Tri& tb = tris_[ib];
                     const double ca = ta.a[axis] + ta.b[axis] + ta.c[axis];
                     const double cb = tb.a[axis] + tb.b[axis] + tb.c[axis];
                     return ca < cb || (ca == cb && ia < ib);
                   });
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

SurfaceHit ClosestSurfacePoint::query(const Vec3& p) const {
  if (empty()) throw DegenerateInputError("closest-point query on empty surface");

  SurfaceHit best;
  best.distance = std::numeric_limits<double>::infinity();
  double best_sq = std::numeric_limits<double>::infinity();

  // iterative best-first traversal
  std::vector<int> stack{root_};
  stack.reserve(64);
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const Node& node = nodes_[idx];
    if (node.box.distance_sq(p) > best_sq) continue;
    if (node.left < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const Tri& t = tris_[order_[i]];
        const Vec3 q = closest_point_on_triangle(p, t.a, t.b, t.c);
        const double d_sq = (q - p).squaredNorm();
        if (d_sq < best_sq ||
            (d_sq == best_sq && best.face >= 0 && t.face < best.face)) {
          best_sq = d_sq;
          best.point = q;
          best.face = t.face;
        }
      }
      continue;
    }
    const double dl = nodes_[node.left].box.distance_sq(p);
    const double dr = nodes_[node.right].box.distance_sq(p);
    // push the farther child first so the nearer one is examined next
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

double point_to_mesh_distance(const Vec3& p, const TriMesh& mesh) {
  if (mesh.faces.empty())
    throw DegenerateInputError("point-to-mesh distance against a mesh with no faces");
  double best_sq = std::numeric_limits<double>::infinity();
  for (const Face& f : mesh.faces) {
    const Vec3 q = closest_point_on_triangle(p, mesh.vertices[f[0]],
                                             mesh.vertices[f[1]],
                                             mesh.vertices[f[2]]);
    best_sq = std::min(best_sq, (q - p).squaredNorm());
  }
  return std::sqrt(best_sq);
}

}  // namespace morphkit
