#include "morphkit/transform.hpp"

#include <algorithm>
#include <cmath>

#include "morphkit/errors.hpp"

namespace morphkit {

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.scale = 1.0 / scale;
  inv.rotation = rotation.transpose();
  inv.translation = -inv.scale * (inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::compose(const RigidTransform& inner) const {
  RigidTransform out;
  out.scale = scale * inner.scale;
  out.rotation = rotation * inner.rotation;
  out.translation = scale * (rotation * inner.translation) + translation;
  return out;
}

void validate(const RigidTransform& t) {
  if (!(t.scale > 0)) throw ValidationError("transform scale must be positive");
  const Eigen::Matrix3d gram = t.rotation.transpose() * t.rotation;
  if ((gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw ValidationError("rotation is not orthonormal");
  if (std::abs(t.rotation.determinant() - 1.0) > 1e-9)
    throw ValidationError("rotation determinant is not +1");
}

TriMesh transformed(const TriMesh& mesh, const RigidTransform& t) {
  TriMesh out = mesh;
  for (Vec3& v : out.vertices) v = t.apply(v);
  for (Vec3& n : out.normals) n = t.apply_vector(n);
  return out;
}

PointCloud transformed(const PointCloud& cloud, const RigidTransform& t) {
  PointCloud out = cloud;
  for (Vec3& p : out.points) p = t.apply(p);
  return out;
}

LandmarkSet transformed(const LandmarkSet& set, const RigidTransform& t) {
  LandmarkSet out = set;
  for (Landmark& lm : out.landmarks) lm.position = t.apply(lm.position);
  return out;
}

double rotation_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = ((a.transpose() * b).trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

}  // namespace morphkit
