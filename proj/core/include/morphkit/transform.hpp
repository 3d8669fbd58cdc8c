#pragma once

#include <Eigen/Core>

#include "morphkit/geometry.hpp"
#include "morphkit/landmarks.hpp"

namespace morphkit {

// Similarity transform x -> scale * R * x + t; scale defaults to 1 so
// the common case is rigid.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation{0, 0, 0};
  double scale = 1.0;

  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  Vec3 apply_vector(const Vec3& v) const { return rotation * v; }

  RigidTransform inverse() const;
  // (*this) after `inner`: x -> this(inner(x)).
  RigidTransform compose(const RigidTransform& inner) const;

  static RigidTransform identity() { return {}; }
};

// R orthonormal within 1e-9, det +1 within 1e-9, scale > 0.
void validate(const RigidTransform& t);

TriMesh transformed(const TriMesh& mesh, const RigidTransform& t);
PointCloud transformed(const PointCloud& cloud, const RigidTransform& t);
LandmarkSet transformed(const LandmarkSet& set, const RigidTransform& t);

// Angle of the relative rotation between a and b, in radians.
double rotation_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace morphkit
