#pragma once

#include "morphkit/geometry.hpp"

namespace morphkit {

// Greedy cluster-and-average in input order, repeated to a fixpoint so
// that no two output points lie closer than epsilon. Each output point
// is the exact centroid of its merged input cluster; a cluster keeps
// the view tag of its first member. Throws ParameterError on
// epsilon <= 0.
PointCloud merge_vertices(const PointCloud& cloud, double epsilon);

// Keeps exactly the points with at least min_neighbors other points
// within `radius` (inclusive). Throws ParameterError on radius <= 0 or
// min_neighbors < 1.
PointCloud remove_isolated(const PointCloud& cloud, double radius,
                           int min_neighbors);

}  // namespace morphkit
