#pragma once

#include <utility>
#include <vector>

#include "morphkit/geometry.hpp"

namespace morphkit {

// Immutable kd-tree over a fixed point set. All queries are exact:
// equal distances resolve to the lowest point index.
class SpatialIndex {
public:
  // Throws DegenerateInputError on an empty point set.
  explicit SpatialIndex(std::vector<Vec3> points);

  // (index, Euclidean distance) of the nearest point.
  std::pair<int, double> nearest(const Vec3& query) const;

  // Up to k nearest points, sorted by (distance, index).
  std::vector<std::pair<int, double>> k_nearest(const Vec3& query, int k) const;

  // Indices of points with distance <= radius, ascending.
  std::vector<int> within(const Vec3& query, double radius) const;
  int count_within(const Vec3& query, double radius) const;

  const std::vector<Vec3>& points() const { return points_; }
  int size() const { return static_cast<int>(points_.size()); }

private:
  struct Node {
    Aabb box;
    int left = -1;   // child node or -1 at a leaf
    int right = -1;
    int begin = 0;   // range into order_ for leaves
    int end = 0;
  };

  int build(int begin, int end);
  template <typename Visit>
  void walk(int node, const Vec3& query, double& prune_sq, Visit&& visit) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace morphkit
