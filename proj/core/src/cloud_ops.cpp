#include "morphkit/cloud_ops.hpp"

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "morphkit/errors.hpp"
#include "morphkit/spatial_index.hpp"

namespace morphkit {

namespace {

struct Cluster {
  Vec3 sum{0, 0, 0};
  std::int64_t count = 0;
  ViewTag tag = ViewTag::middle;

  Vec3 centroid() const { return sum / static_cast<double>(count); }
};

// Hash grid over cluster centroids, cell size = epsilon. A point can
// only merge with a centroid in the 3x3x3 neighborhood of its cell.
class CentroidGrid {
public:
  explicit CentroidGrid(double cell) : cell_(cell) {}

  void insert(int cluster, const Vec3& p) { cells_[key(p)].push_back(cluster); }

  void move(int cluster, const Vec3& from, const Vec3& to) {
    const std::uint64_t a = key(from), b = key(to);
    if (a == b) return;
    auto& bucket = cells_[a];
    for (size_t i = 0; i < bucket.size(); ++i) {
      if (bucket[i] == cluster) {
        bucket.erase(bucket.begin() + i);
        break;
      }
    }
    cells_[b].push_back(cluster);
  }

  template <typename Fn>
  void for_neighborhood(const Vec3& p, Fn&& fn) const {
    const std::int64_t ix = coord(p.x()), iy = coord(p.y()), iz = coord(p.z());
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find(pack(ix + dx, iy + dy, iz + dz));
          if (it == cells_.end()) continue;
          for (int cluster : it->second) fn(cluster);
        }
  }

private:
  std::int64_t coord(double v) const {
    return static_cast<std::int64_t>(std::floor(v / cell_));
  }
  static std::uint64_t pack(std::int64_t x, std::int64_t y, std::int64_t z) {
    const std::uint64_t m = (1ull << 21) - 1;
    return ((static_cast<std::uint64_t>(x) & m) << 42) |
           ((static_cast<std::uint64_t>(y) & m) << 21) |
           (static_cast<std::uint64_t>(z) & m);
  }
  std::uint64_t key(const Vec3& p) const {
    return pack(coord(p.x()), coord(p.y()), coord(p.z()));
  }

  double cell_;
  std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

// One greedy pass: in input order, join the lowest-numbered cluster
// whose running centroid lies within epsilon, else open a new cluster.
std::vector<Cluster> merge_pass(const std::vector<Cluster>& input, double epsilon,
                                bool& merged_any) {
  std::vector<Cluster> clusters;
  clusters.reserve(input.size());
  CentroidGrid grid(epsilon);
  merged_any = false;

  for (const Cluster& in : input) {
    const Vec3 p = in.centroid();
    int target = -1;
    grid.for_neighborhood(p, [&](int cluster) {
      if ((clusters[cluster].centroid() - p).norm() < epsilon)
        if (target < 0 || cluster < target) target = cluster;
    });
    if (target < 0) {
      clusters.push_back(in);
      grid.insert(static_cast<int>(clusters.size()) - 1, p);
    } else {
      const Vec3 before = clusters[target].centroid();
      clusters[target].sum += in.sum;
      clusters[target].count += in.count;
      grid.move(target, before, clusters[target].centroid());
      merged_any = true;
    }
  }
  return clusters;
}

}  // namespace

PointCloud merge_vertices(const PointCloud& cloud, double epsilon) {
  if (epsilon <= 0) throw ParameterError("merge_vertices requires epsilon > 0");

  std::vector<Cluster> clusters;
  clusters.reserve(cloud.points.size());
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    Cluster c;
    c.sum = cloud.points[i];
    c.count = 1;
    c.tag = cloud.has_view_tags() ? cloud.view_tags[i] : ViewTag::middle;
    clusters.push_back(c);
  }

  bool merged = !clusters.empty();
  while (merged) clusters = merge_pass(clusters, epsilon, merged);

  PointCloud out;
  out.points.reserve(clusters.size());
  if (cloud.has_view_tags()) out.view_tags.reserve(clusters.size());
  for (const Cluster& c : clusters) {
    out.points.push_back(c.centroid());
    if (cloud.has_view_tags()) out.view_tags.push_back(c.tag);
  }
  return out;
}

PointCloud remove_isolated(const PointCloud& cloud, double radius,
                           int min_neighbors) {
  if (radius <= 0) throw ParameterError("remove_isolated requires radius > 0");
  if (min_neighbors < 1)
    throw ParameterError("remove_isolated requires min_neighbors >= 1");
  if (cloud.points.empty()) return cloud;

  const SpatialIndex index(cloud.points);
  PointCloud out;
  for (size_t i = 0; i < cloud.points.size(); ++i) {
    // count excludes the point itself
    if (index.count_within(cloud.points[i], radius) - 1 >= min_neighbors) {
      out.points.push_back(cloud.points[i]);
      if (cloud.has_view_tags()) out.view_tags.push_back(cloud.view_tags[i]);
    }
  }
  return out;
}

}  // namespace morphkit
