#include "morphkit/spatial_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "morphkit/errors.hpp"

namespace {
constexpr int kLeafSize = 8;
}

namespace morphkit {

SpatialIndex::SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
  if (points_.empty())
    throw DegenerateInputError("spatial index over an empty point set");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(points_.size()));
}

int SpatialIndex::build(int begin, int end) {
  Node node;
  node.box.lo = node.box.hi = points_[order_[begin]];
  for (int i = begin; i < end; ++i) node.box.expand(points_[order_[i]]);

  if (end - begin <= kLeafSize) {
    node.begin = begin;
    node.end = end;
    // sorted leaves make the lowest-index tie-break fall out of the scan
    std::sort(order_.begin() + begin, order_.begin() + end);
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int axis;
  node.box.extent().maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int a, int b) {
                     const double pa = points_[a][axis], pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const int self = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

template <typename Visit>
void SpatialIndex::walk(int node_idx, const Vec3& query, double& prune_sq,
                        Visit&& visit) const {
  const Node& node = nodes_[node_idx];
  if (node.box.distance_sq(query) > prune_sq) return;
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      visit(idx, (points_[idx] - query).squaredNorm());
    }
    return;
  }
  const double dl = nodes_[node.left].box.distance_sq(query);
  const double dr = nodes_[node.right].box.distance_sq(query);
  if (dl <= dr) {
    walk(node.left, query, prune_sq, visit);
    walk(node.right, query, prune_sq, visit);
  } else {
    walk(node.right, query, prune_sq, visit);
    walk(node.left, query, prune_sq, visit);
  }
}

std::pair<int, double> SpatialIndex::nearest(const Vec3& query) const {
  int best = -1;
  double best_sq = std::numeric_limits<double>::infinity();
  walk(root_, query, best_sq, [&](int idx, double d_sq) {
    if (d_sq < best_sq || (d_sq == best_sq && idx < best)) {
      best = idx;
      best_sq = d_sq;
    }
  });
  return {best, std::sqrt(best_sq)};
}

std::vector<std::pair<int, double>> SpatialIndex::k_nearest(const Vec3& query,
                                                            int k) const {
  if (k < 1) throw ParameterError("k_nearest requires k >= 1");
  using Entry = std::pair<double, int>;  // (distance^2, index), max-heap
  std::vector<Entry> heap;
  heap.reserve(k);
  double prune_sq = std::numeric_limits<double>::infinity();
  walk(root_, query, prune_sq, [&](int idx, double d_sq) {
    const Entry e{d_sq, idx};
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back(e);
      std::push_heap(heap.begin(), heap.end());
      if (static_cast<int>(heap.size()) == k) prune_sq = heap.front().first;
    } else if (e < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = e;
      std::push_heap(heap.begin(), heap.end());
      prune_sq = heap.front().first;
    }
  });
  std::sort_heap(heap.begin(), heap.end());
  std::vector<std::pair<int, double>> out;
  out.reserve(heap.size());
  for (const Entry& e : heap) out.emplace_back(e.second, std::sqrt(e.first));
  return out;
}

std::vector<int> SpatialIndex::within(const Vec3& query, double radius) const {
  if (radius < 0) throw ParameterError("negative radius");
  std::vector<int> out;
  double prune_sq = radius * radius;
  walk(root_, query, prune_sq, [&](int idx, double d_sq) {
    if (d_sq <= radius * radius) out.push_back(idx);
  });
  std::sort(out.begin(), out.end());
  return out;
}

int SpatialIndex::count_within(const Vec3& query, double radius) const {
  if (radius < 0) throw ParameterError("negative radius");
  int count = 0;
  double prune_sq = radius * radius;
  walk(root_, query, prune_sq, [&](int, double d_sq) {
    if (d_sq <= radius * radius) ++count;
  });
  return count;
}

}  // namespace morphkit
