#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "morphkit/geometry.hpp"
#include "morphkit/landmarks.hpp"
#include "morphkit/transform.hpp"

namespace morphkit {

enum class IcpMetric { point_to_point, point_to_plane };

struct IcpParams {
  int max_iterations = 50;
  double convergence_delta = 1e-7;  // RMS change between iterations
  // Fixed correspondence cutoff, and/or an adaptive one expressed as a
  // multiple of the per-iteration median correspondence distance.
  std::optional<double> reject_distance;
  std::optional<double> median_reject_scale;
  IcpMetric metric = IcpMetric::point_to_point;
  // Coarse-to-fine random subsampling levels, as fractions of the
  // source cloud. {1.0} means a single full-resolution stage.
  std::vector<double> pyramid_fractions{1.0};
  std::uint64_t subsample_seed = 17;
};

void validate(const IcpParams& params);

// Closed-form least-squares rigid (or similarity) alignment of the
// common landmarks, via the cross-covariance SVD. Throws
// DegenerateInputError on fewer than 3 correspondences or a collinear
// configuration, ValidationError on a scheme mismatch.
RigidTransform estimate_rigid_from_landmarks(const LandmarkSet& src,
                                             const LandmarkSet& dst,
                                             bool with_scale);

// Same estimator over raw paired points, optionally weighted.
RigidTransform estimate_rigid_from_pairs(const std::vector<Vec3>& src,
                                         const std::vector<Vec3>& dst,
                                         const std::vector<double>& weights,
                                         bool with_scale);

struct IcpResult {
  RigidTransform transform;
  double rms = 0;
  int iterations = 0;
  // Inlier RMS after each iteration, per pyramid level (level, rms).
  std::vector<std::pair<int, double>> rms_history;
};

// Iterates nearest-neighbor correspondences against dst and closed-form
// rigid updates until the RMS change drops below convergence_delta or
// max_iterations is hit. With the point-to-point metric and no
// rejection the RMS sequence is non-increasing within a pyramid level.
IcpResult icp_refine(const PointCloud& src, const PointCloud& dst,
                     const RigidTransform& init, const IcpParams& params);

struct ViewInput {
  PointCloud cloud;
  LandmarkSet landmarks;
};

struct FusionParams {
  IcpParams icp = [] {
    IcpParams p;
    p.median_reject_scale = 3.0;
    p.pyramid_fractions = {0.1, 0.3, 1.0};
    return p;
  }();
  double merge_epsilon = 1e-4;
  // Per-vertex local refinement: a seam vertex (cross-view neighbor
  // within seam_scale * merge_epsilon) is re-aligned by a rigid
  // transform fit to its k nearest own-cloud points and their
  // cross-view correspondences, weighted by inverse distance.
  int local_refine_neighbors = 12;
  double seam_scale = 2.0;
  // Isolation filter; radius defaults to 3x the median nearest-neighbor
  // spacing of the concatenated cloud.
  std::optional<double> isolation_radius;
  int isolation_min_neighbors = 3;
  bool allow_missing_view = false;
};

struct FusionResult {
  PointCloud cloud;
  LandmarkSet landmarks;
  RigidTransform left_to_middle;
  RigidTransform right_to_middle;
};

// Aligns the side views onto the middle pivot (landmark seed -> ICP ->
// per-vertex seam refinement), concatenates, merges overlapping
// vertices, and drops isolated ones. The fused landmark set is the
// middle set augmented with side-only landmarks.
FusionResult fuse_views(const ViewInput& left, const ViewInput& middle,
                        const ViewInput& right, const FusionParams& params);

}  // namespace morphkit
