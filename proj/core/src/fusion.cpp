#include "morphkit/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "morphkit/cloud_ops.hpp"
#include "morphkit/errors.hpp"
#include "morphkit/parallel.hpp"
#include "morphkit/rng.hpp"
#include "morphkit/spatial_index.hpp"

namespace morphkit {

namespace {

struct Pairing {
  std::vector<Vec3> src, dst;
  std::vector<double> weights;
};

double median_of(std::vector<double> values) {
  if (values.empty()) return 0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  return values[mid];
}

// Normals for point-to-plane: local PCA over the k-neighborhood.
std::vector<Vec3> estimate_cloud_normals(const std::vector<Vec3>& points,
                                         const SpatialIndex& index, int k) {
  std::vector<Vec3> normals(points.size(), Vec3::UnitZ());
  parallel_for(points.size(), [&](size_t i) {
    const auto nn = index.k_nearest(points[i], std::min<int>(k, index.size()));
    Vec3 mean = Vec3::Zero();
    for (const auto& [j, d] : nn) mean += points[j];
    mean /= static_cast<double>(nn.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& [j, d] : nn) {
      const Vec3 c = points[j] - mean;
      cov += c * c.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    normals[i] = eig.eigenvectors().col(0).normalized();
  });
  return normals;
}

RigidTransform point_to_plane_update(const Pairing& pairs,
                                     const std::vector<Vec3>& normals) {
  // linearized small-angle solve for (omega, t)
  Eigen::Matrix<double, 6, 6> lhs = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> rhs = Eigen::Matrix<double, 6, 1>::Zero();
  for (size_t i = 0; i < pairs.src.size(); ++i) {
    const Vec3& n = normals[i];
    Eigen::Matrix<double, 6, 1> row;
    row << pairs.src[i].cross(n), n;
    const double w = pairs.weights.empty() ? 1.0 : pairs.weights[i];
    lhs += w * row * row.transpose();
    rhs += w * row * n.dot(pairs.dst[i] - pairs.src[i]);
  }
  const Eigen::Matrix<double, 6, 1> x = lhs.ldlt().solve(rhs);
  const Vec3 omega = x.head<3>();
  RigidTransform t;
  const double angle = omega.norm();
  if (angle > 1e-15)
    t.rotation = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
  t.translation = x.tail<3>();
  return t;
}

}  // namespace

void validate(const IcpParams& params) {
  if (params.max_iterations < 1)
    throw ParameterError("icp max_iterations must be >= 1");
  if (params.convergence_delta < 0)
    throw ParameterError("icp convergence_delta must be >= 0");
  if (params.pyramid_fractions.empty())
    throw ParameterError("icp pyramid_fractions must be non-empty");
  for (double f : params.pyramid_fractions)
    if (!(f > 0) || f > 1)
      throw ParameterError("icp pyramid fractions must lie in (0, 1]");
}

RigidTransform estimate_rigid_from_pairs(const std::vector<Vec3>& src,
                                         const std::vector<Vec3>& dst,
                                         const std::vector<double>& weights,
                                         bool with_scale) {
  if (src.size() != dst.size())
    throw ValidationError("correspondence lists differ in length");
  if (src.size() < 3)
    throw DegenerateInputError("rigid estimation needs at least 3 correspondences");
  if (!weights.empty() && weights.size() != src.size())
    throw ValidationError("weight list differs in length");

  double total = 0;
  Vec3 mu_s = Vec3::Zero(), mu_d = Vec3::Zero();
  for (size_t i = 0; i < src.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    total += w;
    mu_s += w * src[i];
    mu_d += w * dst[i];
  }
  if (!(total > 0)) throw DegenerateInputError("non-positive total weight");
  mu_s /= total;
  mu_d /= total;

  Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
  double var_s = 0;
  for (size_t i = 0; i < src.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    const Vec3 cs = src[i] - mu_s;
    sigma += w * (dst[i] - mu_d) * cs.transpose();
    var_s += w * cs.squaredNorm();
  }
  sigma /= total;
  var_s /= total;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(sigma,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d s = svd.singularValues();
  if (!(s(1) > 1e-12 * std::max(s(0), 1e-300)))
    throw DegenerateInputError("degenerate (collinear or coincident) configuration");

  Eigen::Vector3d d = Eigen::Vector3d::Ones();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0) d(2) = -1;

  RigidTransform out;
  out.rotation = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  out.scale = with_scale ? s.dot(d) / var_s : 1.0;
  out.translation = mu_d - out.scale * (out.rotation * mu_s);
  return out;
}

RigidTransform estimate_rigid_from_landmarks(const LandmarkSet& src,
                                             const LandmarkSet& dst,
                                             bool with_scale) {
  if (src.scheme.id != dst.scheme.id)
    throw ValidationError("landmark scheme mismatch: '" + src.scheme.id +
                          "' vs '" + dst.scheme.id + "'");
  std::vector<Vec3> a, b;
  for (int id : common_ids(src, dst)) {
    a.push_back(src.find(id)->position);
    b.push_back(dst.find(id)->position);
  }
  return estimate_rigid_from_pairs(a, b, {}, with_scale);
}

IcpResult icp_refine(const PointCloud& src, const PointCloud& dst,
                     const RigidTransform& init, const IcpParams& params) {
  validate(params);
  validate(init);
  if (src.points.empty() || dst.points.empty())
    throw DegenerateInputError("icp requires non-empty clouds");

  const SpatialIndex dst_index(dst.points);
  std::vector<Vec3> dst_normals;
  if (params.metric == IcpMetric::point_to_plane)
    dst_normals = estimate_cloud_normals(dst.points, dst_index, 12);

  IcpResult result;
  result.transform = init;

  for (size_t level = 0; level < params.pyramid_fractions.size(); ++level) {
    const double fraction = params.pyramid_fractions[level];

    // deterministic random subsample of the source for this level
    std::vector<int> sample(src.points.size());
    std::iota(sample.begin(), sample.end(), 0);
    const size_t take = std::max<size_t>(
        1, static_cast<size_t>(std::ceil(fraction * src.points.size())));
    if (take < sample.size()) {
      Rng rng(params.subsample_seed + level);
      for (size_t i = 0; i < take; ++i) {
        const size_t j =
            i + rng.next_u64() % static_cast<std::uint64_t>(sample.size() - i);
        std::swap(sample[i], sample[j]);
      }
      sample.resize(take);
      std::sort(sample.begin(), sample.end());
    }

    double prev_rms = std::numeric_limits<double>::infinity();
    std::vector<int> nn(sample.size());
    std::vector<double> dist(sample.size());
    std::vector<Vec3> moved(sample.size());

    for (int iter = 0; iter < params.max_iterations; ++iter) {
      parallel_for(sample.size(), [&](size_t i) {
        moved[i] = result.transform.apply(src.points[sample[i]]);
        const auto [j, d] = dst_index.nearest(moved[i]);
        nn[i] = j;
        dist[i] = d;
      });

      double threshold = std::numeric_limits<double>::infinity();
      if (params.reject_distance)
        threshold = *params.reject_distance;
      if (params.median_reject_scale)
        threshold = std::min(threshold, *params.median_reject_scale * median_of(dist));

      Pairing pairs;
      double sum_sq = 0;
      for (size_t i = 0; i < sample.size(); ++i) {
        if (dist[i] > threshold) continue;
        pairs.src.push_back(moved[i]);
        pairs.dst.push_back(dst.points[nn[i]]);
        sum_sq += dist[i] * dist[i];
      }
      if (pairs.src.empty())
        throw DegenerateInputError("all icp correspondences rejected");

      const double rms = std::sqrt(sum_sq / static_cast<double>(pairs.src.size()));
      result.rms = rms;
      result.iterations += 1;
      result.rms_history.emplace_back(static_cast<int>(level), rms);

      if (rms < params.convergence_delta ||
          std::abs(prev_rms - rms) < params.convergence_delta)
        break;
      prev_rms = rms;

      RigidTransform update;
      if (params.metric == IcpMetric::point_to_point) {
        update = estimate_rigid_from_pairs(pairs.src, pairs.dst, {}, false);
      } else {
        std::vector<Vec3> normals(pairs.src.size());
        size_t k = 0;
        for (size_t i = 0; i < sample.size(); ++i)
          if (dist[i] <= threshold) normals[k++] = dst_normals[nn[i]];
        update = point_to_plane_update(pairs, normals);
      }
      result.transform = update.compose(result.transform);
    }
  }
  return result;
}

namespace {

// Rigid re-alignment of seam vertices against the cross-view cloud.
std::vector<Vec3> refine_seam_vertices(const std::vector<Vec3>& side,
                                       const SpatialIndex& cross,
                                       const FusionParams& params,
                                       double guard) {
  const SpatialIndex own(side);
  const double seam_limit = params.seam_scale * params.merge_epsilon;
  const int k = std::min<int>(params.local_refine_neighbors,
                              static_cast<int>(side.size()));
  std::vector<Vec3> out = side;

  parallel_for(side.size(), [&](size_t i) {
    const auto [nn_cross, d_cross] = cross.nearest(side[i]);
    if (d_cross > seam_limit) return;

    const auto neighborhood = own.k_nearest(side[i], k);
    std::vector<Vec3> a, b;
    std::vector<double> w, pair_dist;
    for (const auto& [j, d_own] : neighborhood) {
      const auto [m, d_pair] = cross.nearest(side[j]);
      a.push_back(side[j]);
      b.push_back(cross.points()[m]);
      w.push_back(1.0 / (d_own + guard));
      pair_dist.push_back(d_pair);
    }
    const double cutoff = 3.0 * median_of(pair_dist);
    std::vector<Vec3> ka, kb;
    std::vector<double> kw;
    for (size_t j = 0; j < a.size(); ++j) {
      if (pair_dist[j] > cutoff) continue;
      ka.push_back(a[j]);
      kb.push_back(b[j]);
      kw.push_back(w[j]);
    }
    if (ka.size() < 3) return;
    try {
      const RigidTransform local = estimate_rigid_from_pairs(ka, kb, kw, false);
      out[i] = local.apply(side[i]);
    } catch (const DegenerateInputError&) {
      // flat or tiny neighborhoods keep their ICP placement
    }
  });
  return out;
}

void append_view(PointCloud& fused, const std::vector<Vec3>& points, ViewTag tag) {
  for (const Vec3& p : points) {
    fused.points.push_back(p);
    fused.view_tags.push_back(tag);
  }
}

}  // namespace

FusionResult fuse_views(const ViewInput& left, const ViewInput& middle,
                        const ViewInput& right, const FusionParams& params) {
  if (params.merge_epsilon <= 0)
    throw ParameterError("fuse_views requires merge_epsilon > 0");
  if (middle.cloud.points.empty())
    throw DegenerateInputError("middle (pivot) view is empty");
  for (const ViewInput* side : {&left, &right}) {
    if (side->cloud.points.empty() && !params.allow_missing_view)
      throw DegenerateInputError("side view is empty (allow_missing_view not set)");
    if (!side->cloud.points.empty() &&
        side->landmarks.scheme.id != middle.landmarks.scheme.id)
      throw ValidationError("landmark scheme mismatch across views");
  }

  const SpatialIndex middle_index(middle.cloud.points);
  const double guard = 1e-9 * std::max(bounding_box(middle.cloud.points).diagonal(), 1.0);

  FusionResult result;
  result.landmarks = middle.landmarks;

  PointCloud fused;
  append_view(fused, middle.cloud.points, ViewTag::middle);

  auto align_side = [&](const ViewInput& view, ViewTag tag, RigidTransform& applied) {
    if (view.cloud.points.empty()) return;
    const RigidTransform seed =
        estimate_rigid_from_landmarks(view.landmarks, middle.landmarks, false);
    const IcpResult icp = icp_refine(view.cloud, middle.cloud, seed, params.icp);
    applied = icp.transform;

    std::vector<Vec3> moved(view.cloud.points.size());
    for (size_t i = 0; i < moved.size(); ++i)
      moved[i] = applied.apply(view.cloud.points[i]);
    moved = refine_seam_vertices(moved, middle_index, params, guard);
    append_view(fused, moved, tag);

    for (const Landmark& lm : view.landmarks.landmarks) {
      if (result.landmarks.has(lm.id)) continue;
      result.landmarks.landmarks.push_back({lm.id, applied.apply(lm.position)});
    }
  };

  align_side(left, ViewTag::left, result.left_to_middle);
  align_side(right, ViewTag::right, result.right_to_middle);

  PointCloud merged = merge_vertices(fused, params.merge_epsilon);

  double radius;
  if (params.isolation_radius) {
    radius = *params.isolation_radius;
  } else {
    const SpatialIndex merged_index(merged.points);
    std::vector<double> spacing(merged.points.size(), 0.0);
    parallel_for(merged.points.size(), [&](size_t i) {
      const auto nn = merged_index.k_nearest(merged.points[i], 2);
      if (nn.size() == 2) spacing[i] = nn[1].second;
    });
    radius = 3.0 * median_of(spacing);
  }
  if (radius > 0 && merged.size() > params.isolation_min_neighbors)
    merged = remove_isolated(merged, radius, params.isolation_min_neighbors);

  result.cloud = std::move(merged);
  return result;
}

}  // namespace morphkit
