#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "morphkit/fusion.hpp"
#include "morphkit/geometry.hpp"
#include "morphkit/landmarks.hpp"

namespace morphkit {

struct FacePart {
  std::string id;
  double lambda = 1.0;  // stiffness trade-off, >= 0
};

// Per-vertex part labels on the template plus per-part stiffness
// weights; vertex importance weights default to 1 when empty.
struct PartSegmentation {
  std::vector<FacePart> parts;
  std::vector<int> vertex_labels;       // index into `parts`
  std::vector<double> vertex_weights;   // empty = all ones

  double lambda_of_vertex(int v) const { return parts[vertex_labels[v]].lambda; }
  double weight_of_vertex(int v) const {
    return vertex_weights.empty() ? 1.0 : vertex_weights[v];
  }
  int part_index(const std::string& id) const;  // -1 when absent
};

void validate(const PartSegmentation& seg, int vertex_count);

// JSON: {"parts": [{"id": ..., "lambda": ...}], "vertex_labels": [...],
//        "vertex_weights": [...] (optional)}
PartSegmentation load_part_segmentation(const std::filesystem::path& path);
void save_part_segmentation(const PartSegmentation& seg,
                            const std::filesystem::path& path);

// Template-vertex pairs within the neighborhood radius; symmetric,
// stored once with i < j.
struct StiffnessGraph {
  std::vector<std::pair<int, int>> edges;
};

// Exactly the vertex pairs at Euclidean distance <= radius. Vertices
// left without any edge are reported through `isolated` (a warning
// channel, not an error).
StiffnessGraph build_stiffness_edges(const TriMesh& templ, double radius,
                                     std::vector<int>* isolated = nullptr);

// One 3x4 affine transform per template vertex, applied to the
// homogeneous vertex [x y z 1].
struct VertexTransformField {
  std::vector<Eigen::Matrix<double, 3, 4>> transforms;

  static VertexTransformField identity(int vertex_count);
  Vec3 apply(int vertex, const Vec3& p) const;
  int size() const { return static_cast<int>(transforms.size()); }
};

struct RegistrationResult {
  TriMesh mesh;                   // template topology, relocated vertices
  double cost = 0;                // literal objective at the final state
  double surrogate_cost = 0;      // squared-norm surrogate at the final state
  std::vector<double> residuals;  // per-vertex distance to the target surface
  VertexTransformField field;
};

// Rigid stage: similarity seed from the landmark correspondences, then
// ICP against the target vertices; the composed transform is applied to
// every template vertex, leaving topology untouched.
TriMesh coarse_register(const TriMesh& templ, const TriMesh& target,
                        const LandmarkSet& templ_lms,
                        const LandmarkSet& target_lms, const IcpParams& params);

// Objective for a transform field on the coarse mesh:
//   sum_p sum_{i in p} ( w_i * dist(T_p, X_i v_i)
//                        + lambda_p * sum_{j : {i,j} in E} ||X_i - X_j||_F )
// where dist is the distance to the target surface restricted to the
// vertex's part region (labels transferred from the coarse mesh by
// nearest vertex; whole target when a part region has no faces).
double nicp_cost(const VertexTransformField& state, const TriMesh& coarse,
                 const TriMesh& target, const PartSegmentation& parts,
                 const StiffnessGraph& graph);

struct NicpCostBreakdown {
  double literal = 0;
  double data = 0;       // literal data term
  double stiffness = 0;  // literal stiffness term
  double surrogate = 0;  // squared Frobenius surrogate with unit multiplier
};

NicpCostBreakdown nicp_cost_detail(const VertexTransformField& state,
                                   const TriMesh& coarse, const TriMesh& target,
                                   const PartSegmentation& parts,
                                   const StiffnessGraph& graph);

struct NicpOptions {
  // Global stiffness multipliers, applied in order (annealing).
  std::vector<double> stiffness_schedule{8, 4, 2, 1};
  int max_inner_iterations = 10;
  // Correspondences farther than this multiple of the median residual
  // are dropped for the iteration.
  double median_reject_scale = 3.0;
  // Early exit for an inner loop once the max vertex movement falls
  // below this fraction of the coarse bounding-box diagonal.
  double movement_tolerance = 1e-9;
};

// Alternates nearest-point correspondences on the part-restricted
// target with a sparse linear least-squares solve for all vertex
// transforms (stiffness as squared-Frobenius regularizer), sweeping the
// annealing schedule. The surrogate cost is non-increasing within each
// fixed-correspondence solve. Throws SolverError when the normal
// equations are singular.
RegistrationResult nicp_register(const TriMesh& coarse, const TriMesh& target,
                                 const PartSegmentation& parts,
                                 const StiffnessGraph& graph,
                                 const NicpOptions& options = {});

// Residual sidecar: "vertex_index,residual" CSV rows.
void save_residuals_csv(const std::vector<double>& residuals,
                        const std::filesystem::path& path);

}  // namespace morphkit
