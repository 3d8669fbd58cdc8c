#include "morphkit/registration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <json.hpp>

#include "morphkit/errors.hpp"
#include "morphkit/parallel.hpp"
#include "morphkit/spatial_index.hpp"
#include "morphkit/surface.hpp"

namespace morphkit {

int PartSegmentation::part_index(const std::string& id) const {
  for (size_t i = 0; i < parts.size(); ++i)
    if (parts[i].id == id) return static_cast<int>(i);
  return -1;
}

void validate(const PartSegmentation& seg, int vertex_count) {
  if (seg.parts.empty()) throw ValidationError("segmentation has no parts");
  for (const FacePart& p : seg.parts)
    if (p.lambda < 0)
      throw ValidationError("part '" + p.id + "' has negative lambda");
  if (static_cast<int>(seg.vertex_labels.size()) != vertex_count)
    throw ValidationError("vertex label count " +
                          std::to_string(seg.vertex_labels.size()) +
                          " does not match vertex count " +
                          std::to_string(vertex_count));
  for (int label : seg.vertex_labels)
    if (label < 0 || label >= static_cast<int>(seg.parts.size()))
      throw ValidationError("vertex label out of range");
  if (!seg.vertex_weights.empty() &&
      static_cast<int>(seg.vertex_weights.size()) != vertex_count)
    throw ValidationError("vertex weight count does not match vertex count");
}

PartSegmentation load_part_segmentation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string(), 0, e.what());
  }
  PartSegmentation seg;
  try {
    for (const auto& p : j.at("parts"))
      seg.parts.push_back(
          {p.at("id").get<std::string>(), p.at("lambda").get<double>()});
    seg.vertex_labels = j.at("vertex_labels").get<std::vector<int>>();
    if (j.contains("vertex_weights"))
      seg.vertex_weights = j.at("vertex_weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string(), 0, e.what());
  }
  validate(seg, static_cast<int>(seg.vertex_labels.size()));
  return seg;
}

void save_part_segmentation(const PartSegmentation& seg,
                            const std::filesystem::path& path) {
  nlohmann::json j;
  j["parts"] = nlohmann::json::array();
  for (const FacePart& p : seg.parts)
    j["parts"].push_back({{"id", p.id}, {"lambda", p.lambda}});
  j["vertex_labels"] = seg.vertex_labels;
  if (!seg.vertex_weights.empty()) j["vertex_weights"] = seg.vertex_weights;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

StiffnessGraph build_stiffness_edges(const TriMesh& templ, double radius,
                                     std::vector<int>* isolated) {
  if (radius <= 0) throw ParameterError("stiffness radius must be positive");
  const SpatialIndex index(templ.vertices);
  const int n = templ.vertex_count();

  std::vector<std::vector<int>> neighbors(n);
  parallel_for(n, [&](size_t i) {
    for (int j : index.within(templ.vertices[i], radius))
      if (j > static_cast<int>(i)) neighbors[i].push_back(j);
  });

  StiffnessGraph graph;
  std::vector<char> has_edge(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j : neighbors[i]) {
      graph.edges.emplace_back(i, j);
      has_edge[i] = has_edge[j] = 1;
    }
  }
  if (isolated) {
    isolated->clear();
    for (int i = 0; i < n; ++i)
      if (!has_edge[i]) isolated->push_back(i);
  }
  return graph;
}

VertexTransformField VertexTransformField::identity(int vertex_count) {
  VertexTransformField field;
  Eigen::Matrix<double, 3, 4> id = Eigen::Matrix<double, 3, 4>::Zero();
  id.leftCols<3>() = Eigen::Matrix3d::Identity();
  field.transforms.assign(vertex_count, id);
  return field;
}

Vec3 VertexTransformField::apply(int vertex, const Vec3& p) const {
  const Eigen::Matrix<double, 3, 4>& x = transforms[vertex];
  return x.leftCols<3>() * p + x.col(3);
}

TriMesh coarse_register(const TriMesh& templ, const TriMesh& target,
                        const LandmarkSet& templ_lms,
                        const LandmarkSet& target_lms, const IcpParams& params) {
  const RigidTransform seed =
      estimate_rigid_from_landmarks(templ_lms, target_lms, true);

  PointCloud src, dst;
  src.points = templ.vertices;
  dst.points = target.vertices;
  const IcpResult icp = icp_refine(src, dst, seed, params);
  return transformed(templ, icp.transform);
}

namespace {

// Target surface split into per-part regions: each target vertex takes
// the part of its nearest coarse-mesh vertex, and a part's region is
// the set of faces touching at least one vertex so labeled. Empty
// regions fall back to the whole target.
class PartSurfaces {
public:
  PartSurfaces(const TriMesh& coarse, const TriMesh& target,
               const PartSegmentation& parts) {
    if (target.faces.empty())
      throw DegenerateInputError("registration target has no faces");
    const SpatialIndex coarse_index(coarse.vertices);
    std::vector<int> target_labels(target.vertices.size());
    parallel_for(target.vertices.size(), [&](size_t i) {
      target_labels[i] = parts.vertex_labels[coarse_index.nearest(target.vertices[i]).first];
    });

    std::vector<std::vector<int>> faces_per_part(parts.parts.size());
    for (int f = 0; f < target.face_count(); ++f) {
      std::set<int> labels;
      for (int k = 0; k < 3; ++k) labels.insert(target_labels[target.faces[f][k]]);
      for (int p : labels) faces_per_part[p].push_back(f);
    }

    whole_ = ClosestSurfacePoint(target);
    regions_.resize(parts.parts.size());
    for (size_t p = 0; p < parts.parts.size(); ++p)
      if (!faces_per_part[p].empty())
        regions_[p] = ClosestSurfacePoint(target, faces_per_part[p]);
  }

  SurfaceHit query(int part, const Vec3& point) const {
    const ClosestSurfacePoint& surface =
        regions_[part].empty() ? whole_ : regions_[part];
    return surface.query(point);
  }

  const ClosestSurfacePoint& whole() const { return whole_; }

private:
  ClosestSurfacePoint whole_;
  std::vector<ClosestSurfacePoint> regions_;
};

void check_sizes(const VertexTransformField& state, const TriMesh& coarse,
                 const PartSegmentation& parts, const StiffnessGraph& graph) {
  validate(parts, coarse.vertex_count());
  if (state.size() != coarse.vertex_count())
    throw ValidationError("transform field size does not match the coarse mesh");
  for (const auto& x : state.transforms)
    if (!x.allFinite()) throw ValidationError("non-finite transform entry");
  for (const auto& [i, j] : graph.edges)
    if (i < 0 || j < 0 || i >= coarse.vertex_count() || j >= coarse.vertex_count())
      throw ValidationError("stiffness edge references a missing vertex");
}

NicpCostBreakdown cost_with_surfaces(const VertexTransformField& state,
                                     const TriMesh& coarse,
                                     const PartSegmentation& parts,
                                     const StiffnessGraph& graph,
                                     const PartSurfaces& surfaces) {
  NicpCostBreakdown out;
  const int n = coarse.vertex_count();
  std::vector<double> data_terms(n);
  parallel_for(n, [&](size_t i) {
    const Vec3 moved = state.apply(static_cast<int>(i), coarse.vertices[i]);
    const SurfaceHit hit = surfaces.query(parts.vertex_labels[i], moved);
    data_terms[i] = parts.weight_of_vertex(static_cast<int>(i)) * hit.distance;
  });
  for (double d : data_terms) out.data += d;

  for (const auto& [i, j] : graph.edges) {
    const double diff = (state.transforms[i] - state.transforms[j]).norm();
    // each undirected edge is visited from both endpoints, once with
    // each part's lambda
    const double lam = parts.lambda_of_vertex(i) + parts.lambda_of_vertex(j);
    out.stiffness += lam * diff;
    out.surrogate += lam * diff * diff;
  }
  out.literal = out.data + out.stiffness;

  double data_sq = 0;
  parallel_for(n, [&](size_t i) { data_terms[i] *= data_terms[i]; });
  for (double d : data_terms) data_sq += d;
  out.surrogate += data_sq;
  return out;
}

}  // namespace

NicpCostBreakdown nicp_cost_detail(const VertexTransformField& state,
                                   const TriMesh& coarse, const TriMesh& target,
                                   const PartSegmentation& parts,
                                   const StiffnessGraph& graph) {
  check_sizes(state, coarse, parts, graph);
  const PartSurfaces surfaces(coarse, target, parts);
  return cost_with_surfaces(state, coarse, parts, graph, surfaces);
}

double nicp_cost(const VertexTransformField& state, const TriMesh& coarse,
                 const TriMesh& target, const PartSegmentation& parts,
                 const StiffnessGraph& graph) {
  return nicp_cost_detail(state, coarse, target, parts, graph).literal;
}

namespace {

struct Correspondence {
  Vec3 point{0, 0, 0};
  double weight = 0;  // 0 = rejected this iteration
};

// Surrogate objective at fixed correspondences and stiffness multiplier:
//   sum_i w_i ||X_i v_i - c_i||^2
//   + k * sum_edges (lambda_i + lambda_j) ||X_i - X_j||_F^2
double surrogate_at(const VertexTransformField& state, const TriMesh& coarse,
                    const std::vector<Correspondence>& corr,
                    const PartSegmentation& parts, const StiffnessGraph& graph,
                    double multiplier) {
  double value = 0;
  for (int i = 0; i < coarse.vertex_count(); ++i) {
    if (corr[i].weight <= 0) continue;
    value += corr[i].weight *
             (state.apply(i, coarse.vertices[i]) - corr[i].point).squaredNorm();
  }
  for (const auto& [i, j] : graph.edges) {
    const double lam = parts.lambda_of_vertex(i) + parts.lambda_of_vertex(j);
    value += multiplier * lam *
             (state.transforms[i] - state.transforms[j]).squaredNorm();
  }
  return value;
}

// Minimizes the surrogate by solving the normal equations of the
// stacked sparse system (12 unknowns per vertex).
VertexTransformField solve_field(const TriMesh& coarse,
                                 const std::vector<Correspondence>& corr,
                                 const PartSegmentation& parts,
                                 const StiffnessGraph& graph, double multiplier) {
  const int n = coarse.vertex_count();
  const int unknowns = 12 * n;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(n) * 12 + graph.edges.size() * 24);
  Eigen::VectorXd rhs_b = Eigen::VectorXd::Zero(0);

  long rows = 0;
  std::vector<std::pair<long, double>> rhs_entries;
  for (int i = 0; i < n; ++i) {
    if (corr[i].weight <= 0) continue;
    const double sw = std::sqrt(corr[i].weight);
    const Vec3& v = coarse.vertices[i];
    const double homog[4] = {v.x(), v.y(), v.z(), 1.0};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c)
        triplets.emplace_back(rows, 12 * i + 4 * r + c, sw * homog[c]);
      rhs_entries.emplace_back(rows, sw * corr[i].point[r]);
      ++rows;
    }
  }
  for (const auto& [i, j] : graph.edges) {
    const double lam = parts.lambda_of_vertex(i) + parts.lambda_of_vertex(j);
    const double sw = std::sqrt(multiplier * lam);
    if (sw <= 0) continue;
    for (int e = 0; e < 12; ++e) {
      triplets.emplace_back(rows, 12 * i + e, sw);
      triplets.emplace_back(rows, 12 * j + e, -sw);
      ++rows;
    }
  }

  Eigen::SparseMatrix<double> a(rows, unknowns);
  a.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  for (const auto& [row, value] : rhs_entries) b(row) = value;

  const Eigen::SparseMatrix<double> normal = a.transpose() * a;
  const Eigen::VectorXd rhs = a.transpose() * b;

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(normal);
  Eigen::VectorXd x;
  if (solver.info() == Eigen::Success) x = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !x.allFinite()) {
    // name a part that can explain the rank deficiency
    std::string offender = "unknown";
    for (const FacePart& p : parts.parts)
      if (p.lambda * multiplier <= 0) {
        offender = p.id;
        break;
      }
    throw SolverError(
        "nicp normal equations are singular (offending part: " + offender + ")");
  }

  VertexTransformField field;
  field.transforms.resize(n);
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 4; ++c)
        field.transforms[i](r, c) = x(12 * i + 4 * r + c);
  return field;
}

}  // namespace

RegistrationResult nicp_register(const TriMesh& coarse, const TriMesh& target,
                                 const PartSegmentation& parts,
                                 const StiffnessGraph& graph,
                                 const NicpOptions& options) {
  validate(parts, coarse.vertex_count());
  if (options.stiffness_schedule.empty())
    throw ParameterError("stiffness schedule must be non-empty");
  if (options.max_inner_iterations < 1)
    throw ParameterError("max_inner_iterations must be >= 1");

  const PartSurfaces surfaces(coarse, target, parts);
  const int n = coarse.vertex_count();
  const double diag = bounding_box(coarse.vertices).diagonal();
  const double move_tol = options.movement_tolerance * std::max(diag, 1.0);

  VertexTransformField state = VertexTransformField::identity(n);
  std::vector<Correspondence> corr(n);
  std::vector<double> residuals(n, 0.0);

  for (double multiplier : options.stiffness_schedule) {
    for (int inner = 0; inner < options.max_inner_iterations; ++inner) {
      // (a) correspondences on the part-restricted target
      parallel_for(n, [&](size_t i) {
        const Vec3 moved = state.apply(static_cast<int>(i), coarse.vertices[i]);
        const SurfaceHit hit = surfaces.query(parts.vertex_labels[i], moved);
        corr[i].point = hit.point;
        residuals[i] = hit.distance;
      });
      std::vector<double> sorted = residuals;
      const size_t mid = sorted.size() / 2;
      std::nth_element(sorted.begin(), sorted.begin() + mid, sorted.end());
      const double cutoff = options.median_reject_scale * sorted[mid];
      for (int i = 0; i < n; ++i)
        corr[i].weight =
            residuals[i] > cutoff ? 0.0 : parts.weight_of_vertex(i);

      // (b) sparse least-squares for all transforms
      const double before =
          surrogate_at(state, coarse, corr, parts, graph, multiplier);
      VertexTransformField next =
          solve_field(coarse, corr, parts, graph, multiplier);
      const double after =
          surrogate_at(next, coarse, corr, parts, graph, multiplier);
      if (after > before * (1.0 + 1e-9) + 1e-12)
        throw SolverError("nicp surrogate cost increased within an inner solve");

      double max_move = 0;
      for (int i = 0; i < n; ++i) {
        const double move = (next.apply(i, coarse.vertices[i]) -
                             state.apply(i, coarse.vertices[i]))
                                .norm();
        max_move = std::max(max_move, move);
      }
      state = std::move(next);
      if (max_move < move_tol) break;
    }
  }

  RegistrationResult result;
  result.mesh.faces = coarse.faces;  // Eq. 2 contract: topology untouched
  result.mesh.vertices.resize(n);
  for (int i = 0; i < n; ++i)
    result.mesh.vertices[i] = state.apply(i, coarse.vertices[i]);

  result.residuals.resize(n);
  parallel_for(n, [&](size_t i) {
    result.residuals[i] = surfaces.whole().query(result.mesh.vertices[i]).distance;
  });

  const NicpCostBreakdown final_cost =
      cost_with_surfaces(state, coarse, parts, graph, surfaces);
  result.cost = final_cost.literal;
  result.surrogate_cost = final_cost.surrogate;
  result.field = std::move(state);
  return result;
}

void save_residuals_csv(const std::vector<double>& residuals,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "vertex_index,residual\n";
  for (size_t i = 0; i < residuals.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, residuals[i]);
    out << buf;
  }
}

}  // namespace morphkit
