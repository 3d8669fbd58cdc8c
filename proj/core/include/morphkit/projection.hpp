#pragma once

#include <filesystem>
#include <vector>

#include "morphkit/geometry.hpp"
#include "morphkit/landmarks.hpp"
#include "morphkit/transform.hpp"

namespace morphkit {

// Pinhole camera, no lens distortion. The extrinsics map world points
// into the camera frame (+z forward); a point is visible when its
// camera-frame depth is positive and its rounded pixel lies inside the
// image.
struct Camera {
  double fx = 1, fy = 1;
  double cx = 0, cy = 0;
  int width = 0, height = 0;
  RigidTransform world_to_camera;
};

void validate(const Camera& cam);

struct ProjectedVertex {
  int index = -1;
  double u = 0, v = 0;  // continuous pixel coordinates
  double depth = 0;     // camera-frame z
};

// Every visible vertex exactly once, in ascending index order.
std::vector<ProjectedVertex> project_vertices(const PointCloud& cloud,
                                              const Camera& cam);

// For each 2D landmark picks the vertex whose projection is nearest in
// pixel space (ties to the lowest vertex index) and returns its 3D
// position under the same semantic id. Throws DegenerateInputError when
// nothing projects into the image.
LandmarkSet retrieve_3d_landmarks(const PointCloud& cloud, const Camera& cam,
                                  const LandmarkSet& lms2d);

// Z-buffered point-splat depth image; 0 marks pixels with no data.
class DepthImage {
public:
  DepthImage(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool has_depth(int x, int y) const { return at(x, y) > 0; }
  double at(int x, int y) const { return data_[index(x, y)]; }
  void set(int x, int y, double depth);
  const std::vector<double>& data() const { return data_; }

private:
  size_t index(int x, int y) const;
  int width_, height_;
  std::vector<double> data_;
};

DepthImage render_depth(const PointCloud& cloud, const Camera& cam);

// PFM, grayscale 32-bit little-endian floats, bottom row first,
// sentinel 0.0 for missing data.
void save_pfm(const DepthImage& image, const std::filesystem::path& path);
DepthImage load_pfm(const std::filesystem::path& path);

// 16-bit binary PGM with depth = pixel / scale; the scale and sentinel
// convention go to a JSON sidecar next to the image.
void save_pgm16(const DepthImage& image, const std::filesystem::path& path,
                double depth_scale);

}  // namespace morphkit
