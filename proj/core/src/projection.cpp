#include "morphkit/projection.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "morphkit/errors.hpp"

namespace morphkit {

void validate(const Camera& cam) {
  if (!(cam.fx > 0) || !(cam.fy > 0))
    throw ValidationError("camera focal lengths must be positive");
  if (cam.width < 1 || cam.height < 1)
    throw ValidationError("camera image size must be positive");
  if (cam.cx < 0 || cam.cx >= cam.width || cam.cy < 0 || cam.cy >= cam.height)
    throw ValidationError("principal point outside the image");
  validate(cam.world_to_camera);
}

std::vector<ProjectedVertex> project_vertices(const PointCloud& cloud,
                                              const Camera& cam) {
  validate(cam);
  std::vector<ProjectedVertex> out;
  out.reserve(cloud.points.size());
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec3 p = cam.world_to_camera.apply(cloud.points[i]);
    if (!(p.z() > 0)) continue;
    const double u = cam.fx * p.x() / p.z() + cam.cx;
    const double v = cam.fy * p.y() / p.z() + cam.cy;
    const long px = std::lround(u), py = std::lround(v);
    if (px < 0 || px >= cam.width || py < 0 || py >= cam.height) continue;
    out.push_back({i, u, v, p.z()});
  }
  return out;
}

LandmarkSet retrieve_3d_landmarks(const PointCloud& cloud, const Camera& cam,
                                  const LandmarkSet& lms2d) {
  if (lms2d.dim != LandmarkDim::two_d)
    throw ValidationError("retrieve_3d_landmarks expects 2D landmarks");
  const auto projected = project_vertices(cloud, cam);
  if (projected.empty())
    throw DegenerateInputError("no cloud vertex projects into the image");

  LandmarkSet out;
  out.scheme = lms2d.scheme;
  out.dim = LandmarkDim::three_d;
  for (const Landmark& lm : lms2d.landmarks) {
    int best = -1;
    double best_sq = std::numeric_limits<double>::infinity();
    for (const ProjectedVertex& pv : projected) {
      const double du = pv.u - lm.position.x();
      const double dv = pv.v - lm.position.y();
      const double d_sq = du * du + dv * dv;
      if (d_sq < best_sq || (d_sq == best_sq && pv.index < best)) {
        best = pv.index;
        best_sq = d_sq;
      }
    }
    out.landmarks.push_back({lm.id, cloud.points[best]});
  }
  return out;
}

DepthImage::DepthImage(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1)
    throw ParameterError("depth image dimensions must be positive");
  data_.assign(static_cast<size_t>(width) * height, 0.0);
}

size_t DepthImage::index(int x, int y) const {
  if (x < 0 || x >= width_ || y < 0 || y >= height_)
    throw ParameterError("depth image access out of bounds");
  return static_cast<size_t>(y) * width_ + x;
}

void DepthImage::set(int x, int y, double depth) {
  if (!(depth > 0)) throw ValidationError("stored depths must be positive");
  data_[index(x, y)] = depth;
}

DepthImage render_depth(const PointCloud& cloud, const Camera& cam) {
  validate(cam);
  DepthImage image(cam.width, cam.height);
  for (const ProjectedVertex& pv : project_vertices(cloud, cam)) {
    const int px = static_cast<int>(std::lround(pv.u));
    const int py = static_cast<int>(std::lround(pv.v));
    if (!image.has_depth(px, py) || pv.depth < image.at(px, py))
      image.set(px, py, pv.depth);
  }
  return image;
}

void save_pfm(const DepthImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "Pf\n" << image.width() << ' ' << image.height() << "\n-1.0\n";
  // PFM stores the bottom row first
  for (int y = image.height() - 1; y >= 0; --y) {
    for (int x = 0; x < image.width(); ++x) {
      const float v = static_cast<float>(image.has_depth(x, y) ? image.at(x, y) : 0.0);
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
  if (!out) throw IoError("short write to " + path.string());
}

DepthImage load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string magic;
  int width = 0, height = 0;
  double scale = 0;
  in >> magic >> width >> height >> scale;
  if (magic != "Pf") throw FormatError(path.string(), 1, "not a grayscale PFM");
  if (width < 1 || height < 1)
    throw FormatError(path.string(), 2, "bad image dimensions");
  if (scale >= 0)
    throw FormatError(path.string(), 3, "big-endian PFM is not supported");
  in.get();  // single whitespace after the scale line

  DepthImage image(width, height);
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) {
      float v;
      if (!in.read(reinterpret_cast<char*>(&v), 4))
        throw FormatError(path.string(), 0, "truncated PFM payload");
      if (v > 0) image.set(x, y, v);
    }
  }
  return image;
}

void save_pgm16(const DepthImage& image, const std::filesystem::path& path,
                double depth_scale) {
  if (!(depth_scale > 0)) throw ParameterError("depth_scale must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.width() << ' ' << image.height() << "\n65535\n";
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double v = image.has_depth(x, y) ? image.at(x, y) * depth_scale : 0.0;
      const auto q = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
      const unsigned char bytes[2] = {static_cast<unsigned char>(q >> 8),
                                      static_cast<unsigned char>(q & 0xff)};
      out.write(reinterpret_cast<const char*>(bytes), 2);  // PGM is big-endian
    }
  }
  if (!out) throw IoError("short write to " + path.string());

  nlohmann::json sidecar;
  sidecar["depth_scale"] = depth_scale;
  sidecar["sentinel"] = 0;
  sidecar["units"] = "depth = pixel_value / depth_scale";
  std::ofstream meta(path.string() + ".json");
  if (!meta) throw IoError("cannot write sidecar for " + path.string());
  meta << sidecar.dump(2) << '\n';
}

}  // namespace morphkit
