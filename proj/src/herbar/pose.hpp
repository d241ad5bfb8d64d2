#pragma once

#include "herbar/geometry.hpp"
#include "herbar/imaging.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace herbar {

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  // fx = fy = 0.9 * width, principal point at the frame center.
  static CameraIntrinsics default_for(int frame_width, int frame_height);
  Mat3 matrix() const;
};

struct Pose {
  Mat3 r = Mat3::Identity();
  Vec3 t = Vec3(0, 0, 1);
};

// Planar pose of a unit-width target from H (unit target plane -> frame px).
// Throws SingularHomography.
Pose decompose_homography(const Homography& h, const CameraIntrinsics& k);

// Re-expresses a target-pixel homography over the unit-width target plane.
Homography to_unit_plane(const Homography& h, int target_width);

// Pinhole projection. Throws BehindCamera when the camera-frame depth is <= 1e-9.
Vec2 project_point(const Pose& pose, const CameraIntrinsics& k, const Vec3& x);
std::vector<Vec2> project_points(const Pose& pose, const CameraIntrinsics& k, const std::vector<Vec3>& pts);

struct WireframeModel {
  std::string name;
  std::vector<Vec3> vertices;  // target-plane units, z pointing out of the picture
  std::vector<std::pair<int, int>> edges;
};

WireframeModel parse_model(const std::string& json_text);
WireframeModel load_model(const std::filesystem::path& path);
CameraIntrinsics parse_intrinsics(const std::string& json_text);
CameraIntrinsics load_intrinsics(const std::filesystem::path& path);

struct Rgba {
  std::uint8_t r = 0, g = 255, b = 0, a = 255;
};

// Draws every edge whose endpoints are both in front of the camera. Model z
// maps to the plane's -r3 direction so positive z rises toward the viewer.
ColorImage render_overlay(const ColorImage& frame, const Pose& pose, const CameraIntrinsics& k,
                          const WireframeModel& model, Rgba color = {});

// Rasterizes a clipped Bresenham line into `img`.
void draw_line(ColorImage& img, Vec2 a, Vec2 b, Rgba color);

}  // namespace herbar
