#include "herbar/pose.hpp"

#include "herbar/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include "json.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace herbar {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<Vec2> try_project(const Pose& pose, const CameraIntrinsics& k, const Vec3& x) {
  const Vec3 p = pose.r * x + pose.t;
  if (p.z() <= 1e-9) return std::nullopt;
  return Vec2(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
}

// Cohen-Sutherland against [0, w-1] x [0, h-1]. Returns false when fully outside.
bool clip_segment(Vec2& a, Vec2& b, double w, double h) {
  enum : int { kLeft = 1, kRight = 2, kTop = 4, kBottom = 8 };
  const double xmax = w - 1;
  const double ymax = h - 1;
  auto code = [&](const Vec2& p) {
    int c = 0;
    if (p.x() < 0) c |= kLeft;
    else if (p.x() > xmax) c |= kRight;
    if (p.y() < 0) c |= kTop;
    else if (p.y() > ymax) c |= kBottom;
    return c;
  };
  int ca = code(a);
  int cb = code(b);
  while (true) {
    if (!(ca | cb)) return true;
    if (ca & cb) return false;
    const int out = ca ? ca : cb;
    Vec2 p;
    const Vec2 d = b - a;
    if (out & kBottom) p = Vec2(a.x() + d.x() * (ymax - a.y()) / d.y(), ymax);
    else if (out & kTop) p = Vec2(a.x() + d.x() * (0 - a.y()) / d.y(), 0);
    else if (out & kRight) p = Vec2(xmax, a.y() + d.y() * (xmax - a.x()) / d.x());
    else p = Vec2(0, a.y() + d.y() * (0 - a.x()) / d.x());
    if (out == ca) {
      a = p;
      ca = code(a);
    } else {
      b = p;
      cb = code(b);
    }
  }
}

}  // namespace

CameraIntrinsics CameraIntrinsics::default_for(int frame_width, int frame_height) {
  return {0.9 * frame_width, 0.9 * frame_width, frame_width / 2.0, frame_height / 2.0};
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
  return k;
}

Pose decompose_homography(const Homography& h, const CameraIntrinsics& k) {
  if (!(k.fx > 0 && k.fy > 0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (!std::isfinite(h.det()) || std::abs(h.det()) <= 1e-12) {
    throw Error(ErrorCode::SingularHomography, "homography is singular");
  }
  const Mat3 b = k.matrix().inverse() * h.h;
  const double norm_sum = b.col(0).norm() + b.col(1).norm();
  if (norm_sum < 1e-12) throw Error(ErrorCode::SingularHomography, "homography has vanishing rotation columns");
  const double lambda = 2.0 / norm_sum;
  Vec3 r1 = lambda * b.col(0);
  Vec3 r2 = lambda * b.col(1);
  Vec3 t = lambda * b.col(2);
  if (t.z() < 0) {
    r1 = -r1;
    r2 = -r2;
    t = -t;
  }
  Mat3 m;
  m.col(0) = r1;
  m.col(1) = r2;
  m.col(2) = r1.cross(r2);

  // Nearest rotation in the Frobenius sense.
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 r = u * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    u.col(2) = -u.col(2);
    r = u * svd.matrixV().transpose();
  }
  return {r, t};
}

Homography to_unit_plane(const Homography& h, int target_width) {
  Mat3 s = Mat3::Identity();
  s(0, 0) = target_width;
  s(1, 1) = target_width;
  return Homography::from(h.h * s);
}

Vec2 project_point(const Pose& pose, const CameraIntrinsics& k, const Vec3& x) {
  auto p = try_project(pose, k, x);
  if (!p) throw Error(ErrorCode::BehindCamera, "point is behind the camera");
  return *p;
}

std::vector<Vec2> project_points(const Pose& pose, const CameraIntrinsics& k, const std::vector<Vec3>& pts) {
  std::vector<Vec2> out;
  out.reserve(pts.size());
  for (const Vec3& x : pts) out.push_back(project_point(pose, k, x));
  return out;
}

WireframeModel parse_model(const std::string& json_text) {
  WireframeModel m;
  try {
    const auto j = nlohmann::json::parse(json_text);
    m.name = j.at("name").get<std::string>();
    for (const auto& v : j.at("vertices")) {
      if (v.size() != 3) throw Error(ErrorCode::ParseError, "model vertex must have 3 coordinates");
      m.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    for (const auto& e : j.at("edges")) {
      if (e.size() != 2) throw Error(ErrorCode::ParseError, "model edge must have 2 indices");
      m.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid model JSON: ") + e.what());
  }
  if (m.edges.empty()) throw Error(ErrorCode::ParseError, "model needs at least one edge");
  const int n = static_cast<int>(m.vertices.size());
  for (const auto& [a, b] : m.edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) throw Error(ErrorCode::ParseError, "model edge index out of range");
  }
  return m;
}

WireframeModel load_model(const std::filesystem::path& path) { return parse_model(read_text(path)); }

CameraIntrinsics parse_intrinsics(const std::string& json_text) {
  CameraIntrinsics k;
  try {
    const auto j = nlohmann::json::parse(json_text);
    k = {j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(), j.at("cy").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid intrinsics JSON: ") + e.what());
  }
  if (!(k.fx > 0 && k.fy > 0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  return k;
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) { return parse_intrinsics(read_text(path)); }

void draw_line(ColorImage& img, Vec2 a, Vec2 b, Rgba color) {
  if (!a.allFinite() || !b.allFinite()) return;
  if (!clip_segment(a, b, img.width(), img.height())) return;
  int x0 = static_cast<int>(std::lround(a.x()));
  int y0 = static_cast<int>(std::lround(a.y()));
  const int x1 = static_cast<int>(std::lround(b.x()));
  const int y1 = static_cast<int>(std::lround(b.y()));
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (x0 >= 0 && y0 >= 0 && x0 < img.width() && y0 < img.height()) {
      std::uint8_t* p = img.px(x0, y0);
      p[0] = color.r;
      p[1] = color.g;
      p[2] = color.b;
      p[3] = color.a;
    }
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

ColorImage render_overlay(const ColorImage& frame, const Pose& pose, const CameraIntrinsics& k,
                          const WireframeModel& model, Rgba color) {
  ColorImage out = frame;
  std::vector<std::optional<Vec2>> projected;
  projected.reserve(model.vertices.size());
  for (const Vec3& v : model.vertices) projected.push_back(try_project(pose, k, Vec3(v.x(), v.y(), -v.z())));
  for (const auto& [a, b] : model.edges) {
    if (!projected[a] || !projected[b]) continue;
    draw_line(out, *projected[a], *projected[b], color);
  }
  return out;
}

}  // namespace herbar
