#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <array>
#include <optional>

namespace herbar {

using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

// Projective map between two image planes. Normalized so that h(2,2) == 1
// whenever |h(2,2)| > 1e-12.
struct Homography {
  Mat3 h = Mat3::Identity();

  static Homography from(const Mat3& m) {
    Homography out{m};
    if (std::abs(m(2, 2)) > 1e-12) out.h /= m(2, 2);
    return out;
  }

  static Homography translation(double tx, double ty) {
    Mat3 m = Mat3::Identity();
    m(0, 2) = tx;
    m(1, 2) = ty;
    return {m};
  }

  // Rotation by `degrees` about (src_cx, src_cy), landing that point on (dst_cx, dst_cy).
  // Multiples of 90 degrees use exact sine/cosine values.
  static Homography rotation_about(double degrees, double src_cx, double src_cy, double dst_cx,
                                   double dst_cy);

  double det() const { return h.determinant(); }

  // Returns nullopt when the point maps to infinity.
  std::optional<Vec2> apply(double x, double y) const {
    const Vec3 p = h * Vec3(x, y, 1.0);
    if (std::abs(p.z()) < 1e-12) return std::nullopt;
    return Vec2(p.x() / p.z(), p.y() / p.z());
  }

  std::array<double, 9> row_major() const {
    return {h(0, 0), h(0, 1), h(0, 2), h(1, 0), h(1, 1), h(1, 2), h(2, 0), h(2, 1), h(2, 2)};
  }
};

}  // namespace herbar
