#include "herbar/geometry.hpp"

#include <cmath>
#include <numbers>

namespace herbar {

Homography Homography::rotation_about(double degrees, double src_cx, double src_cy, double dst_cx,
                                      double dst_cy) {
  double c = 0.0;
  double s = 0.0;
  const double turns = degrees / 90.0;
  if (turns == std::round(turns)) {
    const int q = ((static_cast<int>(std::lround(turns)) % 4) + 4) % 4;
    constexpr int kCos[4] = {1, 0, -1, 0};
    constexpr int kSin[4] = {0, 1, 0, -1};
    c = kCos[q];
    s = kSin[q];
  } else {
    const double rad = degrees * std::numbers::pi / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
  }
  Mat3 m;
  m << c, -s, dst_cx - (c * src_cx - s * src_cy),  //
      s, c, dst_cy - (s * src_cx + c * src_cy),    //
      0, 0, 1;
  return {m};
}

}  // namespace herbar
