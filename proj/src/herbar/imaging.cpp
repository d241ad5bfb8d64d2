#include "herbar/imaging.hpp"

#include "herbar/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace herbar {

namespace {

void check_dims(int width, int height, std::size_t have, std::size_t channels) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (have != channels * static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw Error(ErrorCode::InvalidArgument, "pixel buffer length does not match dimensions");
  }
}

std::uint8_t round_to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

// Fractional overlap weights of each destination cell over the source axis.
struct AxisWeights {
  std::vector<int> first;
  std::vector<std::vector<double>> weights;
};

AxisWeights area_weights(int src, int dst) {
  AxisWeights w;
  w.first.resize(dst);
  w.weights.resize(dst);
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double lo = i * ratio;
    const double hi = (i + 1) * ratio;
    const int a = static_cast<int>(std::floor(lo));
    const int b = std::min(src, static_cast<int>(std::ceil(hi)));
    w.first[i] = a;
    for (int s = a; s < b; ++s) {
      const double overlap = std::min<double>(hi, s + 1) - std::max<double>(lo, s);
      w.weights[i].push_back(overlap / ratio);
    }
  }
  return w;
}

}  // namespace

ColorImage::ColorImage(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                       std::uint8_t a)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  pixels_.resize(4 * static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < pixels_.size(); i += 4) {
    pixels_[i] = r;
    pixels_[i + 1] = g;
    pixels_[i + 2] = b;
    pixels_[i + 3] = a;
  }
}

ColorImage::ColorImage(int width, int height, std::vector<std::uint8_t> rgba)
    : width_(width), height_(height), pixels_(std::move(rgba)) {
  check_dims(width, height, pixels_.size(), 4);
}

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  check_dims(width, height, pixels_.size(), 1);
}

Image to_grayscale(const ColorImage& img) {
  Image out(img.width(), img.height());
  auto src = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    // Weights in thousandths keep the half-up rounding exact.
    const unsigned y = 299u * src[4 * i] + 587u * src[4 * i + 1] + 114u * src[4 * i + 2];
    dst[i] = static_cast<std::uint8_t>((y + 500u) / 1000u);
  }
  return out;
}

ColorImage expand_to_rgba(const Image& img) {
  std::vector<std::uint8_t> rgba(img.data().size() * 4);
  auto src = img.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    rgba[4 * i] = rgba[4 * i + 1] = rgba[4 * i + 2] = src[i];
    rgba[4 * i + 3] = 255;
  }
  return ColorImage(img.width(), img.height(), std::move(rgba));
}

Image resize_area(const Image& img, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw Error(ErrorCode::InvalidArgument, "resize target must be positive");
  const AxisWeights wx = area_weights(img.width(), out_w);
  const AxisWeights wy = area_weights(img.height(), out_h);

  // Horizontal pass into doubles, then vertical pass with a single rounding.
  std::vector<double> tmp(static_cast<std::size_t>(out_w) * img.height());
  for (int y = 0; y < img.height(); ++y) {
    const std::uint8_t* row = img.row(y);
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      const auto& w = wx.weights[x];
      for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * row[wx.first[x] + k];
      tmp[static_cast<std::size_t>(y) * out_w + x] = acc;
    }
  }
  Image out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    const auto& w = wy.weights[y];
    for (int x = 0; x < out_w; ++x) {
      double acc = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) {
        acc += w[k] * tmp[static_cast<std::size_t>(wy.first[y] + k) * out_w + x];
      }
      out.at(x, y) = round_to_u8(acc);
    }
  }
  return out;
}

Pyramid build_pyramid(const Image& img, int n_levels, double scale_factor) {
  if (n_levels < 1) throw Error(ErrorCode::InvalidArgument, "pyramid needs at least one level");
  if (!(scale_factor > 1.0)) throw Error(ErrorCode::InvalidArgument, "pyramid scale factor must exceed 1");
  if (img.width() < kMinPyramidLevelSize || img.height() < kMinPyramidLevelSize) {
    throw Error(ErrorCode::ImageTooSmall, "pyramid base must be at least 32x32");
  }
  Pyramid p;
  p.scale_factor = scale_factor;
  p.levels.push_back(img);
  for (int k = 1; k < n_levels; ++k) {
    const double s = std::pow(scale_factor, k);
    const int w = static_cast<int>(std::lround(img.width() / s));
    const int h = static_cast<int>(std::lround(img.height() / s));
    if (w < kMinPyramidLevelSize || h < kMinPyramidLevelSize) break;
    p.levels.push_back(resize_area(img, w, h));
  }
  return p;
}

Image warp_perspective(const Image& img, const Homography& h, int out_w, int out_h,
                       std::uint8_t fill) {
  if (std::abs(h.det()) <= 1e-12) throw Error(ErrorCode::SingularHomography, "warp homography is singular");
  const Mat3 inv = h.h.inverse();
  constexpr double kEps = 1e-9;
  const double max_x = img.width() - 1;
  const double max_y = img.height() - 1;
  Image out(out_w, out_h, fill);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Vec3 p = inv * Vec3(x, y, 1.0);
      if (std::abs(p.z()) < 1e-12) continue;
      double sx = p.x() / p.z();
      double sy = p.y() / p.z();
      if (sx < -kEps || sy < -kEps || sx > max_x + kEps || sy > max_y + kEps) continue;
      sx = std::clamp(sx, 0.0, max_x);
      sy = std::clamp(sy, 0.0, max_y);
      const int x0 = std::min(static_cast<int>(sx), img.width() - 1);
      const int y0 = std::min(static_cast<int>(sy), img.height() - 1);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const int y1 = std::min(y0 + 1, img.height() - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      const double top = (1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0);
      const double bot = (1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1);
      out.at(x, y) = round_to_u8((1 - fy) * top + fy * bot);
    }
  }
  return out;
}

const char* to_string(Side side) noexcept {
  switch (side) {
    case Side::Left: return "left";
    case Side::Right: return "right";
    case Side::Top: return "top";
    case Side::Bottom: return "bottom";
  }
  return "?";
}

Image occlude(const Image& img, double fraction, Side side, std::uint8_t fill) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "occlusion fraction must be in [0,1]");
  }
  Image out = img;
  const int w = img.width();
  const int h = img.height();
  const auto total = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(w) * h));
  // Column-major fill for left/right bands, row-major for top/bottom.
  for (std::size_t i = 0; i < total; ++i) {
    int x = 0;
    int y = 0;
    switch (side) {
      case Side::Left:
        x = static_cast<int>(i / h);
        y = static_cast<int>(i % h);
        break;
      case Side::Right:
        x = w - 1 - static_cast<int>(i / h);
        y = static_cast<int>(i % h);
        break;
      case Side::Top:
        x = static_cast<int>(i % w);
        y = static_cast<int>(i / w);
        break;
      case Side::Bottom:
        x = static_cast<int>(i % w);
        y = h - 1 - static_cast<int>(i / w);
        break;
    }
    out.at(x, y) = fill;
  }
  return out;
}

}  // namespace herbar
